"""Explicit spectra of invariant operators on supported nilmanifolds.

Eigenvalues are stored exactly as polynomials in pi with rational
coefficients (``4*pi^2`` for the torus family, ``4(2a+n)|k|*pi`` for the
Heisenberg family) so that multiplicities are aggregated by exact equality
and never by floating-point proximity.
"""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from scipy.special import gamma as _gamma

from .errors import CompletenessError
from .group_core import (
    GradedGroup,
    LatticeSubgroup,
    abelian,
    canonical_lattice,
    direct_product,
    heisenberg,
)

__all__ = [
    "Operator",
    "NilmanifoldModel",
    "EigenvalueStream",
    "torus_model",
    "heisenberg_model",
    "scaled_model",
    "product_model",
    "torus_eigenvalues",
    "heisenberg_eigenvalues",
    "transform_spectrum",
    "product_spectrum",
    "counting",
    "semiclassical_count",
    "exact_value",
    "exact_string",
]

# An exact eigenvalue is a tuple of (power of pi, rational coefficient) pairs,
# sorted by power with zero coefficients dropped; () is the eigenvalue 0.
ExactKey = tuple


def _canon(terms: Mapping[int, Fraction]) -> ExactKey:
    return tuple(sorted((p, Fraction(q)) for p, q in terms.items() if q != 0))


def _mono(q, p: int) -> ExactKey:
    return _canon({p: Fraction(q)})


def exact_add(a: ExactKey, b: ExactKey) -> ExactKey:
    out: dict[int, Fraction] = defaultdict(Fraction)
    for p, q in a + b:
        out[p] += q
    return _canon(out)


def exact_mul(a: ExactKey, b: ExactKey) -> ExactKey:
    out: dict[int, Fraction] = defaultdict(Fraction)
    for p1, q1 in a:
        for p2, q2 in b:
            out[p1 + p2] += q1 * q2
    return _canon(out)


def exact_pow(a: ExactKey, ell: int) -> ExactKey:
    out: ExactKey = ((0, Fraction(1)),)
    for _ in range(ell):
        out = exact_mul(out, a)
    return out


def exact_value(key: ExactKey) -> float:
    return math.fsum(float(q) * math.pi**p for p, q in key)


def exact_string(key: ExactKey) -> str:
    if not key:
        return "0"
    def term(p, q):
        if p == 0:
            return str(q)
        return f"{q}*pi" if p == 1 else f"{q}*pi^{p}"

    return " + ".join(term(p, q) for p, q in key)


# --------------------------------------------------------------------------- models


@dataclass(frozen=True)
class Operator:
    """Descriptor of the operator whose spectrum a model carries."""

    kind: str  # torus_laplacian | heisenberg_sublaplacian | scaled_power | product_sum
    n: int = 0
    c: Fraction = Fraction(1)
    ell: int = 1
    parts: tuple = ()

    def describe(self) -> str:
        if self.kind == "scaled_power":
            return f"{self.c}*({self.parts[0].describe()})^{self.ell}"
        if self.kind == "product_sum":
            return " + ".join(p.describe() for p in self.parts)
        return f"{self.kind}({self.n})"


@dataclass(frozen=True)
class NilmanifoldModel:
    """Group, lattice, operator and the constants attached to them.

    ``alpha = Q/nu`` governs every asymptotic: the heat trace behaves like
    ``vol * p1_zero * t^-alpha`` and the counting function like
    ``weyl_constant * Lambda^alpha``.
    """

    group: GradedGroup
    lattice: LatticeSubgroup
    operator: Operator
    Q: int
    nu: int
    vol: float
    p1_zero: float
    c0: float

    @property
    def alpha(self) -> float:
        return self.Q / self.nu

    @property
    def weyl_constant(self) -> float:
        return self.vol * self.p1_zero / float(_gamma(1 + self.alpha))

    @property
    def zeta_residue(self) -> float:
        return self.vol * self.p1_zero / float(_gamma(self.alpha))

    def describe(self) -> str:
        return self.operator.describe()


def torus_model(n: int) -> NilmanifoldModel:
    g = abelian(n)
    p1 = (4 * math.pi) ** (-n / 2)
    return NilmanifoldModel(
        g, canonical_lattice(g), Operator("torus_laplacian", n), n, 2, 1.0, p1, p1 / float(_gamma(n / 2))
    )


def heisenberg_model(n: int, prefactor_mode: str = "consistent") -> NilmanifoldModel:
    from .constants import c0_heisenberg

    g = heisenberg(n)
    lat = canonical_lattice(g)
    c0 = c0_heisenberg(n, prefactor_mode=prefactor_mode)
    Q = 2 * n + 2
    # p1(0) = c0 * Gamma(Q/nu) with Q/nu = n + 1
    return NilmanifoldModel(
        g, lat, Operator("heisenberg_sublaplacian", n), Q, 2, float(lat.covolume), c0 * math.factorial(n), c0
    )


def scaled_model(base: NilmanifoldModel, c, ell: int = 1) -> NilmanifoldModel:
    """Model of ``c * R^ell`` built from the model of ``R``."""
    if not c > 0:
        raise ValueError("scale factor must be positive")
    if ell < 1 or int(ell) != ell:
        raise ValueError("power must be a positive integer")
    c = Fraction(c)
    nu = base.nu * int(ell)
    c0 = float(c) ** (-base.Q / nu) * base.c0 / ell
    op = Operator("scaled_power", c=c, ell=int(ell), parts=(base.operator,))
    return replace(base, operator=op, nu=nu, c0=c0, p1_zero=c0 * float(_gamma(base.Q / nu)))


def product_model(m1: NilmanifoldModel, m2: NilmanifoldModel, rescale1: int = 1, rescale2: int = 1) -> NilmanifoldModel:
    """Model of ``R1 x I + I x R2`` on the product nilmanifold.

    ``rescale`` multiplies a factor's dilation weights (and hence its operator
    degree) so that both operators share one homogeneous degree.
    """
    nu1, nu2 = m1.nu * rescale1, m2.nu * rescale2
    if nu1 != nu2:
        raise ValueError(f"factors have different homogeneous degrees ({nu1} vs {nu2}); reweight one of them")
    g = direct_product(m1.group, m2.group, rescale1, rescale2)
    lat = LatticeSubgroup(g, m1.lattice.scales + m2.lattice.scales)
    Q = m1.Q * rescale1 + m2.Q * rescale2
    p1 = m1.p1_zero * m2.p1_zero
    return NilmanifoldModel(
        g, lat, Operator("product_sum", parts=(m1.operator, m2.operator)), Q, nu1, m1.vol * m2.vol, p1,
        p1 / float(_gamma(Q / nu1)),
    )


# --------------------------------------------------------------------------- streams


@dataclass(frozen=True, eq=False)
class EigenvalueStream:
    """Distinct eigenvalues with multiplicities, complete up to ``cutoff``."""

    keys: tuple = field(repr=False)
    lam: np.ndarray = field(repr=False)
    mult: np.ndarray = field(repr=False)
    cutoff: float
    model: NilmanifoldModel = field(repr=False)

    def __post_init__(self):
        if len(self.lam) == 0 or self.lam[0] != 0 or self.mult[0] != 1:
            raise ValueError("stream must start with the simple eigenvalue 0")
        if np.any(np.diff(self.lam) <= 0):
            raise ValueError("eigenvalues must be strictly increasing")
        if np.any(self.mult <= 0):
            raise ValueError("multiplicities must be positive")

    def __len__(self):
        return len(self.lam)

    @property
    def entries(self) -> list[tuple[float, int]]:
        return list(zip(self.lam.tolist(), self.mult.tolist()))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.mult)

    @property
    def total(self) -> int:
        return int(self.mult.sum())

    def to_csv(self, handle=None) -> str:
        """Write ``lambda, multiplicity, cumulative_count, error_estimate, lambda_exact`` rows.

        ``error_estimate`` is the rounding of the float column; the exact
        eigenvalue is repeated symbolically in the last column.
        """
        buf = handle if handle is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "multiplicity", "cumulative_count", "error_estimate", "lambda_exact"])
        rounding = (0.5 * np.spacing(self.lam)).tolist()
        rounding[0] = 0.0
        rows = zip(self.keys, self.lam.tolist(), self.mult.tolist(), self.cumulative.tolist(), rounding)
        for key, lam, m, cum, err in rows:
            w.writerow([repr(lam), m, cum, repr(err), exact_string(key)])
        return buf.getvalue() if handle is None else ""


def _stream(counts: Mapping[ExactKey, int], cutoff: float, model: NilmanifoldModel) -> EigenvalueStream:
    items = [(exact_value(k), k, m) for k, m in counts.items() if m]
    items = [it for it in items if it[0] <= cutoff]
    items.sort(key=lambda it: it[0])
    lam = np.array([it[0] for it in items], dtype=float)
    mult = np.array([it[2] for it in items], dtype=np.int64)
    return EigenvalueStream(tuple(it[1] for it in items), lam, mult, float(cutoff), model)


def _sum_of_squares_counts(n: int, S: int) -> np.ndarray:
    """``r_n(s) = #{m in Z^n : |m|^2 = s}`` for ``0 <= s <= S``."""
    counts = np.zeros(S + 1, dtype=np.int64)
    counts[0] = 1
    roots = range(1, math.isqrt(S) + 1)
    for _ in range(n):
        new = counts.copy()
        for j in roots:
            j2 = j * j
            new[j2:] += 2 * counts[: S + 1 - j2]
        counts = new
    return counts


def _torus_counts(n: int, Lam: float) -> dict:
    S = int(Lam / (4 * math.pi**2)) + 1
    r = _sum_of_squares_counts(n, S)
    return {_mono(4 * s, 2): int(r[s]) for s in np.nonzero(r)[0].tolist()}


def torus_eigenvalues(n: int, Lam: float) -> EigenvalueStream:
    """Spectrum ``4 pi^2 |m|^2``, ``m in Z^n``, of the flat torus Laplacian."""
    if not Lam > 0:
        raise ValueError("cutoff must be positive")
    return _stream(_torus_counts(n, Lam), Lam, torus_model(n))


def heisenberg_eigenvalues(n: int, Lam: float, prefactor_mode: str = "consistent") -> EigenvalueStream:
    """Spectrum of the sub-Laplacian on ``Z^n x Z^n x (1/2)Z \\ H_n``.

    Two families: ``4 pi^2 |m|^2`` for ``m in Z^2n`` and ``4 (2a+n) pi |k|``
    for ``a >= 0``, ``k != 0`` with multiplicity ``(2|k|)^n C(n+a-1, a)``.
    """
    if not Lam > 0:
        raise ValueError("cutoff must be positive")
    counts = _torus_counts(2 * n, Lam)
    J = int(Lam / (4 * math.pi)) + 1
    by_j: dict[int, int] = defaultdict(int)
    for k in range(1, J // n + 1):
        a = 0
        while (2 * a + n) * k <= J:
            # +k and -k contribute equally
            by_j[(2 * a + n) * k] += 2 * (2 * k) ** n * math.comb(n + a - 1, a)
            a += 1
    for j, m in by_j.items():
        counts[_mono(4 * j, 1)] = m
    return _stream(counts, Lam, heisenberg_model(n, prefactor_mode))


def transform_spectrum(spec: EigenvalueStream, c, ell: int = 1) -> EigenvalueStream:
    """Spectrum of ``c * R^ell``: every eigenvalue ``lam`` becomes ``c * lam^ell``."""
    if not c > 0:
        raise ValueError("scale factor must be positive")
    if ell < 1 or int(ell) != ell:
        raise ValueError("power must be a positive integer")
    cq = _mono(Fraction(c), 0)
    keys = tuple(exact_mul(cq, exact_pow(k, int(ell))) if k else () for k in spec.keys)
    lam = np.array([exact_value(k) for k in keys])
    return EigenvalueStream(
        keys, lam, spec.mult.copy(), float(c) * spec.cutoff ** int(ell), scaled_model(spec.model, c, ell)
    )


def product_spectrum(
    s1: EigenvalueStream, s2: EigenvalueStream, Lam: float, rescale1: int = 1, rescale2: int = 1
) -> EigenvalueStream:
    """Spectrum of ``R1 x I + I x R2``: pairwise sums with product multiplicities."""
    if s1.cutoff < Lam or s2.cutoff < Lam:
        raise CompletenessError(
            f"inputs complete to {s1.cutoff} and {s2.cutoff}, product requested to {Lam}"
        )
    counts: dict[ExactKey, int] = defaultdict(int)
    mult2 = s2.mult.tolist()
    for k1, l1, m1 in zip(s1.keys, s1.lam.tolist(), s1.mult.tolist()):
        if l1 > Lam:
            break
        # float margin; the exact filter happens in _stream
        stop = int(np.searchsorted(s2.lam, Lam - l1 + 1e-9 * max(1.0, Lam), side="right"))
        for k2, m2 in zip(s2.keys[:stop], mult2[:stop]):
            counts[exact_add(k1, k2)] += m1 * m2
    model = product_model(s1.model, s2.model, rescale1, rescale2)
    return _stream(counts, Lam, model)


def counting(spec: EigenvalueStream, Lam: float) -> int:
    """``N(Lam)``: eigenvalues at most ``Lam`` counted with multiplicity."""
    if Lam > spec.cutoff:
        raise CompletenessError(f"N({Lam}) requested from a stream complete only to {spec.cutoff}")
    idx = int(np.searchsorted(spec.lam, Lam, side="right"))
    return int(spec.mult[:idx].sum())


def semiclassical_count(spec: EigenvalueStream, a: float, b: float, Lam: float) -> int:
    """Eigenvalues in ``[Lam*a, Lam*b]`` counted with multiplicity."""
    if a < 0 or not b > a:
        raise ValueError("need 0 <= a < b")
    if Lam * b > spec.cutoff:
        raise CompletenessError(f"segment end {Lam * b} exceeds the stream cutoff {spec.cutoff}")
    lo = int(np.searchsorted(spec.lam, Lam * a, side="left"))
    hi = int(np.searchsorted(spec.lam, Lam * b, side="right"))
    return int(spec.mult[lo:hi].sum())


def stream_from_pairs(pairs: Iterable[tuple[ExactKey, int]], cutoff: float, model: NilmanifoldModel) -> EigenvalueStream:
    """Aggregate ``(exact eigenvalue, multiplicity)`` pairs into a stream."""
    counts: dict[ExactKey, int] = defaultdict(int)
    for k, m in pairs:
        counts[_canon(dict(k))] += m
    return _stream(counts, cutoff, model)
