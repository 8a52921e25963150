"""Graded nilpotent groups in exponential coordinates.

Supported families are closed form: abelian groups ``R^n``, Heisenberg groups
``H_n`` realised on ``R^n x R^n x R`` with the law

    (x, y, t)(x', y', t') = (x + x', y + y', t + t' + (x.y' - y.x') / 2),

and direct products of these. Lattices are generated by ``k_j e_j`` and are
enumerated through integer exponent vectors, so lattice elements stay exact
(:class:`fractions.Fraction`) until a norm or a kernel is evaluated.

The homogeneous quasi-norm is the max form ``||x|| = max_j |x_j|^(1/w_j)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from numbers import Rational
from typing import Sequence

import numpy as np

__all__ = [
    "GradedGroup",
    "GroupElement",
    "LatticeSubgroup",
    "FundamentalDomainGrid",
    "abelian",
    "heisenberg",
    "direct_product",
    "element",
    "identity",
    "multiply",
    "inverse",
    "dilate",
    "quasi_norm",
    "quasi_norm_array",
    "conjugation_matrix",
    "canonical_lattice",
    "lattice_ball",
    "ball_exponents",
    "lattice_tail_sum",
    "lattice_tail_bound",
    "fundamental_domain_grid",
]


@dataclass(frozen=True)
class GradedGroup:
    """A graded group from one of the supported families.

    Use :func:`abelian`, :func:`heisenberg` and :func:`direct_product` rather
    than calling the constructor directly.
    """

    law: str
    dim: int
    weights: tuple[int, ...]
    n: int = 0
    factors: tuple["GradedGroup", ...] = ()

    def __post_init__(self):
        if len(self.weights) != self.dim:
            raise ValueError("weights must have one entry per coordinate")
        if any(int(w) != w or w < 1 for w in self.weights):
            raise ValueError("weights must be positive integers")
        if self.law == "abelian":
            if self.dim != self.n:
                raise ValueError("abelian(n) has dimension n")
            if len(set(self.weights)) != 1:
                raise ValueError("abelian factors carry a single weight")
        elif self.law == "heisenberg":
            n = self.n
            w = self.weights[0]
            if self.dim != 2 * n + 1 or self.weights != (w,) * (2 * n) + (2 * w,):
                raise ValueError("heisenberg(n) needs dim 2n+1 and weights proportional to (1,...,1,2)")
        elif self.law == "product":
            if sum(f.dim for f in self.factors) != self.dim:
                raise ValueError("product dimension mismatch")
            if sum((f.weights for f in self.factors), ()) != self.weights:
                raise ValueError("product weights must concatenate factor weights")
        else:
            raise ValueError(f"unknown group law {self.law!r}")

    @property
    def Q(self) -> int:
        """Homogeneous dimension."""
        return sum(self.weights)

    @property
    def step(self) -> int:
        return max(self.weights)

    def reweighted(self, factor: int) -> "GradedGroup":
        """Same group law with every weight multiplied by ``factor``."""
        if factor < 1 or int(factor) != factor:
            raise ValueError("reweight factor must be a positive integer")
        factor = int(factor)
        return GradedGroup(
            self.law,
            self.dim,
            tuple(w * factor for w in self.weights),
            self.n,
            tuple(f.reweighted(factor) for f in self.factors),
        )

    def describe(self) -> str:
        if self.law == "product":
            return " x ".join(f.describe() for f in self.factors)
        scale = self.weights[0]
        tag = f"{self.law}:{self.n}"
        return tag if scale == 1 else f"{tag}@{scale}"


def abelian(n: int) -> GradedGroup:
    return GradedGroup("abelian", n, (1,) * n, n)


def heisenberg(n: int) -> GradedGroup:
    return GradedGroup("heisenberg", 2 * n + 1, (1,) * (2 * n) + (2,), n)


def direct_product(g1: GradedGroup, g2: GradedGroup, rescale1: int = 1, rescale2: int = 1) -> GradedGroup:
    """Direct product ``g1 x g2`` with optional integer reweighting of each factor.

    Reweighting by ``m`` replaces the dilations ``D_r`` of a factor by
    ``D_{r^m}``, which is how two factors with different operator degrees are
    brought to a common homogeneity. Coordinates keep factor order, so the
    weight vector of a product need not be sorted.
    """
    parts = []
    for g, m in ((g1, rescale1), (g2, rescale2)):
        g = g.reweighted(m) if m != 1 else g
        parts.extend(g.factors if g.law == "product" else (g,))
    weights = sum((p.weights for p in parts), ())
    return GradedGroup("product", len(weights), weights, 0, tuple(parts))


@dataclass(frozen=True)
class GroupElement:
    """A point of a graded group in exponential coordinates."""

    coords: tuple

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, j):
        return self.coords[j]

    def as_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])


def element(*coords) -> GroupElement:
    if len(coords) == 1 and not isinstance(coords[0], (int, float, Rational)):
        coords = tuple(coords[0])
    return GroupElement(tuple(coords))


def identity(g: GradedGroup) -> GroupElement:
    return GroupElement((0,) * g.dim)


def _check(g: GradedGroup, *xs) -> None:
    for x in xs:
        if len(x) != g.dim:
            raise ValueError(f"element of length {len(x)} does not conform to a group of dimension {g.dim}")


def _half(v):
    if isinstance(v, int):
        return Fraction(v, 2)
    return v / 2


def _law(g: GradedGroup, x, y) -> list:
    # x[j], y[j] may be scalars or numpy arrays of a common shape
    if g.law == "abelian":
        return [a + b for a, b in zip(x, y)]
    if g.law == "heisenberg":
        n = g.n
        symp = sum(x[i] * y[n + i] - x[n + i] * y[i] for i in range(n))
        out = [x[j] + y[j] for j in range(2 * n)]
        out.append(x[2 * n] + y[2 * n] + _half(symp))
        return out
    out = []
    start = 0
    for f in g.factors:
        stop = start + f.dim
        out.extend(_law(f, x[start:stop], y[start:stop]))
        start = stop
    return out


def multiply(g: GradedGroup, x: GroupElement, y: GroupElement) -> GroupElement:
    """Group product ``x . y``."""
    _check(g, x, y)
    return GroupElement(tuple(_law(g, tuple(x), tuple(y))))


def inverse(g: GradedGroup, x: GroupElement) -> GroupElement:
    # every supported law has x^{-1} = -x in exponential coordinates
    _check(g, x)
    return GroupElement(tuple(-c for c in x))


def dilate(g: GradedGroup, r, x: GroupElement) -> GroupElement:
    """Apply ``D_r``, scaling coordinate j by ``r**w_j``."""
    if not r > 0:
        raise ValueError("dilation factor must be positive")
    _check(g, x)
    return GroupElement(tuple(c * r**w for c, w in zip(x, g.weights)))


def quasi_norm(g: GradedGroup, x: GroupElement) -> float:
    _check(g, x)
    return max((abs(float(c)) ** (1.0 / w) for c, w in zip(x, g.weights)), default=0.0)


def quasi_norm_array(g: GradedGroup, X: np.ndarray) -> np.ndarray:
    """Row-wise quasi-norm of an ``(M, dim)`` array of coordinates."""
    X = np.asarray(X, dtype=float)
    w = np.asarray(g.weights, dtype=float)
    if X.shape[-1] != g.dim:
        raise ValueError("coordinate array does not conform to the group")
    if X.size == 0:
        return np.zeros(X.shape[:-1])
    return np.max(np.abs(X) ** (1.0 / w), axis=-1)


def conjugation_matrix(g: GradedGroup, x: GroupElement) -> list[list[Fraction]]:
    """Rational matrix ``A`` with ``x^{-1} y x = A y`` for every ``y``.

    Conjugation is linear in exponential coordinates for the supported
    (step at most two) families; on ``H_n`` it only shifts the centre by
    ``-(x_p . y_q - x_q . y_p)``.
    """
    _check(g, x)
    d = g.dim
    A = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]

    def fill(f: GradedGroup, coords, offset: int):
        if f.law == "heisenberg":
            n = f.n
            row = A[offset + 2 * n]
            for i in range(n):
                row[offset + n + i] -= Fraction(coords[i])
                row[offset + i] += Fraction(coords[n + i])
        elif f.law == "product":
            start = 0
            for sub in f.factors:
                fill(sub, coords[start:start + sub.dim], offset + start)
                start += sub.dim

    fill(g, tuple(x), 0)
    return A


# --------------------------------------------------------------------------- lattices


@dataclass(frozen=True)
class LatticeSubgroup:
    """Lattice generated by ``scales[j] * e_j`` in exponential coordinates."""

    group: GradedGroup
    scales: tuple[Fraction, ...]

    def __post_init__(self):
        scales = tuple(Fraction(s) for s in self.scales)
        object.__setattr__(self, "scales", scales)
        if len(scales) != self.group.dim:
            raise ValueError("one generator scale per coordinate is required")
        if any(s <= 0 for s in scales):
            raise ValueError("generator scales must be positive")
        for f, ks in _factor_slices(self.group, scales):
            if f.law == "heisenberg":
                n = f.n
                for i in range(n):
                    ratio = ks[i] * ks[n + i] / (2 * ks[2 * n])
                    if ratio.denominator != 1:
                        raise ValueError(
                            "coordinate lattice is not closed under the Heisenberg law: "
                            f"k_x k_y / (2 k_t) = {ratio} is not an integer"
                        )

    @property
    def covolume(self) -> Fraction:
        return reduce(lambda a, b: a * b, self.scales, Fraction(1))

    def point(self, exponents: Sequence[int]) -> GroupElement:
        return GroupElement(tuple(k * int(e) for k, e in zip(self.scales, exponents)))

    def is_member(self, x: GroupElement) -> bool:
        return all((Fraction(c) / k).denominator == 1 for c, k in zip(x, self.scales))

    def points_float(self, exps: np.ndarray) -> np.ndarray:
        return np.asarray(exps, dtype=float) * np.array([float(k) for k in self.scales])


def _factor_slices(g: GradedGroup, values):
    if g.law != "product":
        return [(g, tuple(values))]
    out = []
    start = 0
    for f in g.factors:
        out.append((f, tuple(values[start:start + f.dim])))
        start += f.dim
    return out


def canonical_lattice(g: GradedGroup) -> LatticeSubgroup:
    """``Z^n`` for abelian factors and ``Z^n x Z^n x (1/2)Z`` for Heisenberg factors."""
    scales: list[Fraction] = []
    for f in (g.factors if g.law == "product" else (g,)):
        if f.law == "heisenberg":
            scales.extend([Fraction(1)] * (2 * f.n) + [Fraction(1, 2)])
        else:
            scales.extend([Fraction(1)] * f.dim)
    return LatticeSubgroup(g, tuple(scales))


def _exponent_bounds(lat: LatticeSubgroup, R) -> list[int]:
    Rq = Fraction(R)
    return [math.floor(Rq**w / k) for w, k in zip(lat.group.weights, lat.scales)]


def ball_exponents(lat: LatticeSubgroup, R) -> np.ndarray:
    """Integer exponent vectors of the lattice points with ``||gamma|| <= R``.

    For the max-form quasi-norm the ball is a box in exponent space. Rows are
    in lexicographic order.
    """
    if R < 0:
        raise ValueError("radius must be nonnegative")
    bounds = _exponent_bounds(lat, R)
    axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([gr.ravel() for gr in grids], axis=-1)


def lattice_ball(lat: LatticeSubgroup, R) -> list[GroupElement]:
    """Lattice elements of quasi-norm at most ``R``, lexicographic in exponents."""
    return [lat.point(e) for e in ball_exponents(lat, R)]


def _lemma_threshold(g: GradedGroup) -> int:
    return g.weights[-1] * g.dim if g.law != "product" else max(g.weights) * g.dim


def lattice_tail_sum(lat: LatticeSubgroup, N: float, R) -> float:
    """Partial sum of ``||gamma||^-N`` over ``0 < ||gamma|| <= R``."""
    if N <= _lemma_threshold(lat.group):
        warnings.warn(
            f"N={N} does not exceed max weight x dimension; the full lattice sum may diverge",
            RuntimeWarning,
            stacklevel=2,
        )
    norms = quasi_norm_array(lat.group, lat.points_float(ball_exponents(lat, R)))
    norms = norms[norms > 0]
    return math.fsum((norms ** (-float(N))).tolist())


def _count_upper(lat: LatticeSubgroup, r: float) -> float:
    return math.prod(2.0 * r**w / float(k) + 1.0 for w, k in zip(lat.group.weights, lat.scales))


def lattice_tail_bound(lat: LatticeSubgroup, N: float, R: float) -> float:
    """Upper bound for ``sum over ||gamma|| > R`` of ``||gamma||^-N``.

    Dyadic shells ``2^i R < ||gamma|| <= 2^(i+1) R`` hold at most
    ``prod_j (2 (2^(i+1) R)^w_j / k_j + 1)`` points. Returns ``inf`` when
    ``N <= Q`` or ``R <= 0``.
    """
    Q = lat.group.Q
    if R <= 0 or N <= Q:
        return math.inf
    total = 0.0
    r = float(R)
    for _ in range(4000):
        term = _count_upper(lat, 2 * r) * r ** (-float(N))
        total += term
        # the shell terms eventually shrink by at least 2^(Q-N) per doubling
        if term < 1e-17 * total and r > 1:
            ratio = 2.0 ** (Q - N)
            return total + term * ratio / (1 - ratio)
        r *= 2
    return math.inf


# --------------------------------------------------------------------------- fundamental domain


@dataclass(frozen=True)
class FundamentalDomainGrid:
    """Tensor midpoint rule on the box ``prod_j [-k_j/2, k_j/2)``."""

    lattice: LatticeSubgroup
    resolution: int
    nodes: tuple[GroupElement, ...] = field(repr=False)
    weights: tuple[Fraction, ...] = field(repr=False)
    total_volume: Fraction

    def node_array(self) -> np.ndarray:
        return np.array([[float(c) for c in x] for x in self.nodes])

    def weight_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])


def fundamental_domain_grid(lat: LatticeSubgroup, resolution: int) -> FundamentalDomainGrid:
    if resolution < 1 or int(resolution) != resolution:
        raise ValueError("resolution must be a positive integer")
    res = int(resolution)
    axes = [[k * (Fraction(2 * i + 1, 2 * res) - Fraction(1, 2)) for i in range(res)] for k in lat.scales]
    nodes = []

    def build(prefix, j):
        if j == len(axes):
            nodes.append(GroupElement(tuple(prefix)))
            return
        for v in axes[j]:
            build(prefix + [v], j + 1)

    build([], 0)
    w = lat.covolume / res ** lat.group.dim
    weights = (w,) * len(nodes)
    return FundamentalDomainGrid(lat, res, tuple(nodes), weights, sum(weights, Fraction(0)))
