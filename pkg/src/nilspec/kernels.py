"""Convolution kernels on graded groups and their periodisation over a lattice.

A kernel ``kappa`` on ``G`` descends to ``M = Gamma \\ G`` as
``K(x, y) = sum_gamma kappa(y^-1 gamma x)``. The diagonal and its integral
over a fundamental domain give the trace of the corresponding operator on
``L^2(M)``; for the rescaled kernels ``eps^-Q kappa(D_{1/eps} x)`` the trace
behaves like ``eps^-Q vol(M) kappa(0)`` up to terms that vanish faster than
any power of ``eps``.

Instead of a Schwartz hypothesis every kernel carries finitely many decay
certificates ``(C_N, N)`` with ``|kappa(x)| <= C_N (1 + ||x||)^-N``; these
drive the lattice tail bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .group_core import (
    FundamentalDomainGrid,
    GradedGroup,
    GroupElement,
    LatticeSubgroup,
    _lemma_threshold,
    _law,
    abelian,
    ball_exponents,
    conjugation_matrix,
    fundamental_domain_grid,
    heisenberg,
    lattice_tail_bound,
    quasi_norm,
)

__all__ = [
    "KernelFunction",
    "ScaledKernel",
    "gaussian_heat",
    "gaussian_kernel",
    "heisenberg_test_kernel",
    "adjoint_kernel",
    "linear_combination",
    "scale_kernel",
    "periodised_diag",
    "periodised_trace",
    "hs_norm_squared",
    "trace_asymptotics",
]

CERTIFICATE_ORDERS = (4, 6, 8, 12, 16, 24, 32, 48)


@dataclass(frozen=True, eq=False)
class KernelFunction:
    """A real kernel on ``group`` evaluated on ``(M, dim)`` coordinate arrays."""

    group: GradedGroup
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    value_at_zero: float
    decay_certificate: tuple = ()
    name: str = "kernel"
    # closed form of kappa * adjoint(kappa), when known
    self_convolution: "KernelFunction | None" = field(default=None, repr=False)

    epsilon = 1.0

    @property
    def base(self) -> "KernelFunction":
        return self

    def __call__(self, x) -> float:
        X = np.asarray([float(c) for c in x], dtype=float)[None, :]
        return float(self.evaluate(X)[0])


@dataclass(frozen=True, eq=False)
class ScaledKernel:
    """``eps^-Q kappa(D_{1/eps} x)``."""

    base: KernelFunction
    epsilon: float

    @property
    def group(self) -> GradedGroup:
        return self.base.group

    @property
    def value_at_zero(self) -> float:
        return self.epsilon ** (-self.group.Q) * self.base.value_at_zero

    @property
    def name(self) -> str:
        return f"{self.base.name}@eps={self.epsilon}"

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        g = self.group
        scale = np.array([self.epsilon ** (-w) for w in g.weights])
        return self.epsilon ** (-g.Q) * self.base.evaluate(np.asarray(X, dtype=float) * scale)

    def __call__(self, x) -> float:
        X = np.asarray([float(c) for c in x], dtype=float)[None, :]
        return float(self.evaluate(X)[0])


def gaussian_heat(n: int, t: float, x) -> float:
    """Euclidean heat kernel ``(4 pi t)^(-n/2) exp(-|x|^2 / 4t)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.atleast_1d(np.asarray([float(c) for c in x], dtype=float))
    if x.shape[-1] != n:
        raise ValueError("point does not conform to R^n")
    return float((4 * math.pi * t) ** (-n / 2) * math.exp(-float(x @ x) / (4 * t)))


def _max_log(N: int, r_star: float, log_b: Callable[[float], float]) -> float:
    return N * math.log1p(r_star) + log_b(r_star)


def gaussian_kernel(n: int, t: float) -> KernelFunction:
    """The heat kernel ``p_t`` on ``R^n`` with certificates for the max quasi-norm."""
    if not t > 0:
        raise ValueError("t must be positive")
    pref = (4 * math.pi * t) ** (-n / 2)
    certs = []
    for N in CERTIFICATE_ORDERS:
        # |x|_E >= ||x||, and (1+r)^N exp(-r^2/4t) peaks where r^2 + r = 2Nt
        r = (-1 + math.sqrt(1 + 8 * N * t)) / 2
        certs.append((pref * math.exp(_max_log(N, r, lambda r: -r * r / (4 * t))), N))

    def ev(X):
        X = np.asarray(X, dtype=float)
        return pref * np.exp(-np.sum(X * X, axis=-1) / (4 * t))

    return KernelFunction(
        abelian(n), ev, pref, tuple(certs), f"gaussian(n={n},t={t})",
        self_convolution=_LazyGaussian(n, 2 * t),
    )


class _LazyGaussian:
    # avoids building the p_{2t}, p_{4t}, ... chain eagerly
    def __init__(self, n, t):
        self.n, self.t = n, t

    def resolve(self) -> KernelFunction:
        return gaussian_kernel(self.n, self.t)


def heisenberg_test_kernel(n: int = 1) -> KernelFunction:
    """``exp(-|x|_E^2)`` in exponential coordinates on ``H_n``.

    For ``||x|| >= 1`` the Euclidean norm dominates the quasi-norm, so
    ``kappa <= exp(-||x||^2)`` there and ``kappa <= 1`` everywhere.
    """
    g = heisenberg(n)
    certs = []
    for N in CERTIFICATE_ORDERS:
        r = max(1.0, (-1 + math.sqrt(1 + 2 * N)) / 2)
        C = max(2.0**N, math.exp(_max_log(N, r, lambda r: -r * r)))
        certs.append((C, N))

    def ev(X):
        X = np.asarray(X, dtype=float)
        return np.exp(-np.sum(X * X, axis=-1))

    return KernelFunction(g, ev, 1.0, tuple(certs), f"heisenberg_test(n={n})")


def adjoint_kernel(kappa: KernelFunction) -> KernelFunction:
    """``kappa~(x) = kappa(x^-1)`` (real kernels); inverse is coordinate negation."""
    return KernelFunction(
        kappa.group,
        lambda X: kappa.evaluate(-np.asarray(X, dtype=float)),
        kappa.value_at_zero,
        kappa.decay_certificate,
        f"adjoint({kappa.name})",
        self_convolution=None,
    )


def linear_combination(a: float, k1: KernelFunction, b: float, k2: KernelFunction) -> KernelFunction:
    if k1.group != k2.group:
        raise ValueError("kernels live on different groups")
    c2 = dict((N, C) for C, N in k2.decay_certificate)
    certs = tuple((abs(a) * C + abs(b) * c2[N], N) for C, N in k1.decay_certificate if N in c2)
    return KernelFunction(
        k1.group,
        lambda X: a * k1.evaluate(X) + b * k2.evaluate(X),
        a * k1.value_at_zero + b * k2.value_at_zero,
        certs,
        f"{a}*{k1.name}+{b}*{k2.name}",
    )


def scale_kernel(kappa: KernelFunction, eps: float) -> ScaledKernel:
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    return ScaledKernel(kappa, float(eps))


# --------------------------------------------------------------------------- periodisation


def _shrink(g: GradedGroup) -> tuple[float, float]:
    """``(tau, c)`` with ``||x^-1 gamma x|| >= c ||gamma||`` once ``||gamma|| >= tau ||x||``."""
    factors = g.factors if g.law == "product" else (g,)
    tau, c = 0.0, 1.0
    for f in factors:
        if f.law == "heisenberg":
            # the centre moves by at most 2n ||x|| ||gamma||
            tau, c = max(tau, 4.0 * f.n), 0.5
    return tau, c


def _conjugated_points(lat: LatticeSubgroup, x: GroupElement, exps: np.ndarray) -> np.ndarray:
    """Float coordinates of ``x^-1 gamma x`` computed exactly over a common denominator."""
    A = conjugation_matrix(lat.group, x)
    M = [[A[i][j] * lat.scales[j] for j in range(lat.group.dim)] for i in range(lat.group.dim)]
    D = math.lcm(*(q.denominator for row in M for q in row))
    Mi = np.array([[int(q * D) for q in row] for row in M], dtype=np.int64)
    return (exps @ Mi.T).astype(float) / D


def _certificates(kappa):
    certs = kappa.base.decay_certificate
    if not certs:
        raise ValueError(f"kernel {kappa.name} carries no decay certificate")
    return certs


def _tail_bound(kappa, lat: LatticeSubgroup, R: float) -> float:
    g = lat.group
    eps = kappa.epsilon
    _, c = _shrink(g)
    best = math.inf
    threshold = _lemma_threshold(g)
    usable = [(C, N) for C, N in _certificates(kappa) if N > threshold]
    if not usable:
        raise ValueError(f"no decay certificate of order above {threshold} for {kappa.name}")
    for C, N in usable:
        lt = lattice_tail_bound(lat, N, R)
        if math.isfinite(lt):
            # |kappa_eps(y)| <= eps^-Q C (1 + c||gamma||/eps)^-N <= eps^-Q C (eps/c)^N ||gamma||^-N
            best = min(best, eps ** (-g.Q) * C * (eps / c) ** N * lt)
    return best


def periodised_diag(
    kappa, lat: LatticeSubgroup, x: GroupElement, R_cut: float, remainder_only: bool = False
) -> tuple[float, float]:
    """``sum_gamma kappa(x^-1 gamma x)`` over ``||gamma|| <= R`` and a bound on the rest.

    ``R`` is ``R_cut`` enlarged, if needed, to the radius beyond which the
    conjugated points are controlled by ``||gamma||``. With ``remainder_only``
    the identity term (always ``kappa(0)``) is left out, which gives the
    deviation from ``kappa(0)`` without cancellation.
    """
    g = lat.group
    if kappa.group != g:
        raise ValueError("kernel and lattice live on different groups")
    tau, _ = _shrink(g)
    R = max(float(R_cut), tau * quasi_norm(g, x))
    tail = _tail_bound(kappa, lat, R)
    exps = ball_exponents(lat, R)
    if remainder_only:
        exps = exps[np.any(exps != 0, axis=1)]
    Y = _conjugated_points(lat, x, exps)
    vals = kappa.evaluate(Y)
    return math.fsum(vals.tolist()), tail


def _trace_on(kappa, lat, grid: FundamentalDomainGrid, R_cut, remainder_only=False) -> tuple[float, float]:
    vals, tails = [], []
    for x, w in zip(grid.nodes, grid.weights):
        v, tb = periodised_diag(kappa, lat, x, R_cut, remainder_only)
        vals.append(float(w) * v)
        tails.append(float(w) * tb)
    return math.fsum(vals), math.fsum(tails)


def periodised_trace(
    kappa, lat: LatticeSubgroup, grid: FundamentalDomainGrid, R_cut: float, remainder_only: bool = False
) -> tuple[float, float]:
    """Midpoint-rule integral of the periodised diagonal over the fundamental domain.

    The error estimate adds the lattice tail bounds to the change against the
    grid of half (or, at resolution 1, double) the resolution. ``remainder_only``
    drops the identity term, whose integral is exactly ``vol * kappa(0)``.
    """
    if grid.lattice != lat:
        raise ValueError("grid does not belong to this lattice")
    value, tail = _trace_on(kappa, lat, grid, R_cut, remainder_only)
    other = grid.resolution // 2 if grid.resolution > 1 else 2
    coarse, _ = _trace_on(kappa, lat, fundamental_domain_grid(lat, other), R_cut, remainder_only)
    return value, abs(value - coarse) + tail


def _convolution_closed_form(kappa):
    base = kappa.base
    sc = base.self_convolution
    if sc is None:
        return None
    if isinstance(sc, _LazyGaussian):
        sc = sc.resolve()
    return sc if kappa.epsilon == 1.0 else scale_kernel(sc, kappa.epsilon)


def hs_norm_squared(kappa, lat: LatticeSubgroup, grid: FundamentalDomainGrid, R_cut: float) -> float:
    """Squared Hilbert-Schmidt norm of the periodised operator.

    Uses the trace of ``kappa * kappa~`` when that convolution is known in
    closed form; otherwise integrates ``|K(x, y)|^2`` over the product grid.
    """
    conv = _convolution_closed_form(kappa)
    if conv is not None:
        return max(periodised_trace(conv, lat, grid, R_cut)[0], 0.0)
    g = lat.group
    P = grid.node_array()
    w = grid.weight_array()
    tau, _ = _shrink(g)
    R = max(float(R_cut), tau * 2 * max(quasi_norm(g, x) for x in grid.nodes))
    Gm = lat.points_float(ball_exponents(lat, R))
    total = []
    for j in range(len(P)):
        yinv = -P[j]
        # y^-1 gamma x for every gamma (rows) and x (columns)
        left = _law(g, [np.full(len(Gm), c) for c in yinv], [Gm[:, k] for k in range(g.dim)])
        for i in range(len(P)):
            z = _law(g, left, [np.full(len(Gm), c) for c in P[i]])
            Z = np.stack(z, axis=-1)
            K = math.fsum(kappa.evaluate(Z).tolist())
            total.append(w[i] * w[j] * K * K)
    return math.fsum(total)


def trace_asymptotics(kappa: KernelFunction, lat: LatticeSubgroup, grid: FundamentalDomainGrid, eps_list, R_cut: float):
    """Rows ``(eps, trace, eps^Q trace, error_estimate)`` for rescaled copies of ``kappa``."""
    Q = lat.group.Q
    rows = []
    for eps in eps_list:
        tr, err = periodised_trace(scale_kernel(kappa, eps), lat, grid, R_cut)
        rows.append((float(eps), tr, eps**Q * tr, err))
    return rows
