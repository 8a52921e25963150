"""Heat traces, spectral zeta functions and Weyl-law fits.

The spectral zeta function of an eigenvalue stream is evaluated either as a
Dirichlet series (where it converges) or through the Mellin split

    zeta(s) = h1(s) + vol p1(0) / (Gamma(s) (s - Q/nu)) - 1/Gamma(s+1) + h2(s)

with ``h1`` the Mellin integral of ``theta(t) - 1`` over ``[1, inf)`` and
``h2`` that of ``theta(t) - vol p1(0) t^(-Q/nu)`` over ``(0, 1]``. Both pieces
are entire, so the split continues zeta to the whole plane. ``1/Gamma`` is
evaluated directly (it is entire), which makes the values at ``s = 0, -1, ...``
exact up to the ``-1/Gamma(s+1)`` term.
"""
from __future__ import annotations

import cmath
import math
import weakref
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gamma as _gamma, gammaincc, rgamma

from .errors import CertificateError, CompletenessError, PoleError
from .spectral_data import EigenvalueStream, product_spectrum, torus_eigenvalues

__all__ = [
    "ThetaOptions",
    "MellinSplit",
    "WeylFit",
    "CrossCheck",
    "theta",
    "theta_array",
    "required_cutoff",
    "theta_torus_poisson",
    "riemann_zeta",
    "zeta_direct",
    "zeta_mellin",
    "residue_at_pole",
    "product_zeta_Z",
    "torus_cross_check",
    "weyl_fit",
    "weyl_fit_segment",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ThetaOptions:
    """``tail_gap`` is the decay rate used for ``|theta(t) - 1| <= C exp(-gap t)``."""

    tail_gap: float | None = None
    truncation_tolerance: float = 1e-8

    def __post_init__(self):
        if self.tail_gap is not None and not self.tail_gap > 0:
            raise ValueError("tail_gap must be positive")
        if not self.truncation_tolerance > 0:
            raise ValueError("truncation_tolerance must be positive")


# --------------------------------------------------------------------------- heat trace


def _weyl_upper(spec: EigenvalueStream) -> float:
    """Constant ``A`` assumed to satisfy ``N(lam) <= A lam^alpha`` beyond the cutoff.

    Twice the larger of the Weyl constant and the largest observed ratio over
    the upper half of the stream.
    """
    alpha = spec.model.alpha
    c = spec.model.weyl_constant
    lam = spec.lam
    sel = lam >= spec.cutoff / 2
    sel[0] = False
    if np.any(sel):
        c = max(c, float(np.max(spec.cumulative[sel] / lam[sel] ** alpha)))
    return 2.0 * c


def _theta_tail(spec: EigenvalueStream, t: np.ndarray) -> np.ndarray:
    # sum_{lam > L} e^{-t lam} <= t int_L^inf N(lam) e^{-t lam} dlam <= A t^-alpha Gamma(alpha+1, tL)
    alpha = spec.model.alpha
    A = _weyl_upper(spec)
    x = t * spec.cutoff
    return A * t ** (-alpha) * gammaincc(alpha + 1, x) * float(_gamma(alpha + 1))


def theta_array(spec: EigenvalueStream, ts) -> tuple[np.ndarray, np.ndarray]:
    """Heat trace and truncation bound at every ``t`` in ``ts``."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts <= 0):
        raise ValueError("t must be positive")
    w = spec.mult.astype(float)
    out = np.empty_like(ts)
    for i, t in enumerate(ts):
        out[i] = math.fsum((w * np.exp(-t * spec.lam)).tolist())
    return out, _theta_tail(spec, ts)


def theta(spec: EigenvalueStream, t: float, opts: ThetaOptions | None = None) -> tuple[float, float]:
    """``Tr exp(-t R_M)`` summed over the stream, with a truncation bound."""
    opts = opts or ThetaOptions()
    val, tail = theta_array(spec, [t])
    if tail[0] >= opts.truncation_tolerance:
        raise CompletenessError(
            f"stream cutoff {spec.cutoff} too small for t={t}: tail bound {tail[0]:.3g} "
            f">= {opts.truncation_tolerance:.3g}; need about {required_cutoff(spec.model, t, opts.truncation_tolerance):.6g}"
        )
    return float(val[0]), float(tail[0])


def required_cutoff(model, t: float, delta: float) -> float:
    """Cutoff ``L`` whose Weyl tail bound for ``theta(t)`` falls below ``delta``."""
    alpha = model.alpha
    c = model.weyl_constant
    L = math.log(1 / delta) / t
    for _ in range(2):
        L = (math.log(1 / delta) + math.log(1 + 2 * c * L**alpha)) / t
    A = 4 * c
    while A * t ** (-alpha) * gammaincc(alpha + 1, t * L) * math.gamma(alpha + 1) >= delta:
        L *= 1.25
    return L


def theta_torus_poisson(n: int, t: float) -> float:
    """Torus heat trace from the Poisson-dual sum ``(4 pi t)^(-1/2) sum_j exp(-j^2 / 4t)``, to the power ``n``."""
    if not t > 0:
        raise ValueError("t must be positive")
    J = int(math.ceil(math.sqrt(4 * t * 750))) + 1
    j = np.arange(1, J + 1, dtype=float)
    one = (4 * math.pi * t) ** -0.5 * (1.0 + 2.0 * math.fsum(np.exp(-j * j / (4 * t)).tolist()))
    return one**n


# --------------------------------------------------------------------------- Riemann zeta


@lru_cache(maxsize=None)
def _borwein_weights(n: int) -> np.ndarray:
    d = []
    acc = Fraction(0)
    for i in range(n + 1):
        acc += Fraction(math.factorial(n + i - 1) * 4**i, math.factorial(n - i) * math.factorial(2 * i))
        d.append(acc * n)
    dn = d[-1]
    return np.array([float((-1) ** k * (d[k] - dn) / dn) for k in range(n)])


def _zeta_right(s: complex, n: int = 64) -> complex:
    # Borwein's accelerated alternating series; valid and accurate for Re s > 0
    w = _borwein_weights(n)
    k1 = np.arange(1, n + 1, dtype=float)
    eta = -complex(np.sum(w * np.exp(-s * np.log(k1))))
    return eta / (1 - 2 ** (1 - s))


def riemann_zeta(s) -> complex:
    """Riemann zeta function for complex ``s != 1``."""
    s = complex(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    if abs(s) < 1e-10:
        return -0.5 - 0.5 * math.log(2 * math.pi) * s
    if s.real > 0:
        return _zeta_right(s)
    # functional equation
    return 2**s * cmath.pi ** (s - 1) * cmath.sin(cmath.pi * s / 2) * complex(_gamma(1 - s)) * _zeta_right(1 - s)


# --------------------------------------------------------------------------- Dirichlet series


def _direct_sum(spec: EigenvalueStream, s: complex) -> tuple[complex, float]:
    alpha = spec.model.alpha
    sigma = s.real
    if sigma <= alpha:
        raise PoleError(f"Dirichlet series diverges for Re s = {sigma} <= Q/nu = {alpha}")
    lam = spec.lam[1:]
    m = spec.mult[1:].astype(float)
    terms = m * np.exp(-s * np.log(lam)) if lam.size else np.zeros(0, dtype=complex)
    value = complex(math.fsum(np.real(terms).tolist()), math.fsum(np.imag(terms).tolist()))
    A = _weyl_upper(spec)
    tail = abs(s) * A * spec.cutoff ** (alpha - sigma) / (sigma - alpha)
    return value, tail


def zeta_direct(spec: EigenvalueStream, s, delta: float | None = None) -> tuple[complex, float]:
    """``sum mult * lam^-s`` over the nonzero spectrum plus a Weyl tail bound."""
    s = complex(s)
    value, tail = _direct_sum(spec, s)
    if delta is not None and tail > delta:
        raise CertificateError(f"Dirichlet tail bound {tail:.3g} exceeds {delta:.3g} at s={s}")
    return value, tail


# --------------------------------------------------------------------------- Mellin split


@dataclass(frozen=True)
class MellinSplit:
    s: complex
    h1: complex
    pole_term: complex
    gamma_reciprocal_term: complex
    h2: complex
    error_estimate: float
    value: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "value", self.h1 + self.pole_term + self.gamma_reciprocal_term + self.h2)


def _gl(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_nodes(edges, order):
    x, w = _gl(order)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ts.append(0.5 * (b - a) * x + 0.5 * (b + a))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(ts), np.concatenate(ws)


class _MellinContext:
    """Heat-trace samples shared by every ``s`` for one stream."""

    ORDERS = (24, 48)

    def __init__(self, spec: EigenvalueStream, model, t_min: float | None):
        self.spec = spec
        self.model = model
        self.C = model.vol * model.p1_zero
        self.alpha = model.alpha
        if t_min is None:
            t_min = self._auto_t_min()
        self.t_min = float(t_min)
        tail = float(_theta_tail(spec, np.array([self.t_min]))[0])
        if tail > 1e-10 * max(1.0, self.C * self.t_min ** (-self.alpha)):
            raise CompletenessError(
                f"stream cutoff {spec.cutoff} cannot certify theta at t_min={self.t_min} (tail {tail:.3g})"
            )
        k = max(1, int(math.ceil(math.log2(1 / self.t_min))))
        edges_h2 = [self.t_min] + [2.0 ** (-j) for j in range(k - 1, -1, -1)]
        if edges_h2[1] <= self.t_min:
            edges_h2 = [self.t_min] + edges_h2[2:]
        self.h2 = [self._sample(edges_h2, o, residual=True) for o in self.ORDERS]
        self._envelope_setup()
        self._h1_setup()

    def _auto_t_min(self) -> float:
        for k in range(48, 0, -1):
            t = 2.0 ** (-k)
            tail = float(_theta_tail(self.spec, np.array([t]))[0])
            if tail <= 1e-16 * max(1.0, self.C * t ** (-self.alpha)):
                return t
        raise CompletenessError(f"stream cutoff {self.spec.cutoff} is too small for the Mellin split")

    def _sample(self, edges, order, residual):
        t, w = _panel_nodes(np.asarray(edges, dtype=float), order)
        th, tail = theta_array(self.spec, t)
        if residual:
            lead = self.C * t ** (-self.alpha)
            f = th - lead
            floor = 4 * _EPS * (np.abs(th) + lead) + tail
        else:
            f = th - 1.0
            floor = 4 * _EPS * np.abs(th) + tail
        return t, w, f, floor

    def _envelope_setup(self):
        # decay of the h2 integrand just above t_min, as A exp(-B/t)
        probes = [self.t_min * 2.0**j for j in range(8) if self.t_min * 2.0**j <= 1.0]
        th, tail = theta_array(self.spec, probes)
        lead = self.C * np.asarray(probes) ** (-self.alpha)
        r = np.abs(th - lead)
        floor = 4 * _EPS * (th + lead) + tail
        above = [(t, rr) for t, rr, fl in zip(probes, r, floor) if rr > 10 * fl]
        self.floor_tmin = float(floor[0])
        self.envelope = None
        if len(above) >= 2:
            (ta, ra), (tb, rb) = above[0], above[1]
            if rb > ra:
                B = math.log(rb / ra) / (1 / ta - 1 / tb)
                A = ra * math.exp(B / ta)
                # never below what was measured at t_min itself
                if A * math.exp(-B / self.t_min) < r[0]:
                    A = float(r[0]) * math.exp(B / self.t_min)
                self.envelope = (A, B)
            else:
                self.envelope = "flat"

    def _h1_setup(self):
        lam1 = float(self.spec.lam[1])
        # any rate up to lam1 gives a valid bound; the cap keeps exp(gap) finite
        self.gap = min(lam1 / 2, 300.0)
        th1, tail1 = theta_array(self.spec, [1.0])
        w = self.spec.mult[1:].astype(float)
        self.C_gap = math.fsum((w * np.exp(-(self.spec.lam[1:] - self.gap))).tolist()) + float(tail1[0]) * math.exp(self.gap)
        # T large enough for |s| up to ~40
        T = 2.0
        while self.C_gap * T**42 * math.exp(-self.gap * T) > 1e-18:
            T *= 2
        self.T = T
        edges = [1.0]
        while edges[-1] < T:
            edges.append(edges[-1] * 2)
        self.h1 = [self._sample(edges, o, residual=False) for o in self.ORDERS]

    def envelope_integral(self, sigma: float) -> float:
        """Bound for ``int_0^t_min t^(sigma-1) |residual| dt``."""
        from scipy import integrate

        tm = self.t_min
        env = self.envelope
        if env == "flat":
            return math.inf if sigma <= 0 else self.floor_tmin * 10 * tm**sigma / sigma
        if env is None:
            # residual below resolution on all probes: polynomial envelope of degree |sigma|+2
            K = abs(sigma) + 2
            return self.floor_tmin * tm**sigma / (sigma + K)
        A, B = env
        val, _ = integrate.quad(lambda t: t ** (sigma - 1) * A * math.exp(-B / t), 0.0, tm, limit=200)
        return val

    def h1_tail(self, sigma: float) -> float:
        T, g = self.T, self.gap
        if sigma <= 1:
            return self.C_gap * T ** (sigma - 1) * math.exp(-g * T) / g
        return self.C_gap * g ** (-sigma) * float(gammaincc(sigma, g * T) * _gamma(sigma))


_CONTEXTS: "weakref.WeakKeyDictionary[EigenvalueStream, dict]" = weakref.WeakKeyDictionary()


def _context(spec, model, t_min) -> _MellinContext:
    per = _CONTEXTS.setdefault(spec, {})
    key = (id(model), t_min)
    ctx = per.get(key)
    if ctx is None or ctx.model is not model:
        ctx = _MellinContext(spec, model, t_min)
        per[key] = ctx
    return ctx


def _mellin_piece(samples, s):
    vals = []
    for t, w, f, _ in samples:
        vals.append(complex(np.sum(w * np.exp((s - 1) * np.log(t)) * f)))
    t, w, _, floor = samples[-1]
    rounding = float(np.sum(w * t ** (s.real - 1) * floor))
    return vals[-1], abs(vals[-1] - vals[0]) + rounding


def zeta_mellin(spec: EigenvalueStream, s, model=None, t_min: float | None = None) -> MellinSplit:
    """Continue the spectral zeta function to ``s`` through the Mellin split."""
    model = model or spec.model
    s = complex(s)
    alpha = model.alpha
    if abs(s - alpha) < 1e-6:
        raise PoleError(f"s={s} is within 1e-6 of the pole at Q/nu={alpha}")
    ctx = _context(spec, model, t_min)
    rg = complex(rgamma(s))
    rg1 = complex(rgamma(s + 1))
    I2, e2 = _mellin_piece(ctx.h2, s)
    I1, e1 = _mellin_piece(ctx.h1, s)
    sigma = s.real
    if rg == 0:
        err = 0.0
    else:
        env = ctx.envelope_integral(sigma)
        err = abs(rg) * (e1 + e2 + env + ctx.h1_tail(sigma))
    return MellinSplit(
        s=s,
        h1=rg * I1,
        pole_term=rg * ctx.C / (s - alpha),
        gamma_reciprocal_term=-rg1,
        h2=rg * I2,
        error_estimate=float(err),
    )


def residue_at_pole(spec: EigenvalueStream, model=None, eps=(1e-2, 1e-3)) -> tuple[float, float]:
    """Residue at ``s = Q/nu`` from ``(s - Q/nu) zeta(s)`` near the pole.

    Samples on both sides at distances ``eps`` cancel the linear term; a
    Richardson step in ``eps^2`` removes the quadratic one. Returns the value
    and an error estimate.
    """
    model = model or spec.model
    alpha = model.alpha
    e_big, e_small = sorted(eps, reverse=True)

    def sym(e):
        zp = zeta_mellin(spec, alpha + e, model)
        zm = zeta_mellin(spec, alpha - e, model)
        val = 0.5 * (e * zp.value - e * zm.value)
        return val.real, e * (zp.error_estimate + zm.error_estimate)

    sb, eb = sym(e_big)
    ss, es = sym(e_small)
    r = (e_big / e_small) ** 2
    res = (r * ss - sb) / (r - 1)
    err = abs(res - ss) + (r * es + eb) / (r - 1)
    return res, err


# --------------------------------------------------------------------------- products


def _nonzero_powers(spec, sigma) -> tuple[float, float]:
    lam = spec.lam[1:]
    partial = math.fsum((spec.mult[1:] * lam ** (-sigma)).tolist())
    alpha = spec.model.alpha
    if sigma <= alpha:
        raise PoleError(f"Re s/2 = {sigma} is not above Q/nu = {alpha}; double-sum tail cannot be certified")
    tail = sigma * _weyl_upper(spec) * spec.cutoff ** (alpha - sigma) / (sigma - alpha)
    return partial, tail


def product_zeta_Z(s1: EigenvalueStream, s2: EigenvalueStream, s) -> tuple[complex, float]:
    """``Z(s) = sum over nonzero pairs of (lam1 + lam2)^-s`` with a tail certificate.

    Pairs with one eigenvalue beyond its stream cutoff are bounded through
    ``(lam1 + lam2)^-sigma <= 2^-sigma (lam1 lam2)^(-sigma/2)``.
    """
    s = complex(s)
    sigma = s.real
    l1, m1 = s1.lam[1:], s1.mult[1:].astype(float)
    l2, m2 = s2.lam[1:], s2.mult[1:].astype(float)
    if l1.size == 0 or l2.size == 0:
        return 0j, 0.0
    total = np.add.outer(l1, l2)
    terms = np.outer(m1, m2) * np.exp(-s * np.log(total))
    value = complex(math.fsum(np.real(terms).ravel().tolist()), math.fsum(np.imag(terms).ravel().tolist()))
    p1, t1 = _nonzero_powers(s1, sigma / 2)
    p2, t2 = _nonzero_powers(s2, sigma / 2)
    tail = 2.0 ** (-sigma) * (t1 * (p2 + t2) + (p1 + t1) * t2)
    return value, tail


@dataclass(frozen=True)
class CrossCheck:
    s: complex
    lhs: complex
    lhs_error: float
    rhs: complex
    rhs_error: float
    residual: float
    h: complex
    residual_paper_form: float


def _h_term(spec_L: EigenvalueStream, s: complex) -> tuple[complex, float]:
    # (1/(sqrt(pi) Gamma(s))) int_0^inf (theta_L(t) - 1) sum_{j>=1} exp(-j^2/4t) t^(s-3/2) dt
    ctx = _context(spec_L, spec_L.model, None)
    t_lo = ctx.t_min
    t_hi = ctx.T
    edges = [t_lo]
    while edges[-1] < t_hi:
        edges.append(min(edges[-1] * 2, t_hi))
    out = []
    for order in (24, 48):
        t, w = _panel_nodes(np.asarray(edges), order)
        th, _ = theta_array(spec_L, t)
        J = int(math.ceil(math.sqrt(4 * t_hi * 750))) + 1
        j = np.arange(1, J + 1, dtype=float)
        S = np.exp(-np.outer(1.0 / (4 * t), j * j)).sum(axis=1)
        f = (th - 1.0) * S * np.exp((s - 1.5) * np.log(t))
        out.append(complex(np.sum(w * f)))
    pref = complex(rgamma(s)) / math.sqrt(math.pi)
    sigma = s.real
    C = ctx.C
    # below t_lo: theta_L - 1 <= 2 C t^-alpha, sum_j <= 2 exp(-1/4t) for t < 1/4
    low = 4 * C * t_lo ** (sigma - 1.5 - ctx.alpha + 1) * math.exp(-0.25 / t_lo)
    # above t_hi: theta_L - 1 <= C_gap e^{-gap t}, sum_j <= sqrt(pi t)
    high = ctx.C_gap * math.sqrt(math.pi) * t_hi ** max(sigma - 1.0, 0.0) * math.exp(-ctx.gap * t_hi) / ctx.gap
    return pref * out[1], abs(pref) * (abs(out[1] - out[0]) + low + high)


def torus_cross_check(spec_L: EigenvalueStream, s, lam_max: float | None = None) -> CrossCheck:
    """Compare ``zeta_{L + Delta_T}`` with its decomposition through ``zeta_L(s - 1/2)``.

    The left side is the Dirichlet series of the product spectrum. The right
    side is ``2 (2 pi)^(-2s) zeta(2s) + Gamma(s-1/2)/(2 sqrt(pi) Gamma(s)) zeta_L(s-1/2) + h(s)``;
    ``residual_paper_form`` repeats the comparison with ``2 (2 pi)^-s zeta(2s)``
    and ``Gamma(s-1/2)/(sqrt(pi) Gamma(s))``.
    """
    s = complex(s)
    Lp = lam_max or spec_L.cutoff
    torus = torus_eigenvalues(1, Lp)
    prod = product_spectrum(spec_L, torus, Lp)
    lhs, lhs_err = zeta_direct(prod, s)
    z2s = riemann_zeta(2 * s)
    zl = zeta_mellin(spec_L, s - 0.5)
    h, h_err = _h_term(spec_L, s)
    ratio = complex(_gamma(s - 0.5)) * complex(rgamma(s)) / math.sqrt(math.pi)
    rhs = 2 * (2 * math.pi) ** (-2 * s) * z2s + 0.5 * ratio * zl.value + h
    rhs_paper = 2 * (2 * math.pi) ** (-s) * z2s + ratio * zl.value + h
    rhs_err = abs(0.5 * ratio) * zl.error_estimate + h_err
    return CrossCheck(s, lhs, lhs_err, rhs, rhs_err, abs(lhs - rhs), h, abs(lhs - rhs_paper))


# --------------------------------------------------------------------------- Weyl law


@dataclass(frozen=True)
class WeylFit:
    constant: float
    drift: float
    expected: float
    grid: tuple
    ratios: tuple

    @property
    def relative_error(self) -> float:
        return abs(self.constant - self.expected) / self.expected


def _check_grid(spec, grid):
    grid = [float(x) for x in grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("Lambda grid must be nonempty and strictly increasing")
    if grid[0] <= 0:
        raise ValueError("Lambda grid must be positive")
    if grid[-1] > spec.cutoff:
        raise CompletenessError(f"grid reaches {grid[-1]} beyond the stream cutoff {spec.cutoff}")
    return grid


def _summarise(ratios, grid, expected):
    top = ratios[len(ratios) // 2:]
    mean = float(np.mean(top))
    drift = (max(top) - min(top)) / mean if mean else math.inf
    return WeylFit(mean, drift, expected, tuple(grid), tuple(ratios))


def weyl_fit(spec: EigenvalueStream, model=None, grid=()) -> WeylFit:
    """Fit ``N(Lam) Lam^(-Q/nu)`` against ``vol p1(0) / Gamma(1 + Q/nu)``."""
    from .spectral_data import counting

    model = model or spec.model
    grid = _check_grid(spec, grid)
    a = model.alpha
    ratios = [counting(spec, L) * L ** (-a) for L in grid]
    return _summarise(ratios, grid, model.weyl_constant)


def weyl_fit_segment(spec: EigenvalueStream, a: float, b: float, model=None, grid=()) -> WeylFit:
    """Semiclassical version on ``[a Lam, b Lam]``; expected constant carries ``b^(Q/nu) - a^(Q/nu)``."""
    from .spectral_data import semiclassical_count

    model = model or spec.model
    grid = _check_grid(spec, [g for g in grid])
    if grid[-1] * b > spec.cutoff:
        raise CompletenessError("segment exceeds the stream cutoff")
    al = model.alpha
    ratios = [semiclassical_count(spec, a, b, L) * L ** (-al) for L in grid]
    return _summarise(ratios, grid, model.weyl_constant * (b**al - a**al))
