"""Cutoff self-energy of a Bogoliubov quasiparticle.

The defining integral is

    Sigma_k^Lambda(z) = (2 pi)^-3  int d^3p  h_k(p)^2 / (z - e_p - e_{k-p}),

restricted to |p| + |k - p| < Lambda. Three parameterisations are offered:

``cartesian_pw``
    p = |p| and w = cos(angle(p, k)); after the azimuthal integration
    Sigma = (2 pi)^-2 int dp p^2 int dw h^2 / (z - E). The cutoff becomes an
    exact lower limit on w.
``ts``
    t = p + l, s = p - l on the rectangle k < t < Lambda, |s| < k, with
    Jacobian p l / (2k) = (t^2 - s^2) / (8k).
``xy``
    x = e_p + e_l, y = e_p - e_l (contact dispersion only), with
    Sigma = (8 pi^2 k)^-1 int dx int dy h^2 (x^2 - y^2) / ((z - x) A1 A2).

On the real axis above the two-quasiparticle threshold the boundary value
z = E + i0 is split into a principal value in x and a delta-line integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dispersion import ModelParams, _energy, inverse_dispersion
from .errors import ConvergenceError, DomainError, UnsupportedOperation
from .quadrature import (DEFAULT_ABS_TOL, DEFAULT_REL_TOL, QuadResult, bisect_monotone,
                         quad, quad2d)
from .vertex import _h_unchecked, a1a2, integrand_xy_direct

SCHEMES = ("cartesian_pw", "ts", "xy")
FOUR_PI_SQ = 4.0 * math.pi**2


@dataclass(frozen=True)
class ComplexEnergy:
    """Spectral parameter. ``boundary=True`` means re + i0 from above."""

    re: float
    im: float = 0.0
    boundary: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError("spectral parameter must be finite")
        if self.boundary and self.im != 0.0:
            raise DomainError("a boundary value carries no explicit imaginary part")

    @classmethod
    def of(cls, z) -> "ComplexEnergy":
        if isinstance(z, ComplexEnergy):
            return z
        z = complex(z)
        return cls(z.real, z.imag)

    @classmethod
    def on_shell(cls, e: float) -> "ComplexEnergy":
        return cls(float(e), 0.0, True)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "ts"
    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    max_subdivisions: int = 40000
    epsilon: float = 0.0
    threads: Optional[int] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.epsilon < 0:
            raise DomainError("epsilon must be non-negative")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be positive")


@dataclass
class SigmaResult:
    value: complex
    error_estimate: float
    scheme: str
    nodes: int
    details: dict = field(default_factory=dict)


def _check_k_cutoff(k, cutoff):
    if not (k > 0 and math.isfinite(k)):
        raise DomainError("k must be positive")
    if not cutoff > k:
        raise DomainError("cutoff must exceed k")


def _require_contact(params, what):
    if not params.contact:
        raise UnsupportedOperation(f"{what} needs the contact dispersion")


def _e(params, q):
    return _energy(params, np.asarray(q, dtype=float))


# ---------------------------------------------------------------- (x, y) region

class _XYRegion:
    """Image of the cutoff pair region in (x, y >= 0), contact dispersion.

    For fixed x the admissible y form an interval [y_lo(x), y_hi(x)]. Along a
    line of constant x, p + l falls and p - l grows with y, so:
      y_hi comes from p + l = k when x <= e_k and from p - l = k otherwise;
      y_lo comes from p + l = Lambda when x > 2 e_{Lambda/2}, else it is 0.
    """

    def __init__(self, params: ModelParams, k: float, cutoff: float):
        self.params = params
        self.k = k
        self.cutoff = cutoff
        self.ek = float(_e(params, k))
        self.x_min = 2.0 * float(_e(params, 0.5 * k))
        self.x_max = float(_e(params, 0.5 * (cutoff + k)) + _e(params, 0.5 * (cutoff - k)))
        self.x_cut = 2.0 * float(_e(params, 0.5 * cutoff))

    def breakpoints(self):
        return sorted(v for v in {self.ek, self.x_cut} if self.x_min < v < self.x_max)

    def y_hi(self, x):
        x = np.asarray(x, dtype=float)
        P, k = self.params, self.k
        below = x <= self.ek
        p_top = np.where(below, k, inverse_dispersion(P, np.maximum(x, 0.0)))

        def g(p):
            other = np.where(below, k - p, p - k)
            return _e(P, p) + _e(P, np.maximum(other, 0.0)) - x

        p = bisect_monotone(g, np.where(below, 0.5 * k, k), p_top)
        other = np.maximum(np.where(below, k - p, p - k), 0.0)
        return np.minimum(_e(P, p) - _e(P, other), x)

    def y_lo(self, x):
        x = np.asarray(x, dtype=float)
        P, L = self.params, self.cutoff
        active = x > self.x_cut
        if not np.any(active):
            return np.zeros_like(x)

        def g(p):
            return _e(P, p) + _e(P, np.maximum(L - p, 0.0)) - x

        p = bisect_monotone(g, np.full_like(x, 0.5 * L), np.full_like(x, L))
        y = _e(P, p) - _e(P, np.maximum(L - p, 0.0))
        return np.where(active, np.maximum(y, 0.0), 0.0)


# ------------------------------------------------------------------- integrands

def _ts_weight(params, k, t, s):
    """h^2 (t^2 - s^2) / (8k) and E = e_p + e_l at (t, s)."""
    p = 0.5 * (t + s)
    l = 0.5 * (t - s)
    hv = _h_unchecked(params, np.float64(k), p, l)
    E = _e(params, p) + _e(params, l)
    return hv * hv * (t - s) * (t + s) / (8.0 * k), E


def _cartesian_limits(k, cutoff):
    def w_lo(p):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (k * k + p * p - (cutoff - p) ** 2) / (2.0 * k * p)
        return np.clip(np.nan_to_num(w, nan=-1.0, neginf=-1.0), -1.0, 1.0)
    return w_lo, lambda p: np.ones_like(p)


def _cartesian_weight(params, k, p, w):
    """h^2 p^2 and E at (p, w)."""
    one_minus_w = np.maximum(1.0 - w, 0.0)
    l = np.sqrt((k - p) ** 2 + 2.0 * k * p * one_minus_w)
    hv = _h_unchecked(params, np.float64(k), p, l)
    return hv * hv * p * p, _e(params, p) + _e(params, l)


def _resolve_z(z, x_min):
    zc = z.value
    if z.boundary or (z.im == 0.0 and z.re >= x_min):
        raise DomainError("real z inside the two-quasiparticle continuum needs the "
                          "boundary-value path")
    return zc


def _sigma_offaxis(params, k, zc, cutoff, spec: QuadratureSpec) -> SigmaResult:
    kw = dict(abs_tol=spec.abs_tol, rel_tol=spec.rel_tol,
              max_cells=spec.max_subdivisions, threads=spec.threads)
    if spec.scheme == "ts":
        def f(t, s):
            wgt, E = _ts_weight(params, k, t, s)
            return 2.0 * wgt / (zc - E) / FOUR_PI_SQ
        res = quad2d(f, k, cutoff, lambda t: np.zeros_like(t), lambda t: np.full_like(t, k), **kw)
    elif spec.scheme == "cartesian_pw":
        lo, hi = _cartesian_limits(k, cutoff)

        def f(p, w):
            wgt, E = _cartesian_weight(params, k, p, w)
            return wgt / (zc - E) / FOUR_PI_SQ
        pts = [0.5 * (cutoff - k), k]
        res = quad2d(f, 0.0, 0.5 * (cutoff + k), lo, hi, a_points=pts, **kw)
    else:
        _require_contact(params, "the (x, y) scheme")
        reg = _XYRegion(params, k, cutoff)
        pref = 2.0 / (8.0 * math.pi**2 * k)

        def f(x, y):
            return pref * integrand_xy_direct(params, k, x, y, x - reg.ek) / (zc - x)
        res = quad2d(f, reg.x_min, reg.x_max, reg.y_lo, reg.y_hi,
                     a_points=reg.breakpoints(), **kw)
    return SigmaResult(complex(res.value), res.error, spec.scheme, res.evaluations,
                       {"cells": res.cells})


# ------------------------------------------------------------- boundary values

def _delta_line(params, k, E, cutoff, abs_tol, rel_tol, reg=None):
    """G(E) = int W(E, y) dy over the full admissible y-range (both signs)."""
    reg = reg or _XYRegion(params, k, cutoff)
    y_top = min(float(reg.y_hi(E)), E) if E != reg.ek else E
    y_bot = float(reg.y_lo(E))
    dE = E - reg.ek

    def w(y):
        return 2.0 * integrand_xy_direct(params, k, np.full_like(y, E), y, dE)
    return quad(w, y_bot, y_top, abs_tol=abs_tol, rel_tol=rel_tol)


def _boundary_value(params, k, E, cutoff, spec: QuadratureSpec) -> SigmaResult:
    _require_contact(params, "the boundary value E + i0")
    reg = _XYRegion(params, k, cutoff)
    if not reg.x_min < E < reg.x_max:
        res = _sigma_offaxis(params, k, complex(E, 0.0), cutoff,
                             QuadratureSpec("ts", spec.abs_tol, spec.rel_tol,
                                            spec.max_subdivisions, 0.0, spec.threads))
        res.details["boundary"] = "outside continuum"
        return res
    pref = 1.0 / (8.0 * math.pi**2 * k)
    G = _delta_line(params, k, E, cutoff, 0.1 * spec.abs_tol / pref, spec.rel_tol, reg)
    yt_E = min(float(reg.y_hi(E)), E) if E != reg.ek else E
    yb_E = float(reg.y_lo(E))
    dE = E - reg.ek

    def g(x, v):
        lo = reg.y_lo(x)
        hi = reg.y_hi(x)
        y = lo + (hi - lo) * v
        return 2.0 * integrand_xy_direct(params, k, x, y, x - reg.ek) * (hi - lo)

    def f(x, v):
        yE = yb_E + (yt_E - yb_E) * v
        gE = 2.0 * integrand_xy_direct(params, k, np.full_like(v, E), yE, dE) * (yt_E - yb_E)
        return (g(x, v) - gE) / (E - x)

    pts = sorted(set(reg.breakpoints()) | {E})
    res = quad2d(f, reg.x_min, reg.x_max, lambda x: np.zeros_like(x), lambda x: np.ones_like(x),
                 a_points=pts, abs_tol=0.5 * spec.abs_tol / pref, rel_tol=spec.rel_tol,
                 max_cells=spec.max_subdivisions, threads=spec.threads)
    log_term = G.value * math.log((E - reg.x_min) / (reg.x_max - E))
    re = pref * (res.value + log_term)
    im = -math.pi * pref * G.value
    err = pref * (res.error + abs(math.log((E - reg.x_min) / (reg.x_max - E))) * G.error
                  + math.pi * G.error)
    return SigmaResult(complex(re, im), err, "xy-pv", res.evaluations + G.evaluations,
                       {"cells": res.cells, "delta_line": G.value})


def sigma_cutoff(params: ModelParams, k: float, z, cutoff: float,
                 spec: Optional[QuadratureSpec] = None) -> SigmaResult:
    """Sigma_k^Lambda(z) by adaptive quadrature.

    ``z`` may be a complex number or a ComplexEnergy. Real z is accepted below
    the two-quasiparticle threshold; inside the continuum pass
    ``ComplexEnergy.on_shell(E)`` for E + i0. With ``spec.epsilon > 0`` a
    boundary value is emulated by E + i epsilon instead.
    """
    spec = spec or QuadratureSpec()
    k = float(k)
    cutoff = float(cutoff)
    _check_k_cutoff(k, cutoff)
    z = ComplexEnergy.of(z)
    if z.boundary:
        if spec.epsilon > 0:
            return _sigma_offaxis(params, k, complex(z.re, spec.epsilon), cutoff, spec)
        return _boundary_value(params, k, z.re, cutoff, spec)
    x_min = 2.0 * float(_e(params, 0.5 * k)) if params.contact else float(
        _two_qp_floor(params, k))
    zc = _resolve_z(z, x_min)
    return _sigma_offaxis(params, k, zc, cutoff, spec)


def _two_qp_floor(params, k):
    from .dispersion import two_qp_bottom
    return two_qp_bottom(params, k)


def im_sigma_on_shell_result(params: ModelParams, k: float, cutoff: float,
                             rel_tol: float = 1e-11) -> QuadResult:
    _require_contact(params, "im_sigma_on_shell")
    k = float(k)
    cutoff = float(cutoff)
    _check_k_cutoff(k, cutoff)
    reg = _XYRegion(params, k, cutoff)
    # the shell x = e_k reaches y = e_k (l -> 0, p -> k); y_lo only matters when
    # the equal-split pair 2 inv(e_k/2) already exceeds the cutoff
    G = _delta_line(params, k, reg.ek, cutoff, 1e-300, rel_tol, reg)
    scale = -1.0 / (8.0 * math.pi * k)
    return QuadResult(scale * G.value, abs(scale) * G.error, G.evaluations, G.cells)


def im_sigma_on_shell(params: ModelParams, k: float, cutoff: float,
                      rel_tol: float = 1e-11) -> float:
    """Im Sigma_k^Lambda(e_k + i0) = -(8 pi k)^-1 int W(e_k, y) dy."""
    return float(im_sigma_on_shell_result(params, k, cutoff, rel_tol).value)


# ------------------------------------------------------------ damping constant

@dataclass(frozen=True)
class BeliaevConstant:
    value: float
    winner: str
    candidates: dict
    extrapolated: float
    deviations: dict
    note: str


def constant_candidates(params: ModelParams) -> dict:
    v, mu = params.vhat0, params.mu
    return {
        "3v/(320 pi mu^4)": 3.0 * v / (320.0 * math.pi * mu**4),
        "3v/(640 pi^2 mu^4)": 3.0 * v / (640.0 * math.pi**2 * mu**4),
    }


def damping_ratio(params: ModelParams, k: float, cutoff: float = 5.0) -> float:
    """|Im Sigma(e_k + i0)| k / e_k^6."""
    ek = float(_e(params, k))
    return abs(im_sigma_on_shell(params, k, max(cutoff, 2.0 * k + 1.0))) * k / ek**6


def beliaev_constant(params: ModelParams, ks: Optional[Sequence[float]] = None,
                     tol: float = 0.01) -> BeliaevConstant:
    """Constant C with Im Sigma(e_k + i0) = -C e_k^6 / k (1 + O(k)).

    The ratio |Im Sigma| k / e_k^6 is evaluated on a ladder of small k and
    extrapolated to k = 0 by a quadratic least-squares fit in k. The winner is
    the closed-form candidate within ``tol`` of the extrapolation.
    """
    _require_contact(params, "beliaev_constant")
    if ks is None:
        ks = np.sqrt(params.mu) * np.array([0.005, 0.01, 0.015, 0.02, 0.03, 0.04])
    ks = np.asarray(ks, dtype=float)
    ratios = np.array([damping_ratio(params, k) for k in ks])
    coef = np.polynomial.polynomial.polyfit(ks, ratios, 2)
    extrap = float(coef[0])
    cands = constant_candidates(params)
    dev = {name: abs(extrap - c) / c for name, c in cands.items()}
    within = [name for name, d in dev.items() if d <= tol]
    if len(within) == 1:
        winner = within[0]
        value = cands[winner]
    else:
        winner = "none" if not within else "ambiguous"
        value = extrap
    others = [n for n in cands if n != winner]
    note = (f"quadrature extrapolation {extrap:.6e} selects {winner}; "
            f"the other candidate ({', '.join(others)}) is off by "
            + ", ".join(f"{dev[n] * 100:.1f}%" for n in others))
    return BeliaevConstant(value, winner, cands, extrap, dev, note)


# ----------------------------------------------- closed forms and small-e series

def sub_integral_linear(params: ModelParams, e: float, sign: int = 1) -> float:
    """int_{-e}^{e} (e +- y) / sqrt((e +- y)^2 + 4 mu^2) dy = 2 sqrt(mu^2 + e^2) - 2 mu."""
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    if e < 0:
        raise DomainError("e must be non-negative")
    mu = params.mu
    return 2.0 * e * e / (math.hypot(mu, e) + mu)


def sub_integral_linear_quad(params: ModelParams, e: float, sign: int = 1) -> QuadResult:
    mu = params.mu

    def f(y):
        u = e + sign * y
        return u / np.hypot(u, 2.0 * mu)
    return quad(f, -e, e, abs_tol=1e-15, rel_tol=1e-14)


def sub_integral_log(params: ModelParams, e: float) -> float:
    """int_{-e}^{e} dy / sqrt((e +- y)^2 + 4 mu^2) = asinh(e / mu)."""
    if e < 0:
        raise DomainError("e must be non-negative")
    return math.asinh(e / params.mu)


def sub_integral_log_quad(params: ModelParams, e: float, sign: int = 1) -> QuadResult:
    mu = params.mu
    return quad(lambda y: 1.0 / np.hypot(e + sign * y, 2.0 * mu), -e, e,
                abs_tol=1e-15, rel_tol=1e-14)


_INV_COEFFS = (0.5, -1.0 / 6.0, 19.0 / 240.0, -13.0 / 280.0, 2509.0 / 80640.0)
_WEIGHTED_COEFFS = (1.0 / 3.0, -1.0 / 10.0, 11.0 / 280.0, -19.0 / 1008.0)
_BRACKET_COEFFS = (2.0, 1.0, 5.0 / 12.0, -41.0 / 120.0, 1739.0 / 6720.0)


def _odd_series(coeffs, e, mu, first_power, order):
    total = 0.0
    for n, c in enumerate(coeffs[:order]):
        power = first_power + 2 * n
        total += c * e**power / mu ** (power + 1)
    return total


def series_inv_a1a2(params: ModelParams, e: float, terms: int = 4) -> float:
    """Truncated small-e series of int_{-e}^{e} dy / (A1 A2) at x = e."""
    return _odd_series(_INV_COEFFS, e, params.mu, 1, terms)


def series_weighted_a1a2(params: ModelParams, e: float, terms: int = 3) -> float:
    """Truncated small-e series of int_{-e}^{e} (e^2 - y^2) / (A1 A2) dy at x = e."""
    return _odd_series(_WEIGHTED_COEFFS, e, params.mu, 3, terms)


def int_inv_a1a2(params: ModelParams, e: float) -> QuadResult:
    mu = params.mu
    return quad(lambda y: 1.0 / a1a2(mu, np.full_like(y, e), y).product, -e, e,
                abs_tol=1e-300, rel_tol=1e-14)


def int_weighted_a1a2(params: ModelParams, e: float) -> QuadResult:
    mu = params.mu
    return quad(lambda y: (e - y) * (e + y) / a1a2(mu, np.full_like(y, e), y).product,
                -e, e, abs_tol=1e-300, rel_tol=1e-14)


def closed_bracket(params: ModelParams, e: float) -> float:
    """Closed-form part of int W(e, y) dy divided by mu vhat(0):

    10 mu R - 8 mu - 8 mu (R - 1)/a asinh(a), with a = e/mu, R = sqrt(1 + a^2).
    """
    if e < 0:
        raise DomainError("e must be non-negative")
    mu = params.mu
    if e == 0:
        return 2.0 * mu
    a = e / mu
    R = math.hypot(1.0, a)
    r_minus_1 = a * a / (R + 1.0)
    return 10.0 * mu * r_minus_1 + 2.0 * mu - 8.0 * mu * (r_minus_1 / a) * math.asinh(a)


def closed_bracket_series(params: ModelParams, e: float, terms: int = 4) -> float:
    """2 mu + e^2/mu + 5 e^4/(12 mu^3) - 41 e^6/(120 mu^5) [+ 1739 e^8/(6720 mu^7)]."""
    mu = params.mu
    return sum(c * e ** (2 * n) / mu ** (2 * n - 1) for n, c in enumerate(_BRACKET_COEFFS[:terms]))


def on_shell_decomposition(params: ModelParams, e: float) -> dict:
    """Split int_{-e}^{e} W(e, y) dy into the closed part and two residual integrals.

    Valid for the contact dispersion when the whole shell lies inside the
    cutoff. Returns the three pieces and their sum.
    """
    _require_contact(params, "on_shell_decomposition")
    mu, v = params.mu, params.vhat0
    a = e / mu
    R = math.hypot(1.0, a)
    closed = mu * v * closed_bracket(params, e)
    part1 = -mu * v * (R - 2.0) / a * int_weighted_a1a2(params, e).value
    part2 = -mu * v * (8.0 * mu * e * e - 4.0 * mu**3 * (2.0 * R - 3.0)) / e \
        * int_inv_a1a2(params, e).value
    return {"closed": closed, "weighted": part1, "inverse": part2,
            "total": closed + part1 + part2}


# -------------------------------------------------------------- renormalisation

def sigma_at_zero(params: ModelParams, k: float, cutoff: float,
                  spec: Optional[QuadratureSpec] = None) -> SigmaResult:
    """Sigma_k^Lambda(0), a finite negative number for fixed k > 0."""
    spec = spec or QuadratureSpec()
    if spec.scheme == "xy" or spec.epsilon:
        spec = QuadratureSpec("ts", spec.abs_tol, spec.rel_tol, spec.max_subdivisions,
                              0.0, spec.threads)
    res = sigma_cutoff(params, k, 0.0, cutoff, spec)
    res.value = complex(res.value.real, 0.0)
    return res


@dataclass
class RenormResult:
    value: complex
    residual: float
    ladder: list
    differences: list
    gaps: list
    errors: list


def _difference_segment(params, k, zc, t0, t1, spec):
    def f(t, s):
        wgt, E = _ts_weight(params, k, t, s)
        return 2.0 * wgt * zc / ((zc - E) * E) / FOUR_PI_SQ
    return quad2d(f, t0, t1, lambda t: np.zeros_like(t), lambda t: np.full_like(t, k),
                  abs_tol=spec.abs_tol, rel_tol=spec.rel_tol,
                  max_cells=spec.max_subdivisions, threads=spec.threads)


def sigma_renormalized(params: ModelParams, k: float, z, cutoffs: Sequence[float],
                       spec: Optional[QuadratureSpec] = None,
                       check_decay: bool = True) -> RenormResult:
    """Sigma_k^Lambda(z) - Sigma_k^Lambda(0) on an increasing cutoff ladder.

    The tail of the difference integrand decays like t^-2, so the remainder
    is c/Lambda and the two largest cutoffs are combined as
    (L2 D2 - L1 D1) / (L2 - L1). A ladder whose gaps do not shrink raises
    ConvergenceError.
    """
    spec = spec or QuadratureSpec()
    k = float(k)
    cutoffs = [float(c) for c in cutoffs]
    if len(cutoffs) < 2 or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise DomainError("need at least two strictly increasing cutoffs")
    _check_k_cutoff(k, cutoffs[0])
    z = ComplexEnergy.of(z)
    if z.value == 0 and not z.boundary:
        zeros = [0j] * len(cutoffs)
        return RenormResult(0j, 0.0, cutoffs, zeros, [0.0] * (len(cutoffs) - 1),
                            [0.0] * len(cutoffs))
    diffs, errs = [], []
    if z.boundary:
        for c in cutoffs:
            a = sigma_cutoff(params, k, z, c, spec)
            b = sigma_at_zero(params, k, c, spec)
            diffs.append(a.value - b.value)
            errs.append(a.error_estimate + b.error_estimate)
    else:
        zc = _resolve_z(z, 2.0 * float(_e(params, 0.5 * k)))
        acc, err = 0j, 0.0
        edges = [k] + cutoffs
        for t0, t1 in zip(edges[:-1], edges[1:]):
            seg = _difference_segment(params, k, zc, t0, t1, spec)
            acc += seg.value
            err += seg.error
            diffs.append(acc)
            errs.append(err)
    gaps = [abs(b - a) for a, b in zip(diffs, diffs[1:])]
    if check_decay and len(gaps) >= 2 and any(g2 >= g1 for g1, g2 in zip(gaps, gaps[1:])):
        raise ConvergenceError("cutoff ladder is not converging (gaps do not shrink)",
                               RenormResult(diffs[-1], gaps[-1], cutoffs, diffs, gaps, errs))
    L1, L2 = cutoffs[-2], cutoffs[-1]
    extrap = (L2 * diffs[-1] - L1 * diffs[-2]) / (L2 - L1)
    return RenormResult(complex(extrap), gaps[-1], cutoffs, diffs, gaps, errs)


def lemma_sss_check(params: ModelParams, t: float, s: float):
    """Deviations of the four small-s identities at the pair (p, l) = ((t+s)/2, (t-s)/2).

    Returns (e_{t/2}/(e_p+e_l) - 1/2,
             p l/(e_p e_l) - t^2/(4 e_{t/2}^2),
             sigma_p sigma_l sqrt(e_p e_l) - sigma_{t/2}^2 e_{t/2},
             gamma_p gamma_l sqrt(e_p e_l) - gamma_{t/2}^2 e_{t/2}); each is O(s^2).
    """
    if not (t > 0 and 0 <= abs(s) < t):
        raise DomainError("need t > 0 and |s| < t")
    p, l, m = 0.5 * (t + s), 0.5 * (t - s), 0.5 * t
    ep, el, em = (float(_e(params, q)) for q in (p, l, m))
    Bp, Bl, Bm = (float(params.B(q)) for q in (p, l, m))
    # sigma^2 e = (S + e)/2 and gamma^2 e = B^2 / (2 (S + e))
    cp, cl, cm = math.hypot(ep, Bp) + ep, math.hypot(el, Bl) + el, math.hypot(em, Bm) + em
    d1 = em / (ep + el) - 0.5
    fp, fl, fm = p / ep, l / el, m / em
    d2 = fp * fl - fm * fm
    d3 = 0.5 * math.sqrt(cp * cl) - 0.5 * cm
    d4 = Bp * Bl / (2.0 * math.sqrt(cp * cl)) - Bm * Bm / (2.0 * cm)
    return d1, d2, d3, d4


@dataclass
class LemmaLimitCheck:
    ks: list
    integrals: list
    limit: float
    limit_denominator64: float
    differences: list


def _pair_overlap_sq(params, p, l):
    """(sigma_p sigma_l - gamma_p gamma_l)^2 = ((u_p/u_l + u_l/u_p)/2)^2."""
    ep, el = _e(params, p), _e(params, l)
    Bp, Bl = params.B(p), params.B(l)
    xp = (np.hypot(ep, Bp) + Bp) / ep
    xl = (np.hypot(el, Bl) + Bl) / el
    ratio = np.sqrt(xp / xl)
    return (0.5 * (ratio + 1.0 / ratio)) ** 2, ep + el


def lemma_integral(params: ModelParams, k: float, cutoff: float) -> float:
    """int_k^Lambda dt int_{-k}^{k} ds (sigma_p sigma_l - gamma_p gamma_l)^2 p l / (8k (e_p+e_l))."""
    if k >= cutoff:
        return 0.0

    def f(t, s):
        p, l = 0.5 * (t + s), 0.5 * (t - s)
        ov, E = _pair_overlap_sq(params, p, l)
        return 2.0 * ov * p * l / (8.0 * k * E)
    return quad2d(f, k, cutoff, lambda t: np.zeros_like(t), lambda t: np.full_like(t, k),
                  abs_tol=1e-12, rel_tol=1e-11).value


def lemma_limit(params: ModelParams, cutoff: float, denominator: float = 32.0) -> float:
    """int_0^Lambda t^2 / (denominator e_{t/2}) dt."""
    return quad(lambda t: t * t / (denominator * _e(params, 0.5 * t)), 0.0, cutoff,
                abs_tol=1e-14, rel_tol=1e-13).value


def lemma_quw30_check(params: ModelParams, cutoff: float, ks: Sequence[float]) -> LemmaLimitCheck:
    """Compare the k-dependent double integral with its k -> 0 limit.

    The limit is computed with denominator 32; the s-integration over
    (-k, k) contributes 2k, which is where 32 comes from. The value with
    denominator 64 is reported alongside as ``limit_denominator64``.
    """
    lim = lemma_limit(params, cutoff, 32.0)
    vals = [lemma_integral(params, float(k), cutoff) for k in ks]
    return LemmaLimitCheck(list(map(float, ks)), vals, lim, lemma_limit(params, cutoff, 64.0),
                           [v - lim if k < cutoff else 0.0 for k, v in zip(ks, vals)])


def zero_energy_divergence_coefficient(params: ModelParams, cutoff: float) -> float:
    """Predicted lim_{k->0} k Sigma_k^Lambda(0) for the contact dispersion.

    Only the (sigma_k + gamma_k)^2 ~ 2 sqrt(mu)/k channel survives:
    -(mu vhat / 4 pi^2) * 2 sqrt(mu) * 4 * int_0^Lambda t^2/(32 e_{t/2}) dt.
    """
    _require_contact(params, "zero_energy_divergence_coefficient")
    mu = params.mu
    return -(mu * params.vhat0 / FOUR_PI_SQ) * 2.0 * math.sqrt(mu) * 4.0 * lemma_limit(params, cutoff)
