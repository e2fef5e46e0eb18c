"""Bogoliubov dispersion relation and related spectrum geometry.

Units follow the grand-canonical convention with kinetic energy k^2/2:

    e_k = sqrt(k^4/4 + B_k k^2),    B_k = mu * r(k),    r(k) = vhat(k)/vhat(0).

The contact case r == 1 has the closed inverse k^2 = 2(sqrt(e^2 + mu^2) - mu)
and the Jacobian d(k^2)/d(e^2) = 1/sqrt(e^2 + mu^2); both are only offered
for that case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import DomainError, UnsupportedOperation

RatioFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the Bose gas.

    ``ratio`` is r(k) = vhat(k)/vhat(0) as a vectorised function of |k|;
    ``None`` selects the contact interaction r == 1.
    """

    mu: float = 1.0
    vhat0: float = 1.0
    ratio: Optional[RatioFn] = field(default=None, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise DomainError(f"mu must be positive, got {self.mu}")
        if not (np.isfinite(self.vhat0) and self.vhat0 > 0):
            raise DomainError(f"vhat0 must be positive, got {self.vhat0}")
        if self.ratio is not None:
            r0 = float(np.asarray(self.ratio(np.array([0.0])))[0])
            if abs(r0 - 1.0) > 1e-12:
                raise DomainError(f"ratio(0) must equal 1, got {r0}")
            probe = np.asarray(self.ratio(np.linspace(0.0, 50.0, 501)), dtype=float)
            if np.any(probe < 0) or not np.all(np.isfinite(probe)):
                raise DomainError("ratio must be finite and non-negative")

    @property
    def contact(self) -> bool:
        return self.ratio is None

    def r(self, k):
        k = np.asarray(k, dtype=float)
        if self.ratio is None:
            return np.ones_like(k)
        return np.asarray(self.ratio(k), dtype=float)

    def B(self, k):
        """B_k = mu * r(k)."""
        return self.mu * self.r(k)

    def describe(self) -> dict:
        return {"mu": self.mu, "vhat0": self.vhat0, "contact": self.contact}


class RatioTable:
    """Tabulated r(k): linear interpolation, flat extrapolation.

    The k grid must be strictly increasing and r(0) (extrapolated flat if the
    table starts above zero) must equal 1.
    """

    def __init__(self, k, r):
        k = np.asarray(k, dtype=float)
        r = np.asarray(r, dtype=float)
        if k.ndim != 1 or k.shape != r.shape or k.size < 2:
            raise DomainError("ratio table needs two equal-length columns with >= 2 rows")
        if np.any(np.diff(k) <= 0):
            raise DomainError("ratio table k grid must be strictly increasing")
        if k[0] < 0:
            raise DomainError("ratio table k grid must be non-negative")
        if np.any(r < 0):
            raise DomainError("ratio table values must be non-negative")
        r0 = float(np.interp(0.0, k, r))
        if abs(r0 - 1.0) > 1e-12:
            raise DomainError(f"ratio table must satisfy r(0) = 1, got {r0}")
        self.k = k
        self.values = r

    @classmethod
    def from_file(cls, path) -> "RatioTable":
        data = np.loadtxt(path, delimiter=None if str(path).endswith(".txt") else ",",
                          comments="#", ndmin=2)
        if data.shape[1] < 2:
            raise DomainError("ratio table needs two columns: k, r")
        return cls(data[:, 0], data[:, 1])

    def __call__(self, k):
        return np.interp(np.asarray(k, dtype=float), self.k, self.values)


@dataclass(frozen=True)
class BogCoeffs:
    sigma: np.ndarray
    gamma: np.ndarray
    energy: np.ndarray

    @property
    def sum(self):
        """sigma + gamma."""
        return self.sigma + self.gamma


def _check_nonneg(k, name="k"):
    k = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k)) or np.any(k < 0):
        raise DomainError(f"{name} must be finite and non-negative")
    return k


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _energy(params: ModelParams, k):
    # e_k = k sqrt(k^2/4 + B_k); no cancellation anywhere
    return k * np.sqrt(0.25 * k * k + params.B(k))


def dispersion(params: ModelParams, k):
    """Quasiparticle energy e_k for |k| = k (scalar or array)."""
    k = _check_nonneg(k)
    return _scalar_or_array(_energy(params, k), k)


def _coeffs_from_eB(e, B):
    # sigma^2 + gamma^2 = S/e and sigma*gamma = B/(2e) with S = sqrt(e^2 + B^2);
    # gamma is recovered as (sigma*gamma)/sigma to avoid the S - e cancellation
    S = np.hypot(e, B)
    sigma = np.sqrt((S + e) / (2.0 * e))
    gamma = B / (2.0 * e * sigma)
    return sigma, gamma


def bog_coeffs(params: ModelParams, k) -> BogCoeffs:
    """Bogoliubov mixing amplitudes sigma_k, gamma_k (k > 0)."""
    k = _check_nonneg(k)
    if np.any(k == 0):
        raise DomainError("Bogoliubov coefficients are singular at k = 0")
    e = _energy(params, k)
    sigma, gamma = _coeffs_from_eB(e, params.B(k))
    return BogCoeffs(_scalar_or_array(sigma, k), _scalar_or_array(gamma, k),
                     _scalar_or_array(e, k))


def bog_coeffs_radical(params: ModelParams, k) -> BogCoeffs:
    """Same amplitudes from the textbook radicals (reference path for tests)."""
    k = _check_nonneg(k)
    if np.any(k == 0):
        raise DomainError("Bogoliubov coefficients are singular at k = 0")
    e = _energy(params, k)
    root = np.sqrt(e * e + params.B(k) ** 2)
    sigma = np.sqrt(root + e) / np.sqrt(2.0 * e)
    gamma = np.sqrt(root - e) / np.sqrt(2.0 * e)
    return BogCoeffs(_scalar_or_array(sigma, k), _scalar_or_array(gamma, k),
                     _scalar_or_array(e, k))


def coeffs_from_energy(mu, u):
    """Contact-case (sigma, gamma) written directly in the energy u = e_p."""
    u = np.asarray(u, dtype=float)
    return _coeffs_from_eB(u, mu)


def sum_diff_squared(e, B):
    """Return ((sigma+gamma)^2, (sigma-gamma)^2) = ((S+B)/e, e/(S+B))."""
    SB = np.hypot(e, B) + B
    return SB / e, e / SB


def _require_contact(params: ModelParams, what: str):
    if not params.contact:
        raise UnsupportedOperation(f"{what} is only implemented for the contact dispersion")


def inverse_dispersion(params: ModelParams, e):
    """|k| with e_k = e, contact case only."""
    _require_contact(params, "inverse_dispersion")
    e = _check_nonneg(e, "e")
    mu = params.mu
    # k^2 = 2(sqrt(e^2+mu^2) - mu) = 2 e^2 / (sqrt(e^2+mu^2) + mu)
    k = np.sqrt(2.0 * e * e / (np.hypot(e, mu) + mu))
    return _scalar_or_array(k, e)


def jacobian_f(params: ModelParams, u):
    """f(u) = d(k^2)/d(e^2) at e = u, contact case only."""
    _require_contact(params, "jacobian_f")
    u = _check_nonneg(u, "u")
    return _scalar_or_array(1.0 / np.hypot(u, params.mu), u)


def two_qp_bottom(params: ModelParams, k, method: str = "numeric", grid: int = 201):
    """Bottom of the two-quasiparticle spectrum, inf_p e_p + e_{k-p}.

    The infimum is searched over collinear configurations (p parallel to k),
    which is where it sits for a radial convex dispersion. ``method="convex"``
    returns 2 e_{k/2} directly.
    """
    k = float(_check_nonneg(k))
    if method == "convex":
        return 2.0 * float(_energy(params, np.float64(0.5 * k)))
    if method != "numeric":
        raise ValueError(f"unknown method {method!r}")
    if k == 0.0:
        return 0.0
    value, _ = _collinear_min(params, k, grid)
    return value


def _collinear_min(params, k, grid):
    # f(p) = e_p + e_{|k-p|} is symmetric about k/2; scan p in [k/2, 3k/2 + 2 sqrt(mu)]
    def f(p):
        p = np.asarray(p, dtype=float)
        return _energy(params, np.abs(p)) + _energy(params, np.abs(k - p))

    hi = 1.5 * k + 2.0 * np.sqrt(params.mu)
    ps = np.linspace(0.5 * k, hi, grid)
    vals = f(ps)
    i = int(np.argmin(vals))
    lo_b = ps[max(i - 1, 0)]
    hi_b = ps[min(i + 1, grid - 1)]
    best_p, best = float(ps[i]), float(vals[i])
    if hi_b > lo_b:
        res = optimize.minimize_scalar(lambda p: float(f(p)), bounds=(lo_b, hi_b),
                                       method="bounded",
                                       options={"xatol": 1e-12 * max(k, 1.0)})
        if res.fun < best:
            best_p, best = float(res.x), float(res.fun)
    return best, best_p


def two_qp_argmin(params: ModelParams, k, grid: int = 201) -> float:
    """Collinear minimiser p* (reported in [k/2, ...) by the p <-> k-p symmetry)."""
    return _collinear_min(params, float(_check_nonneg(k)), grid)[1]


def n_qp_bottom(params: ModelParams, k, n: int, grid: int = 2001):
    """Bottom of the n-quasiparticle spectrum at total momentum k.

    Contact: n e_{k/n} (convexity). Otherwise an iterated infimal convolution
    of e on a uniform collinear grid over [0, k].
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    n = int(n)
    k = float(_check_nonneg(k))
    if n == 1:
        return float(_energy(params, np.float64(k)))
    if k == 0.0:
        return 0.0
    if params.contact:
        return n * float(_energy(params, np.float64(k / n)))
    q = np.linspace(0.0, k, grid)
    e = _energy(params, q)
    g = e.copy()
    for _ in range(n - 1):
        # g_new(q_i) = min_j g(q_j) + e(q_i - q_j)
        idx = np.arange(grid)
        diff = idx[:, None] - idx[None, :]
        cand = np.where(diff >= 0, g[None, :] + e[np.clip(diff, 0, None)], np.inf)
        g = cand.min(axis=1)
    return float(g[-1])


def critical_velocity(params: ModelParams, grid: int = 4001) -> float:
    """inf_{k>0} e_k / k.

    Only k <= 2 sqrt(mu) can matter, since e_k/k >= k/2 and the k -> 0 limit
    is sqrt(mu). The result is the minimum over the scanned and refined
    samples together with that limit, so e_k >= c k holds on every sample.
    """
    mu = params.mu
    kmax = 2.0 * np.sqrt(mu)

    def v2(k):
        k = np.asarray(k, dtype=float)
        return 0.25 * k * k + params.B(k)

    if params.contact:
        return float(np.sqrt(mu))
    ks = np.concatenate([np.geomspace(1e-8, 1e-2, 200), np.linspace(1e-2, kmax, grid)])
    vals = v2(ks)
    best = min(float(vals.min()), mu)
    i = int(np.argmin(vals))
    lo_b, hi_b = ks[max(i - 1, 0)], ks[min(i + 1, ks.size - 1)]
    if hi_b > lo_b:
        res = optimize.minimize_scalar(lambda k: float(v2(k)), bounds=(lo_b, hi_b),
                                       method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return float(np.sqrt(best))


@dataclass(frozen=True)
class ShellCoords:
    """Radii of a triangle (k, p, l = |k - p|) and derived variables.

    t = p + l, s = p - l; when energies are attached, x = e_p + e_l and
    y = e_p - e_l.
    """

    k: float
    p: float
    l: float
    x: Optional[float] = None
    y: Optional[float] = None

    @property
    def t(self):
        return self.p + self.l

    @property
    def s(self):
        return self.p - self.l

    @staticmethod
    def check_triangle(k, p, l, rtol=1e-12):
        slack = rtol * max(k, p, l, 1.0)
        if min(k, p, l) < 0:
            raise DomainError("radii must be non-negative")
        if abs(p - l) > k + slack or k > p + l + slack:
            raise DomainError(f"triangle constraints violated for k={k}, p={p}, l={l}")

    @classmethod
    def from_pl(cls, params: ModelParams, k, p, l):
        cls.check_triangle(k, p, l)
        ep, el = float(_energy(params, np.float64(p))), float(_energy(params, np.float64(l)))
        return cls(float(k), float(p), float(l), ep + el, ep - el)

    @classmethod
    def from_ts(cls, params: ModelParams, k, t, s):
        return cls.from_pl(params, k, 0.5 * (t + s), 0.5 * (t - s))

    @classmethod
    def from_xy(cls, params: ModelParams, k, x, y):
        _require_contact(params, "(x, y) coordinates")
        if abs(y) > x:
            raise DomainError("need |y| <= x")
        p = inverse_dispersion(params, 0.5 * (x + y))
        l = inverse_dispersion(params, 0.5 * (x - y))
        cls.check_triangle(k, p, l, rtol=1e-9)
        return cls(float(k), float(p), float(l), float(x), float(y))
