"""Cubic vertex h_k(p) coupling one quasiparticle to a pair.

Only the radii k, p and l = |k - p| enter. With u_q = sigma_q + gamma_q,
sigma_q - gamma_q = 1/u_q and X_q = u_q^2 = (S_q + B_q)/e_q, where
S_q = sqrt(e_q^2 + B_q^2), the vertex bracket

    sigma_k (sigma_p sigma_l - sigma_p gamma_l - gamma_p sigma_l)
  + gamma_k (sigma_p gamma_l + gamma_p sigma_l - gamma_p gamma_l)

equals [X_k (X_p + X_l) - X_p X_l + 3] / (4 u_k u_p u_l). The numerator
cancels badly at small momenta near the energy shell. Multiplying it by
e_k e_p e_l and regrouping gives

    (S_p+B_p) e_l D_kl + (S_l+B_l) e_p D_kp
        + (S_p+B_p)(S_l+B_l)(e_p + e_l - e_k) + 3 e_k e_p e_l,

with D_kq = (S_k+B_k) - (S_q+B_q) evaluated without subtraction of nearly
equal numbers. On the shell e_p + e_l = e_k every term is non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispersion import ModelParams, _energy, bog_coeffs_radical
from .errors import DomainError, UnsupportedOperation


@dataclass(frozen=True)
class A1A2:
    a1: np.ndarray
    a2: np.ndarray

    @property
    def product(self):
        return self.a1 * self.a2


def a1a2(mu, x, y) -> A1A2:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    two_mu = 2.0 * mu
    return A1A2(np.hypot(x + y, two_mu), np.hypot(x - y, two_mu))


def _shift(ek, Bk, Sk, eq, Bq, Sq):
    """(S_k + B_k) - (S_q + B_q) without cancellation for close arguments."""
    return ((ek - eq) * (ek + eq) + (Bk - Bq) * (Bk + Bq)) / (Sk + Sq) + (Bk - Bq)


def _bracket(ek, Bk, ep, Bp, el, Bl, delta=None):
    """Vertex bracket from energies and B values.

    ``delta`` is e_p + e_l - e_k; pass it when it is known more accurately
    than the difference of the energies (for instance on the shell).
    """
    Sk, Sp, Sl = np.hypot(ek, Bk), np.hypot(ep, Bp), np.hypot(el, Bl)
    if delta is None:
        delta = ep + el - ek
    Tp, Tl = Sp + Bp, Sl + Bl
    num = (Tp * el * _shift(ek, Bk, Sk, el, Bl, Sl)
           + Tl * ep * _shift(ek, Bk, Sk, ep, Bp, Sp)
           + Tp * Tl * delta + 3.0 * ek * ep * el)
    # 4 u_k u_p u_l e_k e_p e_l = 4 sqrt((S_k+B_k)(S_p+B_p)(S_l+B_l) e_k e_p e_l)
    return num / (4.0 * np.sqrt((Sk + Bk) * Tp * Tl * ek * ep * el))


def _prefactor(params: ModelParams, k):
    return 2.0 * np.sqrt(params.mu * params.vhat0) * params.r(k)


def _check_radii(k, p, l):
    k, p, l = (np.asarray(a, dtype=float) for a in (k, p, l))
    if np.any(~(k > 0)) or np.any(~(p > 0)) or np.any(~(l > 0)):
        raise DomainError("vertex needs k, p, l > 0")
    slack = 1e-12 * np.maximum(np.maximum(k, p), np.maximum(l, 1.0))
    if np.any(np.abs(p - l) > k + slack) or np.any(k > p + l + slack):
        raise DomainError("triangle constraints |p - l| <= k <= p + l violated")
    return k, p, l


def _h_unchecked(params, k, p, l):
    # canonical ordering makes h(k, p, l) and h(k, l, p) the same expression
    lo, hi = np.minimum(p, l), np.maximum(p, l)
    br = _bracket(_energy(params, k), params.B(k), _energy(params, lo), params.B(lo),
                  _energy(params, hi), params.B(hi))
    return _prefactor(params, k) * br


def h(params: ModelParams, k, p, l):
    """Vertex h_k(p) with l = |k - p|; scalar or broadcast arrays."""
    k, p, l = _check_radii(k, p, l)
    out = _h_unchecked(params, k, p, l)
    return float(out) if out.ndim == 0 else out


def h_cutoff(params: ModelParams, k, p, l, cutoff):
    """h times the sharp indicator of p + l < cutoff (strict)."""
    if not cutoff > 0:
        raise DomainError("cutoff must be positive")
    k, p, l = _check_radii(k, p, l)
    out = np.where(p + l < cutoff, _h_unchecked(params, k, p, l), 0.0)
    return float(out) if out.ndim == 0 else out


def h_radical(params: ModelParams, k, p, l):
    """Vertex from the textbook sigma/gamma radicals, term by term.

    Loses accuracy at small momenta; kept as an independent reference.
    """
    k, p, l = _check_radii(k, p, l)
    ck, cp, cl = (bog_coeffs_radical(params, a) for a in (k, p, l))
    sk, gk = ck.sigma, ck.gamma
    sp, gp = cp.sigma, cp.gamma
    sl, gl = cl.sigma, cl.gamma
    br = (sp * gk * gl + sl * gk * gp + sp * sl * sk
          - gp * sk * sl - gl * sk * sp - gp * gl * gk)
    return _prefactor(params, k) * br


def h_vectors(params: ModelParams, kvec, pvec):
    """Vertex for 3-vectors k and p (last axis of length 3)."""
    kvec = np.asarray(kvec, dtype=float)
    pvec = np.asarray(pvec, dtype=float)
    k = np.linalg.norm(kvec, axis=-1)
    p = np.linalg.norm(pvec, axis=-1)
    l = np.linalg.norm(kvec - pvec, axis=-1)
    return h(params, k, p, l)


def h_energies(params: ModelParams, k, ep, el, delta=None):
    """Contact vertex with the pair given by its energies e_p, e_l.

    ``delta`` optionally supplies e_p + e_l - e_k exactly.
    """
    if not params.contact:
        raise UnsupportedOperation("energy parameterisation needs the contact dispersion")
    mu = params.mu
    k = np.asarray(k, dtype=float)
    ep = np.asarray(ep, dtype=float)
    el = np.asarray(el, dtype=float)
    lo, hi = np.minimum(ep, el), np.maximum(ep, el)
    br = _bracket(_energy(params, k), mu, lo, mu, hi, mu, delta)
    return 2.0 * np.sqrt(mu * params.vhat0) * br


def integrand_xy_direct(params: ModelParams, k, x, y, x_minus_ek=None):
    """h^2 (x^2 - y^2) / (A1 A2) with h evaluated from the pair energies."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hv = h_energies(params, k, 0.5 * (x + y), 0.5 * (x - y), x_minus_ek)
    return hv * hv * (x * x - y * y) / a1a2(params.mu, x, y).product


def integrand_xy(params: ModelParams, k, x, y):
    """h^2 (x^2 - y^2) / (A1 A2) from the closed algebraic reduction.

    Grouped by sigma_k^2, gamma_k^2 and sigma_k gamma_k. The groups cancel
    strongly when x and e_k are small compared with mu; use
    ``integrand_xy_direct`` there.
    """
    if not params.contact:
        raise UnsupportedOperation("the (x, y) reduction needs the contact dispersion")
    mu = params.mu
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > x):
        raise DomainError("need |y| <= x")
    k = np.asarray(k, dtype=float)
    ek = _energy(params, k)
    S = np.hypot(ek, mu)
    s2 = (S + ek) / (2.0 * ek)
    g2 = (S - ek) / (2.0 * ek)
    g2 = np.where(ek < 1e-3 * mu, mu * mu / (4.0 * ek * ek * s2), g2)
    sg = mu / (2.0 * ek)
    A = a1a2(mu, x, y)
    A1, A2 = A.a1, A.a2
    P = A1 * A2
    d = x * x - y * y
    t_s = 3 * P + (x + y) * A2 + (x - y) * A1 - d - 4 * mu * (A1 + A2 + 2 * x) + 8 * mu**2
    t_g = 3 * P - (x + y) * A2 - (x - y) * A1 - d - 4 * mu * (A1 + A2 - 2 * x) + 8 * mu**2
    t_x = 4 * mu * A1 + 4 * mu * A2 - 2 * P + 2 * d - 12 * mu**2
    return mu * params.vhat0 / P * (s2 * t_s + g2 * t_g + 2 * sg * t_x)
