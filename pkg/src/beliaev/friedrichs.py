"""Finite-volume Friedrichs model: one quasiparticle coupled to pairs.

The Hamiltonian is an arrowhead matrix

    [[e_k,  g^T],
     [g,    diag(e_p + e_{k-p})]],   g_p = lambda L^{-3/2} h_k(p),

on C (+) l^2 over lattice momenta p in (2 pi / L) Z^3 with p != 0, p != k and
|p| + |k - p| < Lambda. Each lattice p is its own basis label, so p and k - p
both appear (ordered pairs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dispersion import ModelParams, _energy
from .errors import DomainError, PoleError, UnderResolvedError
from .self_energy import QuadratureSpec, sigma_cutoff
from .vertex import _h_unchecked


@dataclass(frozen=True)
class FriedrichsModel:
    head: float
    diagonal: np.ndarray
    row: np.ndarray
    coupling: float = 1.0
    L: Optional[float] = None
    cutoff: Optional[float] = None
    k_index: Optional[tuple] = None
    lattice: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def from_arrays(cls, head, diagonal, row, coupling=1.0) -> "FriedrichsModel":
        d = np.asarray(diagonal, dtype=float)
        g = np.asarray(row, dtype=float)
        if d.ndim != 1 or d.shape != g.shape:
            raise DomainError("diagonal and row must be 1-D arrays of equal length")
        return cls(float(head), d, g, coupling)

    @property
    def dim(self) -> int:
        return 1 + self.diagonal.size

    @property
    def k_vector(self):
        if self.k_index is None:
            return None
        return 2.0 * math.pi / self.L * np.asarray(self.k_index, dtype=float)

    def dense(self) -> np.ndarray:
        n = self.diagonal.size
        H = np.zeros((n + 1, n + 1))
        H[0, 0] = self.head
        H[0, 1:] = self.row
        H[1:, 0] = self.row
        H[np.arange(1, n + 1), np.arange(1, n + 1)] = self.diagonal
        return H

    def with_coupling(self, coupling: float) -> "FriedrichsModel":
        scale = coupling / self.coupling if self.coupling else 0.0
        if self.coupling == 0 and coupling != 0:
            raise DomainError("cannot rescale a model built with zero coupling")
        return FriedrichsModel(self.head, self.diagonal, self.row * scale, coupling,
                               self.L, self.cutoff, self.k_index, self.lattice)


def lattice_points(k_index, L, cutoff):
    """Integer vectors n with p = 2 pi n / L inside the cutoff region.

    Norms are taken from integer dot products, so symmetry-related points get
    bit-identical radii. Returns (n, |p|, |k - p|).
    """
    kn = np.asarray(k_index, dtype=np.int64)
    unit = 2.0 * math.pi / L
    nmax = int(math.ceil(cutoff / unit)) + 1
    ax = np.arange(-nmax, nmax + 1, dtype=np.int64)
    n = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    n2 = np.einsum("ij,ij->i", n, n)
    m = kn[None, :] - n
    m2 = np.einsum("ij,ij->i", m, m)
    keep = (n2 > 0) & (m2 > 0)
    n, n2, m2 = n[keep], n2[keep], m2[keep]
    p = unit * np.sqrt(n2.astype(float))
    l = unit * np.sqrt(m2.astype(float))
    inside = p + l < cutoff
    return n[inside], p[inside], l[inside]


def build_model(params: ModelParams, k_index, L: float, cutoff: float,
                coupling: float) -> FriedrichsModel:
    """Friedrichs model at lattice momentum k = 2 pi k_index / L."""
    k_index = tuple(int(v) for v in k_index)
    if len(k_index) != 3:
        raise DomainError("k_index needs three integers")
    if not L > 0:
        raise DomainError("L must be positive")
    kn2 = sum(v * v for v in k_index)
    if kn2 == 0:
        raise DomainError("k must be nonzero")
    k = 2.0 * math.pi / L * math.sqrt(kn2)
    if not cutoff > k:
        raise DomainError("cutoff must exceed |k|")
    n, p, l = lattice_points(k_index, L, cutoff)
    if n.shape[0] == 0:
        raise DomainError("no lattice momenta inside the cutoff")
    diag = _energy(params, p) + _energy(params, l)
    hv = _h_unchecked(params, np.float64(k), p, l)
    row = coupling / L**1.5 * hv
    head = float(_energy(params, np.float64(k)))
    return FriedrichsModel(head, diag, row, float(coupling), float(L), float(cutoff),
                           k_index, n)


def nearest_lattice_index(k: float, L: float):
    """Lattice vector (n, 0, 0) closest to |k| along the first axis (n >= 1)."""
    n = max(1, int(round(k * L / (2.0 * math.pi))))
    return (n, 0, 0)


def feshbach_sigma(model: FriedrichsModel, z) -> complex:
    """sum_p g_p^2 / (z - d_p) (coupling squared included)."""
    z = complex(z)
    if z.imag == 0 and np.any(model.diagonal == z.real):
        raise PoleError("z coincides with a diagonal entry")
    terms = model.row**2 / (z - model.diagonal)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def resolvent_head(model: FriedrichsModel, z) -> complex:
    """(head | (H - z)^-1 head) = 1 / (e_k + Sigma(z) - z)."""
    z = complex(z)
    denom = model.head + feshbach_sigma(model, z) - z
    if denom == 0:
        raise PoleError("z is an eigenvalue of the model")
    return 1.0 / denom


def resolvent_head_dense(model: FriedrichsModel, z) -> complex:
    H = model.dense().astype(complex)
    rhs = np.zeros(model.dim, dtype=complex)
    rhs[0] = 1.0
    x = np.linalg.solve(H - complex(z) * np.eye(model.dim), rhs)
    return complex(x[0])


# ------------------------------------------------------------ arrowhead spectrum

@dataclass
class ArrowheadSpectrum:
    eigenvalues: np.ndarray
    head_weights: np.ndarray
    poles: np.ndarray
    pole_weights: np.ndarray
    decoupled: np.ndarray


def _deflate(d, z, tol):
    """Merge equal diagonal entries and drop zero couplings.

    Returns (distinct poles, summed squared couplings, decoupled eigenvalues).
    """
    order = np.argsort(d, kind="stable")
    d, c = d[order], (z * z)[order]
    decoupled = []
    coupled = c > tol * tol
    decoupled.extend(d[~coupled].tolist())
    d, c = d[coupled], c[coupled]
    if d.size == 0:
        return d, c, np.array(decoupled)
    scale = max(1.0, float(np.max(np.abs(d))))
    new_group = np.concatenate([[True], np.diff(d) > 1e-14 * scale])
    starts = np.flatnonzero(new_group)
    poles = d[starts]
    weights = np.add.reduceat(c, starts)
    sizes = np.diff(np.append(starts, d.size))
    for pole, size in zip(poles, sizes):
        decoupled.extend([pole] * (size - 1))
    return poles, weights, np.array(decoupled)


def _secular(alpha, poles, weights, origin, delta):
    # F(lambda) = alpha - lambda - sum_j c_j / (d_j - lambda), lambda = origin + delta
    gaps = (poles[None, :] - origin[:, None]) - delta[:, None]
    return (alpha - origin - delta) - np.sum(weights[None, :] / gaps, axis=1)


def arrowhead_spectrum(alpha: float, d, z, iterations: int = 200) -> ArrowheadSpectrum:
    """Eigenvalues of [[alpha, z^T], [z, diag(d)]] and their head weights.

    After deflation there is exactly one root of the secular equation below
    the lowest pole, one between consecutive poles and one above the highest.
    Each root is bracketed and bisected in the offset from its nearer pole,
    which keeps full relative accuracy in the gap to that pole.
    """
    d = np.asarray(d, dtype=float)
    z = np.asarray(z, dtype=float)
    alpha = float(alpha)
    zscale = float(np.max(np.abs(z))) if z.size else 0.0
    poles, weights, decoupled = _deflate(d, z, 1e-300 if zscale == 0 else 0.0)
    m = poles.size
    if m == 0:
        evals = np.concatenate([[alpha], decoupled])
        hw = np.concatenate([[1.0], np.zeros(decoupled.size)])
        order = np.argsort(evals, kind="stable")
        return ArrowheadSpectrum(evals[order], hw[order], poles, weights, decoupled)
    reach = abs(alpha) + float(np.max(np.abs(poles))) + 2.0 * math.sqrt(float(weights.sum())) + 1.0
    # interval i spans (left_i, right_i); index 0 is below the lowest pole
    left = np.concatenate([[poles[0] - reach], poles])
    right = np.concatenate([poles, [poles[-1] + reach]])
    mid = 0.5 * (left + right)
    zero = np.zeros(m + 1)
    f_mid = _secular(alpha, poles, weights, mid, zero)
    # F decreases; a positive value at the midpoint puts the root in the right half
    use_right = f_mid > 0
    use_right[0] = True
    use_right[-1] = False
    origin = np.where(use_right, right, left)
    lo = np.where(use_right, mid - right, 0.0)
    hi = np.where(use_right, 0.0, mid - left)
    lo[0] = left[0] - right[0]
    hi[-1] = right[-1] - left[-1]
    for _ in range(iterations):
        mid_d = 0.5 * (lo + hi)
        f = _secular(alpha, poles, weights, origin, mid_d)
        pos = f > 0
        lo = np.where(pos, mid_d, lo)
        hi = np.where(pos, hi, mid_d)
        if np.all(hi - lo <= 2.0 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi))):
            break
    delta = 0.5 * (lo + hi)
    lam = origin + delta
    gaps = (poles[None, :] - origin[:, None]) - delta[:, None]
    hw = 1.0 / (1.0 + np.sum(weights[None, :] / gaps**2, axis=1))
    evals = np.concatenate([lam, decoupled])
    hws = np.concatenate([hw, np.zeros(decoupled.size)])
    order = np.argsort(evals, kind="stable")
    return ArrowheadSpectrum(evals[order], hws[order], poles, weights, decoupled)


def model_spectrum(model: FriedrichsModel) -> ArrowheadSpectrum:
    return arrowhead_spectrum(model.head, model.diagonal, model.row)


def survival_amplitude(model: FriedrichsModel, times, spectrum=None, chunk: int = 256):
    """a(t) = (head | exp(-i t H) head) = sum_j w_j exp(-i E_j t)."""
    spectrum = spectrum or model_spectrum(model)
    t = np.asarray(times, dtype=float)
    flat = t.ravel()
    keep = spectrum.head_weights > 0
    E, w = spectrum.eigenvalues[keep], spectrum.head_weights[keep]
    out = np.empty(flat.size, dtype=complex)
    for i in range(0, flat.size, chunk):
        tt = flat[i:i + chunk]
        out[i:i + chunk] = np.exp(-1j * np.outer(tt, E)) @ w
    return out.reshape(t.shape)


# --------------------------------------------------------------- Golden Rule

@dataclass
class ResonanceEstimate:
    shift_re: float
    shift_im: float
    method: str
    rate: float
    diagnostics: dict = field(default_factory=dict)


def level_spacing(model: FriedrichsModel, energy: Optional[float] = None, count: int = 40) -> float:
    """Mean gap between the distinct coupled levels nearest ``energy``."""
    energy = model.head if energy is None else energy
    poles, _, _ = _deflate(model.diagonal, model.row, 0.0)
    if poles.size < 2:
        raise UnderResolvedError("fewer than two coupled levels")
    idx = np.argsort(np.abs(poles - energy), kind="stable")[:min(count, poles.size)]
    near = np.sort(poles[idx])
    return float((near[-1] - near[0]) / (near.size - 1))


def levels_in_window(model: FriedrichsModel, width: float) -> int:
    """Distinct coupled levels within +-width of the head energy."""
    poles, _, _ = _deflate(model.diagonal, model.row, 0.0)
    return int(np.count_nonzero(np.abs(poles - model.head) <= width))


def continuum_rate(params: ModelParams, model: FriedrichsModel) -> float:
    """2 lambda^2 |Im Sigma(e_k + i0)| from the continuum integral."""
    from .self_energy import im_sigma_on_shell
    k = float(np.linalg.norm(model.k_vector))
    return 2.0 * model.coupling**2 * abs(im_sigma_on_shell(params, k, model.cutoff))


def fgr_decay_rate(model: FriedrichsModel, params: Optional[ModelParams] = None,
                   method: str = "decay_fit", c: float = 3.0, n_times: int = 4000,
                   min_decay: float = 1.0) -> ResonanceEstimate:
    """Decay rate of the head state.

    ``feshbach_eps``: Gamma = 2 |Im Sigma_L(e_k + i eps)| with eps = c times
    the local level spacing (c in [2, 5]).
    ``decay_fit``: least-squares slope of log|a(t)|^2 on [t1, t2] with
    t1 = 5 / bandwidth (after the initial transient) and
    t2 = 0.5 * 2 pi / spacing (before the first revival). The window must
    hold at least ``min_decay`` e-foldings of the Golden Rule rate,
    otherwise UnderResolvedError is raised.
    """
    if model.coupling == 0 or not np.any(model.row):
        return ResonanceEstimate(0.0, 0.0, method, 0.0, {"note": "uncoupled"})
    spacing = level_spacing(model)
    if method == "feshbach_eps":
        if not 2.0 <= c <= 5.0:
            raise DomainError("c must lie in [2, 5]")
        eps = c * spacing
        sig = feshbach_sigma(model, complex(model.head, eps))
        return ResonanceEstimate(sig.real, sig.imag, method, 2.0 * abs(sig.imag),
                                 {"epsilon": eps, "spacing": spacing})
    if method != "decay_fit":
        raise DomainError(f"unknown method {method!r}")
    bandwidth = float(model.diagonal.max() - model.diagonal.min())
    t1 = 5.0 / bandwidth
    t2 = 0.5 * 2.0 * math.pi / spacing
    ref = fgr_decay_rate(model, params, "feshbach_eps", c).rate
    if params is not None and params.contact and model.k_vector is not None:
        try:
            ref = continuum_rate(params, model)
        except Exception:
            pass
    if t2 <= t1 or ref * (t2 - t1) < min_decay:
        raise UnderResolvedError(
            f"fit window [{t1:.3g}, {t2:.3g}] holds {ref * max(t2 - t1, 0):.3g} "
            f"e-foldings; need {min_decay}")
    # stop early once the survival probability has dropped to ~e^-4
    t_end = min(t2, t1 + 4.0 / ref)
    times = np.linspace(t1, t_end, n_times)
    a = survival_amplitude(model, times)
    logp = np.log(np.abs(a) ** 2)
    slope, intercept = np.polyfit(times, logp, 1)
    resid = float(np.sqrt(np.mean((logp - (slope * times + intercept)) ** 2)))
    sig = feshbach_sigma(model, complex(model.head, c * spacing))
    return ResonanceEstimate(sig.real, 0.5 * float(slope), method, float(-slope),
                             {"window": (t1, t_end), "t_recurrence": 2 * t2,
                              "spacing": spacing, "bandwidth": bandwidth,
                              "intercept": float(intercept), "residual": resid})


def select_fgr_index(params: ModelParams, L: float, cutoff: float, coupling: float,
                     min_levels: int = 200, max_index: int = 64):
    """Smallest (n, 0, 0) with at least ``min_levels`` pair levels at or below
    e_k + lambda |v|, counted with multiplicity.

    lambda |v| is the norm of the coupling column, the energy scale over which
    the head state mixes with the pair levels.
    """
    for n in range(1, max_index + 1):
        model = build_model(params, (n, 0, 0), L, cutoff, coupling)
        # the row already carries lambda: |row| = lambda |v|
        width = float(np.linalg.norm(model.row))
        if int(np.sum(model.diagonal <= model.head + width)) >= min_levels:
            return model
    raise DomainError(f"no lattice momentum up to index {max_index} has {min_levels} levels")


def riemann_convergence(params: ModelParams, k: float, cutoff: float, z,
                        Ls: Sequence[float], coupling: float = 1.0,
                        spec: Optional[QuadratureSpec] = None):
    """Discrete Sigma (coupling 1 normalisation) against the continuum integral.

    For each L the momentum k is moved to the nearest lattice point on the
    first axis; the continuum value is evaluated at that same |k|.
    Returns rows (L, k_used, discrete, continuum, gap).
    """
    rows = []
    for L in Ls:
        idx = nearest_lattice_index(k, L)
        model = build_model(params, idx, L, cutoff, coupling)
        k_used = 2.0 * math.pi / L * idx[0]
        disc = feshbach_sigma(model, z)
        cont = coupling**2 * sigma_cutoff(params, k_used, z, cutoff, spec).value
        rows.append((float(L), k_used, disc, cont, abs(disc - cont)))
    return rows


def four_qp_floor_check(params: ModelParams, k: float, samples: int = 10000,
                        seed: int = 0, scale: float = 2.0):
    """Sample zero-sum triples p1 + p2 + p3 = 0 and check e_k + sum e_pi >= e_k.

    Returns (ok, smallest excess) where the excess is sum_i e_{p_i} >= 0.
    """
    rng = np.random.default_rng(seed)
    p1 = rng.uniform(-scale, scale, (samples, 3))
    p2 = rng.uniform(-scale, scale, (samples, 3))
    p3 = -(p1 + p2)
    ek = float(_energy(params, np.float64(k)))
    total = ek + sum(_energy(params, np.linalg.norm(q, axis=1)) for q in (p1, p2, p3))
    excess = total - ek
    return bool(np.all(total >= ek)), float(excess.min())
