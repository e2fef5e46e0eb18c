"""Oracle suite behind ``beliaev selfcheck``.

Each item compares a computed quantity with an independent reference and
reports the deviation against a tolerance. ``tamper`` names one item whose
reference is deliberately perturbed, as a negative control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dispersion import ModelParams, dispersion, two_qp_bottom
from .friedrichs import FriedrichsModel, resolvent_head, resolvent_head_dense
from .self_energy import (QuadratureSpec, beliaev_constant, closed_bracket,
                          closed_bracket_series, int_inv_a1a2, int_weighted_a1a2,
                          lemma_quw30_check, lemma_sss_check, series_inv_a1a2,
                          series_weighted_a1a2, sigma_cutoff, sub_integral_linear,
                          sub_integral_linear_quad, sub_integral_log, sub_integral_log_quad)

TAMPER_SHIFT = 1e-3


@dataclass
class CheckItem:
    name: str
    deviation: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.deviation) and self.deviation <= self.tolerance)


def _ref(value, name, tamper):
    """Reference value, shifted when this item is the tamper target."""
    return value + TAMPER_SHIFT * max(abs(value), 1.0) if tamper == name else value


def _closed_subintegrals(p, tamper):
    name = "closed-sub-integrals"
    dev = 0.0
    for e in (0.1, 0.5, 1.0, 2.0):
        for sign in (1, -1):
            dev = max(dev, abs(sub_integral_linear_quad(p, e, sign).value
                               - _ref(sub_integral_linear(p, e, sign), name, tamper)))
            dev = max(dev, abs(sub_integral_log_quad(p, e, sign).value
                               - _ref(sub_integral_log(p, e), name, tamper)))
    return CheckItem(name, dev, 1e-10, "e in {0.1, 0.5, 1, 2}, both signs")


def _remainder_exponent(fn_quad, fn_series, p, es=(0.1, 0.05)):
    r = [abs(fn_quad(e) - fn_series(e)) for e in es]
    return math.log(r[0] / r[1]) / math.log(es[0] / es[1])


def _series_remainders(p, tamper):
    name = "series-remainders"
    shift = 10.0 * TAMPER_SHIFT if tamper == name else 0.0
    exps = [
        _remainder_exponent(lambda e: int_inv_a1a2(p, e).value,
                            lambda e: series_inv_a1a2(p, e, 4) + shift * e**3, p),
        _remainder_exponent(lambda e: int_weighted_a1a2(p, e).value,
                            lambda e: series_weighted_a1a2(p, e, 3) + shift * e**5, p),
        _remainder_exponent(lambda e: closed_bracket(p, e),
                            lambda e: closed_bracket_series(p, e, 4) + shift * e**4, p),
    ]
    worst = min(exps)
    return CheckItem(name, max(0.0, 7.5 - worst), 0.0,
                     "remainder exponents " + ", ".join(f"{x:.2f}" for x in exps) + " (need >= 7.5)")


def _scheme_agreement(p, tamper, threads):
    name = "scheme-agreement"
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(3):
        k = rng.uniform(0.1, 1.0)
        z = complex(rng.uniform(-1.0, 3.0), rng.uniform(0.05, 0.5))
        cut = rng.uniform(3.0, 8.0)
        vals = []
        for scheme in ("cartesian_pw", "ts", "xy"):
            spec = QuadratureSpec(scheme, 1e-9, 1e-9, threads=threads)
            vals.append(sigma_cutoff(p, k, z, cut, spec))
        ref = _ref(vals[1].value.real, name, tamper) + 1j * vals[1].value.imag
        for r in (vals[0], vals[2]):
            budget = r.error_estimate + vals[1].error_estimate + 1e-12
            worst = max(worst, abs(r.value - ref) / budget)
    return CheckItem(name, worst, 1.0, "max |difference| / summed error estimates, 3 cases")


def _feshbach(p, tamper):
    name = "feshbach-dense"
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(5):
        n = int(rng.integers(5, 200))
        m = FriedrichsModel.from_arrays(rng.uniform(0, 3), rng.uniform(0, 4, n),
                                        rng.normal(0, 0.3, n))
        for _ in range(3):
            z = complex(rng.uniform(-1, 5), rng.choice([-1, 1]) * rng.uniform(1e-3, 1))
            dense = resolvent_head_dense(m, z)
            ref = _ref(dense.real, name, tamper) + 1j * dense.imag
            worst = max(worst, abs(resolvent_head(m, z) - ref) / abs(dense))
    return CheckItem(name, worst, 1e-12, "relative error, 5 models x 3 z")


def _lemma_sss(p, tamper):
    name = "lemma-small-s"
    t = 1.3
    devs = [np.abs(lemma_sss_check(p, t, s)) for s in (0.02, 0.01)]
    ratios = devs[0] / devs[1]
    target = 4.0 * (1.0 + 100 * TAMPER_SHIFT) if tamper == name else 4.0
    worst = float(np.max(np.abs(ratios - target)))
    return CheckItem(name, worst, 0.05, "deviation ratios under s-halving, expected 4 (O(s^2))")


def _lemma_limit(p, tamper):
    name = "lemma-limit"
    chk = lemma_quw30_check(p, 2.0, [0.04, 0.02, 0.01])
    lim = _ref(chk.limit, name, tamper)
    rel = abs(chk.integrals[-1] - lim) / lim
    return CheckItem(name, rel, 2e-3,
                     f"limit {chk.limit:.10f} (denominator 32); denominator 64 gives "
                     f"{chk.limit_denominator64:.10f}")


def _beliaev(p, tamper):
    name = "beliaev-constant"
    bc = beliaev_constant(p)
    cands = dict(bc.candidates)
    if tamper == name:
        cands = {k: v * 1.05 for k, v in cands.items()}
    devs = {k: abs(bc.extrapolated - v) / v for k, v in cands.items()}
    within = [k for k, d in devs.items() if d <= 0.01]
    dev = min(devs.values()) if len(within) == 1 else math.inf
    return CheckItem(name, dev, 0.01,
                     f"winner {bc.winner}; the other closed form disagrees: {bc.note}")


def _convexity(p, tamper):
    name = "two-qp-bottom"
    ks = np.geomspace(0.01, 5.0, 12)
    worst = 0.0
    for k in ks:
        ref = _ref(2.0 * float(dispersion(p, 0.5 * k)), name, tamper)
        worst = max(worst, abs(two_qp_bottom(p, k) - ref) / ref)
    return CheckItem(name, worst, 1e-8, "numerical minimum vs 2 e_{k/2}, 12 k in [0.01, 5]")


def _herglotz(p, tamper, threads):
    name = "herglotz-sign"
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(10):
        k = rng.uniform(0.1, 1.0)
        z = complex(rng.uniform(-1, 3), rng.choice([-1, 1]) * rng.uniform(0.05, 1.0))
        s = sigma_cutoff(p, k, z, 4.0, QuadratureSpec("ts", 1e-9, 1e-8, threads=threads)).value
        expected = -np.sign(z.imag)
        if tamper == name:
            expected = -expected
        bad += int(np.sign(s.imag) != expected)
    return CheckItem(name, float(bad), 0.0, "sign(Im Sigma) = -sign(Im z), 10 random z")


def run_selfcheck(params: Optional[ModelParams] = None, tamper: Optional[str] = None,
                  threads=None) -> list:
    p = params or ModelParams(1.0, 1.0)
    checks: list[Callable] = [
        lambda: _closed_subintegrals(p, tamper),
        lambda: _series_remainders(p, tamper),
        lambda: _scheme_agreement(p, tamper, threads),
        lambda: _feshbach(p, tamper),
        lambda: _lemma_sss(p, tamper),
        lambda: _lemma_limit(p, tamper),
        lambda: _beliaev(p, tamper),
        lambda: _convexity(p, tamper),
        lambda: _herglotz(p, tamper, threads),
    ]
    return [c() for c in checks]


ITEM_NAMES = ("closed-sub-integrals", "series-remainders", "scheme-agreement", "feshbach-dense",
              "lemma-small-s", "lemma-limit", "beliaev-constant", "two-qp-bottom", "herglotz-sign")
