"""Command-line scans: dispersion, damping, renormalisation, Friedrichs runs, selfcheck.

Every command builds a ScanResult (metadata + uniform rows) and writes it as
CSV or JSON. Output files are deterministic: no timestamps or wall times are
written into them (the wall time goes to stderr).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import __version__
from .dispersion import (ModelParams, RatioTable, critical_velocity, dispersion, n_qp_bottom,
                         two_qp_bottom)
from .errors import ConvergenceError, DomainError, UnderResolvedError, UnsupportedOperation
from .quadrature import DEFAULT_ABS_TOL, DEFAULT_REL_TOL
from .svgplot import line_plot

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_SELFCHECK = 0, 2, 3, 4


@dataclass
class ScanResult:
    command: str
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the columns")
        self.rows.append(list(values))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


# ------------------------------------------------------------------ encoding

def _num(v):
    """17 significant digits in scientific notation; strings pass through."""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.16e}"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan; keep them as strings so both encodings agree
        return v if math.isfinite(v) else _num(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


def to_csv(result: ScanResult) -> str:
    lines = []
    for key in sorted(result.meta):
        lines.append(f"# {key}: {json.dumps(_jsonable(result.meta[key]), sort_keys=True)}")
    lines.append(",".join(result.columns))
    for row in result.rows:
        lines.append(",".join(_num(v) for v in row))
    return "\n".join(lines) + "\n"


def to_json(result: ScanResult) -> str:
    rows = [{c: _jsonable(v) for c, v in zip(result.columns, row)} for row in result.rows]
    doc = {"meta": _jsonable(result.meta), "rows": rows}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def read_csv(text: str):
    """Parse CSV written by ``to_csv`` back into (meta, rows of dicts)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            meta[key] = json.loads(val)
        elif line:
            body.append(line)
    header = body[0].split(",")
    rows = []
    for line in body[1:]:
        row = {}
        for c, v in zip(header, line.split(",")):
            try:
                row[c] = float(v)
            except ValueError:
                row[c] = v
        rows.append(row)
    return meta, rows


def emit(result: ScanResult, args) -> None:
    text = to_json(result) if args.format == "json" else to_csv(result)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "svg", None) and result.meta.get("plot"):
        plot = result.meta["plot"]
        x = result.column(plot["x"])
        series = {name: result.column(name) for name in plot["y"]}
        svg = line_plot(x, series, title=result.command, xlabel=plot["x"],
                        ylabel=plot.get("ylabel", ""), logx=plot.get("logx", False),
                        logy=plot.get("logy", False))
        with open(args.svg, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)


# ------------------------------------------------------------------- helpers

def _params(args) -> ModelParams:
    ratio = RatioTable.from_file(args.ratio_table) if getattr(args, "ratio_table", None) else None
    return ModelParams(args.mu, args.vhat0, ratio)


def _spec(args, scheme="ts"):
    from .self_energy import QuadratureSpec
    return QuadratureSpec(scheme, args.abs_tol, args.rel_tol, threads=None)


def _base_meta(args, command, extra=None) -> dict:
    settings = {k: v for k, v in sorted(vars(args).items())
                if k not in ("func", "out", "format", "svg", "threads", "tamper")}
    digest = hashlib.sha256(json.dumps(_jsonable(settings), sort_keys=True).encode()).hexdigest()
    meta = {"tool": "beliaev", "version": __version__, "command": command,
            "parameters": settings, "params_hash": digest[:16],
            "abs_tol": args.abs_tol, "rel_tol": args.rel_tol}
    if extra:
        meta.update(extra)
    return meta


def _pmap(fn: Callable, items, threads):
    """Ordered map, optionally threaded; results come back in input order."""
    items = list(items)
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise DomainError(f"expected comma-separated numbers, got {text!r}") from exc


# ------------------------------------------------------------------ commands

def cmd_dispersion(args) -> ScanResult:
    params = _params(args)
    if args.points < 2 or not (0 <= args.kmin < args.kmax):
        raise DomainError("need points >= 2 and 0 <= kmin < kmax")
    if args.nmax < 2:
        raise DomainError("nmax must be at least 2")
    ks = np.linspace(args.kmin, args.kmax, args.points)
    method = "convex" if params.contact else "numeric"
    c = critical_velocity(params)
    cols = ["k", "e_k", "bottom2"] + [f"bottom{n}" for n in range(3, args.nmax + 1)] + ["ck", "method"]
    res = ScanResult("dispersion", cols)

    def row(k):
        k = float(k)
        vals = [k, float(dispersion(params, k)), two_qp_bottom(params, k, method)]
        vals += [n_qp_bottom(params, k, n) for n in range(3, args.nmax + 1)]
        return vals + [c * k, method]

    for r in _pmap(row, ks, args.threads):
        res.add(*r)
    res.meta = _base_meta(args, "dispersion", {
        "critical_velocity": c, "bottom_method": method,
        "plot": {"x": "k", "y": cols[1:-1], "ylabel": "energy"}})
    return res


def cmd_damping_scan(args) -> ScanResult:
    from .self_energy import beliaev_constant, im_sigma_on_shell_result
    params = _params(args)
    if not params.contact:
        raise UnsupportedOperation("damping-scan needs the contact dispersion")
    if args.points < 2 or not (0 < args.kmin < args.kmax):
        raise DomainError("need points >= 2 and 0 < kmin < kmax")
    ks = np.geomspace(args.kmin, args.kmax, args.points)
    const = beliaev_constant(params)
    results = _pmap(lambda k: im_sigma_on_shell_result(params, float(k), args.lambda_cutoff,
                                                       rel_tol=min(args.rel_tol, 1e-10)),
                    ks, args.threads)
    im = np.array([float(r.value) for r in results])
    ek = dispersion(params, ks)
    leading = -const.value * ek**6 / ks
    logk, logi = np.log(ks), np.log(np.abs(im))
    local = np.gradient(logi, logk)
    slope, _ = np.polyfit(logk, logi, 1)
    res = ScanResult("damping-scan", ["k", "e_k", "im_sigma", "im_sigma_err", "leading",
                                      "ratio", "local_slope", "method"])
    for i, k in enumerate(ks):
        res.add(float(k), float(ek[i]), im[i], float(results[i].error), float(leading[i]),
                float(im[i] / leading[i]), float(local[i]), "delta-line")
    res.meta = _base_meta(args, "damping-scan", {
        "fitted_slope": float(slope), "constant": const.value,
        "constant_extrapolated": const.extrapolated, "constant_winner": const.winner,
        "constant_note": const.note,
        "plot": {"x": "k", "y": ["ratio"], "logx": True, "ylabel": "Im Sigma / leading"}})
    return res


def cmd_renorm_scan(args) -> ScanResult:
    from .self_energy import (ComplexEnergy, sigma_at_zero, sigma_cutoff, sigma_renormalized,
                              zero_energy_divergence_coefficient)
    params = _params(args)
    ks = _floats(args.k_list)
    ladder = _floats(args.lambda_ladder)
    if not ks or len(ladder) < 2:
        raise DomainError("need at least one k and two cutoffs")
    z = ComplexEnergy.on_shell(args.z_re) if args.boundary else ComplexEnergy.of(
        complex(args.z_re, args.z_im))
    spec = _spec(args)
    cols = ["k", "cutoff", "sigma_z_re", "sigma_z_im", "sigma_z_err", "sigma_0", "sigma_0_err",
            "diff_re", "diff_im", "diff_err", "richardson_re", "richardson_im", "k_sigma_0",
            "method"]
    res = ScanResult("renorm-scan", cols)

    def per_k(k):
        ren = sigma_renormalized(params, k, z, ladder, spec, check_decay=False)
        out = []
        for i, c in enumerate(ladder):
            s0 = sigma_at_zero(params, k, c, spec)
            if z.value == 0 and not z.boundary:
                sz = s0
            else:
                sz = sigma_cutoff(params, k, z, c, spec)
            d = complex(ren.differences[i])
            if i == 0:
                rich = complex(math.nan, math.nan)
            else:
                c0, d0 = ladder[i - 1], complex(ren.differences[i - 1])
                rich = (c * d - c0 * d0) / (c - c0)
            out.append([k, c, sz.value.real, sz.value.imag, sz.error_estimate, s0.value.real,
                        s0.error_estimate, d.real, d.imag, ren.errors[i], rich.real, rich.imag,
                        k * s0.value.real, spec.scheme])
        return out, ren

    summary = {}
    for k, (rows, ren) in zip(ks, _pmap(per_k, ks, args.threads)):
        for r in rows:
            res.add(*r)
        g = ren.gaps
        summary[f"{k:g}"] = {"gaps": g, "gap_ratios": [a / b if b else math.inf
                                                      for a, b in zip(g, g[1:])]}
    extra = {"z": {"re": z.re, "im": z.im, "boundary": z.boundary}, "ladders": summary}
    if params.contact:
        extra["k_sigma_0_limit"] = {f"{c:g}": zero_energy_divergence_coefficient(params, c)
                                    for c in ladder}
    extra["plot"] = {"x": "cutoff", "y": ["diff_re", "diff_im"], "logx": True}
    res.meta = _base_meta(args, "renorm-scan", extra)
    return res


def _parse_index(text):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 3:
        raise DomainError("--k-index needs three comma-separated integers")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise DomainError(f"--k-index needs integers, got {text!r}") from exc


def cmd_friedrichs_sim(args) -> ScanResult:
    from .friedrichs import (build_model, continuum_rate, fgr_decay_rate, level_spacing,
                             model_spectrum, nearest_lattice_index, select_fgr_index,
                             survival_amplitude)
    params = _params(args)
    notes = {}
    if args.k_index:
        model = build_model(params, _parse_index(args.k_index), args.box_size,
                            args.lambda_cutoff, args.coupling)
    elif args.k is not None:
        idx = nearest_lattice_index(args.k, args.box_size)
        model = build_model(params, idx, args.box_size, args.lambda_cutoff, args.coupling)
        notes["k_substitution"] = {"requested": args.k,
                                   "used": float(np.linalg.norm(model.k_vector)),
                                   "index": list(idx)}
    else:
        # the density rule needs nonzero coupling to size its window
        probe = select_fgr_index(params, args.box_size, args.lambda_cutoff,
                                 args.coupling if args.coupling else 0.1)
        model = build_model(params, probe.k_index, args.box_size, args.lambda_cutoff,
                            args.coupling)
        notes["k_selection"] = "smallest (n,0,0) with >= 200 pair levels below e_k + lambda|v|"
    spectrum = model_spectrum(model)
    diag = {"k_index": list(model.k_index), "k": float(np.linalg.norm(model.k_vector)),
            "e_k": model.head, "dim": model.dim}
    try:
        spacing = level_spacing(model)
    except UnderResolvedError:
        spacing = math.nan
    diag["level_spacing"] = spacing
    diag["recurrence_time"] = 2.0 * math.pi / spacing if spacing > 0 else math.inf
    if model.coupling != 0:
        if params.contact:
            diag["gamma_fgr_continuum"] = continuum_rate(params, model)
        diag["gamma_fgr_discrete"] = fgr_decay_rate(model, params, "feshbach_eps").rate
        try:
            fit = fgr_decay_rate(model, params, "decay_fit", min_decay=args.min_decay)
            diag["gamma_fit"] = fit.rate
            diag["fit_window"] = list(fit.diagnostics["window"])
            diag["fit_residual"] = fit.diagnostics["residual"]
        except UnderResolvedError as exc:
            diag["gamma_fit"] = math.nan
            diag["fit_status"] = f"under-resolved: {exc}"
    else:
        diag["gamma_fit"] = 0.0
    t_max = args.t_max if args.t_max is not None else (
        diag["recurrence_time"] if math.isfinite(diag["recurrence_time"]) else 100.0)
    times = np.linspace(0.0, t_max, args.t_points)
    amp = survival_amplitude(model, times, spectrum)
    res = ScanResult("friedrichs-sim", ["t", "re_a", "im_a", "prob", "method"])
    for t, a in zip(times, amp):
        res.add(float(t), a.real, a.imag, abs(a) ** 2, "arrowhead")
    res.meta = _base_meta(args, "friedrichs-sim", {"diagnostics": diag, **notes,
                          "plot": {"x": "t", "y": ["prob"], "logy": True}})
    return res


def cmd_selfcheck(args) -> ScanResult:
    from .selfcheck import run_selfcheck
    items = run_selfcheck(tamper=args.tamper, threads=args.threads)
    res = ScanResult("selfcheck", ["item", "deviation", "tolerance", "status", "detail"])
    for it in items:
        res.add(it.name, it.deviation, it.tolerance, "PASS" if it.passed else "FAIL", it.detail)
        print(f"{'PASS' if it.passed else 'FAIL'} {it.name}: deviation {it.deviation:.3e} "
              f"(tol {it.tolerance:.1e}) {it.detail}", file=sys.stderr)
    res.meta = _base_meta(args, "selfcheck", {"all_pass": all(i.passed for i in items)})
    return res


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mu", type=float, default=1.0, help="chemical potential (default 1)")
    common.add_argument("--vhat0", type=float, default=1.0, help="v-hat(0) (default 1)")
    common.add_argument("--ratio-table", metavar="FILE",
                        help="two-column k,r table for r(k) = vhat(k)/vhat(0); "
                             "linear interpolation, flat extrapolation, r(0) must be 1")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--svg", metavar="PATH", help="also write a static SVG plot")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--abs-tol", type=float, default=DEFAULT_ABS_TOL)
    common.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)

    ap = argparse.ArgumentParser(prog="beliaev", description="Beliaev damping numerics")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dispersion", parents=[common], help="e_k and n-quasiparticle bottoms")
    p.add_argument("--kmin", type=float, default=0.0)
    p.add_argument("--kmax", type=float, default=3.0)
    p.add_argument("--points", type=int, default=301)
    p.add_argument("--nmax", type=int, default=3)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("damping-scan", parents=[common], help="Im Sigma(e_k + i0) over k")
    p.add_argument("--kmin", type=float, default=0.02)
    p.add_argument("--kmax", type=float, default=0.2)
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--lambda-cutoff", type=float, default=5.0)
    p.set_defaults(func=cmd_damping_scan)

    p = sub.add_parser("renorm-scan", parents=[common], help="Sigma(z) - Sigma(0) on a cutoff ladder")
    p.add_argument("--k-list", default="0.5")
    p.add_argument("--z-re", type=float, default=0.0)
    p.add_argument("--z-im", type=float, default=0.2)
    p.add_argument("--boundary", action="store_true", help="use z-re + i0 instead of z-re + i z-im")
    p.add_argument("--lambda-ladder", default="5,10,20,40")
    p.set_defaults(func=cmd_renorm_scan)

    p = sub.add_parser("friedrichs-sim", parents=[common], help="finite-volume survival amplitude")
    p.add_argument("--box-size", type=float, default=30.0)
    p.add_argument("--lambda-cutoff", type=float, default=3.0)
    p.add_argument("--coupling", type=float, default=0.1)
    p.add_argument("--k-index", help="lattice vector i,j,l (k = 2 pi (i,j,l) / L)")
    p.add_argument("--k", type=float, help="|k|; mapped to the nearest (n,0,0) lattice vector")
    p.add_argument("--t-max", type=float)
    p.add_argument("--t-points", type=int, default=400)
    p.add_argument("--min-decay", type=float, default=1.0,
                   help="e-foldings the fit window must hold (default 1)")
    p.set_defaults(func=cmd_friedrichs_sim)

    p = sub.add_parser("selfcheck", parents=[common], help="run the oracle suite")
    p.add_argument("--tamper", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selfcheck)
    return ap


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    start = time.perf_counter()
    try:
        result = args.func(args)
        emit(result, args)
    except (DomainError, UnsupportedOperation, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, UnderResolvedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(f"wall time {time.perf_counter() - start:.2f} s", file=sys.stderr)
    if result.command == "selfcheck" and not result.meta["all_pass"]:
        return EXIT_SELFCHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
