import json
import math
import subprocess
import sys

import numpy as np
import pytest

from beliaev.cli import EXIT_CONVERGENCE, main, read_csv
from beliaev.dispersion import ModelParams, dispersion


def _run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out)])
    return code, out


def test_dispersion_bottom2_column(tmp_path):
    code, out = _run(tmp_path, "dispersion", "--kmin", "0", "--kmax", "3", "--points", "301")
    assert code == 0
    meta, rows = read_csv(out.read_text())
    assert meta["command"] == "dispersion" and len(rows) == 301
    p = ModelParams(1.0, 1.0)
    for r in rows:
        assert r["bottom2"] == 2 * dispersion(p, 0.5 * r["k"])
        assert r["ck"] == pytest.approx(r["k"])


def test_csv_number_format(tmp_path):
    code, out = _run(tmp_path, "dispersion", "--points", "3")
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0].startswith("k,e_k,bottom2")
    first = lines[2].split(",")[1]
    mantissa = first.split("e")[0].replace("-", "").replace(".", "")
    assert len(mantissa) == 17


def test_deterministic_output(tmp_path):
    _, a = _run(tmp_path, "damping-scan", "--points", "4", name="a.csv")
    _, b = _run(tmp_path, "damping-scan", "--points", "4", "--threads", "3", name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_json_and_csv_agree(tmp_path):
    _, c = _run(tmp_path, "renorm-scan", "--lambda-ladder", "5,10", name="r.csv")
    _, j = _run(tmp_path, "renorm-scan", "--lambda-ladder", "5,10", "--format", "json",
                name="r.json")
    meta, rows = read_csv(c.read_text())
    doc = json.loads(j.read_text())
    assert set(doc) == {"meta", "rows"}
    assert meta["params_hash"] == doc["meta"]["params_hash"]
    for rc, rj in zip(rows, doc["rows"]):
        for key, v in rj.items():
            if isinstance(v, float):
                assert rc[key] == v
            elif v == "nan":
                assert math.isnan(rc[key])
            else:
                assert rc[key] == v


def test_ratio_table_validation_exit_code(tmp_path):
    table = tmp_path / "bad.csv"
    table.write_text("0,0.9\n1,0.5\n")
    assert main(["dispersion", "--ratio-table", str(table)]) == 2
    table.write_text("0,1\n2,0.5\n1,0.4\n")
    assert main(["dispersion", "--ratio-table", str(table)]) == 2


def test_ratio_table_dispersion(tmp_path):
    table = tmp_path / "r.csv"
    table.write_text("0,1\n1,0.7\n3,0.5\n")
    code, out = _run(tmp_path, "dispersion", "--ratio-table", str(table), "--points", "11")
    assert code == 0
    meta, rows = read_csv(out.read_text())
    assert meta["bottom_method"] == "numeric"
    assert all(r["bottom2"] <= 2 * r["e_k"] + 1e-12 for r in rows)


def test_bad_arguments_exit_two(tmp_path):
    assert main(["dispersion", "--mu", "-1"]) == 2
    assert main(["dispersion", "--no-such-flag"]) == 2
    assert main(["renorm-scan", "--lambda-ladder", "5"]) == 2
    assert main(["friedrichs-sim", "--k-index", "1,2"]) == 2


def test_damping_scan_footer(tmp_path):
    code, out = _run(tmp_path, "damping-scan")
    meta, rows = read_csv(out.read_text())
    assert abs(meta["fitted_slope"] - 5.0) <= 0.05
    assert meta["constant_winner"] == "3v/(320 pi mu^4)"
    assert abs(rows[0]["ratio"] - 1.0) <= 0.05


def test_damping_scan_cutoff_independence(tmp_path):
    _, a = _run(tmp_path, "damping-scan", "--points", "5", "--lambda-cutoff", "5", name="a.csv")
    _, b = _run(tmp_path, "damping-scan", "--points", "5", "--lambda-cutoff", "50", name="b.csv")
    ra, rb = read_csv(a.read_text())[1], read_csv(b.read_text())[1]
    assert [r["im_sigma"] for r in ra] == [r["im_sigma"] for r in rb]


def test_renorm_scan_zero_row(tmp_path):
    code, out = _run(tmp_path, "renorm-scan", "--z-im", "0", "--lambda-ladder", "5,10")
    _, rows = read_csv(out.read_text())
    assert all(r["diff_re"] == 0 and r["diff_im"] == 0 for r in rows)


def test_renorm_scan_divergence_column(tmp_path):
    code, out = _run(tmp_path, "renorm-scan", "--z-im", "0", "--k-list", "0.1,0.05,0.025",
                     "--lambda-ladder", "3,6")
    meta, rows = read_csv(out.read_text())
    ks0 = [r["k_sigma_0"] for r in rows if r["cutoff"] == 3.0]
    assert all(v < 0 for v in ks0)
    limit = meta["k_sigma_0_limit"]["3"]
    assert abs(ks0[-1] - limit) < abs(ks0[0] - limit)


def test_friedrichs_sim_uncoupled(tmp_path):
    code, out = _run(tmp_path, "friedrichs-sim", "--coupling", "0", "--k-index", "3,0,0",
                     "--t-points", "20")
    assert code == 0
    _, rows = read_csv(out.read_text())
    assert all(abs(r["prob"] - 1.0) <= 1e-15 for r in rows)


def test_friedrichs_sim_coupling_doubling(tmp_path):
    _, a = _run(tmp_path, "friedrichs-sim", "--k-index", "8,0,0", "--t-points", "4",
                "--format", "json", name="a.json")
    _, b = _run(tmp_path, "friedrichs-sim", "--k-index", "8,0,0", "--t-points", "4",
                "--coupling", "0.2", "--format", "json", name="b.json")
    da = json.loads(a.read_text())["meta"]["diagnostics"]
    db = json.loads(b.read_text())["meta"]["diagnostics"]
    assert db["gamma_fgr_continuum"] == pytest.approx(4 * da["gamma_fgr_continuum"], rel=1e-14)
    assert db["gamma_fgr_discrete"] == pytest.approx(4 * da["gamma_fgr_discrete"], rel=1e-12)


def test_friedrichs_sim_k_substitution(tmp_path):
    _, out = _run(tmp_path, "friedrichs-sim", "--k", "0.4", "--t-points", "3", "--format", "json",
                  name="s.json")
    meta = json.loads(out.read_text())["meta"]
    assert meta["k_substitution"]["index"] == [2, 0, 0]
    assert meta["k_substitution"]["used"] == pytest.approx(2 * math.pi * 2 / 30)


def test_svg_output(tmp_path):
    svg = tmp_path / "plot.svg"
    code, _ = _run(tmp_path, "dispersion", "--points", "20", "--svg", str(svg))
    text = svg.read_text()
    assert code == 0 and text.startswith("<svg") and "polyline" in text


def test_selfcheck_passes(tmp_path):
    code, out = _run(tmp_path, "selfcheck")
    assert code == 0
    _, rows = read_csv(out.read_text())
    assert all(r["status"] == "PASS" for r in rows)
    names = {r["item"] for r in rows}
    assert {"beliaev-constant", "feshbach-dense", "lemma-limit"} <= names


@pytest.mark.parametrize("item", ["closed-sub-integrals", "beliaev-constant", "feshbach-dense"])
def test_selfcheck_tamper_fails(tmp_path, item):
    code, out = _run(tmp_path, "selfcheck", "--tamper", item)
    assert code == 4
    _, rows = read_csv(out.read_text())
    failed = [r["item"] for r in rows if r["status"] == "FAIL"]
    assert failed == [item]


def test_convergence_exit_code(monkeypatch, tmp_path):
    from beliaev import cli
    from beliaev.errors import ConvergenceError

    def boom(args):
        raise ConvergenceError("forced")
    monkeypatch.setattr(cli, "cmd_dispersion", boom)
    assert cli.main(["dispersion"]) == EXIT_CONVERGENCE


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "beliaev", "dispersion", "--points", "3",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.read_text().count("\n") > 3
