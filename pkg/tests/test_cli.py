import json
import math

import pytest

from pelliptic import cli, reports

PCALC = """[field]
kind = rotation
phi = 1.0471975511965976
d = 3

[pcalc]
p_grid = 2, 3, 4, 6
"""

SCAN = """[field]
kind = identity

[domain]
d = 2
dirichlet = x0-

[grid]
ns = 8, 16

[scan]
n_lambda = 4
probes = 4
"""

KERNEL = """[field]
kind = identity

[domain]
d = 2

[grid]
ns = 16

[kernel]
times = 0.01, 0.02
"""


def _run(tmp_path, command, text, capsys, name="c.ini", out="out"):
    path = tmp_path / name
    path.write_text(text)
    code = cli.main([command, "--config", str(path), "--out", str(tmp_path / out)])
    return code, capsys.readouterr()


def test_pcalc_outputs(tmp_path, capsys):
    code, cap = _run(tmp_path, "pcalc", PCALC, capsys)
    assert code == 0
    summary = json.loads(cap.out)
    assert summary["ok"]
    assert summary["summary"]["p0"] == pytest.approx(4.0, rel=1e-3)
    assert summary["summary"]["p_low"] == pytest.approx(12 / 11, rel=1e-3)
    assert summary["summary"]["p_high"] == pytest.approx(12.0, rel=1e-3)
    text = (tmp_path / "out" / "pcalc_delta_p.csv").read_text()
    assert text.startswith("# [field]\n")
    cols, rows = reports.read_csv(tmp_path / "out" / "pcalc_delta_p.csv")
    assert cols == ["p", "delta_p", "p_elliptic"]
    assert [r[2] for r in rows] == ["true", "true", "false", "false"]
    svg = (tmp_path / "out" / "pcalc_delta_p.svg").read_text()
    assert "<svg" in svg


def test_pcalc_real_field(tmp_path, capsys):
    code, cap = _run(tmp_path, "pcalc", "[field]\nkind = identity\nd = 3\n", capsys)
    assert code == 0
    s = json.loads(cap.out)["summary"]
    assert s["p0"] == "inf" and s["p_low"] == 1.0 and s["p_high"] == "inf"


def test_config_error_exit_code(tmp_path, capsys):
    code, cap = _run(tmp_path, "pcalc", "[field]\nphi = 1\n", capsys)
    assert code == 2
    assert "missing field kind" in cap.err


def test_scan_identity(tmp_path, capsys):
    code, cap = _run(tmp_path, "scan", SCAN, capsys)
    assert code == 0
    s = json.loads(cap.out)
    assert s["assertions"]["res_below_lax_milgram"]
    theta = s["summary"]["theta"]
    assert max(s["summary"]["sups"]["res"]) <= 1 / math.sin(theta) + 1e-9
    cols, rows = reports.read_csv(tmp_path / "out" / "scan.csv")
    assert cols[:4] == ["n", "index", "lambda_re", "lambda_im"]
    assert len(rows) == 8


def test_kernel_assertion_failure(tmp_path, capsys):
    code, _ = _run(tmp_path, "kernel", KERNEL + "b_max = 0.05\n", capsys)
    assert code == 1


def test_kernel_identity(tmp_path, capsys):
    code, cap = _run(tmp_path, "kernel", KERNEL, capsys)
    assert code == 0
    b = json.loads(cap.out)["summary"]["b"][0]
    assert 0.1 <= b <= 0.35


def test_repeat_runs_identical(tmp_path, capsys):
    _run(tmp_path, "scan", SCAN, capsys, out="a")
    _run(tmp_path, "scan", SCAN, capsys, out="b")
    for name in ("scan.csv", "scan_summary.csv", "scan.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_threads_do_not_change_results(tmp_path, capsys):
    _run(tmp_path, "scan", SCAN, capsys, out="a")
    path = tmp_path / "t.ini"
    path.write_text(SCAN)
    cli.main(["scan", "--config", str(path), "--out", str(tmp_path / "b"), "--threads", "3"])
    capsys.readouterr()
    a = reports.read_csv(tmp_path / "a" / "scan.csv")
    b = reports.read_csv(tmp_path / "b" / "scan.csv")
    assert a == b


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["bogus", "--config", "x"])
