import hashlib
import json
import subprocess
import sys

import pytest

from signorini_lab.cli import main
from signorini_lab.competitors import half_integer_trace
from signorini_lab.competitors.fuzz import regular_trace
from signorini_lab.spectral import trace_to_dict


def _read(path):
    return json.loads(path.read_text())


def test_gap_check(tmp_path, capsys):
    assert main(["gap", "--d", "3", "--m", "2", "--check-paper", "--out", str(tmp_path)]) == 0
    body = _read(tmp_path / "gap_d3_m2.json")
    assert body["C1"] == 16 and body["C2"] == "15/4"
    assert body["check_paper"]["ok"]
    assert "C1=16" in capsys.readouterr().out


def test_gap_usage_errors(tmp_path):
    assert main(["gap", "--d", "3", "--out", str(tmp_path)]) == 1
    assert main(["gap", "--d", "5", "--m", "1", "--out", str(tmp_path)]) == 1


def test_parser_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["epi", "--case", "bogus", "--fuzz", "1", "--out", str(tmp_path)])
    assert exc.value.code == 1


def test_manifest_and_spec_hash(tmp_path):
    assert main(["modes", "--d", "3", "--K", "3", "--parity", "all", "--out", str(tmp_path)]) == 0
    man = _read(tmp_path / "manifest.json")
    for entry in man["files"]:
        data = (tmp_path / entry["file"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]
    csv = (tmp_path / "modes_d3_K3_all.csv").read_text().splitlines()
    assert csv[0] == "index,alpha,order,eigenvalue"
    assert len(csv) == 17
    assert len(man["spec_hash"]) == 64


def test_fuzz_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["epi", "--case", "regular", "--d", "2", "--fuzz", "20", "--seed", "7", "--out", str(out)]) == 0
    for name in ("epi_regular_d2.csv", "epi_regular_d2_reports.json", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert len((a / "epi_regular_d2.csv").read_text().splitlines()) == 21


def test_spec_hash_changes_with_seed(tmp_path):
    main(["epi", "--case", "regular", "--fuzz", "2", "--seed", "1", "--out", str(tmp_path / "a")])
    main(["epi", "--case", "regular", "--fuzz", "2", "--seed", "2", "--out", str(tmp_path / "b")])
    assert _read(tmp_path / "a" / "manifest.json")["spec_hash"] != _read(tmp_path / "b" / "manifest.json")["spec_hash"]


def test_epi_single_trace(tmp_path):
    f = tmp_path / "t.json"
    f.write_text(json.dumps(trace_to_dict(regular_trace(0, 3, 3))))
    assert main(["epi", "--case", "regular", "--d", "3", "--trace", str(f), "--out", str(tmp_path)]) == 0
    rep = _read(tmp_path / "epi_regular_d3_report.json")["report"]
    assert rep["pass"] and rep["gap"] <= 0
    # dimension mismatch is a usage error
    assert main(["epi", "--case", "regular", "--d", "2", "--trace", str(f), "--out", str(tmp_path)]) == 1


def test_epi_half_integer_trace_files(tmp_path):
    good = tmp_path / "h.json"
    good.write_text(json.dumps(half_integer_trace(2).to_dict()))
    assert main(["epi", "--case", "half-integer", "--trace", str(good), "--out", str(tmp_path)]) == 0
    far = tmp_path / "far.json"
    data = half_integer_trace(2).to_dict()
    data["modes"] += [{"alpha": 0, "order": 0, "coef": 8.0}, {"alpha": 3, "order": 3, "coef": -6.0}]
    far.write_text(json.dumps(data))
    assert main(["epi", "--case", "half-integer", "--trace", str(far), "--out", str(tmp_path)]) == 2
    err = _read(tmp_path / "epi_half-integer_d2_m2_error.json")
    assert "delta too large" in err["message"]


def test_bad_json_and_missing_m(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["epi", "--case", "regular", "--trace", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["epi", "--case", "singular", "--fuzz", "3", "--out", str(tmp_path)]) == 1


def _config(tmp_path, **cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_solve_regular_point(tmp_path):
    cfg = _config(tmp_path, d=2, h=1 / 64, datum={"kind": "model", "name": "he"})
    assert main(["solve", cfg, "--out", str(tmp_path / "o")]) == 0
    summ = _read(tmp_path / "o" / "summary.json")
    labels = [p["classification"]["label"] for p in summ["points"]]
    assert labels == ["Reg"]
    cls = (tmp_path / "o" / "classification.csv").read_text().splitlines()
    assert cls[0] == "index,x1,x2,x3,label,N_hat"
    meta = _read(tmp_path / "o" / "solution.json")
    assert meta["spec_hash"] == summ["spec_hash"]


def test_solve_exit_codes(tmp_path):
    cfg = _config(tmp_path, d=2, h=1 / 32, max_iters=5, datum={"kind": "model", "name": "he"})
    assert main(["solve", cfg, "--out", str(tmp_path / "a")]) == 3
    cfg = _config(tmp_path, d=2, h=1 / 32, datum={"kind": "expression", "expr": "x2"})
    assert main(["solve", cfg, "--out", str(tmp_path / "b")]) == 2
    cfg = _config(tmp_path, d=2, h=1 / 32)
    assert main(["solve", cfg, "--out", str(tmp_path / "c")]) == 1


def test_solve_deterministic(tmp_path):
    cfg = _config(tmp_path, d=2, h=1 / 32, datum={"kind": "expression", "expr": "x1**2 - x2**2"})
    for o in ("a", "b"):
        main(["solve", cfg, "--out", str(tmp_path / o)])
    for name in ("solution.bin", "summary.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_norms(tmp_path):
    assert main(["norms", "--d", "3", "--mmax", "2", "--out", str(tmp_path)]) == 0
    res = _read(tmp_path / "norms_d3.json")
    assert res["h_2m"]["4"]["norm_sq"] == pytest.approx(res["h_2m"]["4"]["exact_value"], rel=1e-12)


def test_json_logs(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "signorini_lab.cli", "--json-logs", "epi", "--case", "regular", "--fuzz", "2",
         "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    lines = [json.loads(x) for x in proc.stderr.splitlines() if x.strip()]
    assert lines and all("msg" in x for x in lines)
