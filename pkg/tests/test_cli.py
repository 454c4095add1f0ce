import csv
import json

import pytest

from conformal_bfdr.cli import main

SETTING_A = {
    "generator": {
        "null": {"kind": "uniform", "a": 0, "b": 1},
        "alt": {"kind": "uniform", "a": 0.8, "b": 1.8},
        "n": 4000,
        "m": 2000,
        "m0": 1600,
    },
    "methods": ["sl", "slc", "slc+"],
    "alphas": [f"{k / 20:.2f}" for k in range(1, 11)],
    "trials": 1000,
    "seed": 0,
}


def _write_scores(path, values, header="score"):
    path.write_text(header + "\n" + "".join(f"{v}\n" for v in values), encoding="utf-8")
    return str(path)


@pytest.fixture
def toy(tmp_path):
    calib = _write_scores(tmp_path / "calib.csv", [0.1, 0.2, 0.3, 0.4])
    test = _write_scores(tmp_path / "test.csv", [0.5, 0.35, 0.15])
    return calib, test, tmp_path


def test_detect_toy(toy, capsys):
    calib, test, tmp = toy
    out = tmp / "r.json"
    assert main(["detect", "--calib", calib, "--test", test, "--method", "sl",
                 "--alpha", "0.6", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["k_hat"] == 2 and rep["rejected"] == [0, 1]
    assert rep["boundary_index"] == 1 and rep["threshold_score"] == 0.35
    assert rep["adjusted_level"] == "3/5" and rep["n"] == 4 and rep["m"] == 3
    assert rep["ties_broken"] is False
    assert "k_hat=2 rejected=2" in capsys.readouterr().out

    assert main(["detect", "--calib", calib, "--test", test, "--method", "slc",
                 "--alpha", "0.6", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["k_hat"] == 0 and rep["rejected"] == [] and rep["threshold_score"] is None


def test_detect_with_labels(toy):
    calib, test, tmp = toy
    labels = _write_scores(tmp / "h.csv", [1, 0, 0], header="label")
    out = tmp / "r.json"
    assert main(["detect", "--calib", calib, "--test", test, "--labels", labels,
                 "--method", "bh", "--alpha", "0.6", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["fdp"] == 0.5 and rep["boundary_is_null"] is True


def test_detect_input_errors(toy, capsys):
    calib, test, tmp = toy
    empty = tmp / "empty.csv"
    empty.write_text("score\n", encoding="utf-8")
    assert main(["detect", "--calib", calib, "--test", str(empty), "--alpha", "0.5"]) == 2
    assert "no scores" in capsys.readouterr().err
    assert main(["detect", "--calib", calib, "--test", str(tmp / "nope.csv"), "--alpha", "0.5"]) == 2
    assert main(["detect", "--calib", calib, "--test", test, "--alpha", "1.5"]) == 2
    assert main(["detect", "--calib", calib, "--test", test, "--alpha", "0.5", "--method", "slx"]) == 2
    assert main(["detect", "--calib", calib, "--test", test, "--alpha", "0.5", "--halve"]) == 2
    bad = _write_scores(tmp / "bad.csv", ["0.1", "abc"])
    assert main(["detect", "--calib", bad, "--test", test, "--alpha", "0.5"]) == 2
    assert "not a number" in capsys.readouterr().err


def test_strict_ties_exit_code(tmp_path):
    calib = _write_scores(tmp_path / "c.csv", [0.1, 0.2])
    test = _write_scores(tmp_path / "t.csv", [0.2])
    args = ["detect", "--calib", calib, "--test", test, "--alpha", "0.5"]
    assert main(args + ["--strict-ties", "-o", str(tmp_path / "x.json")]) == 3
    assert main(args + ["-o", str(tmp_path / "x.json")]) == 0
    assert json.loads((tmp_path / "x.json").read_text())["ties_broken"] is True


def test_verify_round_trip(tmp_path, capsys):
    calib = _write_scores(tmp_path / "c.csv", [i / 300 for i in range(300)])
    test = _write_scores(tmp_path / "t.csv", [i / 97 + 0.5 * (i % 3 == 0) for i in range(120)])
    out = tmp_path / "r.json"
    base = ["detect", "--calib", calib, "--test", test, "--alpha", "0.4", "--method", "slc++",
            "--s-min", "10", "--B", "7", "--seed", "17"]
    assert main(base + ["-o", str(out)]) == 0
    assert main(base + ["--verify", str(out)]) == 0
    assert "OK" in capsys.readouterr().out
    rep = json.loads(out.read_text())
    rep["k_hat"] += 1
    out.write_text(json.dumps(rep))
    assert main(base + ["--verify", str(out)]) == 1


def test_randomized_detect_is_reproducible(tmp_path):
    calib = _write_scores(tmp_path / "c.csv", [i / 200 for i in range(200)])
    test = _write_scores(tmp_path / "t.csv", [(i * 37 % 101) / 80 for i in range(100)])
    base = ["detect", "--calib", calib, "--test", test, "--alpha", "0.5", "--method", "aslc+",
            "--subsample-size", "20", "--seed", "3"]
    main(base + ["-o", str(tmp_path / "a.json")])
    main(base + ["-o", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()


def test_simulate_rows(tmp_path):
    cfg = tmp_path / "a.json"
    cfg.write_text(json.dumps(SETTING_A))
    out = tmp_path / "s.csv"
    assert main(["simulate", str(cfg), "-o", str(out), "--trials", "2"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 3 * 10
    assert {r["method"] for r in rows} == {"sl", "slc", "slc+"}
    assert all(r["trials"] == "2" for r in rows)


@pytest.mark.parametrize(
    "patch, needle",
    [
        ({"trials": 0}, "trials"),
        ({"methods": ["sl", "slx"]}, "methods"),
        ({"alphas": [0.1, 1.2]}, "alphas"),
        ({"generator": dict(SETTING_A["generator"], m0=2500)}, "generator"),
        ({"generator": dict(SETTING_A["generator"], alt={"kind": "cauchy"})}, "generator"),
    ],
)
def test_simulate_config_errors(tmp_path, capsys, patch, needle):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(dict(SETTING_A, **patch)))
    assert main(["simulate", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and needle in err


def test_simulate_unreadable(tmp_path):
    assert main(["simulate", str(tmp_path / "none.json")]) == 2
    bad = tmp_path / "x.json"
    bad.write_text("{")
    assert main(["simulate", str(bad)]) == 2


def test_lfdr_export(toy):
    calib, test, tmp = toy
    out = tmp / "curve.csv"
    assert main(["lfdr", "--calib", calib, "--test", test, "--alpha", "0.8", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[-1].startswith("#")
    rows = list(csv.DictReader(lines[:-1]))
    assert list(rows[0]) == ["k", "p_sorted", "p_tilde", "lfdr_raw", "lfdr_iso", "lfdr_gren", "gcm"]
    assert [float(r["lfdr_raw"]) for r in rows[1:]] == [1.2, 1.2, 1.8]
    # alpha/m = 0.8/3 > 1/5, but lfdr_iso(1) = 1.2 > 0.8
    assert lines[-1] == "# slc_k_hat original=0 shifted=0 iso=0 gren=0"

    assert main(["lfdr", "--calib", calib, "--test", test, "--alpha", "0.6", "-o", str(out)]) == 0
    assert out.read_text().splitlines()[-1] == "# slc_k_hat precondition unmet: alpha/m <= 1/(n+1)"
    assert main(["lfdr", "--calib", str(tmp / "missing.csv"), "--test", test, "--alpha", "0.6"]) == 2
