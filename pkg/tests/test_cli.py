import json

import pytest

from nctorus.cli import main
from nctorus.config import ConfigError, load_config, parse_config

THETA = {"t21": 0.6180339887498949, "t31": 0.41421356237309515, "t32": 0.7320508075688772}


def elem(*terms):
    return {"coeffs": [{"k": k, "l": l, "m": m, "re": re, "im": 0.0} for k, l, m, re in terms]}


def herm(j, c=0.5):
    key = [0, 0, 0]
    key[j - 1] = 1
    neg = [-x for x in key]
    return elem((*key, c), (*neg, c))


def run(tmp_path, name, *args, config=None):
    out = tmp_path / f"{name}.out"
    argv = [name, "--out", str(out), *args]
    if config is not None:
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps(config))
        argv += ["--config", str(cfg)]
    code = main(argv)
    return code, out.read_text() if out.exists() else None


# configuration ----------------------------------------------------------------------------


def test_defaults_and_overrides():
    cfg = parse_config({}, {"window": "5", "spin": "1/2,0", "t21": "0.25"})
    assert cfg.window == 5 and cfg.spin.to_json() == [0.5, 0.0] and cfg.theta.theta21 == 0.25
    assert cfg.integral_cutoffs() == pytest.approx((5 * 5 / 12, 7 * 5 / 12, 9 * 5 / 12, 11 * 5 / 12), abs=1e-6)


@pytest.mark.parametrize("doc,where", [
    ({"window": 0}, "window"),
    ({"window": 2.5}, "window"),
    ({"spin": [0.3, 0]}, "spin"),
    ({"ell": -1}, "ell"),
    ({"seed": -3}, "seed"),
    ({"bogus": 1}, "unknown field"),
    ({"schema": "other/2"}, "schema"),
    ({"theta": {"t21": 0.1}}, "theta"),
    ({"A": {"A1": {"coeffs": [{"k": 1, "l": 0, "re": 1}]}}}, "A.A1"),
    ({"A": {"A1": elem((1, 0, 0, 1.0))}}, "A"),
    ({"omega": {"omega1": elem((0, 0, 1, 1.0))}}, "omega"),
    ({"cutoffs": [1, 2, 3]}, "cutoffs"),
    ({"cutoffs": [1, 2, 3, 40]}, "cutoffs"),
])
def test_invalid_config_names_location(doc, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(doc)


def test_load_config_reports_json_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"window": 3,\n "spin": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_config_round_trip():
    doc = {"theta": THETA, "window": 3, "A": {"A1": herm(1)}, "omega": {"omega2": herm(2, 0.3)}, "seed": 4}
    cfg = parse_config(doc)
    again = parse_config({k: v for k, v in cfg.to_json().items() if v is not None})
    assert again == cfg


# commands ---------------------------------------------------------------------------------


def test_verify_axioms_default_passes(tmp_path):
    code, text = run(tmp_path, "verify-axioms", "--window", "4")
    doc = json.loads(text)
    assert code == 0 and doc["all_passed"]
    assert doc["schema"] == "nctorus.axiom-report/1"
    assert all(row["anchor"] for row in doc["checks"])
    assert doc["metadata"]["pauli"].startswith("sigma1=")


def test_verify_axioms_vertical_fluctuation_fails(tmp_path, capsys):
    code, text = run(tmp_path, "verify-axioms", "--window", "4", config={"A": {"A3": herm(1, 1.0)}})
    assert code == 1
    failed = {row["check"] for row in json.loads(text)["checks"] if not row["pass"]}
    assert {"calculus compatibility", "Z commutes with commutant"} <= failed
    assert "FAIL" in capsys.readouterr().err


def test_minimal_window_reports_skips(tmp_path):
    code, text = run(tmp_path, "verify-axioms", "--window", "1")
    doc = json.loads(text)
    assert code == 0
    assert any(row["status"] == "skipped" for row in doc["checks"])


@pytest.mark.parametrize("cmd", ["verify-axioms", "decompose", "spectrum", "connection-scan", "hopf-galois"])
def test_output_is_deterministic(tmp_path, cmd):
    args = ["--window", "2", "--seed", "3"]
    first = run(tmp_path, cmd, *args)
    second = run(tmp_path, cmd, *args)
    assert first[0] == 0 and first == second


def test_decompose_reports_norms(tmp_path):
    code, text = run(tmp_path, "decompose", "--window", "3", config={"A": {"A3": herm(1, 1.0)}})
    doc = json.loads(text)
    assert code == 0
    assert doc["norms"]["Z_max_entry"] > 0 and doc["norms"]["Z_commutator_with_generators"] > 0
    assert doc["norms"]["horizontal_lift_minus_D_omega"] < 1e-14


def test_spectrum_with_connection(tmp_path):
    code, text = run(tmp_path, "spectrum", "--window", "3", "--ell", "2",
                     config={"omega": {"omega1": herm(2, 0.4)}})
    doc = json.loads(text)
    assert code == 0 and doc["all_passed"]
    assert len(doc["fibres"]["0"]) == 2 * 7 * 7


def test_connection_scan_csv(tmp_path):
    code, text = run(tmp_path, "connection-scan", "--window", "3")
    lines = text.splitlines()
    assert code == 0
    assert lines[0] == "generator,omega1_coeff,omega2_coeff,residual" and len(lines) == 1 + 50


def test_nc_integral_small_window(tmp_path):
    code, text = run(tmp_path, "nc-integral", "--window", "6",
                     config={"A": {"A1": herm(1), "A2": herm(2, 0.25)}})
    doc = json.loads(text)
    assert code == 0
    assert doc["ratio_left_over_right"]["oracle"] == pytest.approx(2.0, rel=1e-6)
    assert doc["integrals"]["1"]["left_at_A0"] is not None


def test_nc_integral_rejects_vertical_fluctuation(tmp_path, capsys):
    code, _ = run(tmp_path, "nc-integral", "--window", "4", config={"A": {"A3": herm(1)}})
    assert code == 2
    assert "A3 = 0" in capsys.readouterr().err


@pytest.mark.parametrize("args", [["--window", "0"], ["--spin", "0.3,0"], ["--theta21", "abc"], ["--ell", "0"]])
def test_bad_flags_exit_2(tmp_path, args):
    assert run(tmp_path, "hopf-galois", *args)[0] == 2


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
