import json
import math

import pytest

from qhopf import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(csv_text):
    lines = [ln for ln in csv_text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def meta(csv_text):
    out = {}
    for ln in csv_text.splitlines():
        if ln.startswith("# "):
            key, value = ln[2:].split(": ", 1)
            out[key] = json.loads(value)
    return out


def test_weights_example(capsys):
    code, out, _ = run(capsys, "weights", "--theta", "0.5", "--nmax", "10")
    assert code == 0
    table = rows(out)
    assert len(table) == 11
    assert float(table[0]["W_n"]) == pytest.approx(0.78645, abs=5e-6)
    assert float(table[1]["W_n"]) == pytest.approx(0.16795, abs=5e-6)
    assert float(table[1]["partial_sum"]) == pytest.approx(0.78645 + 0.16795, abs=1e-5)


def test_vacuum_at_zero_theta(capsys):
    code, out, _ = run(capsys, "vacuum", "--theta", "0", "--cutoff", "10")
    assert code == 0
    (row,) = rows(out)
    assert float(row["N_A"]) == 0.0
    assert row["S_A"] == ""
    assert "theta=0" in meta(out)["S_A_note"]


def test_overlap_scan_example(capsys):
    code, out, _ = run(capsys, "overlap-scan", "--dtheta", "0.5", "--kmax", "200")
    assert code == 0
    table = rows(out)
    assert len(table) == 200
    for r in table[::37]:
        k = int(r["K"])
        assert float(r["abs_overlap"]) == pytest.approx(math.cosh(0.5) ** -k, rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["algebra-check", "--cutoff", "8"],
    ["bogoliubov-demo"],
    ["vacuum", "--theta", "0.5", "--charged"],
    ["free-energy", "--beta", "2", "--omega", "0.3", "--steps", "20"],
    ["entangle", "--theta", "0.4", "--charged", "--cutoff", "12"],
    ["dissipate", "--schedule", "linear", "--steps", "50"],
    ["dissipate", "--schedule", "bose", "--steps", "1000"],
])
def test_subcommands_pass_their_checks(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    m = meta(out)
    assert m["all_checks_passed"] is True
    assert "truncation_tail" in m
    assert m["config"]["subcommand"] == argv[0]


def test_small_cutoff_fails_translation(capsys):
    code, out, _ = run(capsys, "bogoliubov-demo", "--cutoff", "10")
    names = [c["name"] for c in meta(out)["checks"]]
    assert code == names.index("translation_residual") + 1


def test_json_output_shape(capsys):
    code, out, _ = run(capsys, "weights", "--nmax", "3", "--format", "json")
    data = json.loads(out)
    assert set(data) == {"meta", "rows"}
    assert [r["n"] for r in data["rows"]] == [0, 1, 2, 3]
    assert data["meta"]["seed"] == 0


def test_seed_is_echoed(capsys):
    _, out, _ = run(capsys, "weights", "--seed", "42")
    assert meta(out)["seed"] == 42


def test_exit_code_is_first_failing_check(capsys):
    code, out, err = run(capsys, "vacuum", "--theta", "0.5", "--tol", "1e-14")
    names = [c["name"] for c in meta(out)["checks"]]
    assert code == names.index("exp_map_overlap_deviation") + 1
    assert "exp_map_overlap_deviation" in err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"theta": 0.3, "nmax": 4}))
    _, out, _ = run(capsys, "weights", "--config", str(cfg), "--nmax", "2")
    assert len(rows(out)) == 3
    assert meta(out)["config"]["theta"] == 0.3


@pytest.mark.parametrize("content,message", [
    ({"thetaa": 1.0}, "unknown config keys"),
    ({"cutoff": 2.5}, "integer"),
    ({"subcommand": "vacuum"}, "config file is for"),
    ({"tol": -1.0}, "tolerances must be positive"),
])
def test_invalid_config_file(tmp_path, capsys, content, message):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(content))
    code, _, err = run(capsys, "weights", "--config", str(cfg))
    assert code == cli.EXIT_INVALID
    assert message in err


@pytest.mark.parametrize("argv,message", [
    (["vacuum", "--cutoff", "3"], "cutoff must be at least 4"),
    (["free-energy", "--beta", "-1"], "beta must be positive"),
    (["overlap-scan", "--theta-prime", "1", "--dtheta", "1"], "not both"),
    (["dissipate", "--schedule", "constant", "--theta", "0"], "theta <= 0"),
    (["weights", "--steps", "1"], "steps must be at least 2"),
])
def test_invalid_flags_name_the_precondition(capsys, argv, message):
    code, _, err = run(capsys, *argv)
    assert code == cli.EXIT_INVALID
    assert message in err


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    code, out, _ = run(capsys, "weights", "--format", "json")
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "weights.json").read_text())["rows"]


def test_explicit_output_path(tmp_path, capsys):
    target = tmp_path / "sub" / "w.csv"
    run(capsys, "weights", "--output", str(target))
    assert target.read_text().endswith("\n")


def test_repeated_runs_are_byte_identical(capsys):
    first = run(capsys, "free-energy", "--steps", "50")[1]
    second = run(capsys, "free-energy", "--steps", "50")[1]
    assert first == second
    assert "\r" not in first


def test_timing_is_opt_in(capsys):
    _, plain, _ = run(capsys, "weights")
    _, timed, _ = run(capsys, "weights", "--timing")
    assert "wall_time_s" not in meta(plain)
    assert meta(timed)["wall_time_s"] >= 0


def test_floats_use_seventeen_digits(capsys):
    _, out, _ = run(capsys, "weights", "--nmax", "1")
    assert rows(out)[0]["W_n"] == format(1 / math.cosh(0.5) ** 2, ".17g")
