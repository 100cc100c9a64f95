import csv
import io
import json

import pytest

from qubus_qec import cli, plans


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_plan_json_and_landing_files(tmp_path, capsys):
    prefix = tmp_path / "p4"
    code, _, _ = run(capsys, "plan", "--n", "4", "--theta", "0.1", "--alpha", "100", "--out", str(prefix))
    assert code == 0
    doc = json.loads((tmp_path / "p4.plan.json").read_text())
    cli.validate(doc, "plan")
    rows = list(csv.DictReader(io.StringIO((tmp_path / "p4.landing.csv").read_text())))
    assert len(rows) == 16
    assert len({(round(float(r["re"]), 6), round(float(r["im"]), 6) + 0.0) for r in rows}) == 3


def test_plan_without_displacements_has_five_points(capsys):
    code, out, _ = run(capsys, "plan", "--n", "4", "--theta", "0.1", "--alpha", "100",
                       "--no-displacements", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len({(round(float(r["re"]), 6), round(float(r["im"]), 6) + 0.0) for r in rows}) == 5


def test_plan_solver_failure_exit_code(monkeypatch, capsys):
    def fail(*a, **k):
        raise plans.SolverError("no plan", 0.25)

    monkeypatch.setattr(plans, "solve_photon_plan", fail)
    code, _, err = run(capsys, "plan", "--n", "4", "--theta", "0.1", "--alpha", "100")
    assert code == 3
    assert "2.500e-01" in err


def test_plan_config_error(capsys):
    code, _, err = run(capsys, "plan", "--n", "4", "--theta", "0.9", "--alpha", "100")
    assert code == 2
    assert "theta" in err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["resources", "--scheme", "pigeon"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        cli.main([])
    assert e.value.code == 2


def test_syndrome_bitflip_locates_injected_error(tmp_path, capsys):
    noise = tmp_path / "noise.json"
    noise.write_text(json.dumps({"data_errors": [[2, "X"]]}))
    code, out, _ = run(capsys, "syndrome", "--code", "bitflip3", "--shots", "8", "--noise", str(noise),
                       "--repetitions", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["histogram"] == {"01": 8}
    assert doc["corrections"] == {"+IIX": 8}
    assert doc["min_fidelity"] > 0.999


def test_syndrome_is_deterministic_and_thread_independent(monkeypatch, tmp_path, capsys):
    noise = tmp_path / "noise.json"
    noise.write_text(json.dumps({"pauli": {"data": [0.2, 0.0, 0.1]}}))
    args = ("syndrome", "--code", "bitflip3", "--shots", "6", "--seed", "9", "--noise", str(noise),
            "--repetitions", "1", "--format", "csv")
    monkeypatch.setenv("QUBUS_QEC_THREADS", "1")
    _, a, _ = run(capsys, *args)
    monkeypatch.setenv("QUBUS_QEC_THREADS", "3")
    _, b, _ = run(capsys, *args)
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert len(rows) == 6


def test_syndrome_config_errors_name_the_path(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    code, _, err = run(capsys, "syndrome", "--code", "bitflip3", "--noise", str(bad))
    assert code == 2 and str(bad) in err
    code, _, err = run(capsys, "syndrome", "--code", str(tmp_path / "nope.json"))
    assert code == 2 and "nope.json" in err
    out_of_range = tmp_path / "range.json"
    out_of_range.write_text(json.dumps({"data_errors": [[5, "X"]]}))
    code, _, err = run(capsys, "syndrome", "--code", "bitflip3", "--noise", str(out_of_range))
    assert code == 2
    code, _, _ = run(capsys, "syndrome", "--code", "bitflip3", "--logical", "1")
    assert code == 2
    code, _, _ = run(capsys, "syndrome", "--code", "bitflip3", "--shots", "0")
    assert code == 2


def test_bad_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("QUBUS_QEC_THREADS", "many")
    code, _, err = run(capsys, "syndrome", "--code", "bitflip3", "--shots", "1")
    assert code == 2 and "QUBUS_QEC_THREADS" in err


def test_syndrome_single_probe_scheme(capsys):
    code, out, _ = run(capsys, "syndrome", "--code", "bitflip3", "--scheme", "homodyne", "--shots", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["scheme"] == "single-probe-homodyne"
    assert "r3" in doc


def test_sweep_crosses_threshold(capsys):
    code, out, _ = run(capsys, "sweep", "--n", "4", "--points", "6", "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert rows[0]["alpha_theta2"] == pytest.approx(0.1)
    assert rows[-1]["alpha_theta2"] == pytest.approx(10.0)
    assert rows[0]["error"] > 0.1 and rows[-1]["error"] < 1e-3
    code, _, _ = run(capsys, "sweep", "--points", "1")
    assert code == 2


def test_resources_all_match(capsys):
    code, out, _ = run(capsys, "resources")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["status"] for r in rows} == {"match"}
    assert {r["scheme"] for r in rows} == {"photon", "homodyne", "ft", "verification"}


def test_resources_ft_verified_breakdown(capsys):
    code, out, _ = run(capsys, "resources", "--scheme", "ft", "--verify", "--repetitions", "3",
                       "--n-min", "4", "--n-max", "4", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    t = doc["tallies"]["ft"]["4"]
    assert t["crs"] == 3 * (13 + 10)
    assert t["breakdown"]["verify"]["crs"] == 30


def test_resources_mismatch_exit_code(monkeypatch, capsys):
    from qubus_qec import resources

    monkeypatch.setattr(cli, "expected", lambda *a, **k: resources.ResourceTally(crs=999))
    code, _, err = run(capsys, "resources", "--scheme", "ft", "--n-min", "2", "--n-max", "2")
    assert code == 4
    assert "mismatch" in err
    code, _, _ = run(capsys, "resources", "--n-min", "5", "--n-max", "3")
    assert code == 2


def test_every_schema_is_valid_json_schema():
    import jsonschema

    for name in ("plan", "landing_row", "sweep_row", "resources_row", "syndrome_report", "shot_row"):
        jsonschema.Draft202012Validator.check_schema(cli.load_schema(name))
