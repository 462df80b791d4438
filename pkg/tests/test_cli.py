import io
import json

import pytest

from zrsim.cli import run_command


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_solve_user_ss():
    code, out, _ = run(["solve-user", "--p", "0.35", "--c", "4", "--config", "SS"])
    assert code == 0
    row = out.splitlines()[1].split()
    assert row[:3] == ["SS", "2", "2"]
    assert float(row[3]) == pytest.approx(2.1972, abs=1e-4)


def test_dynamics_converges_to_ss():
    code, out, _ = run(["dynamics", "--p", "0.35", "--c", "4", "--t1", "3", "--t2", "3", "--a1", "5", "--a2", "4",
                        "--max-rounds", "100", "--format", "json-lines"])
    assert code == 0
    rec = json.loads(out)
    assert rec["outcome"] == "converged"
    assert (rec["m1"], rec["m2"]) == ("SS", "SS")
    assert rec["rounds"] <= 8


def test_thresholds():
    code, out, _ = run(["thresholds", "--rho", "0.1", "--format", "csv"])
    assert code == 0
    header, row = out.splitlines()
    rec = dict(zip(header.split(","), row.split(",")))
    assert rec["branch"] == "SN"
    assert float(rec["a_sn"]) == pytest.approx(0.805, abs=1e-6)
    assert 0 < float(rec["a_s"]) < float(rec["a_sn"])


def test_best_response_json():
    code, out, _ = run(["best-response", "--a1", "3", "--a2", "1", "--format", "json-lines"])
    recs = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and len(recs) == 4
    chosen = [r for r in recs if r["chosen"]]
    assert chosen[0]["config"] == "SN"
    assert all(r["q"] is None for r in recs if not r["feasible"])


def test_verify_round_trip():
    code, out, _ = run(["dynamics", "--a1", "7", "--a2", "0.7", "--format", "json-lines"])
    rec = json.loads(out)
    code, out, _ = run(["verify", "--a1", "7", "--a2", "0.7", "--q1", repr(rec["q1"]), "--m1", rec["m1"],
                        "--q2", repr(rec["q2"]), "--m2", rec["m2"], "--format", "csv"])
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "i_isp_best_response,True"
    assert lines[2] == "ii_cp_nash,True"


def test_verify_reports_witness():
    code, out, _ = run(["verify", "--a1", "10", "--a2", "1", "--q1", "4.8", "--m1", "SN", "--q2", "4.8",
                        "--m2", "SN"])
    assert code == 0
    assert "False" in out and "witness:" in out


def test_verify_requires_state():
    code, _, err = run(["verify", "--q1", "1"])
    assert code == 2 and "--m1" in err


def test_sweep_map_to_file(tmp_path):
    path = tmp_path / "m.csv"
    code, out, _ = run(["sweep-map", "--grid", "4", "--out", str(path)])
    assert code == 0 and out == ""
    lines = path.read_text().splitlines()
    assert lines[0] == "a1,a2,label,rounds,q1,q2"
    assert len(lines) == 17


def test_sweep_ray_and_single_isp():
    code, out, _ = run(["sweep-ray", "--rho", "0.1", "--grid", "3"])
    assert code == 0 and len(out.splitlines()) == 1 + 9
    code, out, _ = run(["sweep-single-isp", "--rho", "0.7", "--grid", "3"])
    assert code == 0 and len(out.splitlines()) == 1 + 6


def test_deterministic_output():
    argv = ["sweep-ray", "--rho", "0.8", "--grid", "5"]
    assert run(argv)[1] == run(argv)[1]


@pytest.mark.parametrize("argv,needle", [
    (["solve-user", "--p", "-1"], "p must be > 0"),
    (["solve-user", "--t1", "0.5"], "t1"),
    (["dynamics", "--max-rounds", "1"], "max-rounds"),
    (["sweep-ray", "--grid", "3"], "rho"),
    (["sweep-ray", "--rho", "1.2", "--grid", "3"], "rho"),
    (["thresholds", "--rho", "0"], "rho"),
    (["solve-user", "--config", "XY"], "configuration"),
    (["solve-user", "--utility", "custom"], "--psi"),
    (["solve-user", "--utility", "custom", "--psi", "z**2", "--dpsi", "2*z"], "marginal"),
    (["solve-user", "--utility", "custom", "--psi", "log(", "--dpsi", "1"], "expression"),
    (["sweep-map", "--grid", "1"], "steps"),
])
def test_validation_errors(argv, needle):
    code, out, err = run(argv)
    assert code == 2
    assert needle in err
    assert out == ""


def test_argparse_errors_exit_2():
    assert run(["solve-user", "--p", "abc"])[0] == 2
    assert run(["no-such-command"])[0] == 2


def test_io_error_exit_1(tmp_path):
    code, _, err = run(["solve-user", "--out", str(tmp_path / "missing" / "x.txt")])
    assert code == 1 and "I/O" in err
    code, _, err = run(["solve-user", "--config-file", str(tmp_path / "nope.yaml")])
    assert code == 1


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("model:\n  p: 0.5\n  c: 2\n  t: 10\n")
    code, out, _ = run(["solve-user", "--config-file", str(cfg), "--config", "NN", "--format", "csv"])
    assert out.splitlines()[1].split(",")[1] == "1"      # 1/p - 1 with p from the file
    code, out, _ = run(["solve-user", "--config-file", str(cfg), "--p", "0.8", "--config", "NN", "--format", "csv"])
    assert out.splitlines()[1].split(",")[1] == "0.25"   # flag wins


def test_config_file_sweep_section(tmp_path):
    cfg = tmp_path / "sweep.yaml"
    out_path = tmp_path / "ray.csv"
    cfg.write_text(f"sweep:\n  rho: 0.8\n  grid: 4\n  a_max: 5\noutput:\n  path: {out_path}\n")
    code, _, _ = run(["sweep-ray", "--config-file", str(cfg)])
    assert code == 0
    assert len(out_path.read_text().splitlines()) == 1 + 12


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("model:\n  q: 1\n")
    code, _, err = run(["solve-user", "--config-file", str(cfg)])
    assert code == 2 and "unknown keys" in err


def test_custom_utility_flags():
    code, out, _ = run(["solve-user", "--utility", "custom", "--psi", "log(1 + z)", "--dpsi", "1 / (1 + z)",
                        "--config", "SN", "--format", "csv"])
    assert code == 0
    theta1 = float(out.splitlines()[1].split(",")[1])
    assert theta1 == pytest.approx(23 / 7, abs=1e-8)


def test_monopoly_flag():
    code, out, _ = run(["dynamics", "--a1", "1", "--a2", "0.1", "--monopoly", "--format", "json-lines"])
    assert code == 0
    assert json.loads(out)["x"] == 0.5
