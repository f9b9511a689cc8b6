import json
import math
import subprocess
import sys

import numpy as np
import pytest

from phasecap.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_weight_planar_stdout(capsys):
    code, out, err = run_cli(capsys, "weight", "--model", "planar",
                             "--levels", "64", "--p", "2")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t,S,A,w"
    assert len(lines) == 65
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert np.allclose(rows[:, 1], 1.0, atol=1e-9)  # S
    assert np.allclose(rows[:, 2], 1.0, atol=1e-9)  # A


def test_weight_region_restricts_fibers(capsys, tmp_path):
    full = tmp_path / "full.csv"
    half = tmp_path / "half.csv"
    base = ["weight", "--model", "planar", "--levels", "16", "--p", "2"]
    assert main(base + ["--out", str(full)]) == 0
    assert main(base + ["--region=-0.25..1.25,0..0.5",
                        "--out", str(half)]) == 0
    capsys.readouterr()
    a_full = np.loadtxt(full, delimiter=",", skiprows=1)
    a_half = np.loadtxt(half, delimiter=",", skiprows=1)
    assert np.allclose(a_half[:, 1], 0.5 * a_full[:, 1], rtol=1e-9)


def test_weight_missing_input_is_usage_error(capsys):
    code, out, err = run_cli(capsys, "weight", "--model", "file")
    assert code == 2
    assert "phasecap weight:" in err


def test_reduce_radial_log_capacity(capsys):
    code, out, err = run_cli(capsys, "reduce", "--model", "radial",
                             "--levels", "1024", "--p", "2")
    assert code == 0
    payload = json.loads(out)
    assert payload["branch"] == "finite"
    assert payload["capacity"] == pytest.approx(2.0 * math.pi, rel=5e-3)
    assert payload["a"] == 1.0
    assert payload["b"] == pytest.approx(math.e)


def test_reduce_from_csv_divergent(capsys, tmp_path):
    t = np.linspace(0.0, 1.0, 65)
    path = tmp_path / "tab.csv"
    lines = ["t,S,A,w"]
    for tk in t:
        tk = float(tk)
        lines.append(f"{tk!r},1.0,{tk!r},1.0")  # A ~ t: divergent at 0
    path.write_text("\n".join(lines) + "\n")
    code, out, err = run_cli(capsys, "reduce", "--model", "file",
                             "--in", str(path), "--p", "2")
    assert code == 0
    payload = json.loads(out)
    assert payload["branch"] == "divergent"
    assert payload["capacity"] == 0.0
    assert payload["resistance"] == "inf"


def test_reduce_reparam_preserves_capacity(capsys):
    base = ["reduce", "--model", "radial", "--levels", "512", "--p", "2"]
    code, out, _ = run_cli(capsys, *base)
    cap = json.loads(out)["capacity"]
    code2, out2, _ = run_cli(capsys, *(base + ["--reparam", "cubic"]))
    assert code2 == 0
    payload = json.loads(out2)
    assert payload["a"] == pytest.approx(2.0)
    assert payload["capacity"] == pytest.approx(cap, rel=1e-4)


def test_reduce_emit_profile(capsys, tmp_path):
    out = tmp_path / "red.json"
    code = main(["reduce", "--model", "planar", "--levels", "64",
                 "--p", "2", "--out", str(out), "--emit-profile"])
    capsys.readouterr()
    assert code == 0
    prof = tmp_path / "red_profile.csv"
    assert prof.exists()
    rows = np.loadtxt(prof, delimiter=",", skiprows=1)
    assert rows[0, 1] == 0.0
    assert rows[-1, 1] == 1.0
    # the profile of a unit weight is the identity ramp
    assert np.allclose(rows[:, 1], rows[:, 0], atol=1e-9)


def test_reduce_emit_profile_requires_out(capsys):
    code, _, err = run_cli(capsys, "reduce", "--model", "planar",
                           "--levels", "32", "--emit-profile")
    assert code == 2
    assert "--out" in err


def test_fullcap_planar_bound(capsys):
    code, out, _ = run_cli(capsys, "fullcap", "--model", "planar",
                           "--levels", "64", "--p", "2",
                           "--grid", "65,33")
    assert code == 0
    payload = json.loads(out)
    assert payload["bound_ok"] is True
    assert payload["converged"] is True
    assert payload["gap"] >= 0.0
    # full answer tracks the node-snapped plate separation, ~3% at 65 nodes
    assert payload["capacity_full"] == pytest.approx(1.0, rel=5e-2)
    assert payload["capacity_reduced"] == pytest.approx(1.0, rel=1e-9)
    assert payload["grid"] == [65, 33]


def test_fullcap_ball_plates(capsys):
    code, out, _ = run_cli(capsys, "fullcap", "--model", "planar",
                           "--plates", "balls", "--plate-radius", "0.1",
                           "--levels", "32", "--p", "2", "--grid", "65,33")
    assert code == 0
    payload = json.loads(out)
    assert payload["bound_ok"] is True
    # shrinking plates can only lower the capacity
    assert payload["capacity_full"] < payload["capacity_reduced"]


def test_fullcap_empty_plate_is_admissibility_error(capsys):
    code, out, err = run_cli(capsys, "fullcap", "--model", "planar",
                             "--a", "-2", "--b", "0.5", "--grid", "33,17")
    assert code == 3
    adm = json.loads(err[:err.rindex("}") + 1])
    assert adm["e_nonempty"] is False
    assert "plate is empty" in err


def test_fullcap_iteration_budget_exit_code(capsys, tmp_path):
    out = tmp_path / "cap.json"
    code = main(["fullcap", "--model", "radial", "--p", "2",
                 "--grid", "65,65", "--levels", "32", "--max-iter", "2",
                 "--out", str(out)])
    capsys.readouterr()
    assert code == 4
    payload = json.loads(out.read_text())  # report written before exiting
    assert payload["converged"] is False
    assert payload["iterations"] == 2


def test_classify_monomial_transmissive(capsys):
    code, out, _ = run_cli(capsys, "classify", "--model", "monomial",
                           "--gamma", "2", "--p", "2")
    assert code == 0
    payload = json.loads(out)
    assert payload["verdict"] == "Transmissive"
    assert payload["alpha"] == pytest.approx(0.5, abs=5e-3)
    assert payload["nu"] == pytest.approx(0.0, abs=5e-3)
    assert payload["criterion"] < 1.0
    assert payload["local_resistance"] not in (None, "inf")


def test_classify_supercritical_csv(capsys, tmp_path):
    t = np.linspace(0.0, 0.5, 257)
    path = tmp_path / "tab.csv"
    lines = ["t,S,A,w"]
    for tk in t:
        tk = float(tk)
        lines.append(f"{tk!r},{tk ** 0.8!r},{tk ** 1.4!r},1.0")
    path.write_text("\n".join(lines) + "\n")
    code, out, _ = run_cli(capsys, "classify", "--model", "file",
                           "--in", str(path), "--p", "2")
    assert code == 0
    payload = json.loads(out)
    assert payload["verdict"] == "Supercritical"
    assert payload["alpha"] == pytest.approx(0.6, abs=1e-6)
    assert payload["nu"] == pytest.approx(0.8, abs=1e-6)
    assert payload["local_resistance"] == "inf"


def test_classify_alpha_out_of_range_is_usage_error(capsys, tmp_path):
    t = np.linspace(0.0, 0.5, 65)
    path = tmp_path / "tab.csv"
    lines = ["t,S,A,w"]
    for tk in t:
        tk = float(tk)
        lines.append(f"{tk!r},1.0,{tk ** 2.5!r},1.0")  # alpha = 1.5 for p=2
    path.write_text("\n".join(lines) + "\n")
    code, _, err = run_cli(capsys, "classify", "--model", "file",
                           "--in", str(path), "--p", "2")
    assert code == 2
    assert "alpha" in err


def test_defect_planar_identity(capsys):
    code, out, _ = run_cli(capsys, "defect", "--model", "planar",
                           "--p", "2", "--grid", "65,33", "--levels", "64")
    assert code == 0
    payload = json.loads(out)
    assert payload["converged"] is True
    # the identity holds to the precision the iterate converged to
    assert payload["polarization_residual"] < 1e-4
    assert payload["tangential_energy"] <= 1e-8
    assert payload["gap"] >= -1e-12


def test_defect_rejects_other_p(capsys):
    code, _, err = run_cli(capsys, "defect", "--model", "planar", "--p", "3")
    assert code == 2
    assert "--p 2" in err


def test_model_closed_forms(capsys):
    code, out, _ = run_cli(capsys, "model", "--model", "planar")
    assert json.loads(out)["capacity"] == pytest.approx(1.0)

    code, out, _ = run_cli(capsys, "model", "--model", "radial", "--p", "2")
    payload = json.loads(out)
    assert payload["capacity"] == pytest.approx(2.0 * math.pi)
    assert payload["branch"] == "log"
    assert payload["dimension"] == 2

    code, out, _ = run_cli(capsys, "model", "--model", "monomial",
                           "--gamma", "2", "--p", "2")
    payload = json.loads(out)
    assert payload["weight_exponent"] == pytest.approx(0.5)
    assert payload["capacity"] > 0.0


def test_unknown_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_outputs_are_bit_identical(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    argv = ["fullcap", "--model", "planar", "--p", "2", "--grid", "49,25",
            "--levels", "32"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_config_file_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults for this run\nmodel = radial\np = 3\n"
                   "levels = 64\n")
    code, out, _ = run_cli(capsys, "reduce", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["p"] == 3.0
    # explicit flags win over the config file
    code, out, _ = run_cli(capsys, "reduce", "--config", str(cfg),
                           "--p", "2")
    assert json.loads(out)["p"] == 2.0


def test_plot_artifacts_land_next_to_output(tmp_path, capsys):
    out = tmp_path / "tab.csv"
    code = main(["weight", "--model", "planar", "--levels", "16",
                 "--out", str(out), "--plot"])
    capsys.readouterr()
    assert code == 0
    png = tmp_path / "tab_weight.png"
    assert png.exists()
    assert png.stat().st_size > 0

    red = tmp_path / "red.json"
    code = main(["reduce", "--model", "planar", "--levels", "32",
                 "--out", str(red), "--plot"])
    capsys.readouterr()
    assert code == 0
    assert (tmp_path / "red_profile.png").exists()


def test_console_script_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "phasecap.cli", "model", "--model", "planar"],
        capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["capacity"] == pytest.approx(1.0)
