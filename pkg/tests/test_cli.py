import io
import json
import subprocess
import sys

import pytest

from magnetoframe.cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_INVARIANT, EXIT_OK, main


def run(args, tmp_path):
    out = io.StringIO()
    code = main(args + ["--out", str(tmp_path)], out=out)
    return code, out.getvalue()


def write_ini(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return str(path)


def test_list_spaces(tmp_path):
    code, text = run(["list-spaces"], tmp_path)
    assert code == EXIT_OK
    for name in ("euclidean", "heisenberg", "berger", "negbase", "product", "perturbed", "custom"):
        assert name in text


def test_curve_writes_csv_and_plot_data(tmp_path):
    code, text = run(["curve", "--space", "heisenberg", "--theta0", "pi/3"], tmp_path)
    assert code == EXIT_OK and "curve:" in text
    assert (tmp_path / "curve.csv").read_text().startswith("t,x1,x2,x3")
    assert (tmp_path / "curve.dat").exists()


def test_surface_summary(tmp_path):
    code, _ = run(["surface", "--space", "euclidean", "--theta0", "pi/4"], tmp_path)
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "surface_summary.json").read_text())
    assert summary["is_cmc"] is True
    assert abs(abs(summary["H_mean"]) - 0.707106781187) < 2e-3
    assert summary["closed_forms"]["matched"] == "arclength_form"
    assert (tmp_path / "surface.csv").exists() and (tmp_path / "surface.dat").exists()


def test_classify(tmp_path):
    code, text = run(["classify", "--space", "berger", "--tau", "1", "--kappa", "4"], tmp_path)
    assert code == EXIT_OK
    verdict = json.loads((tmp_path / "classify.json").read_text())
    assert verdict["sasakian_by_corollary"] and verdict["strict_k_contact"]
    assert "strict_k_contact=true" in (tmp_path / "classify.txt").read_text()


def test_verify_theorem_small(tmp_path):
    ini = write_ini(tmp_path, "[sampling]\ntheta0 = pi/4\nbase_points = 0, 0, 0\n")
    code, text = run(["verify-theorem", "--config", ini, "--space", "euclidean"], tmp_path)
    assert code == EXIT_OK and "implication=precondition_violated" in text
    report = json.loads((tmp_path / "verify_theorem.json").read_text())
    assert report["verdict"]["tau_positive"] is False


def test_checks_pass_on_euclidean(tmp_path):
    code, text = run(["checks", "--space", "euclidean"], tmp_path)
    assert code == EXIT_OK, text
    assert "0 failed" in text
    assert len(json.loads((tmp_path / "checks.json").read_text())) > 20


@pytest.mark.parametrize("ini", ["[space]\nkind = heisenberg\nbogus = 1\n",
                                 "[sampling]\ntheta0 = 0, pi/4\n"])
def test_config_errors_exit_2(tmp_path, ini, capsys):
    code, _ = run(["classify", "--config", write_ini(tmp_path, ini)], tmp_path)
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unknown_space_exit_2(tmp_path):
    assert run(["classify", "--space", "klein"], tmp_path)[0] == EXIT_CONFIG


def test_domain_error_exit_3(tmp_path):
    ini = write_ini(tmp_path, "[sampling]\nbase_points = 5, 0, 0\n")
    assert run(["curve", "--config", ini], tmp_path)[0] == EXIT_DOMAIN


def test_drift_exit_4(tmp_path):
    ini = write_ini(tmp_path, "[integrator]\nstep = 0.25\ndrift_tolerance = 1e-14\n")
    assert run(["curve", "--config", ini, "--space", "berger"], tmp_path)[0] == EXIT_INVARIANT


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("MAGNETOFRAME_OUT", str(tmp_path / "env"))
    assert main(["curve", "--space", "euclidean"], out=io.StringIO()) == EXIT_OK
    assert (tmp_path / "env" / "curve.csv").exists()


def test_console_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "magnetoframe.cli", "list-spaces", "--out", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "heisenberg" in proc.stdout
