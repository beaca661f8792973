import json

from tmcrit.cli import run_command


def _load(d, name):
    return json.loads((d / f"{name}.json").read_text())


def test_no_args_is_usage_error(capsys):
    assert run_command([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag(capsys, tmp_path):
    assert run_command(["eigen", "--bogus", "--out", str(tmp_path)]) == 2
    assert "usage" in capsys.readouterr().err
    assert run_command(["verify"]) == 2


def test_eigen_command(tmp_path):
    assert run_command(["eigen", "--N", "2", "--domain", "unit-square", "--k", "4", "--h", "0.02", "--out", str(tmp_path)]) == 0
    d = _load(tmp_path, "eigen")
    assert len(d["estimates"]) == 4
    assert d["config"]["h"] == 0.02 and d["config"]["k"] == 4
    assert (tmp_path / "eigen_history.csv").read_text().startswith("k,iteration")


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("TMCRIT_OUTPUT_DIR", str(tmp_path / "env"))
    assert run_command(["verify", "inequalities", "--N", "3"]) == 0
    d = _load(tmp_path / "env", "inequalities")
    assert d["all_passed"] and d["status"] == "pass"


def test_config_file_flags_win(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"h": 0.25, "k": 2}))
    assert run_command(["eigen", "--config", str(cfg), "--k", "3", "--out", str(tmp_path)]) == 0
    d = _load(tmp_path, "eigen")
    assert d["config"]["h"] == 0.25 and d["config"]["k"] == 3
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run_command(["eigen", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_bad_values(tmp_path):
    assert run_command(["mesh", "--h", "-1", "--out", str(tmp_path)]) == 2
    assert run_command(["mesh", "--domain", "torus", "--out", str(tmp_path)]) == 2
    assert run_command(["solve", "--domain", "cube", "--N", "2", "--out", str(tmp_path)]) == 2


def test_mesh_and_gradcheck(tmp_path):
    assert run_command(["mesh", "--domain", "disc:1", "--h", "0.2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "mesh_data.json").exists()
    assert run_command(["verify", "gradcheck", "--N", "3", "--pairs", "10", "--out", str(tmp_path)]) == 0
    assert _load(tmp_path, "gradcheck")["max_rel_error"] <= 1e-6


def test_solve_and_determinism(tmp_path):
    args = ["solve", "--N", "2", "--lambda-rel", "0.5", "--h", "0.1", "--seed", "3"]
    assert run_command(args + ["--out", str(tmp_path / "a")]) == 0
    assert run_command(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "solve.json").read_text()
    assert a == (tmp_path / "b" / "solve.json").read_text()
    d = json.loads(a)
    assert d["report"]["accepted"] and d["config"]["seed"] == 3


def test_moser_command(tmp_path):
    assert run_command(["verify", "moser", "--N", "2", "--j-range", "4:16", "--m-range", "3:6", "--out", str(tmp_path)]) == 0
    d = _load(tmp_path, "moser")
    assert d["grad_norm"]["halves"] and d["cutoff"]["passed"]


def test_sweep_bad_grid_is_numeric_or_usage(tmp_path):
    # a grid point outside (max(lambda_1, gap), lambda_2) is rejected up front
    code = run_command(["sweep", "--h", "0.1", "--grid", "1,2,3", "--out", str(tmp_path)])
    assert code == 2
