import json
from pathlib import Path

import pytest

from cepz.cli import (
    EXIT_EMPTY_SELECTION,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_VALIDATION,
    main,
)
from cepz.config import ConfigError, PipelineConfig, load_config


def write_config(tmp_path: Path, name="run.toml", **keys) -> Path:
    lines = []
    for k, v in keys.items():
        lines.append(f"{k} = {json.dumps(v)}")
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def synth_csv(tmp_path):
    cfg = write_config(tmp_path, "synth.toml", synth_rows=400, seed=3, synth_output="data.csv")
    assert main(["synth", "--config", str(cfg)]) == EXIT_OK
    return tmp_path / "data.csv"


def base(**extra):
    keys = {"input": "data.csv", "target": "z", "n_trees": 15, "out": "out"}
    keys.update(extra)
    return keys


def error_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


def test_config_defaults_and_errors(tmp_path):
    cfg = load_config(write_config(tmp_path, target="z"))
    assert cfg.k == 3 and cfg.norm == "chebyshev" and cfg.model == "forest"
    assert cfg.base_dir == str(tmp_path)
    with pytest.raises(ConfigError, match="unknown config key"):
        load_config(write_config(tmp_path, colour="red"))
    with pytest.raises(ConfigError, match="norm"):
        PipelineConfig(norm="manhattan")
    with pytest.raises(ConfigError, match="k must be"):
        PipelineConfig(k=0)
    bad = tmp_path / "bad.toml"
    bad.write_text("[table]\nk = 3\n")
    with pytest.raises(ConfigError, match="flat"):
        load_config(bad)
    assert load_config(write_config(tmp_path, seed=1), seed=9).seed == 9


def test_synth_is_byte_identical(tmp_path, synth_csv):
    first = synth_csv.read_bytes()
    cfg = write_config(tmp_path, "synth.toml", synth_rows=400, seed=3, synth_output="data.csv")
    assert main(["synth", "--config", str(cfg)]) == EXIT_OK
    assert synth_csv.read_bytes() == first


def test_estimate_and_select(tmp_path, synth_csv):
    cfg = write_config(tmp_path, **base())
    assert main(["estimate", "--config", str(cfg)]) == EXIT_OK
    ranking = json.loads((tmp_path / "out/ranking.json").read_text())
    assert [e["feature"] for e in ranking["entries"]][:2] in (["x1", "x2"], ["x2", "x1"])
    first = (tmp_path / "out/ranking.csv").read_bytes()
    assert main(["estimate", "--config", str(cfg), "--jobs", "2"]) == EXIT_OK
    assert (tmp_path / "out/ranking.csv").read_bytes() == first
    assert main(["select", "--config", str(cfg)]) == EXIT_OK
    doc = json.loads((tmp_path / "out/ranking.json").read_text())
    assert sorted(doc["selected"]) == ["x1", "x2"]


def test_train_then_evaluate(tmp_path, synth_csv):
    cfg = write_config(tmp_path, **base())
    assert main(["train", "--config", str(cfg)]) == EXIT_OK
    assert main(["evaluate", "--config", str(cfg)]) == EXIT_OK
    ev = json.loads((tmp_path / "out/eval_report.json").read_text())
    assert ev["overall"]["count"] == 80
    assert sum(b["count"] for b in ev["bins"].values()) == 80


def test_pipeline_report(tmp_path, synth_csv):
    cfg = write_config(tmp_path, **base())
    assert main(["pipeline", "--config", str(cfg)]) == EXIT_OK
    rep = json.loads((tmp_path / "out/run_report.json").read_text())
    assert rep["kind"] == "run_report" and rep["model_type"] == "forest"
    assert rep["data"]["n_train"] == 320 and rep["data"]["n_test"] == 80
    assert sorted(rep["models"]["selected"]["features"]) == ["x1", "x2"]
    assert len(rep["models"]["all"]["features"]) == 6
    assert rep["config"]["seed"] == 0
    for name in ("model.json", "model_all.json", "ranking.json", "ranking.csv"):
        assert (tmp_path / "out" / name).exists()


def test_pipeline_deterministic_modulo_timings(tmp_path, synth_csv):
    cfg = write_config(tmp_path, **base(model="svr"))
    reports = []
    for out in ("a", "b"):
        assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / out)]) == EXIT_OK
        doc = json.loads((tmp_path / out / "run_report.json").read_text())
        doc.pop("timings")
        doc["config"].pop("out")
        reports.append(doc)
    assert reports[0] == reports[1]
    assert (tmp_path / "a/model.json").read_bytes() == (tmp_path / "b/model.json").read_bytes()


def test_split_shared_across_models_and_seeds(tmp_path, synth_csv):
    cfg = write_config(tmp_path, **base())
    hashes = []
    for seed in ("1", "1", "2"):
        assert main(["pipeline", "--config", str(cfg), "--seed", seed, "--out", str(tmp_path / "o")]) == 0
        hashes.append(json.loads((tmp_path / "o/run_report.json").read_text())["data"]["split_hash"])
    assert hashes[0] == hashes[1] != hashes[2]


@pytest.mark.parametrize(
    "keys,fragment",
    [
        ({"target": "redshift"}, "unknown column"),
        ({"input": "missing.csv"}, "missing.csv"),
        ({"top_m": 99}, "top_m"),
        ({"norm": "l1"}, "norm"),
    ],
)
def test_validation_errors_exit_2(tmp_path, synth_csv, capsys, keys, fragment):
    cfg = write_config(tmp_path, **base(**keys))
    assert main(["pipeline", "--config", str(cfg)]) == EXIT_VALIDATION
    err = error_line(capsys)
    assert err["exit_code"] == EXIT_VALIDATION and fragment in err["message"]


def test_sentinel_rows_dropped(tmp_path, synth_csv, capsys):
    text = synth_csv.read_text().splitlines()
    text[1] = ",".join(["-9999"] + text[1].split(",")[1:])
    synth_csv.write_text("\n".join(text) + "\n")
    cfg = write_config(tmp_path, **base())
    assert main(["estimate", "--config", str(cfg)]) == EXIT_OK
    assert "removed 1 rows" in capsys.readouterr().out


def test_empty_selection_exit_3(tmp_path, synth_csv, capsys):
    cfg = write_config(tmp_path, **base(selection="threshold", threshold=50.0))
    assert main(["select", "--config", str(cfg)]) == EXIT_EMPTY_SELECTION
    assert error_line(capsys)["error"] == "empty_selection"
    # the ranking is still written for inspection
    assert (tmp_path / "out/ranking.json").exists()


def test_not_converged_exit_4(tmp_path, synth_csv, capsys):
    cfg = write_config(tmp_path, **base(model="svr", svr_max_iter=2))
    assert main(["train", "--config", str(cfg)]) == EXIT_NOT_CONVERGED
    assert error_line(capsys)["error"] == "not_converged"
    assert (tmp_path / "out/model.json").exists()


def test_module_entry_point(tmp_path, synth_csv):
    import subprocess
    import sys

    cfg = write_config(tmp_path, **base(top_m=1))
    res = subprocess.run([sys.executable, "-m", "cepz", "select", "--config", str(cfg)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "selected 1 features" in res.stdout
