import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from sbgd.cli import CSV_HEADER, main
from sbgd.config import ExperimentConfig, gen_chain, load_config
from sbgd.graph import build_dag, count_paths

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2))
    return path


def small_config(**extra):
    cfg = {
        "graph": {"chain": {"segments": 2, "edges_per_segment": 2}},
        "agents": [[0, 2], [0, 2]],
        "costs": {"affine": {"a": 1.0}},
        "T": 120,
        "seeds": [0, 1],
        "metric_stride": 10,
    }
    cfg.update(extra)
    return cfg


@pytest.mark.parametrize("name", ["two_link.json", "chain_k8.json"])
def test_shipped_configs_validate(name, capsys):
    assert main(["validate-config", "--config", str(CONFIGS / name)]) == 0
    assert json.loads(capsys.readouterr().out)["valid"] is True


def test_run_dynamics_byte_identical(tmp_path, capsys):
    cfg = write_config(tmp_path, small_config())
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["run-dynamics", "--config", str(cfg), "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert [r["seed"] for r in summary["runs"]] == [0, 1]
        outputs.append((out / "dynamics_seed0.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_csv_layout(tmp_path, capsys):
    cfg = write_config(tmp_path, small_config(seeds=[3]))
    main(["run-dynamics", "--config", str(cfg), "--out", str(tmp_path)])
    capsys.readouterr()
    with open(tmp_path / "dynamics_seed3.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 12 * 2
    assert rows[1][:2] == ["10", "0"] and rows[2][:2] == ["10", "1"]
    assert rows[-1][0] == "120"


def test_seeds_flag(tmp_path, capsys):
    cfg = write_config(tmp_path, small_config(seeds=[9]))
    main(["run-dynamics", "--config", str(cfg), "--out", str(tmp_path), "--seeds", "3", "--T", "20"])
    runs = json.loads(capsys.readouterr().out)["runs"]
    assert [r["seed"] for r in runs] == [0, 1, 2]
    assert sorted(p.name for p in tmp_path.glob("dynamics_seed*.csv")) == [
        "dynamics_seed0.csv", "dynamics_seed1.csv", "dynamics_seed2.csv"
    ]


def test_workers_match_serial(tmp_path, capsys):
    cfg = write_config(tmp_path, small_config())
    main(["run-dynamics", "--config", str(cfg), "--out", str(tmp_path / "s")])
    main(["run-dynamics", "--config", str(cfg), "--out", str(tmp_path / "p"), "--workers", "2"])
    capsys.readouterr()
    for seed in (0, 1):
        name = f"dynamics_seed{seed}.csv"
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_run_adversarial(tmp_path, capsys):
    cfg = write_config(tmp_path, small_config(adversary={"kind": "iid_random", "low": 0, "high": 1}, T=300))
    assert main(["run-adversarial", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    runs = json.loads(capsys.readouterr().out)["runs"]
    assert len(runs) == 2 and all(r["regret"] == r["final_avg_regret"] * 300 for r in runs)
    with open(tmp_path / "adversarial_seed1.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER
    assert all(len(r) == len(CSV_HEADER) for r in rows)


def test_shipped_config_seed7_twice(tmp_path, capsys):
    for run in ("a", "b"):
        main(["run-dynamics", "--config", str(CONFIGS / "two_link.json"), "--out", str(tmp_path / run), "--T", "100"])
    capsys.readouterr()
    assert (tmp_path / "a" / "dynamics_seed7.csv").read_bytes() == (tmp_path / "b" / "dynamics_seed7.csv").read_bytes()


def test_decompose(tmp_path, capsys):
    cfg = write_config(tmp_path, {"graph": {"nodes": 2, "edges": [[0, 1], [0, 1]]}, "agents": [[0, 1]],
                                  "costs": {"affine": {"a": 1}}})
    assert main(["decompose", "--config", str(cfg), "--x", "[0.3, 0.7]"]) == 0
    assert json.loads(capsys.readouterr().out) == {"atoms": [{"path": [0], "w": 0.3}, {"path": [1], "w": 0.7}]}


def test_project(tmp_path, capsys):
    cfg = write_config(tmp_path, {"graph": {"nodes": 2, "edges": [[0, 1], [0, 1], [0, 1]]}, "agents": [[0, 1]],
                                  "costs": {"affine": {"a": 1}}})
    assert main(["project", "--config", str(cfg), "--y", "[0.8, 0.2, 0.0]", "--mu", "0.12"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["x"] == pytest.approx([0.74, 0.14, 0.12], abs=1e-8)


def test_invalid_config_reports_line(tmp_path, capsys):
    text = '{\n  "graph": {"nodes": 2, "edges": [[0, 1]]},\n  "agents": [[0, 1]],\n  "costs": {"affine": {"a": -1}}\n}\n'
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert main(["validate-config", "--config", str(path)]) == 1
    assert "line 4" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "graph": {"nodes": 2,,\n}')
    assert main(["validate-config", "--config", str(path)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_cyclic_graph_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"graph": {"nodes": 3, "edges": [[0, 1], [1, 2], [2, 0]]}, "agents": [[0, 2]],
                                  "costs": {"affine": {"a": 1}}})
    assert main(["validate-config", "--config", str(cfg)]) == 1
    assert "line" in capsys.readouterr().err


def test_runtime_error_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, small_config())
    assert main(["decompose", "--config", str(cfg), "--x", "[0.3, 0.6, 0.5, 0.5]"]) == 2
    assert "error" in capsys.readouterr().err


def test_entry_point_subprocess(tmp_path):
    cfg = write_config(tmp_path, small_config())
    proc = subprocess.run([sys.executable, "-m", "sbgd.cli", "validate-config", "--config", str(cfg)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["agents"] == 2


def test_gen_chain(capsys):
    assert gen_chain(1, 2) == {"nodes": 2, "edges": [[0, 1], [0, 1]]}
    spec = gen_chain(18, 2)
    assert spec["nodes"] == 19
    assert count_paths(build_dag(spec["nodes"], spec["edges"]), 0, 18) == 2**18
    spec = gen_chain(3, 3)
    assert count_paths(build_dag(spec["nodes"], spec["edges"]), 0, 3) == 27
    main(["gen-chain", "--segments", "2", "--edges-per-segment", "1"])
    assert json.loads(capsys.readouterr().out) == {"nodes": 3, "edges": [[0, 1], [1, 2]]}


def test_config_round_trip(tmp_path):
    cfg = load_config(CONFIGS / "chain_k8.json")
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
