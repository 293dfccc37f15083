import json
import subprocess
import sys

import numpy as np
import pytest

from stocenter.cli import bench_rows, generate_instance, main
from stocenter.model import instance_to_dict, shape_to_dict
from stocenter.model import CenterSet, ExistentialInstance
from stocenter.serialize import dumps_json, fmt_float, rows_to_csv, write_json


@pytest.fixture
def inst_file(tmp_path):
    inst = ExistentialInstance(points=[[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]],
                               probs=[0.5, 0.8, 0.9])
    path = tmp_path / "inst.json"
    write_json(path, instance_to_dict(inst))
    return str(path)


@pytest.fixture
def shape_file(tmp_path):
    path = tmp_path / "shape.json"
    write_json(path, shape_to_dict(CenterSet(centers=[[0.0, 0.0]])))
    return str(path)


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, out


def test_evaluate_exact(inst_file, shape_file, capsys):
    code, out = _run(["evaluate", "--instance", inst_file,
                      "--shape", shape_file], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["method"] == "ExactSorted"
    assert data["value"] == pytest.approx(0.8 * 4 + 0.2 * 0.9 * 3)


def test_evaluate_mc(inst_file, shape_file, capsys):
    code, out = _run(["evaluate", "--instance", inst_file, "--shape",
                      shape_file, "--mc", "2000", "--seed", "4"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["method"] == "MonteCarlo" and data["samples"] == 2000
    assert data["value"] == pytest.approx(0.8 * 4 + 0.2 * 0.9 * 3, abs=0.2)


def test_grid_coreset_command(inst_file, tmp_path, capsys):
    rfile = tmp_path / "real.json"
    rfile.write_text("[0, 1, 2]")
    code, out = _run(["grid-coreset", "--instance", inst_file,
                      "--realization", str(rfile), "--k", "1",
                      "--eps", "0.5"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["coreset"] == [0, 1, 2]  # grid finer than the spread
    assert data["size_bound"] >= len(data["coreset"])


def test_partition_command(inst_file, capsys):
    code, out = _run(["partition", "--instance", inst_file, "--k", "1",
                      "--eps", "0.5"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["total_weight"] == pytest.approx(1.0, abs=1e-9)


def test_solve_and_jflat_commands(inst_file, capsys):
    code, out = _run(["solve", "--instance", inst_file, "--k", "1",
                      "--eps", "0.5"], capsys)
    assert code == 0
    assert json.loads(out)["value"] > 0
    code, out = _run(["jflat", "--instance", inst_file, "--j", "0",
                      "--eps", "0.4", "--samples", "50"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["flat"]["j"] == 0 and data["value"] > 0


def test_oracle_command_with_golden(inst_file, shape_file, tmp_path, capsys):
    golden = tmp_path / "golden.json"
    code, out = _run(["oracle", "evaluate", "--instance", inst_file,
                      "--shape", shape_file, "--golden", str(golden)], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["method"] == "FullEnumeration"
    assert json.loads(golden.read_text())["value"] == data["value"]


def test_generate_deterministic(capsys):
    code, out1 = _run(["generate", "--kind", "clustered", "--n", "6",
                       "--seed", "5"], capsys)
    assert code == 0
    _, out2 = _run(["generate", "--kind", "clustered", "--n", "6",
                    "--seed", "5"], capsys)
    assert out1 == out2
    data = json.loads(out1)
    assert len(data["points"]) == 6 and len(data["points"][0]["coords"]) == 2


def test_generate_locational_rows(capsys):
    code, out = _run(["generate", "--model", "locational", "--kind",
                      "annulus", "--n", "4", "--m", "3", "--seed", "2"],
                     capsys)
    assert code == 0
    data = json.loads(out)
    for node in data["nodes"]:
        assert sum(node["probs"]) == pytest.approx(1.0, abs=1e-9)


def test_instance_kinds(capsys):
    for kind in ("uniform", "clustered", "annulus"):
        inst = generate_instance(kind, "existential", 5, 3, seed=1)
        assert inst.n == 5 and inst.d == 3


def test_bench_rows_reproducible_without_timing():
    header, rows1 = bench_rows(7, eps_list=(0.5,), n_list=(6,), k_list=(1,))
    _, rows2 = bench_rows(7, eps_list=(0.5,), n_list=(6,), k_list=(1,))
    assert header[:4] == ["kind", "n", "k", "eps"]
    drop = header.index("wall_seconds")
    for a, b in zip(rows1, rows2):
        assert a[:drop] == b[:drop]
    ratio = rows1[0][header.index("approx_ratio")]
    assert ratio >= 1 - 0.5 - 1e-9


def test_missing_instance_is_usage_error(capsys):
    code = main(["evaluate", "--instance", "/nonexistent.json",
                 "--shape", "/nonexistent.json"])
    capsys.readouterr()
    assert code == 2


def test_guard_exit_code(tmp_path, capsys):
    rng = np.random.default_rng(0)
    inst = ExistentialInstance(points=rng.uniform(-5, 5, (30, 2)),
                               probs=np.full(30, 0.5))
    path = tmp_path / "big.json"
    write_json(path, instance_to_dict(inst))
    code = main(["partition", "--instance", str(path), "--k", "1",
                 "--eps", "0.5", "--mode", "exhaustive"])
    capsys.readouterr()
    assert code == 3


def test_cli_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "stocenter.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("evaluate", "grid-coreset", "partition", "solve", "jflat",
                "oracle", "generate", "bench", "verify"):
        assert cmd in proc.stdout


def test_verify_detects_injected_perturbation():
    from stocenter import verification
    assert verification.criterion_4("quick", perturb=0.1).passed is False


def test_verify_exit_code_mapping(monkeypatch, capsys):
    import stocenter.verification as ver
    monkeypatch.setattr(ver, "run_all",
                        lambda scale, perturb: [ver.CheckResult("x", False,
                                                                "injected")])
    assert main(["verify"]) == 4
    monkeypatch.setattr(ver, "run_all",
                        lambda scale, perturb: [ver.CheckResult("x", True,
                                                                "ok")])
    assert main(["verify"]) == 0
    capsys.readouterr()


def test_float_serialization_round_trip():
    x = 0.1 + 0.2
    assert float(fmt_float(x)) == x
    text = dumps_json({"a": [1.5, 2], "b": "x,y", "c": None, "d": True})
    assert json.loads(text) == {"a": [1.5, 2], "b": "x,y", "c": None,
                                "d": True}
    pretty = dumps_json({"a": [1.0]}, indent=2)
    assert json.loads(pretty) == {"a": [1.0]}


def test_csv_rfc4180():
    text = rows_to_csv(["a", "b"], [[1, 0.5], ["x,y", 2.0]])
    lines = text.split("\n")
    assert lines[0] == "a,b"
    assert lines[1] == "1,0.5"
    assert lines[2] == '"x,y",2'
