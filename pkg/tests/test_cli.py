import csv
import io
import json

import pytest

from vqram import cli
from vqram.circuit import deserialize, validate


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_synth_virtual(tmp_path, capsys):
    out = tmp_path / "c.json"
    code, text, _ = run(["synth", "--arch", "virtual", "--m", "2", "--k", "1",
                         "--memory", "random:7", "--opts", "all", "--out", str(out)], capsys)
    assert code == 0
    assert len(text.strip().splitlines()) == 8
    assert validate(deserialize(out.read_bytes())).ok
    mem = json.loads((tmp_path / "c.json.memory.json").read_text())
    assert mem["seed"] == 7 and len(mem["bits"]) == 8


def test_synth_m_zero_is_usage_error(tmp_path, capsys):
    code, _, err = run(["synth", "--m", "0", "--out", str(tmp_path / "x.json")], capsys)
    assert code == 2
    assert "m >= 1" in err


def test_synth_sqc_zero_memory_is_empty(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, _, _ = run(["synth", "--arch", "sqc", "--m", "3", "--k", "0", "--memory", "zeros",
                      "--out", str(out)], capsys)
    assert code == 0
    assert deserialize(out.read_bytes()).gates == ()


def test_synth_unwritable_is_io_error(tmp_path, capsys):
    code, _, _ = run(["synth", "--m", "2", "--out", str(tmp_path / "no" / "dir.json")], capsys)
    assert code == 3


def test_bad_flag_is_usage_error(capsys):
    assert run(["synth", "--bogus"], capsys)[0] == 2


@pytest.fixture
def circuit_file(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert cli.main(["synth", "--m", "2", "--k", "1", "--memory", "random:7", "--opts", "all",
                     "--out", str(out)]) == 0
    capsys.readouterr()
    return out


def test_sim_zero_noise(circuit_file, capsys):
    mem = str(circuit_file) + ".memory.json"
    code, text, _ = run(["sim", "--circuit", str(circuit_file), "--memory", mem,
                         "--noise", "gate:0:z", "--shots", "1"], capsys)
    assert code == 0
    assert float(rows(text)[0]["mean"]) == 1.0


def test_sim_z_noise_above_bound_and_appends(circuit_file, tmp_path, capsys):
    mem = str(circuit_file) + ".memory.json"
    out = tmp_path / "sim.csv"
    for bias in ("z", "x"):
        assert run(["sim", "--circuit", str(circuit_file), "--memory", mem, "--noise",
                    f"gate:1e-3:{bias}", "--shots", "1024", "--seed", "1", "--out", str(out)],
                   capsys)[0] == 0
    data = rows(out.read_text())
    assert len(data) == 2
    z, x = data
    assert float(z["mean"]) >= 0.856 - 3 * float(z["stderr"])
    assert float(x["mean"]) < float(z["mean"])


def test_sim_is_deterministic(circuit_file, tmp_path, capsys):
    mem = str(circuit_file) + ".memory.json"
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        run(["sim", "--circuit", str(circuit_file), "--memory", mem, "--noise",
             "gate:1e-2:depol", "--shots", "200", "--seed", "3", "--out", str(out)], capsys)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_sim_errors(circuit_file, tmp_path, capsys):
    assert run(["sim", "--circuit", str(tmp_path / "missing.json"), "--memory", "zeros"],
               capsys)[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 9}')
    assert run(["sim", "--circuit", str(bad), "--memory", "zeros"], capsys)[0] == 3
    short = tmp_path / "short.json"
    short.write_text('{"bits": [0, 1]}')
    assert run(["sim", "--circuit", str(circuit_file), "--memory", str(short)], capsys)[0] == 2
    assert run(["sim", "--circuit", str(circuit_file), "--memory", "zeros",
                "--input", "basis:99"], capsys)[0] == 2


def test_sim_amplitude_file(circuit_file, tmp_path, capsys):
    amps = tmp_path / "amps.json"
    amps.write_text(json.dumps([[0.6, 0], 0, 0, 0, 0, 0, 0, [0, 0.8]]))
    code, text, _ = run(["sim", "--circuit", str(circuit_file), "--memory", "zeros",
                         "--input", f"amps:{amps}", "--noise", "gate:0:z", "--shots", "2",
                         "--format", "json"], capsys)
    assert code == 0
    assert json.loads(text)["mean"] == 1.0


def test_map(tmp_path, capsys):
    emb = tmp_path / "e.json"
    code, text, _ = run(["map", "--m", "4", "--embedding-out", str(emb)], capsys)
    assert code == 0
    data = rows(text)
    assert [r["strategy"] for r in data] == ["SwapBased", "Teleportation"]
    assert json.loads(emb.read_text())["rows"] == 7


def test_estimate(capsys):
    code, text, _ = run(["estimate", "--m", "3", "--k", "1", "--opts", "all", "--samples", "20"],
                        capsys)
    assert code == 0
    r = rows(text)[0]
    assert list(r) == list(cli.EST_COLUMNS)
    assert int(r["tDepth"]) <= int(r["depth"])


def test_bounds(capsys):
    code, text, _ = run(["bounds", "--arch", "VirtualZ,VirtualX", "--m", "2", "--k", "1"], capsys)
    assert code == 0
    assert [float(r["bound"]) for r in rows(text)] == [0.856, 0.76]


def test_sweep_fig7_grid(tmp_path, capsys):
    out = tmp_path / "f7.csv"
    code, _, _ = run(["sweep", "--preset", "fig7", "--shots", "16", "--out", str(out)], capsys)
    assert code == 0
    data = rows(out.read_text())
    assert len(data) == 48
    assert not any(r["error"] for r in data)


def test_sweep_fig6_grid(capsys):
    code, text, _ = run(["sweep", "--preset", "fig6"], capsys)
    assert code == 0
    assert len(rows(text)) == 8


def test_sweep_empty_grid(capsys):
    assert run(["sweep", "--m", ""], capsys)[0] == 2


def test_sweep_records_failed_points(capsys):
    code, text, err = run(["sweep", "--arch", "bb,virtual", "--m", "2", "--k", "1",
                           "--shots", "8"], capsys)
    assert code == 0
    data = rows(text)
    assert data[0]["error"] and not data[1]["error"]
    assert "1 failed" in err


def test_sweep_is_deterministic_and_thread_independent(tmp_path, capsys):
    outs = []
    for workers in ("1", "2"):
        out = tmp_path / f"s{workers}.csv"
        run(["sweep", "--arch", "virtual", "--m", "1..3", "--bias", "x,z", "--shots", "64",
             "--workers", workers, "--out", str(out)], capsys)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_sweep_spec_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "bounds", "arch": ["SQC"], "m": [1], "k": [1, 2, 3]}))
    code, text, _ = run(["sweep", "--spec", str(spec)], capsys)
    assert code == 0
    assert len(rows(text)) == 3


def test_threads_env(monkeypatch):
    from vqram import pathsim
    monkeypatch.setenv("VQRAM_THREADS", "3")
    assert pathsim.default_threads() == 3
