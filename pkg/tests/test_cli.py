import csv
import json
import subprocess
import sys

import pytest

from planted import MOTIFS
from hypograph.cli import main
from hypograph.pipeline import ConfigError, RunConfig, read_config_file, split_rows
from hypograph.synth import PlantedRule, SynthSpec

FAST = ["--stages", "30", "--radius", "2", "--mutation-samples", "40", "--verify-top", "3"]


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    rules = (PlantedRule("additive", (MOTIFS[0],), 2.0, 0.4, "plus"),
             PlantedRule("additive", (MOTIFS[1],), -1.0, 0.4, "minus"))
    spec = SynthSpec(150, (8, 12), "ABCD", ("s", "d"), 0.08, rules, 0.25, 0.0, 3)
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(spec.to_json()))
    data = root / "data.jsonl"
    assert main(["synth", "--spec", str(spec_path), "--out", str(data)]) == 0
    return root, data, root / "ground_truth.json"


def _tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_run_writes_all_artifacts(synth_files, tmp_path):
    root, data, truth = synth_files
    out = tmp_path / "o"
    assert main(["run", "--data", str(data), "--out", str(out), "--oracle", f"synth:{truth}", *FAST]) == 0
    files = set(_tree(out))
    for name in ("model.json", "importances.csv", "hypotheses.csv", "hypotheses.json",
                 "combined_hypotheses.csv", "verification.json", "manifest.json"):
        assert name in files
    rows = list(csv.DictReader((out / "hypotheses.csv").open()))
    assert rows and list(rows[0]) == ["rank", "feature_expr", "subgraph_canonical", "importance", "s", "d",
                                      "n1", "n0", "mean1", "mean0"]
    for r in rows:
        assert f"hist_{r['feature_expr']}.svg" in files and f"motif_{r['feature_expr']}.dot" in files
    ver = json.loads((out / "verification.json").read_text())["reports"]
    assert ver and all("mutation" in e and "matched_pairs" in e for e in ver)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "run" and "timings" not in manifest
    assert set(manifest["inputs"]) == {"data.jsonl", "ground_truth.json"}


def test_run_twice_byte_identical(synth_files, tmp_path):
    root, data, truth = synth_files
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["--data", str(data), "--oracle", f"synth:{truth}", *FAST]
    assert main(["run", "--out", str(a), *args]) == 0
    assert main(["run", "--out", str(b), *args]) == 0
    assert _tree(a) == _tree(b)


@pytest.mark.parametrize("command, present, absent", [
    ("featurize", {"features.json", "registry.json"}, {"model.json"}),
    ("train", {"model.json", "importances.csv"}, {"hypotheses.csv"}),
    ("hypotheses", {"hypotheses.csv"}, {"combined_hypotheses.csv"}),
    ("combine", {"combined_hypotheses.csv"}, {"verification.json"}),
    ("verify", {"verification.json"}, set()),
])
def test_subcommands(synth_files, tmp_path, command, present, absent):
    _, data, _ = synth_files
    out = tmp_path / command
    assert main([command, "--data", str(data), "--out", str(out), *FAST]) == 0
    files = set(_tree(out))
    assert present <= files and not (absent & files) and "manifest.json" in files


def test_featurize_json_layout(synth_files, tmp_path):
    _, data, _ = synth_files
    out = tmp_path / "f"
    assert main(["featurize", "--data", str(data), "--out", str(out), "--radius", "1"]) == 0
    feats = json.loads((out / "features.json").read_text())
    assert set(feats) == {"vocab", "rows"} and len(feats["rows"]) == 150
    assert feats["vocab"] == sorted(feats["vocab"], key=int)
    reg = json.loads((out / "registry.json").read_text())
    assert set(reg["entries"]) == set(feats["vocab"])


def test_timings_flag(synth_files, tmp_path):
    _, data, _ = synth_files
    out = tmp_path / "t"
    assert main(["train", "--data", str(data), "--out", str(out), "--timings", *FAST]) == 0
    assert "timings" in json.loads((out / "manifest.json").read_text())


def test_usage_errors_exit_1(synth_files, tmp_path, capsys):
    _, data, _ = synth_files
    with pytest.raises(SystemExit) as info:
        main(["run", "--data", str(data)])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["train", "--data", str(data), "--out", str(tmp_path), "--stages", "many"])
    assert info.value.code == 1
    assert main(["train", "--data", str(data), "--out", str(tmp_path), "--shrinkage", "2"]) == 1
    assert main(["run", "--data", str(data), "--out", str(tmp_path), "--match-scope", "near"]) == 1


def test_data_errors_exit_2(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["run", "--data", str(empty), "--out", str(tmp_path / "o")]) == 2
    assert "empty" in capsys.readouterr().err
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id":"a","nodes":[],"edges":[],"y":1}\n{"id":"b","nodes":[{"kind":"C"}],"edges":[[0,0]],"y":1}\n')
    assert main(["featurize", "--data", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert ":2:" in capsys.readouterr().err
    assert main(["featurize", "--data", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "o")]) == 2
    spec = tmp_path / "spec.json"
    spec.write_text('{"n_graphs": 0}')
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "s.jsonl")]) == 2


def test_molecule_input(tmp_path):
    mols = tmp_path / "m.smi"
    lines = [f"{s}\t{y}" for s, y in [("CCO", 1.0), ("CC(=O)O", 2.0), ("c1ccccc1", 0.5), ("CCN", 1.5),
                                      ("c1ccccc1O", 0.7), ("CC", 1.1)] * 3]
    mols.write_text("\n".join(lines) + "\n")
    out = tmp_path / "o"
    assert main(["hypotheses", "--data", str(mols), "--out", str(out), "--stages", "5", "--min-leaf", "1",
                 "--support-min", "1"]) == 0
    assert (out / "hypotheses.json").exists()


def test_config_file(synth_files, tmp_path):
    _, data, _ = synth_files
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nstages = 7\nradius = 1\nops = and, xor\n")
    out = tmp_path / "o"
    assert main(["train", "--data", str(data), "--out", str(out), "--config", str(cfg), "--stages", "9"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["stages"] == 9 and manifest["config"]["radius"] == 1
    assert manifest["config"]["ops"] == ["AND", "XOR"]
    assert "run.cfg" in manifest["inputs"]
    cfg.write_text("stages = 7\nbogus = 1\n")
    assert main(["train", "--data", str(data), "--out", str(out), "--config", str(cfg)]) == 1


def test_config_file_errors_have_lines(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("stages = 3\n\nradius: 2\n")
    with pytest.raises(ConfigError, match=":3:"):
        read_config_file(cfg)
    cfg.write_text("stages = lots\n")
    with pytest.raises(ConfigError, match=":1:"):
        read_config_file(cfg)
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "none.cfg")


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(radius=-1)
    with pytest.raises(ConfigError):
        RunConfig(validation=1.0)
    with pytest.raises(ConfigError):
        RunConfig(k=30, triples=True)


def test_split_rows():
    train, val = split_rows(100, 0.1, 0)
    assert len(val) == 10 and len(train) == 90
    assert sorted(set(train) | set(val)) == list(range(100))
    assert split_rows(100, 0.1, 0)[1].tolist() == val.tolist()
    assert len(split_rows(2, 0.5, 0)[1]) == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hypograph", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("hypograph ")
