import json

import numpy as np
import pytest

from airpad.cli import main
from airpad.dataset import SynthConfig, load_dataset, synth_trajectory
from airpad.nn import load_model
from airpad.sensing import save_trajectory


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["synth", "--per-class", "5", "--seed", "7", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def model_file(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("models") / "mlp.apnn"
    code = main(
        ["train", "--model", "mlp", "--data", str(synth_dir), "--epochs", "3",
         "--seed", "1", "--out", str(out)]
    )
    assert code == 0
    return out


class TestSynth:
    def test_writes_both_splits_with_manifests(self, synth_dir):
        train = load_dataset(synth_dir / "train.apds")
        test = load_dataset(synth_dir / "test.apds")
        assert len(train) == 40
        assert len(test) == 10
        manifest = json.loads((synth_dir / "train.json").read_text())
        assert manifest["split"] == "train"
        assert manifest["seed"] == 7
        assert manifest["per_class"] == 5

    def test_deterministic_across_runs(self, synth_dir, tmp_path):
        other = tmp_path / "again"
        assert main(["synth", "--per-class", "5", "--seed", "7", "--out", str(other)]) == 0
        assert (other / "train.apds").read_bytes() == (synth_dir / "train.apds").read_bytes()
        assert (other / "test.apds").read_bytes() == (synth_dir / "test.apds").read_bytes()

    def test_seed_env_override(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("AIRPAD_SEED", "99")
        out = tmp_path / "env"
        assert main(["synth", "--per-class", "1", "--out", str(out)]) == 0
        manifest = json.loads((out / "train.json").read_text())
        assert manifest["seed"] == 99


class TestTrainEval:
    def test_train_writes_model_and_metrics(self, synth_dir, tmp_path):
        out = tmp_path / "m.apnn"
        metrics = tmp_path / "metrics.csv"
        code = main(
            ["train", "--model", "mlp", "--data", str(synth_dir), "--epochs", "2",
             "--seed", "2", "--out", str(out), "--metrics", str(metrics)]
        )
        assert code == 0
        bundle = load_model(out)
        assert bundle.metadata["trained_as"] == "mlp"
        lines = metrics.read_text().splitlines()
        assert len(lines) == 3

    def test_eval_prints_accuracy_and_writes_confusion(self, synth_dir, model_file,
                                                       tmp_path, capsys):
        confusion = tmp_path / "cm.csv"
        code = main(
            ["eval", "--model", str(model_file), "--data", str(synth_dir),
             "--confusion", str(confusion)]
        )
        assert code == 0
        printed = capsys.readouterr().out
        acc = float(printed.split("accuracy")[1].split()[0])
        assert 0.0 <= acc <= 1.0
        rows = confusion.read_text().splitlines()
        assert len(rows) == 10

    def test_missing_data_dir_fails_cleanly(self, model_file, tmp_path):
        assert main(["eval", "--model", str(model_file), "--data", str(tmp_path)]) == 1


class TestSimulate:
    def test_frames_csv_and_classification(self, model_file, tmp_path, capsys):
        traj = synth_trajectory(1, SynthConfig(per_class=1), np.random.default_rng(3))
        traj_file = tmp_path / "traj.json"
        save_trajectory(traj, traj_file)
        frames_file = tmp_path / "frames.csv"
        code = main(
            ["simulate", "--traj", str(traj_file), "--frames", str(frames_file),
             "--classify", "--model", str(model_file)]
        )
        assert code == 0
        printed = capsys.readouterr().out
        assert "gesture 1: digit" in printed
        lines = frames_file.read_text().splitlines()
        assert lines[0] == "t,a,b,c,d"
        assert len(lines) > 80

    def test_classify_without_model_is_usage_error(self, tmp_path):
        traj = synth_trajectory(2, SynthConfig(per_class=1), np.random.default_rng(4))
        traj_file = tmp_path / "t.json"
        save_trajectory(traj, traj_file)
        assert main(["simulate", "--traj", str(traj_file), "--classify"]) == 2


class TestGradcheckCommand:
    def test_exit_zero_and_reports_all_layers(self, capsys):
        assert main(["gradcheck"]) == 0
        printed = capsys.readouterr().out
        for name in ("dense", "conv2d", "maxpool2", "batchnorm", "relu", "lstm", "softmax_ce"):
            assert name in printed


class TestUsage:
    def test_unknown_subcommand_exits_nonzero(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code != 0

    def test_no_args_exits_nonzero(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code != 0
