import json

import pandas as pd
import pytest

from src.command_manager import HANDLERS, load_manifest, manifest_path
from src.commands.train_commands import _load_run_config
from src.constants import EXIT_DATA, EXIT_OK, EXIT_USAGE
from src.errors import ConfigurationError, FormatError
from src.evaluation import REPORT_COLUMNS
from src.main import build_parser, main
from src.schemas import TrainConfig
from src.simulation import read_dataset, read_header

TINY_MODEL = """
base_width = 4
hidden_width = 8
stage_depths = 1,1,1,1
attention_window = 1
attention_heads = 2
steps = 2
batch_size = 4
eval_every = 1
learning_rate = 0.001
precision = double
seed = 3
"""


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "scenes.conf").write_text("size = 16\noccupancy_frames = 2\n")
    (tmp_path / "train.conf").write_text(TINY_MODEL)
    return tmp_path


def generate(workdir, name="data.trjk", count=6):
    out = workdir / name
    code = main([
        "generate-data", "--config", str(workdir / "scenes.conf"), "--out", str(out),
        "--count", str(count), "--seed", "1", "--split", "both",
    ])
    assert code == EXIT_OK
    return out


def train_model(workdir, data, name="m.tjkw"):
    out = workdir / name
    assert main(["train", "--config", str(workdir / "train.conf"), "--data", str(data), "--out", str(out)]) == EXIT_OK
    return out


def test_every_subcommand_has_a_handler():
    choices = build_parser()._subparsers._group_actions[0].choices
    assert set(choices) - {"replay"} == set(HANDLERS)


def test_generate_data_writes_dataset_and_manifest(workdir):
    out = generate(workdir)
    header = read_header(out)
    assert (header.count, header.size, header.channels) == (6, 16, 5)
    manifest = load_manifest(manifest_path(out))
    assert manifest.subcommand == "generate-data"
    assert manifest.seed == 1
    assert manifest.outputs["dataset"] == str(out)
    assert manifest.resolved_config["split"] == "both"


def test_full_pipeline(workdir):
    data = generate(workdir)
    ckpt = train_model(workdir, data)
    assert ckpt.is_file() and (workdir / "m.log.csv").is_file()

    pred = workdir / "pred.jsonl"
    assert main(["predict", "--models", f"{ckpt},{ckpt}", "--data", str(data), "--samples", "1", "--out", str(pred)]) == EXIT_OK
    lines = pred.read_text().splitlines()
    assert len(lines) == 6
    assert json.loads(lines[0])["G"] == 4

    report = workdir / "report.csv"
    assert main(["evaluate", "--pred", str(pred), "--data", str(data), "--metric", "ade", "--out", str(report)]) == EXIT_OK
    frame = pd.read_csv(report)
    assert list(frame.columns) == REPORT_COLUMNS
    assert frame["split"].tolist() == ["in_domain", "shifted", "all"]
    assert (workdir / "report.all.curve.csv").is_file()


def test_single_model_predicts_one_candidate(workdir):
    data = generate(workdir)
    ckpt = train_model(workdir, data)
    pred = workdir / "single.jsonl"
    assert main(["predict", "--models", str(ckpt), "--data", str(data), "--out", str(pred)]) == EXIT_OK
    assert json.loads(pred.read_text().splitlines()[0])["G"] == 1


def test_retention_subcommand(workdir):
    src = workdir / "errors.csv"
    pd.DataFrame({"error": [1.0, 2.0, 3.0], "uncertainty": [3.0, 2.0, 1.0]}).to_csv(src, index=False)
    out = workdir / "curve.csv"
    assert main(["retention", "--input", str(src), "--out", str(out)]) == EXIT_OK
    assert load_manifest(manifest_path(out)).resolved_config["r_auc"] == pytest.approx(14 / 9)


def test_replay_reproduces_the_dataset(workdir):
    out = generate(workdir)
    first = out.read_bytes()
    out.unlink()
    assert main(["replay", "--manifest", str(manifest_path(out))]) == EXIT_OK
    assert out.read_bytes() == first
    assert len(read_dataset(out)) == 6


def test_unknown_config_key_exits_with_usage_code(workdir):
    bad = workdir / "bad.conf"
    bad.write_text("colour = red\n")
    code = main(["generate-data", "--config", str(bad), "--out", str(workdir / "x.trjk"), "--count", "2"])
    assert code == EXIT_USAGE
    assert not (workdir / "x.trjk").exists()


def test_corrupt_dataset_exits_with_data_code(workdir):
    junk = workdir / "junk.trjk"
    junk.write_bytes(b"not a dataset at all")
    code = main(["train", "--config", str(workdir / "train.conf"), "--data", str(junk), "--out", str(workdir / "m.tjkw")])
    assert code == EXIT_DATA


def test_missing_manifest(workdir):
    assert main(["replay", "--manifest", str(workdir / "none.json")]) == FormatError("x").exit_code


def test_argparse_errors_and_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "trajkit" in capsys.readouterr().out


def test_missing_dataset_exits_with_data_code(workdir):
    code = main(["train", "--data", str(workdir / "absent.trjk"), "--out", str(workdir / "m.tjkw")])
    assert code == EXIT_DATA


def test_paper_scale_flag_is_accepted():
    args = build_parser().parse_args(["train", "--data", "d.trjk", "--out", "m.tjkw", "--paper-scale"])
    assert args.paper_scale is True
    cfg = TrainConfig().at_paper_scale()
    assert (cfg.batch_size, cfg.learning_rate) == (512, 1e-4)


def test_paper_scale_needs_full_size_rasters(workdir):
    data = generate(workdir)
    with pytest.raises(ConfigurationError) as exc:
        _load_run_config(workdir / "train.conf", data, paper_scale=True)
    assert exc.value.context["dataset_size"] == 16
    assert "size = 128" in exc.value.detail
    out = workdir / "m.tjkw"
    code = main(["train", "--config", str(workdir / "train.conf"), "--data", str(data), "--out", str(out), "--paper-scale"])
    assert code == EXIT_USAGE
    assert not out.exists()
