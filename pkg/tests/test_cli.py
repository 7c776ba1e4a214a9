import json

import pytest

from main import main
from routers.evaluation import format_probability

TINY_RUN = "EMBED_DIM=8\nHIDDEN_SIZE=8\nIMAGE_SIZE=8\nIMAGE_FEATURE_DIM=16\nCONV_CHANNELS=[2]\nMAX_LEN=16\nMIN_COUNT=1\n"


@pytest.fixture
def workspace(tmp_path):
    run = tmp_path / "run.env"
    run.write_text(TINY_RUN)
    assert main(["synth", "--n", "60", "--seed", "1", "--out", str(tmp_path / "synthetic")]) == 0
    assert main(["prepare", "--config", str(run), "--manifest", str(tmp_path / "synthetic" / "manifest.jsonl"), "--out", str(tmp_path / "prepared")]) == 0
    return tmp_path


def train(workspace, modality, *extra):
    out = workspace / "checkpoints" / f"{modality}.json"
    argv = [
        "train", "--config", str(workspace / "run.env"), "--data", str(workspace / "prepared"),
        "--modality", modality, "--epochs", "1", "--batch-size", "16", "--out", str(out), *extra,
    ]
    assert main(argv) == 0
    return out


def test_prepare_writes_reproducible_split(workspace):
    prepared = workspace / "prepared"
    report = json.loads((prepared / "prepare_report.json").read_text())
    assert report["split_sizes"] == {"train": 42, "validation": 6, "test": 12}
    assert report["unknown_genres"] == []
    first = {name: (prepared / f"{name}.txt").read_bytes() for name in ("train", "validation", "test")}

    again = workspace / "again"
    argv = ["prepare", "--config", str(workspace / "run.env"), "--manifest", str(workspace / "synthetic" / "manifest.jsonl"), "--out", str(again)]
    assert main(argv) == 0
    assert {name: (again / f"{name}.txt").read_bytes() for name in first} == first


def test_unknown_genre_fails_and_is_listed(tmp_path, capsys):
    manifest = tmp_path / "manifest.jsonl"
    rows = [{"id": f"g{i}", "description": "words", "genres": ["Sport"]} for i in range(12)]
    rows[3]["genres"] = ["Roguelite"]
    manifest.write_text("".join(json.dumps(row) + "\n" for row in rows))

    assert main(["prepare", "--manifest", str(manifest), "--out", str(tmp_path / "prepared")]) == 1
    assert "Roguelite" in capsys.readouterr().err
    report = json.loads((tmp_path / "prepared" / "prepare_report.json").read_text())
    assert report["unknown_genres"] == ["Roguelite"]


def test_train_evaluate_predict_compare(workspace, capsys):
    fused = train(workspace, "fused")
    history = (workspace / "checkpoints" / "fused_history.csv").read_text().splitlines()
    assert history[0].startswith("# config=")
    assert len(history) == 2 + 1

    reports = workspace / "reports"
    argv = ["evaluate", "--checkpoint", str(fused), "--data", str(workspace / "prepared"), "--out", str(reports)]
    assert main(argv) == 0
    table = capsys.readouterr().out
    assert "Top 1:" in table and "Top 3:" in table
    assert len((reports / "fused_test_confusion.csv").read_text().splitlines()) == 2 + 15
    assert json.loads((reports / "fused_test.json").read_text())["config"]["MODALITY"] == "fused"

    cover = next((workspace / "synthetic" / "covers").iterdir())
    argv = ["predict", "--checkpoint", str(fused), "--text", "a quiet game about boats", "--image", str(cover), "--k", "3"]
    assert main(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split(".")[0] for line in lines] == ["1", "2", "3"]
    probabilities = [float(line.split()[-1]) for line in lines]
    assert probabilities == sorted(probabilities, reverse=True)
    assert sum(probabilities) <= 1.0
    assert main(argv) == 0
    assert capsys.readouterr().out.splitlines() == lines

    text = train(workspace, "text")
    argv = ["evaluate", "--checkpoint", str(text), "--data", str(workspace / "prepared"), "--out", str(reports)]
    assert main(argv) == 0
    capsys.readouterr()
    assert main(["compare", str(reports / "fused_test.json"), str(reports / "text_test.json")]) == 0
    comparison = capsys.readouterr().out
    assert "fused" in comparison and "text" in comparison


def test_predict_needs_every_modality_the_model_reads(workspace, capsys):
    fused = train(workspace, "fused")
    assert main(["predict", "--checkpoint", str(fused), "--text", "only words"]) == 2
    assert "cover image" in capsys.readouterr().err
    assert main(["predict", "--checkpoint", str(fused)]) == 2


def test_image_encoder_transfer_needs_an_image_branch(workspace):
    image = train(workspace, "image")
    train(workspace, "fused", "--init-image", str(image))
    argv = [
        "train", "--config", str(workspace / "run.env"), "--data", str(workspace / "prepared"),
        "--modality", "text", "--epochs", "1", "--init-image", str(image), "--out", str(workspace / "bad.json"),
    ]
    assert main(argv) == 1


def test_bad_config_key_exits_nonzero(tmp_path):
    run = tmp_path / "run.env"
    run.write_text("SEEDS=1\n")
    assert main(["synth", "--config", str(run), "--n", "30", "--out", str(tmp_path / "s")]) == 1


def snapshot(root):
    return {path.relative_to(root).as_posix(): path.read_bytes() for path in sorted(root.rglob("*")) if path.is_file()}


def test_seeded_commands_rewrite_identical_bytes(workspace):
    prepared = workspace / "prepared"
    before = snapshot(prepared)
    assert {"records.jsonl", "vocab.txt", "prepare_report.json", "split.json"} <= set(before)
    argv = ["prepare", "--config", str(workspace / "run.env"), "--manifest", str(workspace / "synthetic" / "manifest.jsonl"), "--out", str(prepared)]
    assert main(argv) == 0
    assert snapshot(prepared) == before

    runs = []
    for _ in range(2):
        checkpoint = train(workspace, "fused", "--epochs", "2")
        reports = workspace / "reports"
        argv = ["evaluate", "--checkpoint", str(checkpoint), "--data", str(prepared), "--out", str(reports)]
        assert main(argv) == 0
        runs.append({**snapshot(workspace / "checkpoints"), **snapshot(reports)})
    assert {"fused.json", "fused_history.csv", "fused_test.json", "fused_test_confusion.csv"} <= set(runs[0])
    assert runs[0] == runs[1]


def test_replaying_a_checkpoint_config_reproduces_it(workspace):
    text = train(workspace, "text")
    fused = train(workspace, "fused", "--init-text", str(text))
    echo = json.loads(fused.read_text())["config"]
    assert echo["INIT_TEXT"] == str(text)
    assert echo["DATA_DIR"] == str(workspace / "prepared")

    replay = workspace / "replay" / "fused.json"
    assert main(["train", "--config", str(fused), "--out", str(replay)]) == 0
    assert replay.read_bytes() == fused.read_bytes()
    assert (replay.parent / "fused_history.csv").read_bytes() == (fused.parent / "fused_history.csv").read_bytes()


def test_replaying_a_prepare_report_keeps_the_alias_table(tmp_path):
    manifest = tmp_path / "manifest.jsonl"
    rows = [{"id": f"g{i}", "description": "roll the dice", "genres": ["Roguelite" if i % 2 else "Puzzle"]} for i in range(12)]
    manifest.write_text("".join(json.dumps(row) + "\n" for row in rows))
    aliases = tmp_path / "aliases.tsv"
    aliases.write_text("Roguelite\tIndie\n")
    prepared = tmp_path / "prepared"

    argv = ["prepare", "--manifest", str(manifest), "--alias-table", str(aliases), "--min-count", "1", "--out", str(prepared)]
    assert main(argv) == 0
    echo = json.loads((prepared / "prepare_report.json").read_text())["config"]
    assert (echo["ALIAS_TABLE"], echo["MANIFEST"], echo["DATA_DIR"]) == (str(aliases), str(manifest), str(prepared))

    before = snapshot(prepared)
    assert main(["prepare", "--config", str(prepared / "prepare_report.json")]) == 0
    assert snapshot(prepared) == before


def test_synth_flags_are_echoed(tmp_path):
    out = tmp_path / "synthetic"
    assert main(["synth", "--n", "45", "--num-genres", "9", "--mode", "complementary", "--p-text", "0.5", "--out", str(out)]) == 0
    echo = json.loads((out / "keywords.json").read_text())["config"]
    assert (echo["SYNTH_RECORDS"], echo["NUM_GENRES"], echo["SIGNAL_MODE"], echo["P_TEXT"]) == (45, 9, "complementary", 0.5)


def test_printed_probabilities_are_truncated():
    printed = [format_probability(p) for p in (0.49996, 0.49996, 0.00008)]
    assert printed == ["0.4999", "0.4999", "0.0000"]
    assert sum(float(p) for p in printed) <= 1.0
    assert format_probability(0.5) == "0.5000"
