import csv
import json
import os

import numpy as np
import pytest

from pbim.cli import format_value, main
from pbim.patchselect import load_dictionary


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("COLUMNS", "200")
    return tmp_path


def run(*argv):
    return main(["--quiet", *argv])


@pytest.fixture
def dictionary_file(synthetic_root, workdir):
    path = str(workdir / "dict.json")
    assert run("build-dictionary", "--train-dir", os.path.join(synthetic_root, "glyph"),
               "--budget", "5", "--seed", "1", "--out", path) == 0
    return path


def write_features(path, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        for i, row in enumerate(rows):
            writer.writerow([f"img{i}.png"] + [format_value(v) for v in row])


def test_bad_flag_value_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        run("build-dictionary", "--train-dir", ".", "--out", "d.json", "--selector", "bogus")
    assert excinfo.value.code == 2


def test_help_shows_defaults(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["build-dictionary", "--help"])
    assert excinfo.value.code == 0
    text = " ".join(capsys.readouterr().out.split())
    assert "(default: 1500" in text
    assert "(default: random" in text


def test_build_dictionary_is_deterministic(synthetic_root, workdir, capsys):
    glyphs = os.path.join(synthetic_root, "glyph")
    for name in ("a.json", "b.json"):
        assert run("build-dictionary", "--train-dir", glyphs, "--budget", "6", "--out", name) == 0
    assert capsys.readouterr().out.splitlines() == ["patches=6 random=6"] * 2
    assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()


def test_extract_writes_one_row_per_image(synthetic_root, dictionary_file, workdir):
    glyphs = os.path.join(synthetic_root, "glyph")
    assert run("extract", "--dictionary", dictionary_file, "--image-dir", glyphs, "--out", "f.csv") == 0
    with open(workdir / "f.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert len(rows) == 8
    assert all(len(row) == 6 for row in rows)
    by_name = {os.path.basename(row[0]): [float(v) for v in row[1:]] for row in rows}
    for j, patch in enumerate(load_dictionary(dictionary_file).patches):
        assert by_name[patch.origin.source][j] == 1.0


def test_empty_directory_is_a_config_error(dictionary_file, workdir, capsys):
    (workdir / "empty").mkdir()
    assert run("extract", "--dictionary", dictionary_file, "--image-dir", "empty") == 1
    assert "error: ConfigError: No inputs" in capsys.readouterr().err


def test_missing_dictionary_file(workdir, capsys):
    (workdir / "imgs").mkdir()
    assert run("extract", "--dictionary", "absent.json", "--image-dir", "imgs") == 1
    assert capsys.readouterr().err.startswith("error: FileNotFoundError")


def test_missing_settings_file_is_an_error(capsys):
    assert main(["--quiet", "--settings", "nope.yaml", "make-dataset", "--root", "d"]) == 1
    assert "error: ConfigError" in capsys.readouterr().err


def test_train_then_evaluate(dictionary_file, workdir):
    rng = np.random.default_rng(3)
    write_features("pos.csv", 0.9 + 0.02 * rng.standard_normal((6, 5)))
    write_features("neg.csv", 0.1 + 0.02 * rng.standard_normal((6, 5)))
    assert run("train", "--dictionary", dictionary_file, "--pos", "pos.csv", "--neg", "neg.csv",
               "--out", "model.json") == 0
    assert run("evaluate", "--dictionary", dictionary_file, "--model", "model.json",
               "--pos", "pos.csv", "--neg", "neg.csv", "--out", "eval.json") == 0
    report = json.loads((workdir / "eval.json").read_text())
    assert report["metrics"]["classification_rate"] == 1.0
    assert report["confusion"] == {"tp": 6, "fp": 0, "tn": 6, "fn": 0}
    assert report["roc"]["auc"] == 1.0


def test_feature_rows_must_match_the_dictionary(dictionary_file, capsys):
    write_features("pos.csv", [[0.5, 0.5]])
    write_features("neg.csv", [[0.1, 0.1]])
    assert run("train", "--dictionary", dictionary_file, "--pos", "pos.csv", "--neg", "neg.csv",
               "--out", "model.json") == 1
    assert "error: ArgumentError" in capsys.readouterr().err


def test_saliency_dump(synthetic_root, workdir):
    image = os.path.join(synthetic_root, "glyph", "000.png")
    assert run("saliency", "--image", image, "--out", "sal.pgm", "--mask-out", "mask.pbm") == 0
    data = (workdir / "sal.pgm").read_bytes()
    header = b"P5\n64 64\n255\n"
    assert data.startswith(header)
    pixels = np.frombuffer(data[len(header):], dtype=np.uint8)
    assert pixels.size == 64 * 64 and pixels.max() == 255
    assert (workdir / "mask.pbm").read_bytes().startswith(b"P4\n64 64\n")
    assert len((workdir / "mask.pbm").read_bytes()) == len(b"P4\n64 64\n") + 64 * 8


def test_make_dataset(workdir):
    assert run("make-dataset", "--root", "data", "--per-class", "2", "--size", "48") == 0
    assert sorted(os.listdir(workdir / "data")) == ["background", "glyph"]
    assert sorted(os.listdir(workdir / "data" / "glyph")) == ["000.png", "001.png"]
    assert run("make-dataset", "--root", "tiny", "--size", "16") == 1


@pytest.mark.slow
def test_experiment_command_is_reproducible(synthetic_root, workdir):
    (workdir / "exp.json").write_text(json.dumps({
        "dataset_root": synthetic_root, "positive_class": "glyph", "train_counts": [3, 3],
        "test_counts": [3, 3], "trials": 1, "sweep": [1, 2], "budget": 2, "variants": ["mbim"],
    }))
    for name in ("r1", "r2"):
        assert run("experiment", "--config", "exp.json", "--out", f"{name}.json", "--csv", f"{name}.csv") == 0
    assert (workdir / "r1.json").read_bytes() == (workdir / "r2.json").read_bytes()
    lines = (workdir / "r1.csv").read_text().splitlines()
    assert lines[0] == "variant,class,sweep_k,mean,std"
    assert [line.split(",")[:3] for line in lines[1:]] == [["mbim", "glyph", "1"], ["mbim", "glyph", "2"]]
