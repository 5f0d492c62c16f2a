import json

import pytest

from coronet.cli import main
from coronet.data import ClassLabel
from reference_matrices import FOLDS
from coronet.metrics import render_cm_csv
from synthetic import write_dataset

MINI = ["--variant", "mini", "--input", "16"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    return write_dataset(tmp_path_factory.mktemp("data"), 4, size=20)


def train(manifest, out, *extra):
    return run("train", *MINI, "--manifest", manifest, "--seed", 3, "--epochs", 2,
               "--lr", "1e-3", "--out", out, *extra)


def test_train_writes_artifacts(dataset, tmp_path):
    assert train(dataset, tmp_path / "run") == 0
    assert sorted(p.name for p in (tmp_path / "run").iterdir()) == ["history.csv", "weights.bin"]
    rows = (tmp_path / "run" / "history.csv").read_text().splitlines()
    assert rows[0] == "epoch,train_loss,train_acc,val_loss,val_acc" and len(rows) == 3


def test_train_is_byte_identical(dataset, tmp_path):
    train(dataset, tmp_path / "a")
    train(dataset, tmp_path / "b")
    for f in ("weights.bin", "history.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_train_with_validation_and_undersample(dataset, tmp_path):
    assert train(dataset, tmp_path / "v", "--val-manifest", dataset,
                 "--undersample", "COVID-19=2") == 0
    last = (tmp_path / "v" / "history.csv").read_text().splitlines()[-1].split(",")
    assert last[3] != "" and last[4] != ""


def test_kfold_outputs_and_determinism(dataset, tmp_path, capsys):
    def kfold(out):
        return run("kfold", *MINI, "--manifest", dataset, "--seed", 7, "--epochs", 1,
                   "--folds", 2, "--out", out)

    assert kfold(tmp_path / "k1") == 0
    assert "Overall Accuracy" in capsys.readouterr().out
    assert kfold(tmp_path / "k2") == 0
    names = sorted(p.name for p in (tmp_path / "k1").iterdir())
    assert names == ["average_report.json", "average_report.txt",
                     "fold1_cm.csv", "fold1_history.csv", "fold1_report.json",
                     "fold2_cm.csv", "fold2_history.csv", "fold2_report.json"]
    for n in names:
        assert (tmp_path / "k1" / n).read_bytes() == (tmp_path / "k2" / n).read_bytes()
    cm = (tmp_path / "k1" / "fold1_cm.csv").read_text().splitlines()
    assert len(cm) == 5
    assert sum(int(v) for row in cm[1:] for v in row.split(",")[1:]) == 8


def test_finetune_to_three_classes(dataset, tmp_path):
    train(dataset, tmp_path / "src")
    out = tmp_path / "ft"
    code = run("finetune", *MINI, "--classes", 3, "--manifest", dataset, "--seed", 1,
               "--epochs", 1, "--weights", tmp_path / "src" / "weights.bin",
               "--val-manifest", dataset, "--freeze-backbone", "--out", out)
    assert code == 0
    header = (out / "cm.csv").read_text().splitlines()[0]
    assert header == "actual\\predicted,COVID-19,Normal,Pneumonia"
    report = json.loads((out / "report.json").read_text())
    assert sum(c["tp"] + c["fn"] for c in report["counts"].values()) == 16


def test_count_params_full(tmp_path, capsys):
    assert run("count-params", "--classes", 4, "--input", 160, "--out", tmp_path) == 0
    text = capsys.readouterr().out
    assert "33,969,964" in text and "33,915,436" in text and "54,528" in text
    data = json.loads((tmp_path / "params.json").read_text())
    assert (data["total"], data["trainable"], data["non_trainable"]) == \
        (33969964, 33915436, 54528)
    assert [r["params"] for r in data["layers"]] == [20861480, 0, 0, 13107456, 1028]


def test_count_params_frozen(capsys):
    assert run("count-params", "--input", 160, "--freeze-backbone") == 0
    assert "13,108,484" in capsys.readouterr().out


def test_metrics_fold1(tmp_path, capsys):
    cm = tmp_path / "fold1.csv"
    cm.write_text(render_cm_csv(FOLDS[0]))
    assert run("metrics", "--cm", cm, "--out", tmp_path / "rep") == 0
    out = capsys.readouterr().out
    assert "Overall Accuracy: 87.36%" in out
    report = json.loads((tmp_path / "rep" / "report.json").read_text())
    assert report["accuracy"] == 242 / 277
    assert round(report["macro"]["f_measure"] * 100, 1) == 87.6


def test_metrics_bad_csv_fails_cleanly(tmp_path, capsys):
    cm = tmp_path / "bad.csv"
    cm.write_text("x,a,b\na,1,-2\nb,3,4\n")
    out = tmp_path / "never"
    assert run("metrics", "--cm", cm, "--out", out) == 1
    assert "negative" in capsys.readouterr().err
    assert not out.exists()


def test_failed_train_leaves_no_partial_output(tmp_path, capsys):
    bad = tmp_path / "m.csv"
    bad.write_text(f"path,label\nmissing.pgm,{ClassLabel.NORMAL.value}\n")
    out = tmp_path / "out"
    assert train(bad, out) == 1
    assert "missing.pgm" in capsys.readouterr().err
    assert not out.exists()
    assert list(tmp_path.glob(".coronet-*")) == []


def test_curves_json_and_svg(dataset, tmp_path):
    train(dataset, tmp_path / "run", "--val-manifest", dataset)
    for d in ("c1", "c2"):
        assert run("curves", "--history", tmp_path / "run" / "history.csv",
                   "--out", tmp_path / d, "--svg") == 0
    curves = json.loads((tmp_path / "c1" / "curves.json").read_text())
    assert curves["epoch"] == [1, 2]
    assert len(curves["loss"]["val"]) == 2 and None not in curves["accuracy"]["val"]
    svg = (tmp_path / "c1" / "curves.svg").read_bytes()
    assert svg.lstrip().startswith(b"<?xml") and b"<svg" in svg
    assert svg == (tmp_path / "c2" / "curves.svg").read_bytes()


def test_negative_epochs_rejected(dataset, tmp_path):
    assert run("train", *MINI, "--manifest", dataset, "--seed", 0, "--epochs", -1,
               "--out", tmp_path / "x") == 1
