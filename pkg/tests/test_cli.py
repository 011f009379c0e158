import json

import pytest

from dmdfault.cli import main


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["simulate", "gk", "--duration", "600", "--out", str(d / "clean.csv")]) == 0
    for name, seed in (("train", 1), ("test", 2)):
        assert main(["inject", "--in", str(d / "clean.csv"), "--channel", "C_L",
                     "--mode", "catastrophic", "--onset", "300", "--seed", str(seed),
                     "--out", str(d / f"{name}.csv"),
                     "--labels-out", str(d / f"{name}_labels.csv")]) == 0
    return d


def _train(d, out, *extra):
    return main(["train", "--clean", str(d / "clean.csv"),
                 "--labeled", f"{d / 'train.csv'}+{d / 'train_labels.csv'}",
                 "--monitored", "C_L", "--inputs", "alpha,alpha_dot",
                 "--out", str(out), "--depth-grid", "1..3",
                 "--delays", "40", "--stride", "16", "--energy", "0.9999999", *extra])


def test_train_detect_evaluate(workdir, capsys):
    d = workdir
    assert _train(d, d / "m.json") == 0
    assert main(["detect", "--model", str(d / "m.json"), "--in", str(d / "test.csv"),
                 "--out", str(d / "flags.csv")]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--flags", str(d / "flags.csv"),
                 "--labels", str(d / "test_labels.csv"), "--rate", "5", "--report", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["total"] == 3000
    assert report["accuracy"] > 0.95
    assert main(["evaluate", "--flags", str(d / "flags.csv"),
                 "--labels", str(d / "test_labels.csv"), "--rate", "5"]) == 0
    assert "accuracy" in capsys.readouterr().out


def test_training_is_byte_reproducible(workdir):
    d = workdir
    assert _train(d, d / "a.json", "--seed", "4") == 0
    assert _train(d, d / "b.json", "--seed", "4") == 0
    assert (d / "a.json").read_bytes() == (d / "b.json").read_bytes()


def test_labels_file_layout(workdir):
    lines = (workdir / "train_labels.csv").read_text().splitlines()
    assert lines[0] == "t,label"
    assert lines[1500] == "299.8,0" and lines[1501] == "300.0,1"


def test_truncated_model(workdir, capsys):
    d = workdir
    _train(d, d / "m2.json")
    text = (d / "m2.json").read_text()
    (d / "cut.json").write_text(text[:200])
    code = main(["detect", "--model", str(d / "cut.json"), "--in", str(d / "test.csv"),
                 "--out", str(d / "x.csv")])
    assert code != 0
    assert _err(capsys)["error"] == "parse"


def test_future_version(workdir, capsys):
    d = workdir
    _train(d, d / "m3.json")
    doc = json.loads((d / "m3.json").read_text())
    doc["format_version"] = 2
    (d / "v2.json").write_text(json.dumps(doc))
    assert main(["detect", "--model", str(d / "v2.json"), "--in", str(d / "test.csv"),
                 "--out", str(d / "x.csv")]) == 2
    assert _err(capsys)["error"] == "incompatible_version"


def test_missing_channel(workdir, capsys):
    d = workdir
    assert main(["train", "--clean", str(d / "clean.csv"),
                 "--labeled", f"{d / 'train.csv'}+{d / 'train_labels.csv'}",
                 "--monitored", "C_L", "--inputs", "beta", "--out", str(d / "x.json")]) == 2
    err = _err(capsys)
    assert err["error"] == "missing_channel" and "beta" in err["message"]


def test_bad_labeled_argument(workdir, capsys):
    d = workdir
    assert main(["train", "--clean", str(d / "clean.csv"), "--labeled", str(d / "train.csv"),
                 "--monitored", "C_L", "--out", str(d / "x.json")]) == 2
    assert _err(capsys)["error"] == "parameter"


def test_missing_file(tmp_path, capsys):
    assert main(["detect", "--model", str(tmp_path / "none.json"), "--in", "x.csv",
                 "--out", "y.csv"]) == 2
    assert _err(capsys)["error"] == "io"


def test_single_class_labels(workdir, capsys):
    d = workdir
    assert main(["train", "--clean", str(d / "clean.csv"),
                 "--labeled", f"{d / 'clean.csv'}+{d / 'flags_zero.csv'}",
                 "--monitored", "C_L", "--out", str(d / "x.json")]) == 2
    assert _err(capsys)["error"] == "io"
    (d / "zeros.csv").write_text("t,label\n" + "".join(f"{k / 5},0\n" for k in range(3000)))
    assert main(["train", "--clean", str(d / "clean.csv"),
                 "--labeled", f"{d / 'clean.csv'}+{d / 'zeros.csv'}",
                 "--monitored", "C_L", "--inputs", "alpha,alpha_dot",
                 "--out", str(d / "x.json")]) == 2
    assert _err(capsys)["error"] == "single_class"


def test_bad_depth_grid():
    with pytest.raises(SystemExit) as exc:
        main(["train", "--clean", "a", "--labeled", "b+c", "--monitored", "x", "--out", "o",
              "--depth-grid", "3..x"])
    assert exc.value.code == 2


def test_simulate_flight(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["simulate", "flight", "--seed", "3", "--duration", "20", "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header == "t,TAS,AoA,inertial_speed,pitch,lift,thrust"
    assert len(out.read_text().splitlines()) == 201
