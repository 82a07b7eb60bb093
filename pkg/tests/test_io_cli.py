import json

import numpy as np
import pytest

from confpred.cli import main
from confpred.core import DataError
from confpred.io import CsvSchema, emit_curves, load_csv, write_table


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def class_files(tmp_path):
    rng = np.random.default_rng(0)
    lines = ["x1,x2,y"]
    for i in range(40):
        c = i % 2
        lines.append(f"{rng.normal() + 3 * c:.6f},{rng.normal():.6f},{'AB'[c]}")
    train = write(tmp_path / "train.csv", "\n".join(lines[:31]) + "\n")
    test = write(tmp_path / "test.csv", "\n".join([lines[0]] + lines[31:]) + "\n")
    return train, test


@pytest.fixture
def reg_files(tmp_path):
    rng = np.random.default_rng(1)
    rows = ["x1,x2,y"]
    for _ in range(50):
        x = rng.uniform(-2, 2, 2)
        rows.append(f"{x[0]:.6f},{x[1]:.6f},{x[0] - 2 * x[1] + rng.normal() * 0.3:.6f}")
    train = write(tmp_path / "rtrain.csv", "\n".join(rows[:41]) + "\n")
    test = write(tmp_path / "rtest.csv", "\n".join([rows[0]] + rows[41:]) + "\n")
    return train, test


class TestLoadCsv:
    def test_class_kind(self, tmp_path):
        d = load_csv(write(tmp_path / "a.csv", "x1,x2,y\n0,0,A\n1,1,B\n"))
        assert len(d) == 2 and d.dim == 2
        assert d.label_space.symbols == ("A", "B")

    def test_real_kind(self, tmp_path):
        d = load_csv(write(tmp_path / "a.csv", "x1,x2,y\n0,0,1.5\n1,1,-2\n"), CsvSchema("real"))
        assert d.y.tolist() == [1.5, -2.0]

    def test_declared_alphabet_keeps_empty_classes(self, tmp_path):
        d = load_csv(write(tmp_path / "a.csv", "x,y\n0,B\n"), CsvSchema(alphabet=("A", "B", "C")))
        assert d.label_space.symbols == ("A", "B", "C")

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("x1,x2,y\n0,0,A\n1,B\n", "line 3"),
            ("x1,x2,y\n0,,A\n", "line 2"),
            ("x1,x2,y\n0,abc,A\n", "non-numeric"),
            ("x1,x2,y\n0,nan,A\n", "non-finite"),
            ("x1,x2,y\n0,inf,A\n", "non-finite"),
            ("", "empty"),
        ],
    )
    def test_errors(self, tmp_path, text, fragment):
        with pytest.raises(DataError, match=fragment):
            load_csv(write(tmp_path / "bad.csv", text))

    def test_unknown_symbol(self, tmp_path):
        with pytest.raises(DataError, match="unknown class label 'C'"):
            load_csv(write(tmp_path / "a.csv", "x,y\n0,A\n1,C\n"), CsvSchema(alphabet=("A", "B")))

    def test_real_label_not_numeric(self, tmp_path):
        with pytest.raises(DataError, match="line 3"):
            load_csv(write(tmp_path / "a.csv", "x,y\n0,1\n1,A\n"), CsvSchema("real"))


class TestEmit:
    def test_three_levels(self, tmp_path):
        path = emit_curves({"level": [0.8, 0.9, 0.95], "miss": [0.2, 0.1, 1 / 3]}, tmp_path / "c.csv")
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        assert lines[0] == "level,miss"
        assert lines[3] == "0.95,0.333333333333"

    def test_unequal_lengths(self, tmp_path):
        with pytest.raises(ValueError):
            write_table({"a": [1, 2], "b": [1]}, tmp_path / "c.csv")
        assert not list(tmp_path.iterdir())

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            emit_curves({}, tmp_path / "c.csv")


class TestCli:
    def test_classify(self, class_files, tmp_path, capsys):
        train, test = class_files
        out = tmp_path / "o.csv"
        assert main(["classify", "--data", str(train), "--test", str(test), "--measure", "knn",
                     "--k", "1", "--eps", "0.05", "--out", str(out)]) == 0
        header = out.read_text().splitlines()[0].split(",")
        assert header == ["row", "p_A", "p_B", "prediction", "confidence", "credibility",
                          "set_eps=0.05", "true_label"]
        assert "classify: 10 test objects" in capsys.readouterr().out

    def test_classify_unlabelled_test(self, class_files, tmp_path):
        train, _ = class_files
        test = write(tmp_path / "u.csv", "x1,x2\n0,0\n3,0\n")
        out = tmp_path / "o.csv"
        assert main(["classify", "--data", str(train), "--test", str(test), "--out", str(out)]) == 0
        assert "true_label" not in out.read_text()

    def test_regress(self, reg_files, tmp_path):
        train, test = reg_files
        out = tmp_path / "o.csv"
        assert main(["regress", "--data", str(train), "--test", str(test), "--ridge-a", "1",
                     "--eps", "0.2,0.05", "--out", str(out)]) == 0
        rows = [r.split(",") for r in out.read_text().splitlines()[1:]]
        assert all(float(r[3]) <= float(r[1]) <= float(r[2]) <= float(r[4]) for r in rows)

    def test_online_lazy(self, tmp_path, capsys):
        out = tmp_path / "o.csv"
        assert main(["online", "--synthetic", "200", "--teacher", "lazy:10", "--smoothed",
                     "--eps", "0.05", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,Err_0.05,Mult_0.05,Emp_0.05"
        assert len(lines) == 201
        assert "online: 200 predictions" in capsys.readouterr().out

    def test_batch(self, class_files, tmp_path):
        train, test = class_files
        assert main(["batch", "--data", str(train), "--test", str(test), "--out", str(tmp_path / "o.csv")]) == 0
        assert main(["batch", "--synthetic", "100", "--split-m", "60", "--out", str(tmp_path / "s.csv")]) == 0
        assert len((tmp_path / "s.csv").read_text().splitlines()) == 41

    def test_icp(self, reg_files, class_files, tmp_path):
        train, test = reg_files
        assert main(["icp", "--data", str(train), "--test", str(test), "--split-m", "30",
                     "--eps", "0.1", "--out", str(tmp_path / "r.csv")]) == 0
        train, test = class_files
        assert main(["icp", "--measure", "knn", "--data", str(train), "--test", str(test),
                     "--out", str(tmp_path / "c.csv")]) == 0

    def test_bayes_compare(self, tmp_path):
        out = tmp_path / "curves"
        assert main(["bayes-compare", "--a-assumed", "1,1000", "--trials", "2", "--train-size", "20",
                     "--test-size", "10", "--seed", "7", "--out", str(out)]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["bayes_efficiency.csv", "bayes_validity.csv", "rrcm_efficiency.csv", "rrcm_validity.csv"]
        lines = (out / "rrcm_validity.csv").read_text().splitlines()
        assert lines[0] == "confidence_level,miss_rate_a=1,miss_rate_a=1000"
        assert len(lines) == 51

    def test_config_file_and_override(self, class_files, tmp_path):
        train, test = class_files
        cfg = write(tmp_path / "run.json", json.dumps(
            {"data": str(train), "test": str(test), "eps": [0.1, 0.3], "out": str(tmp_path / "a.csv")}))
        assert main(["classify", "--config", str(cfg)]) == 0
        assert "set_eps=0.3" in (tmp_path / "a.csv").read_text()
        assert main(["classify", "--config", str(cfg), "--eps", "0.2", "--out", str(tmp_path / "b.csv")]) == 0
        text = (tmp_path / "b.csv").read_text()
        assert "set_eps=0.2" in text and "set_eps=0.3" not in text

    def test_exit_codes(self, class_files, reg_files, tmp_path, capsys):
        train, test = class_files
        out = tmp_path / "o.csv"
        assert main(["classify", "--data", str(tmp_path / "missing.csv"), "--test", str(test),
                     "--out", str(out)]) == 2
        assert "missing.csv" in capsys.readouterr().err
        assert main(["classify", "--data", str(train), "--test", str(test), "--eps", "1.5",
                     "--out", str(out)]) == 1
        assert main(["classify", "--data", str(train), "--test", str(test)]) == 1
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1
        bad = write(tmp_path / "bad.csv", "x1,x2,y\n0,0,A\n1,B\n")
        assert main(["classify", "--data", str(bad), "--test", str(test), "--out", str(out)]) == 2
        assert "line 3" in capsys.readouterr().err
        sing = write(tmp_path / "s.csv", "x1,x2,y\n1,1,1\n2,2,2\n")
        one = write(tmp_path / "t.csv", "x1,x2\n1,1\n")
        assert main(["regress", "--data", str(sing), "--test", str(one), "--ridge-a", "0",
                     "--out", str(out)]) == 3
        assert not out.exists()

    def test_byte_identical_reruns(self, class_files, tmp_path):
        train, test = class_files
        runs = [
            ["classify", "--data", str(train), "--test", str(test), "--smoothed", "--seed", "3"],
            ["online", "--synthetic", "150", "--smoothed", "--seed", "3", "--teacher", "slow:5"],
            ["bayes-compare", "--trials", "1", "--train-size", "15", "--test-size", "5", "--seed", "3"],
        ]
        for i, args in enumerate(runs):
            a, b = tmp_path / f"a{i}", tmp_path / f"b{i}"
            assert main(args + ["--out", str(a)]) == 0
            assert main(args + ["--out", str(b)]) == 0
            if a.is_dir():
                for f in sorted(a.iterdir()):
                    assert f.read_bytes() == (b / f.name).read_bytes()
            else:
                assert a.read_bytes() == b.read_bytes()
