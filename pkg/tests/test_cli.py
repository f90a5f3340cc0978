import csv
import io
import json
import math

import pytest

from biposlm.cli import REPORTS, main, read_config, ConfigError
from biposlm.fixtures import fixture_path

MICRO = str(fixture_path("micro.txt"))
MICRO_TAGS = str(fixture_path("micro_tags.tsv"))
COMMON = ["--corpus", MICRO, "--tagmap", MICRO_TAGS, "--n-train", "1500"]


def _csv_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def _has_metadata(path):
    text = path.read_text()
    if path.suffix == ".json":
        return "metadata" in json.loads(text)
    return text.startswith("# metadata ")


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    assert main(["train", *COMMON, "--out", str(out)]) == 0
    return out / "model.json"


class TestTrain:
    def test_smoke(self, tmp_path, capsys):
        assert main(["train", *COMMON, "--out", str(tmp_path)]) == 0
        assert (tmp_path / "model.json").exists()
        out = capsys.readouterr().out
        assert "|V|=" in out and "d2=" in out and "d_g[N]" in out
        assert _has_metadata(tmp_path / "model.json") and _has_metadata(tmp_path / "train_summary.json")

    def test_missing_tagmap(self, tmp_path, capsys):
        missing = tmp_path / "no_such_map.tsv"
        rc = main(["train", "--corpus", MICRO, "--tagmap", str(missing), "--out", str(tmp_path)])
        assert rc != 0
        assert str(missing) in capsys.readouterr().err

    def test_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert main(["train", *COMMON, "--seed", "3", "--variable", "random:0.1", "--out", str(tmp_path / d)]) == 0
        assert (tmp_path / "a" / "model.json").read_bytes() == (tmp_path / "b" / "model.json").read_bytes()

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"# settings\ncorpus = {MICRO}\ntagmap = {MICRO_TAGS}\nn_train = 1500\nc2 = 0.001\n")
        assert main(["train", "--config", str(cfg), "--c2", "0.002", "--out", str(tmp_path)]) == 0
        meta = json.loads((tmp_path / "model.json").read_text())
        assert meta["c2"] == 0.002
        assert meta["metadata"]["config"]["n_train"] == 1500

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = blue\n")
        with pytest.raises(ConfigError):
            read_config(cfg)
        assert main(["train", "--config", str(cfg)]) != 0


class TestEval:
    def test_bddad_pp(self, tmp_path, capsys):
        tags = str(fixture_path("bddad_tags.tsv"))
        assert main(["train", "--kind", "uniform", "--corpus", str(fixture_path("bddad_train.txt")),
                     "--tagmap", tags, "--out", str(tmp_path / "m")]) == 0
        capsys.readouterr()
        assert main(["eval", "--model", str(tmp_path / "m" / "model.json"), "--test",
                     str(fixture_path("bddad_test.txt")), "--tagmap", tags, "--out", str(tmp_path / "e")]) == 0
        out = capsys.readouterr().out
        assert " PP=4 " in out and "LTP=-10 " in out
        assert json.loads((tmp_path / "e" / "eval.json").read_text())["PP"] == 4.0

    def test_new_regime_unknowns_vary(self, trained, tmp_path):
        for regime in ("m1", "new"):
            assert main(["eval", "--model", str(trained), *COMMON, "--regime", regime,
                         "--out", str(tmp_path / regime)]) == 0
        unk = {}
        for regime in ("m1", "new"):
            rows = _csv_rows(tmp_path / regime / "records.csv")
            unk[regime] = {float(r["prob"]) for r in rows if r["word_class"] == "unknown"}
        assert len(unk["m1"]) == 1
        assert len(unk["new"]) > 1

    def test_outputs_have_metadata(self, trained, tmp_path):
        assert main(["eval", "--model", str(trained), *COMMON, "--out", str(tmp_path)]) == 0
        for name in ("eval.json", "records.csv"):
            assert _has_metadata(tmp_path / name)
        meta = json.loads((tmp_path / "eval.json").read_text())["metadata"]
        assert set(meta["inputs"]) == {str(trained), MICRO}
        assert all(len(d) == 64 for d in meta["inputs"].values())

    def test_empty_test(self, trained, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        assert main(["eval", "--model", str(trained), "--test", str(empty), "--tagmap", MICRO_TAGS]) != 0

    def test_tagset_mismatch(self, trained, tmp_path):
        other = tmp_path / "other.txt"
        other.write_text("^ the_DET dog_NOUN\n")
        assert main(["eval", "--model", str(trained), "--test", str(other), "--out", str(tmp_path)]) != 0


class TestAnalyze:
    def test_all_reports(self, trained, tmp_path):
        assert main(["analyze", "--model", str(trained), *COMMON, "--out", str(tmp_path)]) == 0
        files = sorted(p.name for p in tmp_path.iterdir())
        assert len(files) == len(REPORTS) == 7
        assert all(_has_metadata(tmp_path / f) for f in files)
        header = (tmp_path / "following_tag.csv").read_text().splitlines()[0]
        assert "<s> context" in json.loads(header[len("# metadata "):])["sentence_start"]

    def test_components_sum(self, trained, tmp_path):
        assert main(["analyze", "--model", str(trained), *COMMON, "--reports", "components",
                     "--out", str(tmp_path)]) == 0
        rows = _csv_rows(tmp_path / "components.csv")
        assert list(rows[0]) == ["unknown", "fact", "word", "pos"]
        for r in rows:
            assert abs(math.fsum(float(v) for v in r.values()) - 1) < 1e-9

    def test_zipf_endpoint(self, trained, tmp_path):
        assert main(["analyze", "--model", str(trained), *COMMON, "--reports", "zipf", "--out", str(tmp_path)]) == 0
        last = _csv_rows(tmp_path / "zipf.csv")[-1]
        assert (float(last["fraction_of_tags"]), float(last["fraction_of_LTP"])) == (1.0, 1.0)

    def test_unknown_report(self, trained, tmp_path, capsys):
        assert main(["analyze", "--model", str(trained), *COMMON, "--reports", "bogus"]) != 0
        err = capsys.readouterr().err
        assert "bogus" in err and "components" in err


class TestSweep:
    def test_two_rows(self, tmp_path):
        assert main(["sweep", *COMMON, "--sizes", "100,200", "--out", str(tmp_path)]) == 0
        rows = _csv_rows(tmp_path / "sweep.csv")
        assert len(rows) == 2
        for r in rows:
            parts = float(r["LTP_known"]) + float(r["LTP_unseen"]) + float(r["LTP_unknown"])
            assert float(r["LTP"]) == pytest.approx(parts, abs=1e-9)

    def test_fixed_vocab(self, tmp_path):
        assert main(["sweep", *COMMON, "--sizes", "100,200,800", "--fixed-vocab", "--out", str(tmp_path)]) == 0
        rows = _csv_rows(tmp_path / "sweep.csv")
        assert len({r["LTP_unknown"] for r in rows}) == 1


class TestLambdaSearch:
    def test_smoke(self, tmp_path, capsys):
        assert main(["lambda-search", *COMMON, "--variable", "singular", "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "lambda_search.json").read_text())
        assert 0.1 <= data["lambda"] <= 0.9
        assert data["LTP"] >= data["base_LTP"] - 1e-9
        assert len(data["grid"]) == 9
        assert "lambda=" in capsys.readouterr().out

    def test_needs_variable(self, tmp_path):
        assert main(["lambda-search", *COMMON, "--out", str(tmp_path)]) != 0
