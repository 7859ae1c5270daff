import json

import numpy as np
import pytest

from traitnet.btl import serialize_comparisons, simulate_comparisons
from traitnet.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth-data", "--n", "8", "--seed", "3", "--out", str(d / "data")]) == 0
    assert main(["preprocess", "--manifest", str(d / "data" / "manifest.jsonl"),
                 "--out", str(d / "cache")]) == 0
    return d


def train_one(workdir, modality, out, extra=()):
    return main(["train-stage1", "--modality", modality,
                 "--manifest", str(workdir / "data" / "manifest.jsonl"),
                 "--cache", str(workdir / "cache"),
                 "--seed", "1", "--max-steps", "3",
                 "--out", str(workdir / out), *extra])


class TestCommands:
    def test_synth_and_preprocess(self, workdir):
        assert (workdir / "data" / "manifest.jsonl").exists()
        assert any((workdir / "cache").iterdir())

    def test_train_evaluate_compare(self, workdir, capsys):
        for mod, out in [("ambient", "amb.ckpt"), ("facial", "fac.ckpt"),
                         ("audio", "aud.ckpt"), ("transcript", "txt.ckpt")]:
            assert train_one(workdir, mod, out) == 0
        capsys.readouterr()

        code = main(["train-stage2",
                     "--ckpts", ",".join(str(workdir / f) for f in
                                         ("amb.ckpt", "fac.ckpt", "aud.ckpt", "txt.ckpt")),
                     "--manifest", str(workdir / "data" / "manifest.jsonl"),
                     "--cache", str(workdir / "cache"),
                     "--seed", "2", "--max-steps", "3",
                     "--out", str(workdir / "fused.ckpt")])
        assert code == 0
        capsys.readouterr()

        code = main(["evaluate", "--ckpt", str(workdir / "fused.ckpt"),
                     "--manifest", str(workdir / "data" / "manifest.jsonl"),
                     "--split", "validation",
                     "--cache", str(workdir / "cache"),
                     "--report", str(workdir / "report.json")])
        assert code == 0
        report = json.loads((workdir / "report.json").read_text())
        assert set(report["per_trait_accuracy"]) == {
            "openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism"}
        capsys.readouterr()

        assert main(["compare", "--report", str(workdir / "report.json")]) == 0
        text = capsys.readouterr().out
        assert "0.9188" in text and "This run" in text

    def test_evaluate_subnet_checkpoint(self, workdir, capsys):
        assert train_one(workdir, "audio", "aud2.ckpt") == 0
        capsys.readouterr()
        code = main(["evaluate", "--ckpt", str(workdir / "aud2.ckpt"),
                     "--manifest", str(workdir / "data" / "manifest.jsonl"),
                     "--split", "train", "--cache", str(workdir / "cache")])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert 0.0 <= out["mean_accuracy"] <= 1.0

    def test_btl_label(self, workdir, capsys):
        rng = np.random.default_rng(0)
        true = {f"v{k}": float(np.exp(rng.normal())) for k in range(5)}
        comps = simulate_comparisons(true, n_per_pair=6, seed=1, trait="openness")
        path = workdir / "comps.jsonl"
        path.write_text(serialize_comparisons(comps))
        assert main(["btl-label", "--comparisons", str(path),
                     "--out", str(workdir / "scores.json")]) == 0
        table = json.loads((workdir / "scores.json").read_text())
        assert set(table["scores"]["openness"]) == set(true)

    def test_compare_without_report(self, capsys):
        assert main(["compare"]) == 0
        assert "Proposed method" in capsys.readouterr().out


class TestExitCodes:
    def test_validation_error_is_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{not json")
        code = main(["preprocess", "--manifest", str(bad), "--out", str(tmp_path / "c")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_wrong_ckpt_count_is_2(self, workdir, capsys):
        code = main(["train-stage2", "--ckpts", "one.ckpt,two.ckpt",
                     "--manifest", str(workdir / "data" / "manifest.jsonl"),
                     "--out", str(workdir / "x.ckpt")])
        assert code == 2
        capsys.readouterr()

    def test_wrong_checkpoint_kind_is_2(self, workdir, capsys):
        code = main(["evaluate", "--ckpt", str(workdir / "data" / "manifest.jsonl"),
                     "--manifest", str(workdir / "data" / "manifest.jsonl"),
                     "--split", "train", "--cache", str(workdir / "cache")])
        assert code == 2
        capsys.readouterr()
