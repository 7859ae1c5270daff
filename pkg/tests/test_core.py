import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traitnet.core import (
    SPLITS,
    TRAIT_NAMES,
    DatasetManifest,
    EvaluationReport,
    TraitVector,
    VideoRecord,
    absolute_trait_error,
    parse_manifest,
    serialize_manifest,
    split_dataset,
)
from traitnet.errors import ParseError, SizingError, ValidationError


def make_record(i, split="train", labels=(0.5, 0.5, 0.5, 0.5, 0.5)):
    return VideoRecord(
        id=f"vid{i:04d}", frames_path=f"frames/vid{i:04d}", audio_path=f"audio/vid{i:04d}.wav",
        transcript="hello there", split=split, duration_s=6.5, fps=2.0,
        labels=TraitVector(*labels))


class TestTraitVector:
    def test_trait_order(self):
        assert TRAIT_NAMES == ("openness", "conscientiousness", "extraversion",
                               "agreeableness", "neuroticism")

    def test_round_trip(self):
        v = TraitVector(0.1, 0.2, 0.3, 0.4, 0.5)
        assert TraitVector.from_array(v.as_array()) == v
        assert v.as_list() == [0.1, 0.2, 0.3, 0.4, 0.5]

    @pytest.mark.parametrize("bad", [-0.01, 1.01, float("nan"), float("inf")])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValidationError):
            TraitVector(bad, 0.5, 0.5, 0.5, 0.5)

    def test_bounds_inclusive(self):
        TraitVector(0.0, 1.0, 0.0, 1.0, 0.5)

    def test_absolute_error(self):
        a = TraitVector(0.0, 0.5, 1.0, 0.25, 0.75)
        b = TraitVector(1.0, 0.5, 0.0, 0.75, 0.25)
        np.testing.assert_allclose(absolute_trait_error(a, b), [1.0, 0.0, 1.0, 0.5, 0.5])


class TestManifest:
    def test_unique_ids_enforced(self):
        with pytest.raises(ValidationError, match="duplicate"):
            DatasetManifest(records=(make_record(1), make_record(1)))

    def test_split_counts(self):
        records = [make_record(i, split=s) for i, s in
                   enumerate(["train"] * 3 + ["validation"] * 1 + ["test"] * 1)]
        m = DatasetManifest(records=tuple(records))
        assert m.split_counts() == (3, 1, 1)
        m.check_ratio()

    def test_ratio_tolerates_off_by_one(self):
        records = [make_record(i, split=s) for i, s in
                   enumerate(["train"] * 4 + ["validation"] * 1 + ["test"] * 1)]
        DatasetManifest(records=tuple(records)).check_ratio()

    def test_ratio_violation(self):
        records = [make_record(i, split="train") for i in range(6)]
        with pytest.raises(ValidationError):
            DatasetManifest(records=tuple(records)).check_ratio()

    def test_parse_reports_line_number(self):
        lines = [json.dumps({"id": "a", "frames_path": "f", "audio_path": "a.wav",
                             "transcript": "", "split": "train", "duration_s": 2.0,
                             "fps": 1.0, "labels": [0.5] * 5}),
                 "{not json"]
        with pytest.raises(ParseError) as exc:
            parse_manifest("\n".join(lines))
        assert exc.value.line == 2

    def test_missing_labels_outside_test_split(self):
        obj = {"id": "a", "frames_path": "f", "audio_path": "a.wav", "transcript": "",
               "split": "train", "duration_s": 2.0, "fps": 1.0}
        with pytest.raises(ParseError):
            parse_manifest(json.dumps(obj))

    def test_test_split_labels_optional(self):
        obj = {"id": "a", "frames_path": "f", "audio_path": "a.wav", "transcript": "",
               "split": "test", "duration_s": 2.0, "fps": 1.0}
        m = parse_manifest(json.dumps(obj))
        assert m.records[0].labels is None

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
                             min_size=5, max_size=5),
                    min_size=1, max_size=8))
    def test_serialize_parse_round_trip(self, label_rows):
        records = tuple(make_record(i, labels=tuple(row)) for i, row in enumerate(label_rows))
        m = DatasetManifest(records=records)
        assert parse_manifest(serialize_manifest(m)) == m


class TestSplitDataset:
    def test_partition_and_ratio(self):
        records = [make_record(i) for i in range(25)]
        m = split_dataset(records, ratio=(3, 1, 1), seed=0)
        assert m.split_counts() == (15, 5, 5)
        assert sorted(r.id for r in m.records) == sorted(r.id for r in records)

    def test_largest_remainder(self):
        m = split_dataset([make_record(i) for i in range(7)], ratio=(3, 1, 1), seed=0)
        assert sum(m.split_counts()) == 7
        assert m.split_counts()[0] >= 4

    def test_deterministic_per_seed(self):
        records = [make_record(i) for i in range(20)]
        a = split_dataset(records, seed=3)
        b = split_dataset(records, seed=3)
        assert a == b
        c = split_dataset(records, seed=4)
        assert {r.id for r in a.split_records("train")} != {r.id for r in c.split_records("train")}

    def test_too_few_records(self):
        with pytest.raises(SizingError):
            split_dataset([make_record(0)], ratio=(3, 1, 1))


class TestEvaluationReport:
    def test_mean_consistency_enforced(self):
        per = (0.9,) * 5
        EvaluationReport(per_trait_accuracy=per, mean_accuracy=0.9, n_videos=4,
                         split_name="validation")
        with pytest.raises(ValidationError):
            EvaluationReport(per_trait_accuracy=per, mean_accuracy=0.8, n_videos=4,
                             split_name="validation")

    def test_dict_round_trip(self):
        per = (0.9, 0.8, 0.7, 0.6, 0.5)
        r = EvaluationReport(per_trait_accuracy=per, mean_accuracy=0.7, n_videos=2,
                             split_name="test")
        assert EvaluationReport.from_dict(r.to_dict()) == r

    def test_split_names(self):
        assert SPLITS == ("train", "validation", "test")
