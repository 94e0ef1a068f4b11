from __future__ import annotations

import csv
import json

import pytest

from ember import (
    HeadConfig,
    InputAdapterPolicy,
    ToyBackbone,
    UsageError,
    assemble,
    evaluate,
    scan_dataset,
)
from ember.evaluate import write_predictions_csv, write_report_json

from conftest import make_class_tree, solid_image


def toy_model():
    return assemble(
        ToyBackbone(seed=0),
        HeadConfig(),
        InputAdapterPolicy("resize", (224, 224)),
        seed=0,
        class_names=("fire", "nofire"),
    )


@pytest.fixture
def small_dataset(tmp_path):
    root = make_class_tree(
        tmp_path / "d",
        {
            "fire": [solid_image((220, 30, 30)) for _ in range(4)],
            "nofire": [solid_image((30, 180, 40)) for _ in range(4)],
        },
    )
    return root


class TestEvaluate:
    def test_per_image_covers_every_record_in_order(self, small_dataset):
        records = scan_dataset(small_dataset).records
        report = evaluate(toy_model(), records)
        assert len(report.per_image) == len(records)
        assert [r.path for r in report.per_image] == [r.path for r in records]
        assert report.confusion.total == len(records)

    def test_single_image_accuracy_is_zero_or_one(self, small_dataset):
        records = scan_dataset(small_dataset).records[:1]
        report = evaluate(toy_model(), records)
        assert len(report.per_image) == 1
        assert report.accuracy in (0.0, 1.0)
        # single class present -> ROC omitted with a warning, not an error
        assert report.auc is None and report.roc is None
        assert report.warnings

    def test_unreadable_image_becomes_error_row(self, small_dataset):
        records = list(scan_dataset(small_dataset).records)
        broken = small_dataset / "fire" / "broken.png"
        broken.write_bytes(b"junk")
        from ember.dataset import ImageRecord

        records.append(ImageRecord(str(broken), "fire", 0))
        report = evaluate(toy_model(), records)
        assert len(report.error_rows) == 1
        assert "broken.png" in report.error_rows[0][0]
        assert len(report.per_image) == len(records) - 1
        assert report.confusion.total == len(records) - 1

    def test_derived_metrics_consistent_with_confusion(self, small_dataset):
        records = scan_dataset(small_dataset).records
        report = evaluate(toy_model(), records)
        from ember import derived_metrics

        acc, prec, rec, f1 = derived_metrics(report.confusion)
        assert (acc, prec, rec, f1) == (
            report.accuracy,
            report.precision,
            report.recall,
            report.f1,
        )

    def test_deterministic(self, small_dataset):
        records = scan_dataset(small_dataset).records
        a = evaluate(toy_model(), records)
        b = evaluate(toy_model(), records)
        assert [r.score for r in a.per_image] == [r.score for r in b.per_image]

    def test_requires_binary_model(self, small_dataset):
        model = assemble(
            ToyBackbone(seed=0),
            HeadConfig(mode="multiclass_softmax", num_classes=3),
            InputAdapterPolicy("resize", (224, 224)),
            class_names=("a", "b", "c"),
        )
        records = scan_dataset(small_dataset).records
        with pytest.raises(UsageError):
            evaluate(model, records)

    def test_empty_records_rejected(self):
        with pytest.raises(UsageError):
            evaluate(toy_model(), [])

    def test_scores_match_positive_class_semantics(self, small_dataset):
        records = scan_dataset(small_dataset).records
        report = evaluate(toy_model(), records, threshold=0.5)
        for row in report.per_image:
            expected = "fire" if row.score >= 0.5 else "nofire"
            assert row.predicted_label == expected


class TestReportArtifacts:
    def test_report_json_recomputable(self, small_dataset, tmp_path):
        records = scan_dataset(small_dataset).records
        report = evaluate(toy_model(), records)
        path = tmp_path / "report.json"
        write_report_json(report, path)
        data = json.loads(path.read_text())
        cm = data["confusion"]
        total = sum(cm.values())
        assert data["accuracy"] == (cm["tp"] + cm["tn"]) / total
        denom = cm["tp"] + cm["fp"]
        assert data["precision"] == (cm["tp"] / denom if denom else 0.0)
        denom = cm["tp"] + cm["fn"]
        assert data["recall"] == (cm["tp"] / denom if denom else 0.0)
        assert data["error_row_count"] == 0
        assert data["threshold"] == 0.5
        assert data["class_names"] == ["fire", "nofire"]
        if data["auc"] is not None:
            assert 0.0 <= data["auc"] <= 1.0
            assert data["roc"][0] == [0.0, 0.0]
            assert data["roc"][-1] == [1.0, 1.0]

    def test_predictions_csv_layout(self, small_dataset, tmp_path):
        records = scan_dataset(small_dataset).records
        report = evaluate(toy_model(), records)
        path = tmp_path / "predictions.csv"
        write_predictions_csv(report, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["path", "true_label", "score", "predicted_label"]
        assert len(rows) == len(records) + 1
        for row in rows[1:]:
            float(row[2])
            assert row[3] in ("fire", "nofire")
