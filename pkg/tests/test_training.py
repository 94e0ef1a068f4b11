from __future__ import annotations

import numpy as np
import pytest

from ember import (
    ConfigurationError,
    EarlyStoppingConfig,
    HeadConfig,
    ImageRecord,
    ImageTensor,
    InputAdapterPolicy,
    Preprocessor,
    SplitAssignment,
    ToyBackbone,
    TrainingConfig,
    TrainingDivergedError,
    TrainingHistory,
    apply_unfreeze_schedule,
    assemble,
    early_stop_check,
    train,
)
from ember.training import EpochMetrics


def scripted_history(val_losses):
    entries = [
        EpochMetrics(
            epoch=i,
            train_loss=1.0,
            train_accuracy=0.5,
            val_loss=v,
            val_accuracy=0.5,
            active_stage="head_only",
        )
        for i, v in enumerate(val_losses)
    ]
    return TrainingHistory(entries=entries)


RED = np.array([0.86, 0.12, 0.12])
GREEN = np.array([0.12, 0.7, 0.16])


def solid_records(n_per_class):
    records = []
    for i in range(n_per_class):
        records.append(ImageRecord(f"memory://fire/{i}", "fire", 0))
        records.append(ImageRecord(f"memory://nofire/{i}", "nofire", 1))
    return records


def solid_preprocessor():
    def loader(source):
        path = str(getattr(source, "path", source))
        color = RED if "fire/" in path and "nofire" not in path else GREEN
        values = np.ones((224, 224, 3)) * color * 255.0
        return ImageTensor(values)

    return Preprocessor(InputAdapterPolicy("resize", (224, 224)), "unit_0_1", loader=loader)


def toy_model():
    backbone = ToyBackbone(seed=0)
    return assemble(
        backbone,
        HeadConfig(),
        InputAdapterPolicy("resize", (224, 224)),
        seed=0,
        class_names=("fire", "nofire"),
    )


def quick_cfg(**kwargs):
    defaults = dict(epochs=2, batch_size=4, learning_rate=1e-3, seed=1)
    defaults.update(kwargs)
    return TrainingConfig(**defaults)


class TestEarlyStopCheck:
    def test_strictly_improving_never_stops(self):
        history = scripted_history([0.5 - 0.01 * i for i in range(10)])
        assert early_stop_check(history, "val_loss", patience=5, min_delta=0.0) is False

    def test_flat_history_stops_after_patience(self):
        # best at epoch 0; epochs 1..3 fail to improve -> true after epoch 3
        assert early_stop_check([0.5, 0.5, 0.5, 0.5], "val_loss", 3, 0.0) is True
        assert early_stop_check([0.5, 0.5, 0.5], "val_loss", 3, 0.0) is False

    def test_improvement_resets_counter(self):
        # 0.39 at epoch 3 improves on 0.4 -> counter resets, no stop
        assert early_stop_check([0.5, 0.4, 0.45, 0.39], "val_loss", 2, 0.0) is False

    def test_min_delta_requires_material_improvement(self):
        # improvements of 0.005 are below min_delta=0.01, so they don't reset
        assert early_stop_check([0.5, 0.495, 0.49], "val_loss", 2, 0.01) is True

    def test_accuracy_monitor_maximizes(self):
        assert early_stop_check([0.6, 0.7, 0.8], "val_accuracy", 2, 0.0) is False
        assert early_stop_check([0.8, 0.7, 0.6], "val_accuracy", 2, 0.0) is True

    def test_accepts_training_history_object(self):
        history = scripted_history([0.5, 0.5])
        assert early_stop_check(history, "val_loss", 1, 0.0) is True


class TestUnfreezeSchedule:
    def test_interval_lookup(self):
        model = toy_model()
        schedule = ((0, "head_only"), (5, "last_2"), (10, "all"))
        assert apply_unfreeze_schedule(schedule, 7, model) == "last_2"
        assert model.trainability["block2"] and model.trainability["block3"]
        assert not model.trainability["block1"]

    def test_epoch_zero_takes_first_stage(self):
        model = toy_model()
        schedule = ((0, "head_only"), (5, "all"))
        assert apply_unfreeze_schedule(schedule, 0, model) == "head_only"

    def test_single_entry_schedule(self):
        model = toy_model()
        assert apply_unfreeze_schedule(((0, "head_only"),), 123, model) == "head_only"

    def test_schedule_must_start_at_zero(self):
        with pytest.raises(ConfigurationError):
            TrainingConfig(unfreeze_schedule=((1, "head_only"),))

    def test_schedule_strictly_increasing(self):
        with pytest.raises(ConfigurationError):
            TrainingConfig(unfreeze_schedule=((0, "head_only"), (0, "all")))


class TestTrainLoop:
    def test_minimal_run_one_entry(self):
        records = solid_records(2)
        splits = SplitAssignment(train=records, validation=records, test=[])
        model = toy_model()
        _, history = train(
            model, splits, quick_cfg(epochs=1), preprocess=solid_preprocessor()
        )
        assert len(history.entries) == 1
        entry = history.entries[0]
        assert entry.epoch == 0
        assert np.isfinite(entry.train_loss) and entry.train_loss >= 0
        assert 0 <= entry.train_accuracy <= 1
        assert entry.active_stage == "head_only"

    def test_separable_solid_colors_reach_high_accuracy(self):
        # Oracle: a logistic fit on the mean channel values separates these
        # two constant classes perfectly, so the pipeline should too.
        from sklearn.linear_model import LogisticRegression

        features = np.array([RED, GREEN] * 16)
        targets = np.array([1, 0] * 16)
        oracle = LogisticRegression().fit(features, targets)
        assert oracle.score(features, targets) == 1.0

        records = solid_records(16)
        splits = SplitAssignment(train=records, validation=records, test=[])
        model = toy_model()
        _, history = train(
            model, splits, quick_cfg(epochs=10, batch_size=8), preprocess=solid_preprocessor()
        )
        assert history.entries[-1].train_accuracy >= 0.99

    def test_empty_train_stream_rejected(self):
        splits = SplitAssignment(train=[], validation=solid_records(1), test=[])
        with pytest.raises(ConfigurationError):
            train(toy_model(), splits, quick_cfg())

    def test_empty_validation_stream_rejected(self):
        splits = SplitAssignment(train=solid_records(1), validation=[], test=[])
        with pytest.raises(ConfigurationError):
            train(toy_model(), splits, quick_cfg())

    def test_frozen_backbone_bit_identical_through_real_loop(self):
        records = solid_records(4)
        splits = SplitAssignment(train=records, validation=records, test=[])
        model = toy_model()
        before = {
            name: p.value.copy()
            for name, p in model.all_parameters()
            if not name.startswith("head/")
        }
        train(model, splits, quick_cfg(epochs=2), preprocess=solid_preprocessor())
        for name, p in model.all_parameters():
            if name in before:
                assert np.array_equal(p.value, before[name]), name

    def test_unfrozen_groups_change(self):
        records = solid_records(4)
        splits = SplitAssignment(train=records, validation=records, test=[])
        model = toy_model()
        before = {name: p.value.copy() for name, p in model.all_parameters()}
        cfg = quick_cfg(epochs=2, unfreeze_schedule=((0, "all"),))
        train(model, splits, cfg, preprocess=solid_preprocessor())
        by_group = model.parameters_by_group()
        for group, params in by_group.items():
            assert any(
                not np.array_equal(p.value, before[f"{group}/{p.name}"]) for p in params
            ), f"no parameter changed in group {group}"

    def test_reproducible_history_same_seed(self):
        records = solid_records(6)
        splits = SplitAssignment(train=records, validation=records, test=[])
        histories = []
        for _ in range(2):
            model = toy_model()
            _, history = train(model, splits, quick_cfg(epochs=3), preprocess=solid_preprocessor())
            histories.append([e.as_dict() for e in history.entries])
        assert histories[0] == histories[1]

    def test_early_stopping_bound(self):
        # Constant inputs at a tiny learning rate: validation loss plateaus,
        # so training must stop within best_epoch + patience + 1 epochs.
        records = solid_records(3)
        splits = SplitAssignment(train=records, validation=records, test=[])
        model = toy_model()
        cfg = quick_cfg(
            epochs=50,
            learning_rate=1e-9,
            early_stopping=EarlyStoppingConfig(enabled=True, monitor="val_loss", patience=3, min_delta=0.1),
        )
        _, history = train(model, splits, cfg, preprocess=solid_preprocessor())
        assert history.stopped_early
        assert len(history.entries) <= history.best_epoch + 3 + 1

    def test_best_epoch_is_argmin_val_loss(self):
        records = solid_records(8)
        splits = SplitAssignment(train=records, validation=records, test=[])
        model = toy_model()
        _, history = train(model, splits, quick_cfg(epochs=4), preprocess=solid_preprocessor())
        losses = [e.val_loss for e in history.entries]
        assert history.best_epoch == int(np.argmin(losses))

    def test_nan_input_aborts_with_epoch_and_batch(self):
        class NanPreprocessor:
            normalization = "unit_0_1"

            def __call__(self, record):
                return ImageTensor(np.full((224, 224, 3), np.nan), "unit_0_1")

        records = solid_records(2)
        splits = SplitAssignment(train=records, validation=records, test=[])
        with pytest.raises(TrainingDivergedError, match="epoch 0, batch 0"):
            train(toy_model(), splits, quick_cfg(), preprocess=NanPreprocessor())


class TestStageTransitionsInLoop:
    def test_stage_recorded_per_epoch(self):
        records = solid_records(3)
        splits = SplitAssignment(train=records, validation=records, test=[])
        model = toy_model()
        cfg = quick_cfg(epochs=4, unfreeze_schedule=((0, "head_only"), (2, "last_1")))
        _, history = train(model, splits, cfg, preprocess=solid_preprocessor())
        assert [e.active_stage for e in history.entries] == [
            "head_only",
            "head_only",
            "last_1",
            "last_1",
        ]
