"""Scikit-learn style estimator facade over the fine-tuning pipeline.

``FireClassifier`` takes stacked raw images (N, H, W, 3) with intensities in
[0, 255] and string or integer labels, and composes with sklearn tooling
(``get_params``/``set_params``/``clone``, pipelines, scorers).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .augment import AugmentationSpec
from .backbone import create_backbone
from .batches import Preprocessor, make_batches
from .dataset import ImageRecord, SplitAssignment
from .exceptions import UsageError
from .images import ImageTensor, InputAdapterPolicy
from .model import HeadConfig, assemble
from .training import EarlyStoppingConfig, TrainingConfig, train
from .validation import check_image_batch


class FireClassifier(BaseEstimator, ClassifierMixin):
    """Image classifier: frozen pre-trained backbone plus a trainable head.

    Parameters follow the pipeline defaults except for the learning rate and
    epoch count, which default to values that converge quickly on the small
    in-repo backbone.
    """

    def __init__(
        self,
        backbone="toy",
        backbone_seed=0,
        hidden_units=128,
        dropout_rate=0.2,
        learning_rate=1e-3,
        epochs=10,
        batch_size=32,
        unfreeze_schedule=((0, "head_only"),),
        early_stopping=False,
        monitor="val_loss",
        patience=5,
        min_delta=0.0,
        validation_fraction=0.0,
        augmentation=None,
        threshold=0.5,
        random_state=0,
    ):
        self.backbone = backbone
        self.backbone_seed = backbone_seed
        self.hidden_units = hidden_units
        self.dropout_rate = dropout_rate
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.unfreeze_schedule = unfreeze_schedule
        self.early_stopping = early_stopping
        self.monitor = monitor
        self.patience = patience
        self.min_delta = min_delta
        self.validation_fraction = validation_fraction
        self.augmentation = augmentation
        self.threshold = threshold
        self.random_state = random_state

    # -- helpers -----------------------------------------------------------

    def _records_and_loader(self, X, y=None, start=0):
        X = check_image_batch(X)
        labels = ["?"] * len(X) if y is None else [str(label) for label in y]
        classes = getattr(self, "classes_", None)
        index = {str(c): i for i, c in enumerate(classes)} if classes is not None else {}
        records = [
            ImageRecord(path=f"memory://{start + i}", label=labels[i], label_index=index.get(labels[i], 0))
            for i in range(len(X))
        ]
        by_path = {r.path: i for i, r in enumerate(records)}

        def loader(source):
            path = getattr(source, "path", source)
            return ImageTensor(values=X[by_path[str(path)]], normalization="raw_0_255")

        return records, loader

    def _preprocessor(self, loader):
        return Preprocessor(
            InputAdapterPolicy("resize", self.model_.backbone.expected_input[:2]),
            self.model_.normalization,
            loader=loader,
        )

    # -- sklearn API --------------------------------------------------------

    def fit(self, X, y):
        X = check_image_batch(X)
        y = np.asarray(y)
        if y.ndim != 1 or len(y) != len(X):
            raise UsageError(f"y must be a length-{len(X)} vector, got shape {y.shape}")
        self.classes_ = np.unique(y)
        n_classes = len(self.classes_)
        if n_classes < 2:
            raise UsageError("fit requires at least two classes")
        mode = "binary_sigmoid" if n_classes == 2 else "multiclass_softmax"
        head_cfg = HeadConfig(
            mode=mode,
            hidden_units=self.hidden_units,
            dropout_rate=self.dropout_rate,
            num_classes=n_classes,
        )
        backbone = create_backbone(self.backbone, seed=self.backbone_seed)
        class_names = tuple(str(c) for c in self.classes_)
        positive = "fire" if "fire" in class_names else class_names[-1]
        self.positive_class_ = positive
        self.model_ = assemble(
            backbone,
            head_cfg,
            InputAdapterPolicy("resize", backbone.expected_input[:2]),
            seed=self.random_state,
            class_names=class_names,
            positive_class=positive,
        )
        records, loader = self._records_and_loader(X, y)
        if self.validation_fraction > 0:
            rng = np.random.default_rng(self.random_state)
            order = rng.permutation(len(records))
            n_val = max(1, int(round(self.validation_fraction * len(records))))
            val = [records[i] for i in order[:n_val]]
            tr = [records[i] for i in order[n_val:]]
        else:
            tr, val = records, records
        cfg = TrainingConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            early_stopping=EarlyStoppingConfig(
                enabled=self.early_stopping,
                monitor=self.monitor,
                patience=self.patience,
                min_delta=self.min_delta,
            ),
            unfreeze_schedule=tuple(self.unfreeze_schedule),
            seed=self.random_state,
        )
        splits = SplitAssignment(train=tr, validation=val, test=[])
        spec = self.augmentation
        if spec is not None and not isinstance(spec, AugmentationSpec):
            spec = AugmentationSpec(**spec)
        preprocess = self._preprocessor(loader)
        _, self.history_ = train(
            self.model_, splits, cfg, augmentation=spec, preprocess=preprocess
        )
        return self

    def predict_proba(self, X):
        self._check_fitted()
        records, loader = self._records_and_loader(X)
        preprocess = self._preprocessor(loader)
        batches = make_batches(records, self.batch_size, preprocess=preprocess)
        chunks = [self.model_.predict_proba(b) for b in batches]
        scores = np.concatenate([np.atleast_1d(c) if c.ndim == 1 else c for c in chunks])
        if self.model_.head_cfg.mode == "binary_sigmoid":
            pos = list(self.classes_).index(
                _match_class(self.classes_, self.positive_class_)
            )
            proba = np.zeros((len(scores), 2))
            proba[:, pos] = scores
            proba[:, 1 - pos] = 1.0 - scores
            return proba
        return scores

    def predict(self, X):
        proba = self.predict_proba(X)
        if self.model_.head_cfg.mode == "binary_sigmoid":
            pos = list(self.classes_).index(_match_class(self.classes_, self.positive_class_))
            return np.where(proba[:, pos] >= self.threshold, self.classes_[pos], self.classes_[1 - pos])
        return self.classes_[proba.argmax(axis=1)]

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise UsageError("this FireClassifier instance is not fitted yet; call fit first")


def _match_class(classes, name: str):
    for c in classes:
        if str(c) == name:
            return c
    return classes[-1]
