"""Transfer-learning classifiers: build, train, persist, predict.

Two backbones are supported (InceptionV3 and Xception), each initialized
from ImageNet weights when those are reachable and topped with a global
average pooling + dense softmax head. Training minimizes categorical
cross-entropy with Adam, shuffles with a seeded generator, and early-stops
on validation loss with best-weight restoration.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import threading
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import tensorflow as tf

from .dataset import (
    IMAGE_SIZE,
    DatasetManifest,
    ImageStore,
    PreprocessedImage,
    PreprocessingMode,
    SplitAssignment,
    Subset,
    unit_to_symmetric,
)
from .errors import (
    ArtifactLoadError,
    InvalidConfigError,
    InvalidSplitError,
    LeafLifeError,
    ModeMismatchError,
    NotFoundError,
    UnsupportedBackboneError,
)

logger = logging.getLogger(__name__)

GAP_LAYER = "gap"
LOGITS_LAYER = "logits"
PROBS_LAYER = "probabilities"

# Stock ImageNet weight files for the two supported backbones (headless).
_PRETRAINED_WEIGHTS = {
    "xception": (
        "xception_weights_tf_dim_ordering_tf_kernels_notop.h5",
        "https://storage.googleapis.com/tensorflow/keras-applications/xception/"
        "xception_weights_tf_dim_ordering_tf_kernels_notop.h5",
    ),
    "inception_v3": (
        "inception_v3_weights_tf_dim_ordering_tf_kernels_notop.h5",
        "https://storage.googleapis.com/tensorflow/keras-applications/inception_v3/"
        "inception_v3_weights_tf_dim_ordering_tf_kernels_notop.h5",
    ),
}


class Backbone(str, Enum):
    INCEPTION_V3 = "inception_v3"
    XCEPTION = "xception"


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults mirror the Xception setup."""

    backbone: Backbone = Backbone.XCEPTION
    num_classes: int = 4
    batch_size: int = 32
    learning_rate: float = 1e-4
    max_epochs: int = 54
    early_stop_patience: int = 5
    early_stop_monitor: str = "val_loss"
    seed: int = 42
    freeze_backbone: bool = False
    augmentation: str = "none"
    # None: try ImageNet weights, fall back to random init with a warning.
    # True: require them. False: random init, no download attempt.
    pretrained: Optional[bool] = None

    def __post_init__(self) -> None:
        if not isinstance(self.backbone, Backbone):
            try:
                self.backbone = Backbone(str(self.backbone).lower())
            except ValueError:
                raise UnsupportedBackboneError(
                    f"unknown backbone {self.backbone!r}; "
                    f"supported: {[b.value for b in Backbone]}"
                ) from None

    def validate(self) -> None:
        if self.num_classes < 2:
            raise InvalidConfigError("num_classes must be >= 2")
        if self.batch_size < 1:
            raise InvalidConfigError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidConfigError("learning_rate must be > 0")
        if self.max_epochs < 1:
            raise InvalidConfigError("max_epochs must be >= 1")
        if self.early_stop_patience < 0:
            raise InvalidConfigError("early_stop_patience must be >= 0")
        if self.early_stop_monitor != "val_loss":
            raise InvalidConfigError("only val_loss monitoring is supported")
        if self.augmentation != "none":
            raise InvalidConfigError("augmentation is not supported; use 'none'")

    def to_json(self) -> dict:
        payload = asdict(self)
        payload["backbone"] = self.backbone.value
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "TrainConfig":
        return cls(**payload)

    def digest(self, extra: Optional[dict] = None) -> str:
        payload = self.to_json()
        if extra:
            payload.update(extra)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _try_load_pretrained(base: tf.keras.Model, backbone: Backbone, policy: Optional[bool]) -> bool:
    """Load ImageNet weights into ``base`` per the pretrained policy."""
    if policy is False:
        return False
    fname, origin = _PRETRAINED_WEIGHTS[backbone.value]
    try:
        path = tf.keras.utils.get_file(fname, origin, cache_subdir="models")
        base.load_weights(path)
        return True
    except Exception as exc:
        if policy is True:
            raise LeafLifeError(
                f"pretrained weights for {backbone.value} are required but "
                f"could not be fetched: {exc}"
            ) from exc
        logger.warning(
            "pretrained weights for %s unavailable (%s); using random initialization",
            backbone.value, exc,
        )
        return False


def _calibrate_batchnorm(base: tf.keras.Model, seed: int) -> None:
    """Set BatchNorm moving statistics from one seeded noise batch.

    A randomly initialized backbone keeps the stock moving statistics
    (mean 0, variance 1), which are so far from the activations' true
    moments that inference-mode outputs collapse toward zero after a few
    dozen layers. One momentum-zero forward pass pins every layer's
    statistics to observed values, so a random-init backbone still works
    as a (weak but non-degenerate) frozen feature extractor.
    """
    bn_layers = [
        layer for layer in base.layers
        if isinstance(layer, tf.keras.layers.BatchNormalization)
    ]
    if not bn_layers:
        return
    saved = [bn.momentum for bn in bn_layers]
    for bn in bn_layers:
        bn.momentum = 0.0
    noise = np.random.default_rng(seed).uniform(
        -1.0, 1.0, size=(4, IMAGE_SIZE, IMAGE_SIZE, 3)
    ).astype(np.float32)
    base(tf.constant(noise), training=True)
    for bn, momentum in zip(bn_layers, saved):
        bn.momentum = momentum


def build_classifier(config: TrainConfig) -> tf.keras.Model:
    """Build the transfer-learning classifier described by ``config``.

    The backbone keeps its published topology minus the classification top;
    the new head is global average pooling into a dense softmax over
    ``num_classes``. All layers live in one flat graph so feature maps are
    addressable by name (the explanation module relies on this). Building
    twice with the same seed yields identical initial weights.
    """
    config.validate()
    tf.keras.utils.set_random_seed(config.seed)

    inputs = tf.keras.Input(shape=(IMAGE_SIZE, IMAGE_SIZE, 3), name="image")
    if config.backbone is Backbone.XCEPTION:
        base = tf.keras.applications.Xception(
            include_top=False, weights=None, input_tensor=inputs
        )
    elif config.backbone is Backbone.INCEPTION_V3:
        base = tf.keras.applications.InceptionV3(
            include_top=False, weights=None, input_tensor=inputs
        )
    else:  # pragma: no cover - enum is closed
        raise UnsupportedBackboneError(f"unknown backbone {config.backbone!r}")

    pretrained_loaded = _try_load_pretrained(base, config.backbone, config.pretrained)
    if not pretrained_loaded:
        _calibrate_batchnorm(base, config.seed)
    if config.freeze_backbone:
        base.trainable = False

    x = tf.keras.layers.GlobalAveragePooling2D(name=GAP_LAYER)(base.output)
    logits = tf.keras.layers.Dense(config.num_classes, name=LOGITS_LAYER)(x)
    probs = tf.keras.layers.Softmax(name=PROBS_LAYER)(logits)
    model = tf.keras.Model(inputs, probs, name=f"{config.backbone.value}_classifier")
    model._leaflife_pretrained = pretrained_loaded
    return model


class EarlyStopper:
    """Validation-loss early stopping with best-weight snapshots.

    An epoch improves when its loss is strictly below the best seen. After
    ``max(patience, 1)`` consecutive non-improving epochs, ``update``
    returns True. The weights passed on the improving epoch are kept so the
    caller can restore the best state.
    """

    def __init__(self, patience: int):
        if patience < 0:
            raise InvalidConfigError("patience must be >= 0")
        self.patience = patience
        self.best_loss = float("inf")
        self.best_epoch = 0
        self.best_weights = None
        self.wait = 0
        self.stopped_epoch = 0

    def update(self, epoch: int, val_loss: float, weights=None) -> bool:
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_weights = weights
            self.wait = 0
            return False
        self.wait += 1
        if self.wait >= max(self.patience, 1):
            self.stopped_epoch = epoch
            return True
        return False


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord]
    best_epoch: int
    stopped_epoch: int

    @property
    def val_losses(self) -> list[float]:
        return [r.val_loss for r in self.records]

    @property
    def train_accuracies(self) -> list[float]:
        return [r.train_acc for r in self.records]

    def best_record(self) -> EpochRecord:
        return self.records[self.best_epoch - 1]

    def to_csv(self, path: "Path | str") -> None:
        lines = ["epoch,train_loss,train_acc,val_loss,val_acc"]
        for r in self.records:
            lines.append(
                f"{r.epoch},{r.train_loss:.6f},{r.train_acc:.6f},"
                f"{r.val_loss:.6f},{r.val_acc:.6f}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


class TrainedModelArtifact:
    """A trained model plus the metadata every downstream consumer needs."""

    WEIGHTS_FILE = "weights.keras"
    METADATA_FILE = "metadata.json"

    def __init__(self, model: tf.keras.Model, metadata: dict):
        if len(metadata["class_names"]) != model.output_shape[-1]:
            raise ArtifactLoadError(
                "classifier head width does not match class_names length"
            )
        self.model = model
        self.metadata = metadata
        self._lock = threading.Lock()

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(self.metadata["class_names"])

    @property
    def preprocessing_mode(self) -> PreprocessingMode:
        return PreprocessingMode(self.metadata["preprocessing_mode"])

    @property
    def model_id(self) -> str:
        return self.metadata["model_id"]

    def save(self, model_dir: "Path | str") -> Path:
        model_dir = Path(model_dir)
        model_dir.mkdir(parents=True, exist_ok=True)
        self.model.save(model_dir / self.WEIGHTS_FILE)
        (model_dir / self.METADATA_FILE).write_text(
            json.dumps(self.metadata, indent=2, sort_keys=True) + "\n"
        )
        return model_dir

    @classmethod
    def load(cls, model_dir: "Path | str") -> "TrainedModelArtifact":
        model_dir = Path(model_dir)
        if not model_dir.exists():
            raise NotFoundError(f"artifact directory does not exist: {model_dir}")
        weights = model_dir / cls.WEIGHTS_FILE
        meta_path = model_dir / cls.METADATA_FILE
        if not weights.exists() or not meta_path.exists():
            raise ArtifactLoadError(
                f"artifact at {model_dir} is incomplete "
                f"(need {cls.WEIGHTS_FILE} and {cls.METADATA_FILE})"
            )
        try:
            metadata = json.loads(meta_path.read_text())
            model = tf.keras.models.load_model(weights, compile=False)
        except Exception as exc:
            raise ArtifactLoadError(f"cannot load artifact at {model_dir}: {exc}") from exc
        return cls(model, metadata)


def build_metadata(
    config: TrainConfig,
    class_names: Sequence[str],
    *,
    pretrained_loaded: bool,
    epsilon: Optional[float] = None,
    adv_fraction: Optional[float] = None,
) -> dict:
    adversarial = bool(epsilon and epsilon > 0 and adv_fraction and adv_fraction > 0)
    extra = None
    if epsilon is not None:
        extra = {"epsilon": epsilon, "adv_fraction": adv_fraction}
    digest = config.digest(extra)
    tag = f"{config.backbone.value}"
    if adversarial:
        tag += f"-adv{epsilon:g}"
    return {
        "backbone": config.backbone.value,
        "class_names": list(class_names),
        "preprocessing_mode": PreprocessingMode.SCALE_SYMMETRIC.value,
        "train_config_digest": digest,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "framework_version": f"tensorflow-{tf.__version__}",
        "model_id": f"{tag}-{digest[:8]}",
        "adversarially_trained": adversarial,
        "epsilon": epsilon,
        "pretrained_backbone": pretrained_loaded,
    }


def one_hot(labels: Sequence[int], num_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), num_classes), dtype=np.float32)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _subset_items(split: SplitAssignment, manifest: DatasetManifest, subset: Subset):
    items = split.subset_items(manifest, subset)
    paths = [p for p, _ in items]
    labels = np.array([i for _, i in items], dtype=np.int64)
    return paths, labels


def _check_consistency(split: SplitAssignment, manifest: DatasetManifest, config: TrainConfig):
    manifest_paths = {p for p, _ in manifest.entries}
    if set(split.assignment) != manifest_paths:
        raise InvalidSplitError("split assignment does not cover the manifest exactly")
    if config.num_classes != manifest.num_classes:
        raise InvalidConfigError(
            f"config.num_classes={config.num_classes} but manifest has "
            f"{manifest.num_classes} classes"
        )


def _evaluate_logits(logits_fn, store, paths, labels_onehot, batch_size) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over ``paths`` in the given order."""
    total_loss = 0.0
    correct = 0
    for lo in range(0, len(paths), batch_size):
        chunk = paths[lo : lo + batch_size]
        y = labels_onehot[lo : lo + batch_size]
        x = unit_to_symmetric(store.batch(chunk))
        logits = logits_fn(x)
        ce = tf.nn.softmax_cross_entropy_with_logits(labels=y, logits=logits).numpy()
        total_loss += float(ce.sum())
        correct += int((np.argmax(logits, axis=1) == np.argmax(y, axis=1)).sum())
    n = len(paths)
    return total_loss / n, correct / n


def fit_model(
    model: tf.keras.Model,
    split: SplitAssignment,
    manifest: DatasetManifest,
    config: TrainConfig,
    *,
    epsilon: float = 0.0,
    adv_fraction: float = 0.0,
    perturb_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    class_weight: Optional[dict[int, float]] = None,
    use_feature_cache: Optional[bool] = None,
    store: Optional[ImageStore] = None,
) -> TrainingHistory:
    """Run the training loop on ``model`` in place and return its history.

    Each epoch shuffles the training subset with a generator seeded from
    ``config.seed``, optionally replaces the leading ``adv_fraction`` of
    every batch with ``perturb_fn`` outputs, evaluates the clean validation
    subset, and applies the early-stopping contract. On return the weights
    of the best epoch are restored into ``model``.

    ``use_feature_cache`` picks the frozen-backbone fast path (precompute
    pooled backbone features once, train only the head); it is numerically
    identical to the full path and is selected automatically whenever the
    backbone is frozen and no perturbation is requested.
    """
    config.validate()
    _check_consistency(split, manifest, config)
    train_paths, train_labels = _subset_items(split, manifest, Subset.TRAIN)
    val_paths, val_labels = _subset_items(split, manifest, Subset.VAL)
    if not train_paths or not val_paths:
        raise InvalidSplitError("TRAIN and VAL subsets must both be non-empty")

    mixing = epsilon > 0 and adv_fraction > 0 and perturb_fn is not None
    if use_feature_cache is None:
        use_feature_cache = config.freeze_backbone and not mixing
    if use_feature_cache and mixing:
        raise InvalidConfigError("feature cache cannot be combined with input perturbation")

    store = store or ImageStore(manifest.root_path)
    rng = np.random.default_rng(config.seed)
    y_train = one_hot(train_labels, config.num_classes)
    y_val = one_hot(val_labels, config.num_classes)
    sample_weights = None
    if class_weight:
        sample_weights = np.array(
            [class_weight.get(int(l), 1.0) for l in train_labels], dtype=np.float32
        )

    if use_feature_cache:
        return _fit_frozen_head(
            model, store, train_paths, y_train, val_paths, y_val, config,
            rng, sample_weights,
        )
    return _fit_full(
        model, store, train_paths, y_train, val_paths, y_val, config,
        rng, sample_weights, adv_fraction if mixing else 0.0,
        perturb_fn if mixing else None,
    )


def _fit_full(model, store, train_paths, y_train, val_paths, y_val, config,
              rng, sample_weights, adv_fraction, perturb_fn) -> TrainingHistory:
    logits_model = tf.keras.Model(model.inputs, model.get_layer(LOGITS_LAYER).output)
    optimizer = tf.keras.optimizers.Adam(config.learning_rate)
    trainable = logits_model.trainable_variables
    optimizer.build(trainable)

    @tf.function(reduce_retracing=True)
    def train_step(x, y, w):
        with tf.GradientTape() as tape:
            logits = logits_model(x, training=True)
            ce = tf.nn.softmax_cross_entropy_with_logits(labels=y, logits=logits)
            loss = tf.reduce_sum(ce * w) / tf.reduce_sum(w)
        grads = tape.gradient(loss, trainable)
        optimizer.apply_gradients(zip(grads, trainable))
        return ce, logits

    def eval_logits(x):
        return logits_model(tf.constant(x), training=False).numpy()

    stopper = EarlyStopper(config.early_stop_patience)
    records: list[EpochRecord] = []
    n_train = len(train_paths)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        epoch_correct = 0
        for lo in range(0, n_train, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            x_unit = store.batch([train_paths[i] for i in idx])
            y = y_train[idx]
            if perturb_fn is not None:
                k = int(round(len(idx) * adv_fraction))
                if k:
                    x_unit = x_unit.copy()
                    x_unit[:k] = perturb_fn(x_unit[:k], y[:k])
            w = sample_weights[idx] if sample_weights is not None else np.ones(len(idx), np.float32)
            x = unit_to_symmetric(x_unit)
            ce, logits = train_step(tf.constant(x), tf.constant(y), tf.constant(w))
            epoch_loss += float(tf.reduce_sum(ce).numpy())
            epoch_correct += int(
                (np.argmax(logits.numpy(), axis=1) == np.argmax(y, axis=1)).sum()
            )
        val_loss, val_acc = _evaluate_logits(
            eval_logits, store, val_paths, y_val, config.batch_size
        )
        records.append(EpochRecord(
            epoch, epoch_loss / n_train, epoch_correct / n_train, val_loss, val_acc
        ))
        improved_weights = model.get_weights() if val_loss < stopper.best_loss else None
        if stopper.update(epoch, val_loss, improved_weights):
            break

    if stopper.best_weights is not None:
        model.set_weights(stopper.best_weights)
    last_epoch = records[-1].epoch
    return TrainingHistory(records, stopper.best_epoch or last_epoch, last_epoch)


def _fit_frozen_head(model, store, train_paths, y_train, val_paths, y_val, config,
                     rng, sample_weights) -> TrainingHistory:
    """Frozen-backbone path: cache pooled features, train a head clone."""
    feature_model = tf.keras.Model(model.inputs, model.get_layer(GAP_LAYER).output)

    def extract(paths):
        feats = []
        for lo in range(0, len(paths), config.batch_size):
            x = unit_to_symmetric(store.batch(paths[lo : lo + config.batch_size]))
            feats.append(feature_model(tf.constant(x), training=False).numpy())
        return np.concatenate(feats, axis=0)

    f_train = extract(train_paths)
    f_val = extract(val_paths)

    dense = model.get_layer(LOGITS_LAYER)
    head_in = tf.keras.Input(shape=(f_train.shape[1],))
    head_dense = tf.keras.layers.Dense(config.num_classes, name="logits_head")
    head_model = tf.keras.Model(head_in, head_dense(head_in))
    head_dense.set_weights(dense.get_weights())
    optimizer = tf.keras.optimizers.Adam(config.learning_rate)
    optimizer.build(head_model.trainable_variables)

    @tf.function(reduce_retracing=True)
    def train_step(f, y, w):
        with tf.GradientTape() as tape:
            logits = head_model(f, training=True)
            ce = tf.nn.softmax_cross_entropy_with_logits(labels=y, logits=logits)
            loss = tf.reduce_sum(ce * w) / tf.reduce_sum(w)
        grads = tape.gradient(loss, head_model.trainable_variables)
        optimizer.apply_gradients(zip(grads, head_model.trainable_variables))
        return ce, logits

    stopper = EarlyStopper(config.early_stop_patience)
    records: list[EpochRecord] = []
    n_train = len(train_paths)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        epoch_correct = 0
        for lo in range(0, n_train, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            w = sample_weights[idx] if sample_weights is not None else np.ones(len(idx), np.float32)
            ce, logits = train_step(
                tf.constant(f_train[idx]), tf.constant(y_train[idx]), tf.constant(w)
            )
            epoch_loss += float(tf.reduce_sum(ce).numpy())
            epoch_correct += int(
                (np.argmax(logits.numpy(), axis=1) == np.argmax(y_train[idx], axis=1)).sum()
            )
        val_logits = head_model(tf.constant(f_val), training=False)
        val_ce = tf.nn.softmax_cross_entropy_with_logits(labels=y_val, logits=val_logits)
        val_loss = float(tf.reduce_mean(val_ce).numpy())
        val_acc = float(
            (np.argmax(val_logits.numpy(), axis=1) == np.argmax(y_val, axis=1)).mean()
        )
        records.append(EpochRecord(
            epoch, epoch_loss / n_train, epoch_correct / n_train, val_loss, val_acc
        ))
        improved = [w_.copy() for w_ in head_dense.get_weights()] if val_loss < stopper.best_loss else None
        if stopper.update(epoch, val_loss, improved):
            break

    if stopper.best_weights is not None:
        head_dense.set_weights(stopper.best_weights)
    dense.set_weights(head_dense.get_weights())
    last_epoch = records[-1].epoch
    return TrainingHistory(records, stopper.best_epoch or last_epoch, last_epoch)


def train(
    model: tf.keras.Model,
    split: SplitAssignment,
    manifest: DatasetManifest,
    config: TrainConfig,
    *,
    class_weight: Optional[dict[int, float]] = None,
    use_feature_cache: Optional[bool] = None,
) -> tuple[TrainedModelArtifact, TrainingHistory]:
    """Train ``model`` on the split's TRAIN subset and return the best-epoch artifact."""
    history = fit_model(
        model, split, manifest, config,
        class_weight=class_weight, use_feature_cache=use_feature_cache,
    )
    metadata = build_metadata(
        config, manifest.classes,
        pretrained_loaded=getattr(model, "_leaflife_pretrained", False),
    )
    return TrainedModelArtifact(model, metadata), history


def predict_batch(
    artifact: TrainedModelArtifact,
    images: "Sequence[PreprocessedImage] | np.ndarray",
    batch_size: int = 32,
) -> np.ndarray:
    """Class probabilities for a batch; rows sum to 1, deterministic per input.

    ``images`` may be PreprocessedImage objects (their mode must match the
    artifact) or an already-stacked array in the artifact's input space.
    """
    num_classes = len(artifact.class_names)
    if isinstance(images, np.ndarray):
        batch = images.astype(np.float32, copy=False)
        if batch.size == 0:
            return np.zeros((0, num_classes), dtype=np.float32)
    else:
        if len(images) == 0:
            return np.zeros((0, num_classes), dtype=np.float32)
        expected = artifact.preprocessing_mode
        for img in images:
            if img.mode is not expected:
                raise ModeMismatchError(
                    f"image mode {img.mode.value} does not match artifact mode {expected.value}"
                )
        batch = np.stack([img.pixels for img in images])

    outputs = []
    with artifact._lock:
        for lo in range(0, len(batch), batch_size):
            chunk = tf.constant(batch[lo : lo + batch_size])
            outputs.append(artifact.model(chunk, training=False).numpy())
    return np.concatenate(outputs, axis=0)


def validation_metrics(
    artifact: TrainedModelArtifact,
    split: SplitAssignment,
    manifest: DatasetManifest,
    batch_size: int = 32,
) -> tuple[float, float]:
    """Recompute (val_loss, val_acc) for an artifact; used to audit restoration."""
    val_paths, val_labels = _subset_items(split, manifest, Subset.VAL)
    store = ImageStore(manifest.root_path)
    logits_model = tf.keras.Model(
        artifact.model.inputs, artifact.model.get_layer(LOGITS_LAYER).output
    )
    y_val = one_hot(val_labels, len(artifact.class_names))
    return _evaluate_logits(
        lambda x: logits_model(tf.constant(x), training=False).numpy(),
        store, val_paths, y_val, batch_size,
    )
