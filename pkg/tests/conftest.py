"""Shared fixtures: synthetic corpora, toy models, and one smoke-trained artifact."""

import os

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")

import numpy as np
import pytest

from leaflife import synthetic
from leaflife.dataset import scan_dataset, stratified_split


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    """The bundled 3-class x 10-image synthetic corpus, scanned and split."""
    root = synthetic.generate_corpus(tmp_path_factory.mktemp("corpus") / "leaves")
    manifest = scan_dataset(root)
    split = stratified_split(manifest, (0.70, 0.20, 0.10), seed=42)
    return root, manifest, split


@pytest.fixture(scope="session")
def micro_corpus(tmp_path_factory):
    """A 2-class x 4-image corpus for tests that train through the full backbone."""
    root = synthetic.generate_corpus(
        tmp_path_factory.mktemp("micro") / "leaves",
        classes=("blotch", "rust"),
        per_class=4,
        size=128,
    )
    manifest = scan_dataset(root)
    split = stratified_split(manifest, (0.75, 0.25, 0.0), seed=7)
    return root, manifest, split


@pytest.fixture(scope="session")
def smoke_config():
    from leaflife.modeling import TrainConfig

    return TrainConfig(
        backbone="xception",
        num_classes=3,
        batch_size=8,
        learning_rate=0.01,
        max_epochs=30,
        early_stop_patience=30,
        seed=11,
        freeze_backbone=True,
        pretrained=False,
    )


@pytest.fixture(scope="session")
def smoke_run(fixture_corpus, smoke_config):
    """One frozen-backbone training run on the fixture corpus, reused broadly."""
    from leaflife.modeling import build_classifier, train

    _, manifest, split = fixture_corpus
    model = build_classifier(smoke_config)
    artifact, history = train(model, split, manifest, smoke_config)
    return artifact, history


@pytest.fixture(scope="session")
def smoke_artifact_dir(smoke_run, tmp_path_factory):
    artifact, _ = smoke_run
    out = tmp_path_factory.mktemp("artifact") / "model"
    artifact.save(out)
    return out


def make_linear_toy(num_classes=3, side=4, channels=3, seed=123):
    """Flatten -> Dense -> Softmax toy model plus its weights, for FGSM oracles."""
    import tensorflow as tf

    tf.keras.utils.set_random_seed(seed)
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 1.0, size=(side * side * channels, num_classes)).astype(np.float32)
    b = rng.normal(0.0, 0.1, size=(num_classes,)).astype(np.float32)
    inputs = tf.keras.Input((side, side, channels))
    flat = tf.keras.layers.Flatten()(inputs)
    logits = tf.keras.layers.Dense(num_classes, name="logits")(flat)
    probs = tf.keras.layers.Softmax(name="probabilities")(logits)
    model = tf.keras.Model(inputs, probs)
    model.get_layer("logits").set_weights([w, b])
    return model, w, b


def numpy_toy_loss(x_unit, y_onehot, w, b):
    """Float64 replica of the toy model's mean cross-entropy in unit pixel space."""
    x = np.asarray(x_unit, dtype=np.float64)
    z = (2.0 * x - 1.0).reshape(len(x), -1) @ w.astype(np.float64) + b.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-(y_onehot * log_p).sum(axis=1).mean())


def make_gradcam_toy(head_weights, bias=(0.0, 0.0), side=2, channels=2):
    """Linear feature layer -> GAP -> Dense(2) -> Softmax, for Grad-CAM oracles."""
    import tensorflow as tf

    inputs = tf.keras.Input((side, side, channels))
    feat = tf.keras.layers.Activation("linear", name="feat")(inputs)
    pooled = tf.keras.layers.GlobalAveragePooling2D(name="gap")(feat)
    logits = tf.keras.layers.Dense(2, name="logits")(pooled)
    probs = tf.keras.layers.Softmax(name="probabilities")(logits)
    model = tf.keras.Model(inputs, probs)
    model.get_layer("logits").set_weights([
        np.asarray(head_weights, dtype=np.float32),
        np.asarray(bias, dtype=np.float32),
    ])
    return model


def make_conv_toy(num_classes=2, side=8, channels=3, seed=5):
    """Small conv-softmax model for occlusion tests."""
    import tensorflow as tf

    tf.keras.utils.set_random_seed(seed)
    inputs = tf.keras.Input((side, side, channels))
    h = tf.keras.layers.Conv2D(4, 3, padding="same", activation="relu", name="conv")(inputs)
    pooled = tf.keras.layers.GlobalAveragePooling2D()(h)
    logits = tf.keras.layers.Dense(num_classes, name="logits")(pooled)
    probs = tf.keras.layers.Softmax(name="probabilities")(logits)
    return tf.keras.Model(inputs, probs)
