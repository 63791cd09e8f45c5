"""Saliency maps for trained classifiers: Grad-CAM and occlusion sensitivity.

Both methods produce an Explanation whose heatmap is min-max normalized to
[0, 1] and resampled to the explained image's spatial size. A raw map that
is identically constant normalizes to all zeros rather than dividing by
zero.
"""

from __future__ import annotations

import json
from contextlib import ExitStack, contextmanager
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np
import tensorflow as tf
from PIL import Image

from .dataset import PreprocessedImage
from .errors import (
    InvalidAlphaError,
    InvalidClassError,
    InvalidGeometryError,
    InvalidLayerError,
    ModeMismatchError,
)
from .modeling import LOGITS_LAYER, TrainedModelArtifact

LAST_CONV = "last_conv"
AUTO = "auto"


class ExplanationMethod(str, Enum):
    GRAD_CAM = "grad_cam"
    OCCLUSION = "occlusion"


@dataclass
class Explanation:
    """Normalized heatmap plus the raw values it was derived from."""

    heatmap: np.ndarray  # (H, W) float32 in [0, 1], same spatial size as the input
    target_class: int
    method: ExplanationMethod
    raw_extent: tuple[float, float]  # pre-normalization (min, max) of the upsampled map
    raw_map: np.ndarray  # pre-upsample grid, kept for exact oracle comparisons
    layer: Optional[str] = None

    def sidecar(self) -> dict:
        return {
            "method": self.method.value,
            "target_class": self.target_class,
            "raw_min": float(self.raw_extent[0]),
            "raw_max": float(self.raw_extent[1]),
            "layer": self.layer,
        }


ModelLike = Union[TrainedModelArtifact, tf.keras.Model]


def _resolve(model_or_artifact: ModelLike) -> tuple[tf.keras.Model, Optional[TrainedModelArtifact]]:
    if isinstance(model_or_artifact, TrainedModelArtifact):
        return model_or_artifact.model, model_or_artifact
    return model_or_artifact, None


def _as_array(image, artifact: Optional[TrainedModelArtifact]) -> np.ndarray:
    if isinstance(image, PreprocessedImage):
        if artifact is not None and image.mode is not artifact.preprocessing_mode:
            raise ModeMismatchError(
                f"image mode {image.mode.value} does not match artifact mode "
                f"{artifact.preprocessing_mode.value}"
            )
        return image.pixels
    return np.asarray(image, dtype=np.float32)


def minmax_normalize(arr: np.ndarray) -> tuple[np.ndarray, tuple[float, float]]:
    """Scale to [0, 1]; a constant map becomes all zeros."""
    lo = float(arr.min())
    hi = float(arr.max())
    if hi - lo == 0.0:
        return np.zeros_like(arr, dtype=np.float32), (lo, hi)
    return ((arr - lo) / (hi - lo)).astype(np.float32), (lo, hi)


def _upsample(map2d: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if map2d.shape == shape:
        return map2d.astype(np.float32)
    resized = tf.image.resize(
        map2d[..., None].astype(np.float32), shape, method="bilinear"
    )
    return resized.numpy()[..., 0]


def _resolve_conv_layer(model: tf.keras.Model, layer: str):
    if layer == LAST_CONV:
        spatial = [
            l for l in model.layers
            if not isinstance(l, tf.keras.layers.InputLayer)
            and hasattr(l, "output")
            and len(l.output.shape) == 4
        ]
        if not spatial:
            raise InvalidLayerError("model has no layer with a spatial feature map")
        return spatial[-1]
    try:
        resolved = model.get_layer(layer)
    except ValueError as exc:
        raise InvalidLayerError(f"no layer named {layer!r}") from exc
    if len(resolved.output.shape) != 4:
        raise InvalidLayerError(f"layer {layer!r} has no spatial dimensions")
    return resolved


@contextmanager
def _hook_layer(layer, store: dict, key_in=None, key_out=None, tape=None):
    """Temporarily wrap ``layer.call`` to capture its live input or output.

    Keras 3 detaches the tensors a functional model returns from the tape,
    so gradients against intermediate feature maps require capturing the
    tensor while the forward pass runs and watching it before downstream
    ops consume it.
    """
    original = layer.call

    def wrapped(*args, **kwargs):
        if key_in is not None:
            store[key_in] = args[0]
        out = original(*args, **kwargs)
        if key_out is not None:
            if tape is not None:
                tape.watch(out)
            store[key_out] = out
        return out

    layer.call = wrapped
    try:
        yield
    finally:
        try:
            del layer.call
        except AttributeError:
            layer.call = original


def _score_capture_plan(model: tf.keras.Model, use_logits: bool):
    """Which layer (and which side of it) carries the per-class score."""
    if not use_logits:
        return None, None  # the model output itself
    try:
        return model.get_layer(LOGITS_LAYER), "output"
    except ValueError:
        pass
    last = model.layers[-1]
    if isinstance(last, tf.keras.layers.Softmax):
        return last, "input"
    return None, None


def grad_cam(
    model_or_artifact: ModelLike,
    image,
    target_class: "int | str" = AUTO,
    layer: str = LAST_CONV,
    use_logits: bool = True,
) -> Explanation:
    """Gradient-weighted class activation map for one image.

    Channel weights are the spatial means of the target-class score gradient
    at the chosen feature map; the raw map is the ReLU of the weighted
    channel sum, then bilinearly upsampled to the image size and min-max
    normalized.
    """
    model, artifact = _resolve(model_or_artifact)
    arr = _as_array(image, artifact)
    conv = _resolve_conv_layer(model, layer)
    score_layer, score_side = _score_capture_plan(model, use_logits)

    captured: dict = {}
    x = tf.constant(arr[None])
    with tf.GradientTape() as tape:
        with ExitStack() as stack:
            stack.enter_context(_hook_layer(conv, captured, key_out="conv", tape=tape))
            if score_layer is not None:
                stack.enter_context(_hook_layer(
                    score_layer, captured,
                    key_in="scores" if score_side == "input" else None,
                    key_out="scores" if score_side == "output" else None,
                ))
            outputs = model(x, training=False)
        class_scores = captured.get("scores", outputs)
        num_classes = int(class_scores.shape[-1])
        if target_class == AUTO or target_class is None:
            target = int(tf.argmax(class_scores[0]).numpy())
        else:
            target = int(target_class)
            if not 0 <= target < num_classes:
                raise InvalidClassError(
                    f"target_class {target} out of range [0, {num_classes})"
                )
        score = class_scores[0, target]
    conv_out = captured["conv"]
    grads = tape.gradient(score, conv_out)
    if grads is None:
        raise InvalidLayerError(
            f"class score does not depend on layer {conv.name!r}"
        )
    weights = tf.reduce_mean(grads, axis=(1, 2))  # (1, channels)
    raw = tf.nn.relu(tf.reduce_sum(conv_out * weights[:, None, None, :], axis=-1))[0]
    raw = raw.numpy()

    upsampled = _upsample(raw, arr.shape[:2])
    heatmap, extent = minmax_normalize(upsampled)
    return Explanation(
        heatmap=heatmap,
        target_class=target,
        method=ExplanationMethod.GRAD_CAM,
        raw_extent=extent,
        raw_map=raw,
        layer=conv.name,
    )


def occlusion_sensitivity(
    model_or_artifact: ModelLike,
    image,
    target_class: "int | None" = None,
    patch_size: int = 32,
    stride: int = 16,
    fill_value: Optional[float] = None,
    chunk_size: int = 32,
) -> Explanation:
    """Probability-drop map from sliding an occluding patch over the image.

    Cell (i, j) holds p_base - p_occluded for the patch anchored at
    (i*stride, j*stride). The patch is replaced by ``fill_value`` (the
    image's own mean when omitted, a stand-in for the corpus mean).
    """
    model, artifact = _resolve(model_or_artifact)
    arr = _as_array(image, artifact)
    height, width = arr.shape[:2]
    if not 1 <= patch_size <= min(height, width):
        raise InvalidGeometryError(
            f"patch_size must lie in [1, {min(height, width)}], got {patch_size}"
        )
    if not 1 <= stride <= patch_size:
        raise InvalidGeometryError(f"stride must lie in [1, patch_size], got {stride}")
    fill = float(arr.mean()) if fill_value is None else float(fill_value)

    base_probs = model(tf.constant(arr[None]), training=False).numpy()[0]
    num_classes = base_probs.shape[-1]
    if target_class is None or target_class == AUTO:
        target = int(base_probs.argmax())
    else:
        target = int(target_class)
        if not 0 <= target < num_classes:
            raise InvalidClassError(f"target_class {target} out of range [0, {num_classes})")
    p_base = base_probs[target]

    anchors_y = range(0, height - patch_size + 1, stride)
    anchors_x = range(0, width - patch_size + 1, stride)
    positions = [(y, x) for y in anchors_y for x in anchors_x]
    raw = np.zeros((len(anchors_y), len(anchors_x)), dtype=np.float32)

    for lo in range(0, len(positions), chunk_size):
        chunk = positions[lo : lo + chunk_size]
        occluded = np.repeat(arr[None], len(chunk), axis=0)
        for n, (y, x) in enumerate(chunk):
            occluded[n, y : y + patch_size, x : x + patch_size, :] = fill
        probs = model(tf.constant(occluded), training=False).numpy()[:, target]
        for n, (y, x) in enumerate(chunk):
            raw[y // stride, x // stride] = p_base - probs[n]

    upsampled = _upsample(raw, (height, width))
    heatmap, extent = minmax_normalize(upsampled)
    return Explanation(
        heatmap=heatmap,
        target_class=target,
        method=ExplanationMethod.OCCLUSION,
        raw_extent=extent,
        raw_map=raw,
        layer=None,
    )


_JET_LUT: Optional[np.ndarray] = None


def jet_lut() -> np.ndarray:
    """The packaged 256-entry RGB lookup table used for overlays."""
    global _JET_LUT
    if _JET_LUT is None:
        text = resources.files("leaflife.data").joinpath("jet_colormap.csv").read_text()
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        _JET_LUT = np.array([[int(v) for v in row] for row in rows], dtype=np.uint8)
        if _JET_LUT.shape != (256, 3):
            raise RuntimeError("packaged jet colormap is malformed")
    return _JET_LUT


def colormap_heatmap(heatmap: np.ndarray) -> np.ndarray:
    """Map a [0, 1] heatmap through the jet LUT to RGB bytes."""
    idx = np.clip(np.rint(heatmap * 255.0), 0, 255).astype(np.intp)
    return jet_lut()[idx]


def render_overlay(
    explanation: "Explanation | np.ndarray",
    original: "np.ndarray | Image.Image",
    alpha: float = 0.4,
    colormap: str = "jet",
) -> np.ndarray:
    """Blend the colormapped heatmap over the original image.

    Output pixel = (1 - alpha) * original + alpha * colormap(heatmap),
    rounded and clamped to bytes. alpha 0 reproduces the original exactly;
    alpha 1 is the pure colormapped heatmap.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlphaError(f"alpha must lie in [0, 1], got {alpha}")
    if colormap != "jet":
        raise ValueError(f"unknown colormap {colormap!r}")
    heatmap = explanation.heatmap if isinstance(explanation, Explanation) else explanation
    if isinstance(original, Image.Image):
        original = np.asarray(original.convert("RGB"))
    if original.shape[:2] != heatmap.shape[:2]:
        raise InvalidGeometryError(
            f"original dims {original.shape[:2]} do not match heatmap {heatmap.shape[:2]}"
        )
    colored = colormap_heatmap(heatmap).astype(np.float64)
    blended = (1.0 - alpha) * original.astype(np.float64) + alpha * colored
    return np.clip(np.rint(blended), 0, 255).astype(np.uint8)


def save_explanation(
    explanation: Explanation,
    out_dir: "Path | str",
    stem: str = "explanation",
    original: "np.ndarray | Image.Image | None" = None,
    alpha: float = 0.4,
) -> dict[str, Path]:
    """Write the grayscale heatmap PNG, optional overlay PNG, and sidecar JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    gray = np.clip(np.rint(explanation.heatmap * 255.0), 0, 255).astype(np.uint8)
    heatmap_path = out_dir / f"{stem}_heatmap.png"
    Image.fromarray(gray, mode="L").save(heatmap_path)
    written["heatmap"] = heatmap_path

    if original is not None:
        overlay = render_overlay(explanation, original, alpha=alpha)
        overlay_path = out_dir / f"{stem}_overlay.png"
        Image.fromarray(overlay).save(overlay_path)
        written["overlay"] = overlay_path

    sidecar_path = out_dir / f"{stem}.json"
    sidecar_path.write_text(json.dumps(explanation.sidecar(), indent=2, sort_keys=True) + "\n")
    written["sidecar"] = sidecar_path
    return written
