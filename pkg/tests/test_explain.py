"""Grad-CAM and occlusion oracles, normalization rules, and overlays."""

import json

import numpy as np
import pytest
from PIL import Image

from conftest import make_conv_toy, make_gradcam_toy
from leaflife.dataset import PreprocessingMode, load_and_preprocess
from leaflife.errors import (
    InvalidAlphaError,
    InvalidClassError,
    InvalidGeometryError,
    InvalidLayerError,
)
from leaflife.explain import (
    ExplanationMethod,
    colormap_heatmap,
    grad_cam,
    jet_lut,
    minmax_normalize,
    occlusion_sensitivity,
    render_overlay,
    save_explanation,
)


def hand_toy_image():
    """Channel 0 is [[1,0],[0,0]], channel 1 is [[0,0],[0,1]]."""
    img = np.zeros((2, 2, 2), dtype=np.float32)
    img[0, 0, 0] = 1.0
    img[1, 1, 1] = 1.0
    return img


@pytest.fixture(scope="module")
def hand_toy_model():
    # logits[0] = 4*mean(A1) - 4*mean(A2): channel weights become (1, -1)
    return make_gradcam_toy(head_weights=[[4.0, 0.0], [-4.0, 0.0]])


class TestGradCam:
    def test_hand_computed_case_exact(self, hand_toy_model):
        explanation = grad_cam(hand_toy_model, hand_toy_image(), target_class=0, layer="feat")
        assert np.array_equal(explanation.raw_map, np.array([[1, 0], [0, 0]], dtype=np.float32))
        assert np.array_equal(explanation.heatmap, np.array([[1, 0], [0, 0]], dtype=np.float32))
        assert explanation.raw_extent == (0.0, 1.0)
        assert explanation.method is ExplanationMethod.GRAD_CAM
        assert explanation.layer == "feat"

    def test_constant_raw_map_normalizes_to_zero(self, hand_toy_model):
        img = np.zeros((2, 2, 2), dtype=np.float32)
        img[..., 0] = 0.6  # spatially uniform features
        img[..., 1] = 0.2
        explanation = grad_cam(hand_toy_model, img, target_class=0, layer="feat")
        assert np.all(explanation.raw_map == explanation.raw_map.flat[0])
        assert np.array_equal(explanation.heatmap, np.zeros((2, 2), dtype=np.float32))

    def test_logit_shift_invariance_bitwise(self):
        base = make_gradcam_toy(head_weights=[[4.0, 1.0], [-4.0, 2.0]], bias=(0.0, 0.0))
        shifted = make_gradcam_toy(head_weights=[[4.0, 1.0], [-4.0, 2.0]], bias=(3.7, 3.7))
        img = np.array(
            [[[0.3, 0.9], [0.1, 0.4]], [[0.8, 0.2], [0.5, 0.7]]], dtype=np.float32
        )
        first = grad_cam(base, img, target_class=0, layer="feat")
        second = grad_cam(shifted, img, target_class=0, layer="feat")
        assert np.array_equal(first.heatmap, second.heatmap)
        assert first.raw_extent == second.raw_extent

    def test_raw_map_nonnegative_and_heatmap_in_unit_range(self):
        rng = np.random.default_rng(9)
        model = make_conv_toy(num_classes=3, side=8, seed=9)
        for _ in range(5):
            img = rng.uniform(-1, 1, size=(8, 8, 3)).astype(np.float32)
            explanation = grad_cam(model, img)
            assert explanation.raw_map.min() >= 0.0
            assert explanation.heatmap.min() >= 0.0
            assert explanation.heatmap.max() <= 1.0
            if explanation.raw_extent[1] > explanation.raw_extent[0]:
                assert explanation.heatmap.max() == pytest.approx(1.0)

    def test_auto_target_is_argmax(self, hand_toy_model):
        img = hand_toy_image()
        probs = hand_toy_model(img[None], training=False).numpy()[0]
        explanation = grad_cam(hand_toy_model, img)
        assert explanation.target_class == int(probs.argmax())

    def test_out_of_range_class(self, hand_toy_model):
        with pytest.raises(InvalidClassError):
            grad_cam(hand_toy_model, hand_toy_image(), target_class=5)

    def test_layer_without_spatial_dims(self, hand_toy_model):
        with pytest.raises(InvalidLayerError):
            grad_cam(hand_toy_model, hand_toy_image(), layer="logits")

    def test_unknown_layer_name(self, hand_toy_model):
        with pytest.raises(InvalidLayerError):
            grad_cam(hand_toy_model, hand_toy_image(), layer="nope")

    def test_last_conv_resolution(self, hand_toy_model):
        explanation = grad_cam(hand_toy_model, hand_toy_image(), target_class=0)
        assert explanation.layer == "feat"

    def test_probability_target_flag(self, hand_toy_model):
        """use_logits=False differentiates the softmax output instead."""
        explanation = grad_cam(
            hand_toy_model, hand_toy_image(), target_class=0, use_logits=False
        )
        assert explanation.heatmap.shape == (2, 2)
        assert explanation.heatmap.min() >= 0.0 and explanation.heatmap.max() <= 1.0

    def test_determinism(self, hand_toy_model):
        img = hand_toy_image()
        a = grad_cam(hand_toy_model, img, target_class=0)
        b = grad_cam(hand_toy_model, img, target_class=0)
        assert np.array_equal(a.heatmap, b.heatmap)

    def test_real_artifact_heatmap(self, smoke_run, fixture_corpus):
        artifact, _ = smoke_run
        root, manifest, _ = fixture_corpus
        image = load_and_preprocess(root / manifest.entries[0][0], PreprocessingMode.SCALE_SYMMETRIC)
        explanation = grad_cam(artifact, image)
        assert explanation.heatmap.shape == (224, 224)
        assert explanation.heatmap.min() >= 0.0 and explanation.heatmap.max() <= 1.0
        assert explanation.layer is not None


def occlusion_oracle(model, image, target, patch, stride, fill):
    """Brute-force masked-prediction loop, one position at a time."""
    h, w = image.shape[:2]
    p_base = model(image[None], training=False).numpy()[0, target]
    ys = range(0, h - patch + 1, stride)
    xs = range(0, w - patch + 1, stride)
    out = np.zeros((len(ys), len(xs)), dtype=np.float32)
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            masked = image.copy()
            masked[y : y + patch, x : x + patch, :] = fill
            out[i, j] = p_base - model(masked[None], training=False).numpy()[0, target]
    return out


@pytest.fixture(scope="module")
def conv_model():
    return make_conv_toy(num_classes=2, side=8, seed=5)


class TestOcclusion:
    def test_four_position_toy_matches_oracle(self):
        model = make_conv_toy(num_classes=2, side=4, seed=6)
        rng = np.random.default_rng(1)
        img = rng.uniform(0, 1, size=(4, 4, 3)).astype(np.float32)
        explanation = occlusion_sensitivity(
            model, img, target_class=0, patch_size=2, stride=2, fill_value=0.5
        )
        assert explanation.raw_map.shape == (2, 2)  # exactly 4 probe positions
        oracle = occlusion_oracle(model, img, 0, 2, 2, 0.5)
        assert np.array_equal(explanation.raw_map, oracle)

    @pytest.mark.parametrize("patch,stride", [(2, 2), (4, 2), (3, 1)])
    def test_oracle_equivalence(self, conv_model, patch, stride):
        rng = np.random.default_rng(patch * 10 + stride)
        img = rng.uniform(0, 1, size=(8, 8, 3)).astype(np.float32)
        explanation = occlusion_sensitivity(
            conv_model, img, target_class=1, patch_size=patch, stride=stride, fill_value=0.25
        )
        oracle = occlusion_oracle(conv_model, img, 1, patch, stride, 0.25)
        assert explanation.raw_map.shape == oracle.shape
        assert oracle.size <= 64
        assert np.array_equal(explanation.raw_map, oracle)

    def test_full_image_patch_with_identity_fill(self, conv_model):
        img = np.full((8, 8, 3), 0.4, dtype=np.float32)
        explanation = occlusion_sensitivity(
            conv_model, img, target_class=0, patch_size=8, stride=8, fill_value=0.4
        )
        assert explanation.raw_map.shape == (1, 1)
        assert np.array_equal(explanation.raw_map, np.zeros((1, 1), dtype=np.float32))
        assert np.array_equal(explanation.heatmap, np.zeros((8, 8), dtype=np.float32))

    def test_default_fill_is_image_mean(self, conv_model):
        rng = np.random.default_rng(4)
        img = rng.uniform(0, 1, size=(8, 8, 3)).astype(np.float32)
        explanation = occlusion_sensitivity(conv_model, img, target_class=0, patch_size=4, stride=4)
        oracle = occlusion_oracle(conv_model, img, 0, 4, 4, float(img.mean()))
        assert np.array_equal(explanation.raw_map, oracle)

    @pytest.mark.parametrize("patch,stride", [(0, 1), (9, 2), (4, 0), (4, 5)])
    def test_invalid_geometry(self, conv_model, patch, stride):
        img = np.zeros((8, 8, 3), dtype=np.float32)
        with pytest.raises(InvalidGeometryError):
            occlusion_sensitivity(conv_model, img, target_class=0, patch_size=patch, stride=stride)

    def test_out_of_range_class(self, conv_model):
        img = np.zeros((8, 8, 3), dtype=np.float32)
        with pytest.raises(InvalidClassError):
            occlusion_sensitivity(conv_model, img, target_class=9, patch_size=2, stride=2)

    def test_heatmap_matches_image_dims(self, conv_model):
        img = np.random.default_rng(2).uniform(0, 1, (8, 8, 3)).astype(np.float32)
        explanation = occlusion_sensitivity(conv_model, img, target_class=0, patch_size=3, stride=2)
        assert explanation.heatmap.shape == (8, 8)
        assert explanation.method is ExplanationMethod.OCCLUSION

    def test_real_artifact_small_grid(self, smoke_run, fixture_corpus):
        artifact, _ = smoke_run
        root, manifest, _ = fixture_corpus
        image = load_and_preprocess(root / manifest.entries[12][0], PreprocessingMode.SCALE_SYMMETRIC)
        explanation = occlusion_sensitivity(artifact, image, patch_size=112, stride=112)
        assert explanation.raw_map.shape == (2, 2)
        assert explanation.heatmap.shape == (224, 224)


class TestNormalization:
    def test_minmax_spans_unit_interval(self):
        arr = np.array([[2.0, 4.0], [6.0, 10.0]], dtype=np.float32)
        normalized, extent = minmax_normalize(arr)
        assert extent == (2.0, 10.0)
        assert normalized.min() == 0.0 and normalized.max() == 1.0

    def test_constant_rule(self):
        arr = np.full((3, 3), 7.5, dtype=np.float32)
        normalized, extent = minmax_normalize(arr)
        assert extent == (7.5, 7.5)
        assert np.array_equal(normalized, np.zeros((3, 3), dtype=np.float32))


class TestOverlay:
    def test_lut_shape(self):
        lut = jet_lut()
        assert lut.shape == (256, 3)
        assert lut.dtype == np.uint8

    def test_alpha_zero_is_identity(self):
        rng = np.random.default_rng(3)
        original = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
        heatmap = rng.uniform(0, 1, size=(4, 4)).astype(np.float32)
        out = render_overlay(heatmap, original, alpha=0.0)
        assert np.array_equal(out, original)

    def test_alpha_one_is_pure_colormap(self):
        rng = np.random.default_rng(5)
        original = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
        heatmap = rng.uniform(0, 1, size=(4, 4)).astype(np.float32)
        out = render_overlay(heatmap, original, alpha=1.0)
        assert np.array_equal(out, colormap_heatmap(heatmap))

    def test_half_alpha_hand_computed(self):
        heatmap = np.array([[0.0, 1.0], [0.5, 0.25]], dtype=np.float32)
        original = np.array(
            [[[10, 20, 30], [200, 100, 50]], [[0, 0, 0], [255, 255, 255]]], dtype=np.uint8
        )
        lut = jet_lut()
        indices = [[0, 255], [128, 64]]
        expected = np.zeros((2, 2, 3), dtype=np.uint8)
        for i in range(2):
            for j in range(2):
                for c in range(3):
                    value = 0.5 * original[i, j, c] + 0.5 * lut[indices[i][j], c]
                    expected[i, j, c] = int(np.clip(np.rint(value), 0, 255))
        out = render_overlay(heatmap, original, alpha=0.5)
        assert np.array_equal(out, expected)

    @pytest.mark.parametrize("alpha", [-0.01, 1.01])
    def test_invalid_alpha(self, alpha):
        with pytest.raises(InvalidAlphaError):
            render_overlay(np.zeros((2, 2), np.float32), np.zeros((2, 2, 3), np.uint8), alpha=alpha)

    def test_dims_must_match(self):
        with pytest.raises(InvalidGeometryError):
            render_overlay(np.zeros((2, 2), np.float32), np.zeros((3, 3, 3), np.uint8), alpha=0.5)


class TestExport:
    def test_files_and_sidecar(self, hand_toy_model, tmp_path):
        explanation = grad_cam(hand_toy_model, hand_toy_image(), target_class=0, layer="feat")
        original = np.zeros((2, 2, 3), dtype=np.uint8)
        written = save_explanation(explanation, tmp_path, stem="demo", original=original, alpha=0.4)
        assert set(written) == {"heatmap", "overlay", "sidecar"}
        gray = Image.open(written["heatmap"])
        assert gray.mode == "L" and gray.size == (2, 2)
        overlay = Image.open(written["overlay"])
        assert overlay.mode == "RGB"
        sidecar = json.loads(written["sidecar"].read_text())
        assert sidecar == {
            "method": "grad_cam",
            "target_class": 0,
            "raw_min": 0.0,
            "raw_max": 1.0,
            "layer": "feat",
        }
