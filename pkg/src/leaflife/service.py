"""HTTP inference service: image in, prediction + optional overlay out.

One artifact per process, loaded once at startup and treated as immutable.
Model calls are serialized behind the artifact's internal lock, so
concurrent requests are safe and return identical results for identical
inputs.

Environment: LEAFLIFE_MODEL_DIR, LEAFLIFE_PORT (default 8080),
LEAFLIFE_MAX_UPLOAD_MB (default 10), LEAFLIFE_CORS_ORIGINS
(comma-separated allowlist).
"""

from __future__ import annotations

import base64
import io
import json
import logging
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from fastapi import FastAPI, File, Query, Request, UploadFile
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError

from .dataset import PreprocessingMode, preprocess_pil
from .errors import LeafLifeError
from .explain import grad_cam, render_overlay
from .modeling import TrainedModelArtifact, predict_batch

logger = logging.getLogger(__name__)

DEFAULT_PORT = 8080
DEFAULT_MAX_UPLOAD_MB = 10
DEFAULT_ALPHA = 0.4
ALLOWED_FORMATS = {"JPEG", "PNG"}


@dataclass
class PredictionResult:
    """One classification decision as served to clients."""

    label: str
    confidence: float
    probabilities: dict[str, float]
    heatmap_png_base64: Optional[str]
    model_id: str
    latency_ms: float

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "confidence": self.confidence,
            "probabilities": self.probabilities,
            "heatmap_png_base64": self.heatmap_png_base64,
            "model_id": self.model_id,
            "latency_ms": self.latency_ms,
        }


def prediction_result_schema() -> dict:
    """The published JSON schema every 200 /predict response conforms to."""
    return json.loads(
        resources.files("leaflife.data").joinpath("prediction_result.schema.json").read_text()
    )


def _png_base64(rgb: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(rgb).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def predict_image(
    artifact: TrainedModelArtifact,
    image: Image.Image,
    explain: bool = False,
    alpha: float = DEFAULT_ALPHA,
) -> PredictionResult:
    """Classify one decoded image; optionally attach the Grad-CAM overlay."""
    start = time.perf_counter()
    pre = preprocess_pil(image, PreprocessingMode(artifact.preprocessing_mode))
    probs = predict_batch(artifact, [pre])[0]
    class_names = artifact.class_names
    label_idx = int(probs.argmax())
    probabilities = {name: float(p) for name, p in zip(class_names, probs)}

    heatmap_b64 = None
    if explain:
        explanation = grad_cam(artifact, pre, target_class=label_idx)
        original = np.asarray(
            image.convert("RGB").resize(pre.pixels.shape[:2][::-1], Image.BILINEAR)
        )
        overlay = render_overlay(explanation, original, alpha=alpha)
        heatmap_b64 = _png_base64(overlay)

    return PredictionResult(
        label=class_names[label_idx],
        confidence=float(probs[label_idx]),
        probabilities=probabilities,
        heatmap_png_base64=heatmap_b64,
        model_id=artifact.model_id,
        latency_ms=(time.perf_counter() - start) * 1000.0,
    )


def create_app(
    artifact: "TrainedModelArtifact | Path | str",
    max_upload_mb: int = DEFAULT_MAX_UPLOAD_MB,
    cors_origins: Sequence[str] = (),
) -> FastAPI:
    """Build the FastAPI app around one loaded artifact."""
    if not isinstance(artifact, TrainedModelArtifact):
        artifact = TrainedModelArtifact.load(artifact)
    max_bytes = max_upload_mb * 1024 * 1024
    app = FastAPI(title="leaflife inference service")

    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception):
        logger.exception("request to %s failed", request.url.path)
        return JSONResponse(status_code=500, content={"error": "internal"})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/model-info")
    def model_info():
        meta = artifact.metadata
        return {
            "backbone": meta["backbone"],
            "classes": list(artifact.class_names),
            "preprocessing_mode": meta["preprocessing_mode"],
            "adversarially_trained": bool(meta.get("adversarially_trained", False)),
            "train_config_digest": meta["train_config_digest"],
            "model_id": artifact.model_id,
        }

    @app.post("/predict")
    async def predict(
        image: UploadFile = File(...),
        explain: bool = Query(False),
        alpha: float = Query(DEFAULT_ALPHA, ge=0.0, le=1.0),
    ):
        payload = await image.read()
        if len(payload) > max_bytes:
            return JSONResponse(status_code=413, content={"error": "too_large"})
        try:
            pil = Image.open(io.BytesIO(payload))
            if pil.format not in ALLOWED_FORMATS:
                raise UnidentifiedImageError(f"format {pil.format} not allowed")
            pil.load()
        except (UnidentifiedImageError, OSError, SyntaxError):
            return JSONResponse(status_code=400, content={"error": "decode"})
        result = predict_image(artifact, pil, explain=explain, alpha=alpha)
        return result.to_json()

    return app


def serve(
    artifact_path: "Path | str",
    bind_address: str = "127.0.0.1",
    port: int = DEFAULT_PORT,
    max_upload_mb: int = DEFAULT_MAX_UPLOAD_MB,
    cors_origins: Sequence[str] = (),
) -> None:
    """Load the artifact and serve until interrupted.

    Startup failures (unloadable artifact, busy port) exit nonzero with a
    diagnostic naming the artifact path.
    """
    import uvicorn

    try:
        artifact = TrainedModelArtifact.load(artifact_path)
    except LeafLifeError as exc:
        logger.error("cannot start service from artifact %s: %s", artifact_path, exc)
        print(f"error: cannot start service from artifact {artifact_path}: {exc}", file=sys.stderr)
        raise SystemExit(1)
    app = create_app(artifact, max_upload_mb=max_upload_mb, cors_origins=cors_origins)
    uvicorn.run(app, host=bind_address, port=port)
