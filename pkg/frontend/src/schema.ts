/** Response types and validation for the inference service wire format.
 *
 * The UI never invents numbers: a prediction is rendered only after the
 * payload passes this validator, which mirrors the service's published
 * prediction_result.schema.json (including additionalProperties: false).
 */

export interface PredictionResult {
  label: string;
  confidence: number;
  probabilities: Record<string, number>;
  heatmap_png_base64: string | null;
  model_id: string;
  latency_ms: number;
}

export interface ModelInfo {
  backbone: string;
  classes: string[];
  preprocessing_mode: string;
  adversarially_trained: boolean;
  train_config_digest: string;
}

export class SchemaError extends Error {}

const RESULT_KEYS = new Set([
  "label",
  "confidence",
  "probabilities",
  "heatmap_png_base64",
  "model_id",
  "latency_ms",
]);

function isUnitNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value) && value >= 0 && value <= 1;
}

export function validatePredictionResult(payload: unknown): PredictionResult {
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    throw new SchemaError("payload is not an object");
  }
  const record = payload as Record<string, unknown>;
  for (const key of Object.keys(record)) {
    if (!RESULT_KEYS.has(key)) throw new SchemaError(`unexpected field ${key}`);
  }
  for (const key of RESULT_KEYS) {
    if (!(key in record)) throw new SchemaError(`missing field ${key}`);
  }
  if (typeof record.label !== "string") throw new SchemaError("label must be a string");
  if (!isUnitNumber(record.confidence)) throw new SchemaError("confidence must lie in [0, 1]");
  if (typeof record.model_id !== "string") throw new SchemaError("model_id must be a string");
  if (typeof record.latency_ms !== "number" || record.latency_ms < 0) {
    throw new SchemaError("latency_ms must be a nonnegative number");
  }
  if (record.heatmap_png_base64 !== null && typeof record.heatmap_png_base64 !== "string") {
    throw new SchemaError("heatmap_png_base64 must be a string or null");
  }
  const probs = record.probabilities;
  if (typeof probs !== "object" || probs === null || Array.isArray(probs)) {
    throw new SchemaError("probabilities must be an object");
  }
  for (const [name, value] of Object.entries(probs)) {
    if (!isUnitNumber(value)) throw new SchemaError(`probability for ${name} must lie in [0, 1]`);
  }
  const probabilities = probs as Record<string, number>;
  if (!(record.label in probabilities)) {
    throw new SchemaError("label is not one of the probability keys");
  }
  return record as unknown as PredictionResult;
}

export function validateModelInfo(payload: unknown): ModelInfo {
  if (typeof payload !== "object" || payload === null) {
    throw new SchemaError("model info is not an object");
  }
  const record = payload as Record<string, unknown>;
  if (!Array.isArray(record.classes) || record.classes.some((c) => typeof c !== "string")) {
    throw new SchemaError("classes must be an array of strings");
  }
  if (typeof record.backbone !== "string") throw new SchemaError("backbone must be a string");
  return record as unknown as ModelInfo;
}
