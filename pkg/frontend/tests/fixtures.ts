import type { PredictionResult } from "../src/schema.js";

/* A valid 16x16 green PNG with a dark spot: a genuine decodable payload. */
export const TINY_PNG_BASE64 =
  "iVBORw0KGgoAAAANSUhEUgAAABAAAAAQCAIAAACQkWg2AAAALUlEQVR4nGOMmubGQApgIkk1XTSwoPHPdZxD5hpVGNHdSfT3NKYvKbVhRGoAAKtHBTZLWRxHAAAAAElFTkSuQmCC";

export const CLASS_ORDER = ["Black Measles", "Black Rot", "Healthy", "Isariopsis Leaf Spot"];

export function fixturePrediction(): PredictionResult {
  return {
    label: "Healthy",
    confidence: 0.97,
    probabilities: {
      "Black Measles": 0.01,
      "Black Rot": 0.01,
      Healthy: 0.97,
      "Isariopsis Leaf Spot": 0.01,
    },
    heatmap_png_base64: TINY_PNG_BASE64,
    model_id: "xception-fixture",
    latency_ms: 12.5,
  };
}

export function pngFile(name = "leaf.png"): File {
  const bytes = Uint8Array.from(atob(TINY_PNG_BASE64), (c) => c.charCodeAt(0));
  return new File([bytes], name, { type: "image/png" });
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export interface RecordedCall {
  input: string;
  init?: RequestInit;
}

/** Scriptable fetch stub: answers from a queue and records every call. */
export function mockTransport(script: Array<Response | Error | ((input: string) => Response)>) {
  const calls: RecordedCall[] = [];
  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    calls.push({ input, init });
    if (init?.signal?.aborted) {
      throw new DOMException("aborted", "AbortError");
    }
    const next = script.shift();
    if (!next) throw new Error("mock transport script exhausted");
    if (next instanceof Error) throw next;
    if (typeof next === "function") return next(input);
    return next;
  };
  return { fetchFn, calls };
}
