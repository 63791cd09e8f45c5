/** Thin typed client over the service endpoints.
 *
 * Error classes map the service's documented failure modes to the messages
 * the UI shows; aborts pass through untouched so stale requests stay silent.
 */

import {
  type ModelInfo,
  type PredictionResult,
  validateModelInfo,
  validatePredictionResult,
} from "./schema.js";

export class DecodeRejectedError extends Error {
  constructor() {
    super("unreadable image");
  }
}

export class TooLargeError extends Error {
  constructor() {
    super("image is too large for the service");
  }
}

export class ServiceError extends Error {}

export class NetworkError extends Error {
  constructor() {
    super("network failure");
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface PredictOptions {
  explain?: boolean;
  alpha?: number;
  signal?: AbortSignal;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async modelInfo(signal?: AbortSignal): Promise<ModelInfo> {
    const response = await this.request(`${this.baseUrl}/model-info`, { signal });
    if (!response.ok) throw new ServiceError(`model-info returned ${response.status}`);
    return validateModelInfo(await response.json());
  }

  async predict(file: File, options: PredictOptions = {}): Promise<PredictionResult> {
    const params = new URLSearchParams();
    params.set("explain", options.explain ? "true" : "false");
    if (options.alpha !== undefined) params.set("alpha", String(options.alpha));
    const body = new FormData();
    body.append("image", file, file.name);

    const response = await this.request(`${this.baseUrl}/predict?${params}`, {
      method: "POST",
      body,
      signal: options.signal,
    });
    if (response.status === 400) throw new DecodeRejectedError();
    if (response.status === 413) throw new TooLargeError();
    if (!response.ok) throw new ServiceError(`predict returned ${response.status}`);
    return validatePredictionResult(await response.json());
  }

  private async request(input: string, init?: RequestInit): Promise<Response> {
    try {
      return await this.fetchFn(input, init);
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") throw err;
      throw new NetworkError();
    }
  }
}
