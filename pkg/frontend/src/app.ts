/** Single-page client: upload a leaf photo, read the diagnosis.
 *
 * One request in flight at a time; a new upload aborts the stale one. The
 * overlay is fetched once at alpha 1 and blended client-side. Nothing is
 * rendered from a response that fails schema validation.
 */

import {
  ApiClient,
  DecodeRejectedError,
  NetworkError,
  TooLargeError,
} from "./api.js";
import { renderProbabilityBars, BarsError } from "./bars.js";
import { OverlayView } from "./overlay.js";
import { SchemaError, type PredictionResult } from "./schema.js";

const ACCEPTED_EXTENSIONS = [".jpg", ".jpeg", ".png"];
const DEFAULT_ALPHA = 0.4;

function hasAcceptedExtension(name: string): boolean {
  const lower = name.toLowerCase();
  return ACCEPTED_EXTENSIONS.some((ext) => lower.endsWith(ext));
}

function readAsDataUrl(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(String(reader.result));
    reader.onerror = () => reject(reader.error);
    reader.readAsDataURL(file);
  });
}

export class App {
  readonly dropZone: HTMLElement;
  readonly fileInput: HTMLInputElement;
  readonly status: HTMLElement;
  readonly toast: HTMLElement;
  readonly errorPanel: HTMLElement;
  readonly retryButton: HTMLButtonElement;
  readonly result: HTMLElement;
  readonly labelBadge: HTMLElement;
  readonly confidenceBadge: HTMLElement;
  readonly barsContainer: HTMLElement;
  readonly overlay: OverlayView;

  private classOrder: string[] | null = null;
  private inFlight: AbortController | null = null;
  private lastFile: File | null = null;

  constructor(
    readonly root: HTMLElement,
    private readonly client: ApiClient,
  ) {
    root.innerHTML = "";

    this.dropZone = document.createElement("div");
    this.dropZone.className = "drop-zone";
    this.dropZone.textContent = "Drop a leaf photo here or ";
    this.fileInput = document.createElement("input");
    this.fileInput.type = "file";
    this.fileInput.accept = ACCEPTED_EXTENSIONS.join(",");
    this.dropZone.appendChild(this.fileInput);

    this.status = document.createElement("div");
    this.status.className = "status";

    this.toast = document.createElement("div");
    this.toast.className = "toast";
    this.toast.hidden = true;

    this.errorPanel = document.createElement("div");
    this.errorPanel.className = "error-panel";
    this.errorPanel.hidden = true;
    this.retryButton = document.createElement("button");
    this.retryButton.textContent = "retry";
    this.retryButton.addEventListener("click", () => {
      if (this.lastFile) void this.handleFile(this.lastFile);
    });

    this.result = document.createElement("section");
    this.result.className = "result";
    this.result.hidden = true;
    this.labelBadge = document.createElement("span");
    this.labelBadge.className = "label-badge";
    this.confidenceBadge = document.createElement("span");
    this.confidenceBadge.className = "confidence-badge";
    const headline = document.createElement("div");
    headline.className = "headline";
    headline.append(this.labelBadge, this.confidenceBadge);
    this.barsContainer = document.createElement("div");
    this.barsContainer.className = "bars";
    this.overlay = new OverlayView(DEFAULT_ALPHA);
    this.result.append(headline, this.barsContainer, this.overlay.element);

    root.append(this.dropZone, this.status, this.toast, this.errorPanel, this.result);

    this.fileInput.addEventListener("change", () => {
      const file = this.fileInput.files?.[0];
      if (file) void this.handleFile(file);
    });
    this.dropZone.addEventListener("dragover", (event) => event.preventDefault());
    this.dropZone.addEventListener("drop", (event) => {
      event.preventDefault();
      const file = event.dataTransfer?.files?.[0];
      if (file) void this.handleFile(file);
    });
  }

  /** Fetch the canonical class order; tolerate an unreachable service. */
  async init(): Promise<void> {
    try {
      const info = await this.client.modelInfo();
      this.classOrder = [...info.classes];
    } catch {
      this.classOrder = null; // fall back to sorted probability keys per response
    }
  }

  async handleFile(file: File): Promise<void> {
    if (!hasAcceptedExtension(file.name)) {
      this.showToast("unsupported file type (use .jpg or .png)");
      return; // client-side gate: no network traffic for obvious non-images
    }

    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    this.lastFile = file;
    this.clearMessages();
    this.setBusy(true);

    try {
      // alpha=1 once; the slider blends locally instead of re-requesting
      const prediction = await this.client.predict(file, {
        explain: true,
        alpha: 1.0,
        signal: controller.signal,
      });
      if (controller.signal.aborted) return;
      await this.renderPrediction(file, prediction);
    } catch (err) {
      if (controller.signal.aborted) return; // a newer upload took over
      this.result.hidden = true;
      if (err instanceof DecodeRejectedError) {
        this.showToast("unreadable image");
      } else if (err instanceof TooLargeError) {
        this.showToast(err.message);
      } else if (err instanceof NetworkError) {
        this.showErrorPanel("could not reach the service", true);
      } else if (err instanceof SchemaError || err instanceof BarsError) {
        this.showErrorPanel(`malformed service response: ${err.message}`, false);
      } else {
        this.showErrorPanel("unexpected error", false);
      }
    } finally {
      if (this.inFlight === controller) {
        this.inFlight = null;
        this.setBusy(false);
      }
    }
  }

  private async renderPrediction(file: File, prediction: PredictionResult): Promise<void> {
    const order = this.classOrder ?? Object.keys(prediction.probabilities).sort();
    renderProbabilityBars(this.barsContainer, prediction.probabilities, order);

    this.labelBadge.textContent = prediction.label;
    this.confidenceBadge.textContent = `${(prediction.confidence * 100).toFixed(1)}%`;

    const originalUrl = await readAsDataUrl(file);
    const overlayUrl = prediction.heatmap_png_base64
      ? `data:image/png;base64,${prediction.heatmap_png_base64}`
      : null;
    this.overlay.show(originalUrl, overlayUrl);
    this.result.hidden = false;
  }

  private setBusy(busy: boolean): void {
    this.status.textContent = busy ? "analyzing…" : "";
    this.status.classList.toggle("spinning", busy);
  }

  private clearMessages(): void {
    this.toast.hidden = true;
    this.toast.textContent = "";
    this.errorPanel.hidden = true;
    this.errorPanel.replaceChildren();
  }

  private showToast(message: string): void {
    this.toast.textContent = message;
    this.toast.hidden = false;
  }

  private showErrorPanel(message: string, retryable: boolean): void {
    this.errorPanel.replaceChildren(document.createTextNode(message));
    if (retryable) this.errorPanel.appendChild(this.retryButton);
    this.errorPanel.hidden = false;
  }
}
