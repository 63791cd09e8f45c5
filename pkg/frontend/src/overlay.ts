/** Original image with the heatmap overlay on top.
 *
 * The service is asked for the overlay at alpha 1 exactly once; opacity
 * blending happens here, so dragging the slider never re-requests. At
 * alpha 0 the pristine original is what the user sees.
 */

export class OverlayView {
  readonly element: HTMLElement;
  readonly originalImg: HTMLImageElement;
  readonly overlayImg: HTMLImageElement;
  readonly toggle: HTMLInputElement;
  readonly slider: HTMLInputElement;

  private visible = true;
  private alpha: number;

  constructor(initialAlpha = 0.4) {
    this.alpha = initialAlpha;
    this.element = document.createElement("div");
    this.element.className = "overlay-view";

    const stack = document.createElement("div");
    stack.className = "overlay-stack";
    this.originalImg = document.createElement("img");
    this.originalImg.className = "overlay-original";
    this.originalImg.alt = "uploaded leaf";
    this.overlayImg = document.createElement("img");
    this.overlayImg.className = "overlay-heatmap";
    this.overlayImg.alt = "heatmap overlay";
    stack.append(this.originalImg, this.overlayImg);

    const controls = document.createElement("div");
    controls.className = "overlay-controls";

    const toggleLabel = document.createElement("label");
    this.toggle = document.createElement("input");
    this.toggle.type = "checkbox";
    this.toggle.checked = true;
    this.toggle.addEventListener("change", () => this.setVisible(this.toggle.checked));
    toggleLabel.append(this.toggle, document.createTextNode(" overlay"));

    const sliderLabel = document.createElement("label");
    this.slider = document.createElement("input");
    this.slider.type = "range";
    this.slider.min = "0";
    this.slider.max = "100";
    this.slider.value = String(Math.round(initialAlpha * 100));
    this.slider.addEventListener("input", () => {
      this.setAlpha(Number(this.slider.value) / 100);
    });
    sliderLabel.append(document.createTextNode("opacity "), this.slider);

    controls.append(toggleLabel, sliderLabel);
    this.element.append(stack, controls);
    this.apply();
  }

  show(originalUrl: string, overlayUrl: string | null): void {
    this.originalImg.src = originalUrl;
    if (overlayUrl) {
      this.overlayImg.src = overlayUrl;
      this.overlayImg.dataset.present = "true";
    } else {
      this.overlayImg.removeAttribute("src");
      delete this.overlayImg.dataset.present;
    }
    this.apply();
  }

  setVisible(visible: boolean): void {
    this.visible = visible;
    this.apply();
  }

  setAlpha(alpha: number): void {
    this.alpha = Math.min(1, Math.max(0, alpha));
    this.apply();
  }

  get effectiveOpacity(): number {
    return this.visible && this.overlayImg.dataset.present ? this.alpha : 0;
  }

  private apply(): void {
    this.overlayImg.style.opacity = String(this.effectiveOpacity);
    this.overlayImg.style.display = this.overlayImg.dataset.present ? "" : "none";
  }
}
