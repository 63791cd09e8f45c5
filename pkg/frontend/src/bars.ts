/** Per-class probability bars in canonical class order. */

export class BarsError extends Error {}

/** Index of the highlighted (argmax) bar; ties go to the first class in order. */
export function argmaxIndex(values: number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    const current = values[i] ?? Number.NEGATIVE_INFINITY;
    const champion = values[best] ?? Number.NEGATIVE_INFINITY;
    if (current > champion) best = i;
  }
  return best;
}

export function renderProbabilityBars(
  root: HTMLElement,
  probabilities: Record<string, number>,
  classOrder: string[],
): void {
  const values = classOrder.map((name) => {
    const value = probabilities[name];
    if (typeof value !== "number" || !Number.isFinite(value) || value < 0 || value > 1) {
      throw new BarsError(`missing or invalid probability for class ${name}`);
    }
    return value;
  });
  const highlighted = argmaxIndex(values);

  const fragment = document.createDocumentFragment();
  classOrder.forEach((name, i) => {
    const value = values[i] ?? 0;
    const row = document.createElement("div");
    row.className = "bar-row" + (i === highlighted ? " bar-row-top" : "");
    row.dataset.class = name;

    const label = document.createElement("span");
    label.className = "bar-label";
    label.textContent = name;

    const track = document.createElement("div");
    track.className = "bar-track";
    const fill = document.createElement("div");
    fill.className = "bar-fill";
    fill.style.width = `${(value * 100).toFixed(2)}%`;
    track.appendChild(fill);

    const percent = document.createElement("span");
    percent.className = "bar-percent";
    percent.textContent = `${(value * 100).toFixed(1)}%`;

    row.append(label, track, percent);
    fragment.appendChild(row);
  });

  root.replaceChildren(fragment); // all-or-nothing: invalid payloads threw above
}
