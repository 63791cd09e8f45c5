import { describe, expect, it } from "vitest";

import { argmaxIndex, BarsError, renderProbabilityBars } from "../src/bars.js";
import { CLASS_ORDER } from "./fixtures.js";

function widths(root: HTMLElement): number[] {
  return Array.from(root.querySelectorAll<HTMLElement>(".bar-fill")).map((el) =>
    parseFloat(el.style.width),
  );
}

describe("renderProbabilityBars", () => {
  it("renders four equal bars for a uniform distribution, first class highlighted", () => {
    const root = document.createElement("div");
    const uniform = Object.fromEntries(CLASS_ORDER.map((c) => [c, 0.25]));
    renderProbabilityBars(root, uniform, CLASS_ORDER);
    const rows = root.querySelectorAll(".bar-row");
    expect(rows).toHaveLength(4);
    expect(new Set(widths(root))).toEqual(new Set([25]));
    // documented tie rule: the first class in canonical order wins
    expect(rows[0]!.classList.contains("bar-row-top")).toBe(true);
    expect(rows[1]!.classList.contains("bar-row-top")).toBe(false);
  });

  it("makes the argmax bar widest and highlighted", () => {
    const root = document.createElement("div");
    renderProbabilityBars(
      root,
      { "Black Measles": 0.01, "Black Rot": 0.01, Healthy: 0.97, "Isariopsis Leaf Spot": 0.01 },
      CLASS_ORDER,
    );
    const rows = Array.from(root.querySelectorAll<HTMLElement>(".bar-row"));
    const highlighted = rows.filter((r) => r.classList.contains("bar-row-top"));
    expect(highlighted).toHaveLength(1);
    expect(highlighted[0]!.dataset.class).toBe("Healthy");
    expect(widths(root)[2]).toBe(97);
  });

  it("keeps canonical order regardless of payload key order", () => {
    const root = document.createElement("div");
    renderProbabilityBars(
      root,
      { Healthy: 0.2, "Black Rot": 0.3, "Isariopsis Leaf Spot": 0.1, "Black Measles": 0.4 },
      CLASS_ORDER,
    );
    const names = Array.from(root.querySelectorAll<HTMLElement>(".bar-row")).map(
      (r) => r.dataset.class,
    );
    expect(names).toEqual(CLASS_ORDER);
  });

  it("refuses to render a payload missing a class (no partial render)", () => {
    const root = document.createElement("div");
    root.innerHTML = "<p>previous content</p>";
    expect(() =>
      renderProbabilityBars(root, { Healthy: 1.0 }, CLASS_ORDER),
    ).toThrow(BarsError);
    expect(root.innerHTML).toBe("<p>previous content</p>");
  });

  it("refuses out-of-range values", () => {
    const root = document.createElement("div");
    const bad = Object.fromEntries(CLASS_ORDER.map((c) => [c, 0.25]));
    bad[CLASS_ORDER[0]!] = 1.5;
    expect(() => renderProbabilityBars(root, bad, CLASS_ORDER)).toThrow(BarsError);
  });
});

describe("argmaxIndex", () => {
  it("breaks ties toward the earliest index", () => {
    expect(argmaxIndex([0.25, 0.25, 0.25, 0.25])).toBe(0);
    expect(argmaxIndex([0.1, 0.4, 0.4])).toBe(1);
    expect(argmaxIndex([0.6, 0.4])).toBe(0);
  });
});
