import { describe, expect, it } from "vitest";

import { indexToSlider, lambdaPositions, linearScale, sliderToIndex } from "../src/scales.js";
import type { PathDoc } from "../src/types.js";
import { loadFixture } from "./fixtures.js";

const path = loadFixture<PathDoc>("path.json");

describe("slider <-> grid bijection", () => {
  it("round-trips every grid index", () => {
    const count = path.lambdas.length;
    for (let i = 0; i < count; i++) {
      expect(sliderToIndex(indexToSlider(i), count)).toBe(i);
      expect(sliderToIndex(String(indexToSlider(i)), count)).toBe(i);
    }
  });

  it("clamps out-of-range and garbage input", () => {
    const count = path.lambdas.length;
    expect(sliderToIndex(-3, count)).toBe(0);
    expect(sliderToIndex(count + 10, count)).toBe(count - 1);
    expect(sliderToIndex("garbage", count)).toBe(0);
  });
});

describe("lambda axis", () => {
  it("places the exact zero on a detached tick", () => {
    const xs = lambdaPositions(path.lambdas, 300, 30);
    expect(path.lambdas[0]).toBe(0);
    expect(xs[0]).toBe(0);
    expect(xs[1]).toBe(30); // smallest positive lambda starts the log band
  });

  it("is monotone and ends at the panel edge", () => {
    const xs = lambdaPositions(path.lambdas, 300, 30);
    for (let i = 1; i < xs.length; i++) {
      expect(xs[i]).toBeGreaterThan(xs[i - 1]);
    }
    expect(xs[xs.length - 1]).toBeCloseTo(300, 9);
  });

  it("handles an all-zero grid (no fusion pairs)", () => {
    expect(lambdaPositions([0], 300)).toEqual([0]);
  });
});

describe("linear scale", () => {
  it("maps the data band inside the pixel range", () => {
    const toY = linearScale(2, 10, 100);
    expect(toY(2)).toBeGreaterThan(0);
    expect(toY(10)).toBeLessThan(100);
    expect(toY(10)).toBeGreaterThan(toY(2));
  });

  it("survives a constant series", () => {
    const toY = linearScale(5, 5, 100);
    expect(Number.isFinite(toY(5))).toBe(true);
  });
});
