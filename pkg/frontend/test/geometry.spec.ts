import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { applyTrackballDelta, floralShapePoints } from "../src/geometry.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures", "golden");
const TOL = 1e-9;

function rows(name: string): string[][] {
  return readFileSync(join(FIXTURES, name), "utf-8")
    .trim()
    .split("\n")
    .slice(1)
    .map((line) => line.split(","));
}

describe("golden-vector parity with the analysis toolkit", () => {
  it("matches every shape point within 1e-9", () => {
    const cache = new Map<string, ReturnType<typeof floralShapePoints>>();
    let checked = 0;
    for (const [a, b, delta, x, y] of rows("shape_points.csv")) {
      const key = `${a},${b}`;
      let pts = cache.get(key);
      if (!pts) {
        pts = floralShapePoints(Number(a), Number(b));
        cache.set(key, pts);
      }
      const p = pts[Number(delta)]!;
      expect(Math.abs(p.x - Number(x))).toBeLessThanOrEqual(TOL);
      expect(Math.abs(p.y - Number(y))).toBeLessThanOrEqual(TOL);
      checked++;
    }
    expect(checked).toBe(6400);
  });

  it("matches every trackball step within 1e-9", () => {
    let checked = 0;
    for (const [a, b, dx, dy, aNew, bNew] of rows("trackball_steps.csv")) {
      const [ga, gb] = applyTrackballDelta(Number(a), Number(b), Number(dx), Number(dy));
      expect(Math.abs(ga - Number(aNew))).toBeLessThanOrEqual(TOL);
      expect(Math.abs(gb - Number(bNew))).toBeLessThanOrEqual(TOL);
      checked++;
    }
    expect(checked).toBeGreaterThan(500);
  });
});

describe("shape geometry anchors", () => {
  it("zero amplitudes give the base circle", () => {
    for (const p of floralShapePoints(0, 0)) {
      expect(Math.abs(Math.hypot(p.x, p.y) - 70)).toBeLessThanOrEqual(1e-12);
    }
  });

  it("first point is base radius plus both amplitudes", () => {
    const p = floralShapePoints(4.5, -2.25)[0]!;
    expect(p.x).toBeCloseTo(70 + 4.5 - 2.25, 12);
    expect(p.y).toBe(0);
  });
});

describe("trackball transform anchors", () => {
  it("unit step from origin moves amplitude by 0.7", () => {
    expect(applyTrackballDelta(0, 0, 1, 0)).toEqual([0.7, 0]);
  });

  it("negative amplitudes step more sensitively", () => {
    const [aNew] = applyTrackballDelta(-35, 0, 1, 0);
    expect(aNew).toBeCloseTo(-33.95, 12);
  });

  it("vertical step uses the old horizontal amplitude", () => {
    const [aNew, bNew] = applyTrackballDelta(10, -5, 0, -1);
    expect(aNew).toBe(10);
    expect(bNew).toBeCloseTo(-5.65, 12);
  });

  it("zero delta is the identity", () => {
    expect(applyTrackballDelta(3, 4, 0, 0)).toEqual([3, 4]);
  });
});
