/**
 * Task geometry shared with the analysis toolkit.  Must agree with the
 * toolkit's golden vectors within 1e-9 per point (verified in tests).
 */

export const SHAPE_POINTS = 100;
export const BASE_RADIUS = 70;

export type Point = { x: number; y: number };

/** 100 outline points of the floral shape with amplitudes (a, b). */
export function floralShapePoints(a: number, b: number): Point[] {
  const pts: Point[] = [];
  for (let d = 0; d < SHAPE_POINTS; d++) {
    const radius =
      BASE_RADIUS +
      a * Math.cos(0.06 * Math.PI * d) +
      b * Math.cos(0.1 * Math.PI * d);
    pts.push({
      x: Math.cos(0.02 * Math.PI * d) * radius,
      y: Math.sin(0.02 * Math.PI * d) * radius,
    });
  }
  return pts;
}

/**
 * One amplitude update from a trackball move; both deltas read the old
 * (a, b).  The step is 1/100 of the remaining distance, so negative
 * amplitudes respond more sensitively than positive ones.
 */
export function applyTrackballDelta(
  a: number,
  b: number,
  dx: number,
  dy: number,
): [number, number] {
  const aNew = a + Math.sign(dx) * ((BASE_RADIUS - a - Math.abs(b)) / 100);
  const bNew = b + Math.sign(dy) * ((BASE_RADIUS - Math.abs(a) - b) / 100);
  return [aNew, bNew];
}
