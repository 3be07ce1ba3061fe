/**
 * Trial state machines driven by a pointer-step stream.
 *
 * Input events carry trial-relative timestamps; the recorder emits trajectory
 * samples on an exact 10 ms grid of that clock (the state only changes at
 * input events, so grid samples are exact, not interpolated).  In the
 * browser the timestamps come from performance.now(), whose resolution is
 * the only source of timing error.
 */
import { applyTrackballDelta } from "./geometry.js";
import type { TrajectorySample } from "./schema.js";

export interface PointerStep {
  tMs: number;
  dx: number;
  dy: number;
}

/** How a pointer step moves the response state. */
export type MoveRule = (
  a: number,
  b: number,
  dx: number,
  dy: number,
) => [number, number];

/** Dot task: the test dot follows the pointer 1:1. */
export const dotMove: MoveRule = (a, b, dx, dy) => [a + dx, b + dy];

/** Shape task: each event contributes one signed amplitude step. */
export const shapeMove: MoveRule = (a, b, dx, dy) =>
  applyTrackballDelta(a, b, dx, dy);

export interface TrialOutcome {
  aFinal: number;
  bFinal: number;
  rtMs: number;
  trajectory: TrajectorySample[];
}

export class TrialRuntime {
  private a: number;
  private b: number;
  private lastT = 0;
  private nextGrid = 0;
  private readonly samples: TrajectorySample[] = [];
  private done = false;

  constructor(
    private readonly move: MoveRule,
    startA: number,
    startB: number,
    private readonly sampleEveryMs = 10,
  ) {
    this.a = startA;
    this.b = startB;
  }

  get state(): { a: number; b: number } {
    return { a: this.a, b: this.b };
  }

  private flushGrid(untilExclusive: number): void {
    while (this.nextGrid < untilExclusive) {
      this.samples.push({ t_ms: this.nextGrid, a: this.a, b: this.b });
      this.nextGrid += this.sampleEveryMs;
    }
  }

  /** Apply one pointer step.  Events at a grid instant apply before the
   * sample is taken (right-continuous state). */
  step(s: PointerStep): void {
    if (this.done) throw new Error("trial already finished");
    if (s.tMs < this.lastT) throw new Error("pointer steps out of order");
    this.flushGrid(s.tMs);
    [this.a, this.b] = this.move(this.a, this.b, s.dx, s.dy);
    this.lastT = s.tMs;
  }

  /** Button click: finalize the trial at tMs (> 0). */
  finish(tMs: number): TrialOutcome {
    if (this.done) throw new Error("trial already finished");
    if (tMs <= 0 || tMs < this.lastT) throw new Error("bad finish time");
    while (this.nextGrid <= tMs) {
      this.samples.push({ t_ms: this.nextGrid, a: this.a, b: this.b });
      this.nextGrid += this.sampleEveryMs;
    }
    this.done = true;
    return {
      aFinal: this.a,
      bFinal: this.b,
      rtMs: tMs,
      trajectory: this.samples,
    };
  }
}
