/**
 * Session planning and conduct: draws reference stimuli per the task design,
 * runs trials through the shared runtime, and collects exportable rows.
 */
import { mulberry32, uniform, type Rng } from "./rng.js";
import type { ChannelKind, TrialRow } from "./schema.js";
import {
  dotMove,
  shapeMove,
  TrialRuntime,
  type PointerStep,
  type TrialOutcome,
} from "./trial.js";

export type TaskKind = "dot" | "shape";

export interface SessionConfig {
  task: TaskKind;
  experimentId: string;
  subjectId: string;
  nPractice: number;
  nTrials: number;
  /** P(double), P(single_alpha), P(single_beta); must sum to 1. */
  singleChannelProbs: [number, number, number];
  sampleEveryMs: number;
  seed: number;
}

export const DOT_FACTOR_RANGE: [number, number] = [20, 80];
export const SHAPE_FACTOR_RANGE: [number, number] = [-30, 30];
export const SHAPE_START_RANGE: [number, number] = [-35, 35];
export const DOT_CIRCLE_RADIUS = 160;

export function defaultConfig(task: TaskKind, overrides: Partial<SessionConfig> = {}): SessionConfig {
  return {
    task,
    experimentId: task === "dot" ? "dot-reproduction" : "shape-reproduction",
    subjectId: "anon",
    nPractice: 10,
    nTrials: 100,
    singleChannelProbs: task === "dot" ? [0.5, 0.25, 0.25] : [1, 0, 0],
    sampleEveryMs: 10,
    seed: 1,
    ...overrides,
  };
}

export interface TrialPlan {
  alpha: number;
  beta: number;
  channels: ChannelKind;
  startA: number;
  startB: number;
  practice: boolean;
}

function drawChannels(rng: Rng, probs: [number, number, number]): ChannelKind {
  const u = rng();
  if (u < probs[0]) return "double";
  if (u < probs[0] + probs[1]) return "single_alpha";
  return "single_beta";
}

function drawPlan(rng: Rng, config: SessionConfig, practice: boolean): TrialPlan {
  const channels = drawChannels(rng, config.singleChannelProbs);
  const range = config.task === "dot" ? DOT_FACTOR_RANGE : SHAPE_FACTOR_RANGE;
  const alpha = channels === "single_beta" ? 0 : uniform(rng, range[0], range[1]);
  const beta = channels === "single_alpha" ? 0 : uniform(rng, range[0], range[1]);
  let startA = 0;
  let startB = 0;
  if (config.task === "shape" && channels === "double") {
    startA = uniform(rng, SHAPE_START_RANGE[0], SHAPE_START_RANGE[1]);
    startB = uniform(rng, SHAPE_START_RANGE[0], SHAPE_START_RANGE[1]);
  }
  return { alpha, beta, channels, startA, startB, practice };
}

/** Deterministic trial plan for a whole session (practice first). */
export function planSession(config: SessionConfig): TrialPlan[] {
  const probSum = config.singleChannelProbs.reduce((s, p) => s + p, 0);
  if (Math.abs(probSum - 1) > 1e-9) throw new Error("channel probs must sum to 1");
  const rng = mulberry32(config.seed);
  const plans: TrialPlan[] = [];
  for (let i = 0; i < config.nPractice; i++) plans.push(drawPlan(rng, config, true));
  for (let i = 0; i < config.nTrials; i++) plans.push(drawPlan(rng, config, false));
  return plans;
}

export interface CompletedTrial {
  plan: TrialPlan;
  outcome: TrialOutcome;
}

export class Session {
  readonly plans: TrialPlan[];
  readonly completed: CompletedTrial[] = [];
  private runtime: TrialRuntime | null = null;

  constructor(readonly config: SessionConfig) {
    this.plans = planSession(config);
  }

  get finished(): boolean {
    return this.completed.length >= this.plans.length;
  }

  get currentPlan(): TrialPlan {
    const plan = this.plans[this.completed.length];
    if (!plan) throw new Error("session finished");
    return plan;
  }

  /** Start (or restart view of) the current trial's runtime. */
  beginTrial(): TrialRuntime {
    const plan = this.currentPlan;
    this.runtime = new TrialRuntime(
      this.config.task === "dot" ? dotMove : shapeMove,
      plan.startA,
      plan.startB,
      this.config.sampleEveryMs,
    );
    return this.runtime;
  }

  step(s: PointerStep): void {
    if (!this.runtime) throw new Error("no active trial");
    this.runtime.step(s);
  }

  finishTrial(tMs: number): CompletedTrial {
    if (!this.runtime) throw new Error("no active trial");
    const done = { plan: this.currentPlan, outcome: this.runtime.finish(tMs) };
    this.completed.push(done);
    this.runtime = null;
    return done;
  }

  /** Export rows in the analysis schema; practice trials are excluded by
   * default and flagged when included. */
  exportRows(includePractice = false): TrialRow[] {
    const rows: TrialRow[] = [];
    let index = 0;
    for (const { plan, outcome } of this.completed) {
      if (plan.practice && !includePractice) continue;
      const row: TrialRow = {
        experiment_id: this.config.experimentId,
        subject_id: this.config.subjectId,
        trial_index: index++,
        alpha: plan.alpha,
        beta: plan.beta,
        a_final: outcome.aFinal,
        b_final: outcome.bFinal,
        rt_ms: outcome.rtMs,
        channels: plan.channels,
        trajectory: outcome.trajectory,
      };
      if (plan.practice) row.practice = true;
      rows.push(row);
    }
    return rows;
  }
}
