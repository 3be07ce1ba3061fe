/**
 * Trial export schema: one JSON object per line, matching the analysis
 * toolkit's loader.  Practice trials carry an extra `practice: true` flag
 * (the loader ignores unknown fields) and are excluded from exports by
 * default.
 */
import { z } from "zod";

export type ChannelKind = "double" | "single_alpha" | "single_beta";

export interface TrajectorySample {
  t_ms: number;
  a: number;
  b: number;
}

export interface TrialRow {
  experiment_id: string;
  subject_id: string;
  trial_index: number;
  alpha: number;
  beta: number;
  a_final: number;
  b_final: number;
  rt_ms: number;
  channels: ChannelKind;
  trajectory?: TrajectorySample[];
  practice?: boolean;
}

export const trajectorySampleSchema = z.object({
  t_ms: z.number().nonnegative(),
  a: z.number(),
  b: z.number(),
});

export const trialRowSchema = z
  .object({
    experiment_id: z.string().min(1),
    subject_id: z.string().min(1),
    trial_index: z.number().int().nonnegative(),
    alpha: z.number(),
    beta: z.number(),
    a_final: z.number(),
    b_final: z.number(),
    rt_ms: z.number().positive(),
    channels: z.enum(["double", "single_alpha", "single_beta"]),
    trajectory: z.array(trajectorySampleSchema).optional(),
    practice: z.boolean().optional(),
  })
  .superRefine((row, ctx) => {
    if (row.channels === "single_alpha" && row.beta !== 0) {
      ctx.addIssue({ code: "custom", message: "single_alpha requires beta = 0" });
    }
    if (row.channels === "single_beta" && row.alpha !== 0) {
      ctx.addIssue({ code: "custom", message: "single_beta requires alpha = 0" });
    }
    const traj = row.trajectory;
    if (traj) {
      for (let i = 1; i < traj.length; i++) {
        if (traj[i]!.t_ms <= traj[i - 1]!.t_ms) {
          ctx.addIssue({ code: "custom", message: "trajectory not increasing" });
          return;
        }
      }
      if (traj.length && traj[traj.length - 1]!.t_ms > row.rt_ms) {
        ctx.addIssue({ code: "custom", message: "trajectory beyond rt_ms" });
      }
    }
  });

export function toJsonLines(rows: TrialRow[]): string {
  return rows.map((r) => JSON.stringify(trialRowSchema.parse(r))).join("\n") + "\n";
}
