/**
 * On-disk contract with the bundle generator and scorer.
 *
 * The UI reads manifest.json plus the stimulus images it references and
 * writes one result-log JSON per participant.  Everything crossing that
 * boundary is validated here; the answer-key file is not part of the
 * contract and must never be fetched.
 */
import { z } from "zod";

export const SCHEMA_VERSION = 1;

export const ANSWER_TYPES = [
  "single_graph",
  "multi_graph",
  "value_input",
  "time_slider",
  "yes_no",
  "quadrant",
] as const;

export type AnswerType = (typeof ANSWER_TYPES)[number];

const index = z.number().int().nonnegative();

/** Answer payload per widget kind.  Strict: unknown fields are leaks or bugs. */
export const AnswerSchemas = {
  single_graph: z.strictObject({ index }),
  multi_graph: z.strictObject({ indices: z.array(index) }),
  value_input: z.strictObject({ value: z.number().finite() }),
  time_slider: z.strictObject({ step: index }),
  yes_no: z.strictObject({ yes: z.boolean() }),
  quadrant: z.strictObject({ row: index, col: index }),
} satisfies Record<AnswerType, z.ZodType>;

export const AnswerSchema = z.union([
  AnswerSchemas.single_graph,
  AnswerSchemas.multi_graph,
  AnswerSchemas.value_input,
  AnswerSchemas.time_slider,
  AnswerSchemas.yes_no,
  AnswerSchemas.quadrant,
]);

export type Answer = z.infer<typeof AnswerSchema>;

const taskId = z.string().regex(/^T\d{2}$/);
const gridShape = z.tuple([z.number().int().positive(), z.number().int().positive()]);
const params = z.record(z.string(), z.unknown());

/**
 * One scored trial as listed in the manifest.  Strict on purpose: if a
 * generator ever leaked key, metrics or draw information into the
 * participant-visible file, parsing would fail loudly.
 */
export const TrialEntrySchema = z.strictObject({
  trial_id: z.string().min(1),
  task_id: taskId,
  technique: z.string().min(1),
  repetition: z.number().int().nonnegative(),
  dataset: z.string().min(1),
  stimulus: z.string().min(1),
  params,
  answer_type: z.enum(ANSWER_TYPES),
  grid: gridShape,
  quadrant_side: z.number().int().positive().nullable(),
});

export type TrialEntry = z.infer<typeof TrialEntrySchema>;

/** Practice round; the key is inline because training reveals it. */
export const TrainingRoundSchema = z.strictObject({
  id: z.string().min(1),
  task_id: taskId,
  stimulus: z.string().min(1),
  params,
  answer_type: z.enum(ANSWER_TYPES),
  key: z.unknown(),
  grid: gridShape,
  quadrant_side: z.number().int().positive().nullable(),
});

export type TrainingRound = z.infer<typeof TrainingRoundSchema>;

export const ManifestSchema = z.object({
  schema: z.literal(SCHEMA_VERSION),
  seed: z.number().int(),
  participants: z.number().int().positive(),
  techniques: z.array(z.string().min(1)).min(1),
  config: z.object({
    gen: z.record(z.string(), z.unknown()),
    technique: z.record(z.string(), z.unknown()),
    render: z.object({
      cell_px: z.number().int().positive(),
      gap_px: z.number().int().nonnegative(),
    }),
  }),
  time: z.object({
    steps: z.number().int().min(2),
    hours_span: z.number().positive(),
  }),
  task_prompts: z.record(z.string(), z.string()),
  explanations: z.record(z.string(), z.string()),
  technique_orders: z.record(z.string(), z.array(z.string().min(1))),
  training: z.record(z.string(), z.array(TrainingRoundSchema)),
  trials: z.record(z.string(), z.array(TrialEntrySchema)),
});

export type Manifest = z.infer<typeof ManifestSchema>;

const likert = z.number().int().min(1).max(7);

export const DemographicsSchema = z.strictObject({
  age: z.number().int().min(1).max(120),
  gender: z.string().min(1),
  degree: z.string().min(1),
  familiarity: likert,
  normal_vision: z.boolean(),
  color_normal: z.boolean(),
});

export type Demographics = z.infer<typeof DemographicsSchema>;

export const RatingSchema = z.strictObject({
  task_id: taskId,
  technique: z.string().min(1),
  confidence: likert,
  difficulty: likert,
});

export type Rating = z.infer<typeof RatingSchema>;

const timestampFields = {
  display_ts: z.number().int().nonnegative(),
  submit_ts: z.number().int().nonnegative(),
};

export const TrialRecordSchema = z
  .discriminatedUnion("skipped", [
    z.strictObject({
      trial_id: z.string().min(1),
      skipped: z.literal(true),
      ...timestampFields,
    }),
    z.strictObject({
      trial_id: z.string().min(1),
      skipped: z.literal(false),
      answer: AnswerSchema,
      ...timestampFields,
    }),
  ])
  .refine((r) => r.submit_ts > r.display_ts, {
    message: "submit_ts must be after display_ts",
  });

export type TrialRecord = z.infer<typeof TrialRecordSchema>;

export const ResultLogSchema = z.strictObject({
  schema: z.literal(SCHEMA_VERSION),
  participant: z.number().int().nonnegative(),
  demographics: DemographicsSchema,
  training_rounds: z.record(z.string(), z.number().int().min(1)),
  trials: z.array(TrialRecordSchema),
  ratings: z.array(RatingSchema),
});

export type ResultLog = z.infer<typeof ResultLogSchema>;

// ---------------------------------------------------------------------------
// Time axis: `steps` samples spread over a 24h day, first at 0:00, last at
// 24:00.  Matches the scorer's hours-per-step convention.

export function hoursAtStep(step: number, steps: number): number {
  return (step * 24) / (steps - 1);
}

export function stepFromHours(hours: number, steps: number): number {
  const raw = Math.round((hours / 24) * (steps - 1));
  return Math.min(Math.max(raw, 0), steps - 1);
}

/** "H:MM" with minutes rounded, e.g. step 35 of 72 -> "11:50". */
export function clockLabel(step: number, steps: number): string {
  const totalMinutes = Math.round(hoursAtStep(step, steps) * 60);
  const h = Math.floor(totalMinutes / 60);
  const m = totalMinutes % 60;
  return `${h}:${String(m).padStart(2, "0")}`;
}

/** Inverse of clockLabel's input: "11:50" -> 11.8333... hours. */
export function parseClock(label: string): number {
  const m = /^(\d{1,2}):(\d{2})$/.exec(label.trim());
  if (!m) throw new Error(`not a clock label: ${JSON.stringify(label)}`);
  return Number(m[1]) + Number(m[2]) / 60;
}

/**
 * Every file the UI is allowed to serve for one participant: the manifest
 * itself plus the stimuli its training rounds and trials reference.  The
 * key file is deliberately unreachable from here.
 */
export function servedAssets(manifest: Manifest, participant: number): string[] {
  const paths = new Set<string>(["manifest.json"]);
  for (const rounds of Object.values(manifest.training)) {
    for (const round of rounds) paths.add(round.stimulus);
  }
  for (const trial of manifest.trials[String(participant)] ?? []) {
    paths.add(trial.stimulus);
  }
  return [...paths].sort();
}
