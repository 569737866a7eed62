/**
 * Session state machine, kept free of DOM concerns so it can be scripted.
 *
 * Flow: demographics, then one block per technique in the participant's
 * assigned order.  A block starts with training (explanation plus practice
 * rounds with revealed answers), then runs each task's repetitions followed
 * by that task's confidence and ease-of-use ratings.  After the last block
 * the session is done and the accumulated result log can be exported.
 *
 * Practice answers never enter the log; only the number of rounds does.
 */
import {
  AnswerSchemas,
  Demographics,
  DemographicsSchema,
  Manifest,
  ManifestSchema,
  Rating,
  ResultLog,
  ResultLogSchema,
  SCHEMA_VERSION,
  TrainingRound,
  TrialEntry,
  TrialRecord,
} from "./schema.js";

export type Phase = "demographics" | "training" | "trial" | "post_task" | "done";

export class SessionError extends Error {}

export interface TrainingFeedback {
  /** Correct answer for the practice round just submitted, for display. */
  key: unknown;
  roundsCompleted: number;
}

function formatIssues(error: { issues: { path: PropertyKey[]; message: string }[] }): string {
  return error.issues
    .map((i) => (i.path.length ? `${i.path.join(".")}: ${i.message}` : i.message))
    .join("; ");
}

export class Session {
  readonly manifest: Manifest;
  readonly participant: number;

  private readonly sequence: TrialEntry[];
  private readonly now: () => number;

  private phaseValue: Phase = "demographics";
  private demographics: Demographics | null = null;
  private records: TrialRecord[] = [];
  private ratings: Rating[] = [];
  private trainingRounds: Record<string, number> = {};

  private cursor = 0; // next trial in `sequence`
  private trainingCursor = 0; // practice round within the current block
  private roundAnswered = false;
  private explanationVisible = true;
  private displayTs: number | null = null;
  private lastFinished: TrialEntry | null = null;

  constructor(manifest: unknown, participant: number, now: () => number = Date.now) {
    const parsed = ManifestSchema.safeParse(manifest);
    if (!parsed.success) {
      throw new SessionError(`manifest rejected: ${formatIssues(parsed.error)}`);
    }
    this.manifest = parsed.data;
    this.participant = participant;
    this.now = now;
    const sequence = this.manifest.trials[String(participant)];
    if (!sequence || sequence.length === 0) {
      throw new SessionError(`no trials for participant ${participant}`);
    }
    this.sequence = sequence;
  }

  get phase(): Phase {
    return this.phaseValue;
  }

  get totalTrials(): number {
    return this.sequence.length;
  }

  get completedTrials(): number {
    return this.records.length;
  }

  /** Technique of the block being trained or run; null before the study. */
  get currentTechnique(): string | null {
    if (this.phaseValue === "demographics" || this.phaseValue === "done") return null;
    const t = this.phaseValue === "post_task" ? this.lastFinished : this.sequence[this.cursor];
    return t ? t.technique : null;
  }

  get explanation(): string {
    const tech = this.currentTechnique;
    return (tech && this.manifest.explanations[tech]) || "";
  }

  get showExplanation(): boolean {
    return this.phaseValue === "training" && this.explanationVisible;
  }

  // -- demographics ---------------------------------------------------------

  submitDemographics(record: unknown): void {
    this.expectPhase("demographics");
    const parsed = DemographicsSchema.safeParse(record);
    if (!parsed.success) {
      throw new SessionError(formatIssues(parsed.error));
    }
    this.demographics = parsed.data;
    this.enterTraining();
  }

  // -- training -------------------------------------------------------------

  get currentTraining(): TrainingRound {
    this.expectPhase("training");
    const tech = this.sequence[this.cursor]!.technique;
    const rounds = this.manifest.training[tech];
    if (!rounds || rounds.length === 0) {
      throw new SessionError(`no training material for ${tech}`);
    }
    return rounds[this.trainingCursor % rounds.length]!;
  }

  get trainingAnswered(): boolean {
    return this.roundAnswered;
  }

  submitTrainingAnswer(answer: unknown): TrainingFeedback {
    this.expectPhase("training");
    if (this.roundAnswered) {
      throw new SessionError("round already answered; choose how to continue");
    }
    const round = this.currentTraining;
    const parsed = AnswerSchemas[round.answer_type].safeParse(answer);
    if (!parsed.success) {
      throw new SessionError(`practice answer rejected: ${formatIssues(parsed.error)}`);
    }
    const tech = this.sequence[this.cursor]!.technique;
    this.trainingRounds[tech] = (this.trainingRounds[tech] ?? 0) + 1;
    this.roundAnswered = true;
    this.explanationVisible = false;
    return { key: round.key, roundsCompleted: this.trainingRounds[tech]! };
  }

  /**
   * After a revealed practice round the participant picks one of:
   * "again" (next practice round), "explanation" (reread, counter
   * unchanged), "start" (begin the scored trials of this block).
   */
  chooseTraining(choice: "again" | "explanation" | "start"): void {
    this.expectPhase("training");
    if (!this.roundAnswered) {
      throw new SessionError("finish the practice round first");
    }
    if (choice === "again") {
      this.trainingCursor += 1;
      this.roundAnswered = false;
    } else if (choice === "explanation") {
      this.explanationVisible = true;
    } else {
      this.phaseValue = "trial";
    }
  }

  // -- scored trials --------------------------------------------------------

  get currentTrial(): TrialEntry {
    this.expectPhase("trial");
    return this.sequence[this.cursor]!;
  }

  /** Marks the stimulus as shown; the display timestamp is taken here. */
  beginTrial(): TrialEntry {
    const trial = this.currentTrial;
    if (this.displayTs === null) {
      this.displayTs = Math.round(this.now());
    }
    return trial;
  }

  submitAnswer(answer: unknown): void {
    const trial = this.currentTrial;
    if (this.displayTs === null) {
      throw new SessionError("trial was never displayed");
    }
    const parsed = AnswerSchemas[trial.answer_type].safeParse(answer);
    if (!parsed.success) {
      throw new SessionError(`answer rejected: ${formatIssues(parsed.error)}`);
    }
    this.finishTrial({
      trial_id: trial.trial_id,
      skipped: false,
      answer: parsed.data,
      display_ts: this.displayTs,
      submit_ts: this.submitTimestamp(),
    });
  }

  skipTrial(): void {
    const trial = this.currentTrial;
    if (this.displayTs === null) {
      throw new SessionError("trial was never displayed");
    }
    this.finishTrial({
      trial_id: trial.trial_id,
      skipped: true,
      display_ts: this.displayTs,
      submit_ts: this.submitTimestamp(),
    });
  }

  private submitTimestamp(): number {
    // clocks can report the same millisecond twice; keep the record monotone
    return Math.max(Math.round(this.now()), this.displayTs! + 1);
  }

  private finishTrial(record: TrialRecord): void {
    this.records.push(record);
    this.lastFinished = this.sequence[this.cursor]!;
    this.cursor += 1;
    this.displayTs = null;
    const next = this.sequence[this.cursor];
    const prev = this.lastFinished;
    if (!next || next.technique !== prev.technique || next.task_id !== prev.task_id) {
      this.phaseValue = "post_task";
    }
  }

  // -- ratings --------------------------------------------------------------

  /** Task and technique the pending ratings refer to. */
  get ratingTarget(): { task_id: string; technique: string } {
    this.expectPhase("post_task");
    const t = this.lastFinished!;
    return { task_id: t.task_id, technique: t.technique };
  }

  submitRatings(confidence: number, difficulty: number): void {
    const target = this.ratingTarget;
    for (const [name, v] of [
      ["confidence", confidence],
      ["difficulty", difficulty],
    ] as const) {
      if (!Number.isInteger(v) || v < 1 || v > 7) {
        throw new SessionError(`${name} must be an integer in 1..7, got ${v}`);
      }
    }
    this.ratings.push({ ...target, confidence, difficulty });
    const next = this.sequence[this.cursor];
    if (!next) {
      this.phaseValue = "done";
    } else if (next.technique !== this.lastFinished!.technique) {
      this.enterTraining();
    } else {
      this.phaseValue = "trial";
    }
  }

  // -- export ---------------------------------------------------------------

  exportLog(): ResultLog {
    this.expectPhase("done");
    const log = {
      schema: SCHEMA_VERSION,
      participant: this.participant,
      demographics: this.demographics!,
      training_rounds: { ...this.trainingRounds },
      trials: [...this.records],
      ratings: [...this.ratings],
    };
    const parsed = ResultLogSchema.safeParse(log);
    if (!parsed.success) {
      throw new SessionError(`export blocked: ${formatIssues(parsed.error)}`);
    }
    return parsed.data;
  }

  // -------------------------------------------------------------------------

  private enterTraining(): void {
    this.phaseValue = "training";
    this.trainingCursor = 0;
    this.roundAnswered = false;
    this.explanationVisible = true;
  }

  private expectPhase(expected: Phase): void {
    if (this.phaseValue !== expected) {
      throw new SessionError(`expected phase ${expected}, session is in ${this.phaseValue}`);
    }
  }
}
