/**
 * DOM front end over the session machine.  Static-file deployment: point
 * it at a bundle directory, no server-side logic involved.
 */
import { clockLabel, Manifest, ResultLog, TrialEntry } from "./schema.js";
import { Session, SessionError } from "./state.js";
import { AnswerWidget, buildWidget } from "./widgets.js";

export interface AppOptions {
  participant: number;
  /** Maps a manifest-relative path (e.g. "stimuli/x.svg") to an URL. */
  assetUrl?: (path: string) => string;
  now?: () => number;
}

/** Substitutes trial parameters into the task's prompt template. */
export function trialPrompt(
  manifest: Manifest,
  trial: Pick<TrialEntry, "task_id" | "params">,
): string {
  let text = manifest.task_prompts[trial.task_id] ?? trial.task_id;
  const p = trial.params;
  const steps = manifest.time.steps;
  if (typeof p.threshold === "number") {
    text = text.replace("{threshold}", String(p.threshold));
  }
  const iv = p.interval;
  if (Array.isArray(iv) && iv.length === 2) {
    text += ` Time interval: ${clockLabel(Number(iv[0]), steps)} to ${clockLabel(Number(iv[1]), steps)}.`;
  }
  if (typeof p.tolerance === "number") {
    text += ` Range: first value ±${p.tolerance}.`;
  }
  return text;
}

function formatKey(answerType: string, key: unknown, steps: number): string {
  switch (answerType) {
    case "single_graph":
      return `graph ${Number(key) + 1}`;
    case "multi_graph":
      return (key as number[]).map((i) => `graph ${i + 1}`).join(", ");
    case "value_input":
      return String(key);
    case "time_slider":
      return clockLabel(Number(key), steps);
    case "yes_no":
      return key ? "yes" : "no";
    case "quadrant": {
      const q = key as { row: number; col: number };
      return `${q.row === 0 ? "upper" : "lower"} ${q.col === 0 ? "left" : "right"}`;
    }
    default:
      return String(key);
  }
}

const GENDERS = ["female", "male", "non-binary", "self-described", "prefer not to say"];
const DEGREES = ["secondary school", "bachelor", "master", "doctorate", "other"];

export class App {
  readonly session: Session;
  lastExport: ResultLog | null = null;

  private readonly root: HTMLElement;
  private readonly doc: Document;
  private readonly assetUrl: (path: string) => string;
  private widget: AnswerWidget | null = null;
  private notice = "";
  private feedback: string | null = null;

  constructor(root: HTMLElement, manifest: unknown, options: AppOptions) {
    this.root = root;
    this.doc = root.ownerDocument;
    this.assetUrl = options.assetUrl ?? ((p) => p);
    this.session = new Session(manifest, options.participant, options.now ?? Date.now);
    this.render();
  }

  exportLog(): ResultLog {
    this.lastExport = this.session.exportLog();
    return this.lastExport;
  }

  // -- rendering ------------------------------------------------------------

  render(): void {
    this.root.textContent = "";
    this.widget = null;
    const view = this.doc.createElement("div");
    view.className = `view view-${this.session.phase}`;
    switch (this.session.phase) {
      case "demographics":
        this.renderDemographics(view);
        break;
      case "training":
        this.renderTraining(view);
        break;
      case "trial":
        this.renderTrial(view);
        break;
      case "post_task":
        this.renderPostTask(view);
        break;
      case "done":
        this.renderDone(view);
        break;
    }
    if (this.notice) {
      const n = this.doc.createElement("p");
      n.className = "notice";
      n.textContent = this.notice;
      view.appendChild(n);
    }
    this.root.appendChild(view);
  }

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    parent: HTMLElement,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const node = this.doc.createElement(tag);
    if (text !== undefined) node.textContent = text;
    parent.appendChild(node);
    return node;
  }

  private button(parent: HTMLElement, id: string, label: string, onClick: () => void): void {
    const b = this.el("button", parent, label);
    b.type = "button";
    b.id = id;
    b.addEventListener("click", onClick);
  }

  /** Runs a transition, turning SessionError into an inline notice. */
  private attempt(action: () => void): void {
    try {
      action();
      this.notice = "";
    } catch (err) {
      if (!(err instanceof SessionError)) throw err;
      this.notice = err.message;
    }
    this.render();
  }

  private select(parent: HTMLElement, id: string, label: string, options: string[]): HTMLSelectElement {
    const wrap = this.el("label", parent, `${label} `);
    const sel = this.el("select", wrap);
    sel.id = id;
    this.el("option", sel, "").value = "";
    for (const o of options) {
      const opt = this.el("option", sel, o);
      opt.value = o;
    }
    return sel;
  }

  private renderDemographics(view: HTMLElement): void {
    this.el("h2", view, "About you");
    const form = this.el("form", view);
    form.className = "demographics";
    const ageWrap = this.el("label", form, "Age ");
    const age = this.el("input", ageWrap);
    age.id = "age";
    age.type = "number";
    const gender = this.select(form, "gender", "Gender", GENDERS);
    const degree = this.select(form, "degree", "Highest degree", DEGREES);
    const familiarity = this.select(
      form,
      "familiarity",
      "Familiarity with time series (1 none .. 7 expert)",
      ["1", "2", "3", "4", "5", "6", "7"],
    );
    const vision = this.select(form, "normal-vision", "Normal or corrected-to-normal vision?", ["yes", "no"]);
    const color = this.select(form, "color-normal", "Normal color vision?", ["yes", "no"]);
    const asBool = (sel: HTMLSelectElement) => (sel.value === "" ? undefined : sel.value === "yes");
    this.button(form, "submit-demographics", "Continue", () =>
      this.attempt(() =>
        this.session.submitDemographics({
          age: age.value.trim() === "" ? undefined : Number(age.value),
          gender: gender.value || undefined,
          degree: degree.value || undefined,
          familiarity: familiarity.value === "" ? undefined : Number(familiarity.value),
          normal_vision: asBool(vision),
          color_normal: asBool(color),
        }),
      ),
    );
  }

  private stimulus(view: HTMLElement, path: string): void {
    const img = this.el("img", view);
    img.className = "stimulus";
    img.src = this.assetUrl(path);
    img.alt = "stimulus";
  }

  private renderTraining(view: HTMLElement): void {
    const tech = this.session.currentTechnique!;
    this.el("h2", view, `Training: ${tech}`);
    if (this.session.showExplanation) {
      this.el("p", view, this.session.explanation).className = "explanation";
    }
    const round = this.session.currentTraining;
    this.el("p", view, trialPrompt(this.session.manifest, round)).className = "prompt";
    this.stimulus(view, round.stimulus);
    if (!this.session.trainingAnswered) {
      this.mountWidget(view, round.answer_type, round.grid);
      this.button(view, "submit-training", "Check answer", () =>
        this.attempt(() => {
          const answer = this.widget!.read();
          if (answer === null) throw new SessionError("select an answer first");
          const fb = this.session.submitTrainingAnswer(answer);
          this.feedback = `Correct answer: ${formatKey(round.answer_type, fb.key, this.session.manifest.time.steps)}`;
        }),
      );
    } else {
      if (this.feedback) {
        this.el("p", view, this.feedback).className = "feedback";
      }
      this.button(view, "train-again", "Train again", () =>
        this.attempt(() => this.session.chooseTraining("again")),
      );
      this.button(view, "show-explanation", "See explanation", () =>
        this.attempt(() => this.session.chooseTraining("explanation")),
      );
      this.button(view, "start-eval", "Start evaluation", () =>
        this.attempt(() => this.session.chooseTraining("start")),
      );
    }
  }

  private mountWidget(view: HTMLElement, type: TrialEntry["answer_type"], grid: [number, number]): void {
    this.widget = buildWidget(this.doc, type, {
      rows: grid[0],
      cols: grid[1],
      steps: this.session.manifest.time.steps,
    });
    const slot = this.el("div", view);
    slot.className = "widget-slot";
    slot.appendChild(this.widget.root);
  }

  private renderTrial(view: HTMLElement): void {
    const trial = this.session.beginTrial();
    this.el(
      "p",
      view,
      `Trial ${this.session.completedTrials + 1} of ${this.session.totalTrials}`,
    ).className = "progress";
    this.el("p", view, trialPrompt(this.session.manifest, trial)).className = "prompt";
    this.stimulus(view, trial.stimulus);
    this.mountWidget(view, trial.answer_type, trial.grid);
    this.button(view, "submit-answer", "Submit", () =>
      this.attempt(() => {
        const answer = this.widget!.read();
        if (answer === null) throw new SessionError("select an answer first");
        this.session.submitAnswer(answer);
      }),
    );
    this.button(view, "skip", "Skip this repetition", () =>
      this.attempt(() => this.session.skipTrial()),
    );
  }

  private likertRow(view: HTMLElement, name: string, label: string): void {
    const fs = this.el("fieldset", view);
    this.el("legend", fs, label);
    for (let v = 1; v <= 7; v++) {
      const wrap = this.el("label", fs, String(v));
      const r = this.el("input", wrap);
      r.type = "radio";
      r.name = name;
      r.value = String(v);
      r.id = `${name}-${v}`;
    }
  }

  private checkedValue(name: string): number | null {
    for (const el of this.root.querySelectorAll<HTMLInputElement>(`input[name="${name}"]`)) {
      if (el.checked) return Number(el.value);
    }
    return null;
  }

  private renderPostTask(view: HTMLElement): void {
    const target = this.session.ratingTarget;
    this.el("h2", view, `Task ${target.task_id} under ${target.technique} finished`);
    this.likertRow(view, "confidence", "How confident are you in your answers?");
    this.likertRow(view, "difficulty", "How easy was the technique to use?");
    this.button(view, "submit-ratings", "Continue", () =>
      this.attempt(() => {
        const c = this.checkedValue("confidence");
        const d = this.checkedValue("difficulty");
        if (c === null || d === null) throw new SessionError("both ratings are required");
        this.session.submitRatings(c, d);
      }),
    );
  }

  private renderDone(view: HTMLElement): void {
    this.el("h2", view, "All trials complete");
    this.el("p", view, "Thank you. Export your result log and hand the file to the experimenter.");
    this.button(view, "export", "Export result log", () => {
      const log = this.exportLog();
      const text = JSON.stringify(log, null, 2);
      const win = this.doc.defaultView;
      try {
        if (win && typeof win.URL?.createObjectURL === "function") {
          const a = this.doc.createElement("a");
          a.href = win.URL.createObjectURL(new win.Blob([text], { type: "application/json" }));
          a.download = `participant_${log.participant}.json`;
          a.click();
        }
      } catch {
        // headless environments: the log is still available via exportLog()
      }
    });
  }
}

/** Fetch-based loader for a statically served bundle directory. */
export async function mountApp(
  root: HTMLElement,
  bundleBase: string,
  participant: number,
): Promise<App> {
  const base = bundleBase.endsWith("/") ? bundleBase : `${bundleBase}/`;
  const res = await fetch(`${base}manifest.json`);
  if (!res.ok) throw new Error(`cannot load ${base}manifest.json: ${res.status}`);
  const manifest = await res.json();
  return new App(root, manifest, {
    participant,
    assetUrl: (path) => `${base}${path}`,
  });
}
