/**
 * Answer widgets.  Each factory returns a root element plus a read()
 * that yields a schema-valid payload, or null while nothing is selected
 * (submission stays blocked then).
 */
import { Answer, AnswerSchemas, AnswerType, clockLabel } from "./schema.js";

export interface WidgetContext {
  rows: number;
  cols: number;
  /** Samples per series; the time slider snaps to these. */
  steps: number;
}

export interface AnswerWidget {
  root: HTMLElement;
  read(): Answer | null;
}

function widgetRoot(doc: Document, type: AnswerType): HTMLElement {
  const root = doc.createElement("div");
  root.className = `widget widget-${type.replace("_", "-")}`;
  root.dataset.answerType = type;
  return root;
}

function graphButtons(
  doc: Document,
  root: HTMLElement,
  ctx: WidgetContext,
  onPick: (index: number, button: HTMLButtonElement) => void,
): HTMLButtonElement[] {
  const grid = doc.createElement("div");
  grid.className = "graph-grid";
  grid.style.display = "grid";
  grid.style.gridTemplateColumns = `repeat(${ctx.cols}, auto)`;
  const buttons: HTMLButtonElement[] = [];
  for (let i = 0; i < ctx.rows * ctx.cols; i++) {
    const b = doc.createElement("button");
    b.type = "button";
    b.className = "graph-pick";
    b.dataset.index = String(i);
    b.textContent = String(i + 1);
    b.setAttribute("aria-pressed", "false");
    b.addEventListener("click", () => onPick(i, b));
    grid.appendChild(b);
    buttons.push(b);
  }
  root.appendChild(grid);
  return buttons;
}

function singleGraph(doc: Document, ctx: WidgetContext): AnswerWidget {
  const root = widgetRoot(doc, "single_graph");
  let selected: number | null = null;
  const buttons = graphButtons(doc, root, ctx, (i) => {
    selected = i;
    buttons.forEach((b, j) => b.setAttribute("aria-pressed", String(j === i)));
  });
  return {
    root,
    read: () => (selected === null ? null : AnswerSchemas.single_graph.parse({ index: selected })),
  };
}

function multiGraph(doc: Document, ctx: WidgetContext): AnswerWidget {
  const root = widgetRoot(doc, "multi_graph");
  const selected = new Set<number>();
  graphButtons(doc, root, ctx, (i, b) => {
    if (selected.has(i)) selected.delete(i);
    else selected.add(i);
    b.setAttribute("aria-pressed", String(selected.has(i)));
  });
  return {
    root,
    // an empty set is not a submission; skipping is the explicit way out
    read: () =>
      selected.size === 0
        ? null
        : AnswerSchemas.multi_graph.parse({ indices: [...selected].sort((a, b) => a - b) }),
  };
}

function valueInput(doc: Document): AnswerWidget {
  const root = widgetRoot(doc, "value_input");
  const input = doc.createElement("input");
  input.type = "number";
  input.step = "any";
  input.className = "value-field";
  root.appendChild(input);
  return {
    root,
    read: () => {
      const v = input.value.trim() === "" ? NaN : Number(input.value);
      return Number.isFinite(v) ? AnswerSchemas.value_input.parse({ value: v }) : null;
    },
  };
}

function timeSlider(doc: Document, ctx: WidgetContext): AnswerWidget {
  const root = widgetRoot(doc, "time_slider");
  const input = doc.createElement("input");
  input.type = "range";
  input.min = "0";
  input.max = String(ctx.steps - 1);
  input.step = "1";
  input.value = "0";
  const label = doc.createElement("output");
  label.className = "clock";
  label.textContent = clockLabel(0, ctx.steps);
  let touched = false;
  input.addEventListener("input", () => {
    touched = true;
    label.textContent = clockLabel(Number(input.value), ctx.steps);
  });
  root.append(input, label);
  return {
    root,
    // an untouched slider still shows 0:00; require a deliberate move
    read: () => (touched ? AnswerSchemas.time_slider.parse({ step: Number(input.value) }) : null),
  };
}

function yesNo(doc: Document): AnswerWidget {
  const root = widgetRoot(doc, "yes_no");
  let choice: boolean | null = null;
  const make = (label: string, value: boolean) => {
    const b = doc.createElement("button");
    b.type = "button";
    b.className = value ? "yes" : "no";
    b.textContent = label;
    b.setAttribute("aria-pressed", "false");
    b.addEventListener("click", () => {
      choice = value;
      for (const other of root.querySelectorAll("button")) {
        other.setAttribute("aria-pressed", String(other === b));
      }
    });
    root.appendChild(b);
  };
  make("Yes", true);
  make("No", false);
  return {
    root,
    read: () => (choice === null ? null : AnswerSchemas.yes_no.parse({ yes: choice })),
  };
}

const QUADRANT_LABELS = [
  ["upper left", "upper right"],
  ["lower left", "lower right"],
] as const;

function quadrant(doc: Document): AnswerWidget {
  const root = widgetRoot(doc, "quadrant");
  let picked: { row: number; col: number } | null = null;
  const grid = doc.createElement("div");
  grid.className = "quadrant-grid";
  grid.style.display = "grid";
  grid.style.gridTemplateColumns = "auto auto";
  for (let row = 0; row < 2; row++) {
    for (let col = 0; col < 2; col++) {
      const b = doc.createElement("button");
      b.type = "button";
      b.className = "quadrant-pick";
      b.dataset.row = String(row);
      b.dataset.col = String(col);
      b.textContent = QUADRANT_LABELS[row]![col]!;
      b.setAttribute("aria-pressed", "false");
      b.addEventListener("click", () => {
        picked = { row, col };
        for (const other of grid.querySelectorAll("button")) {
          other.setAttribute("aria-pressed", String(other === b));
        }
      });
      grid.appendChild(b);
    }
  }
  root.appendChild(grid);
  return {
    root,
    read: () => (picked === null ? null : AnswerSchemas.quadrant.parse(picked)),
  };
}

export function buildWidget(doc: Document, type: AnswerType, ctx: WidgetContext): AnswerWidget {
  switch (type) {
    case "single_graph":
      return singleGraph(doc, ctx);
    case "multi_graph":
      return multiGraph(doc, ctx);
    case "value_input":
      return valueInput(doc);
    case "time_slider":
      return timeSlider(doc, ctx);
    case "yes_no":
      return yesNo(doc);
    case "quadrant":
      return quadrant(doc);
  }
}
