/** Hand-built miniature manifest: two technique blocks, eight trials. */
import type { Manifest } from "../src/schema.js";

export function makeManifest(): Manifest {
  const grid: [number, number] = [3, 3];
  const trial = (
    id: string,
    task: string,
    technique: string,
    rep: number,
    answerType: Manifest["trials"][string][number]["answer_type"],
    params: Record<string, unknown> = {},
    shape: [number, number] = grid,
    quadrantSide: number | null = null,
  ) => ({
    trial_id: id,
    task_id: task,
    technique,
    repetition: rep,
    dataset: `${technique}_${task}_r${rep}_d0`,
    stimulus: `stimuli/${task}_${rep}_${technique}_0.svg`,
    params,
    answer_type: answerType,
    grid: shape,
    quadrant_side: quadrantSide,
  });

  return {
    schema: 1,
    seed: 0,
    participants: 1,
    techniques: ["CBP", "CHG"],
    config: {
      gen: { seed: 0, length: 72 },
      technique: { bands: 3, slices: 3 },
      render: { cell_px: 24, gap_px: 4 },
    },
    time: { steps: 72, hours_span: 24 },
    task_prompts: {
      T01: "Which graph has the highest value at the marked point in time?",
      T05: "Estimate the difference between the values at the two marked points in time.",
      T06: "At what time does the highlighted graph reach its global maximum?",
      T07: "Select every graph that rises above {threshold} inside the given time interval.",
      T08: "Which quadrant has the highest increase on average over the given time interval?",
      T09: "Does the highlighted graph stay within the given range around its first value?",
      T10: "Which quadrant contains the most homogeneous graphs?",
    },
    explanations: {
      CBP: "Columns summarize intervals.",
      CHG: "Slices share one square.",
    },
    technique_orders: { "0": ["CBP", "CHG"] },
    training: {
      CBP: [
        {
          id: "train_CBP_0",
          task_id: "T01",
          stimulus: "stimuli/training_CBP_0.svg",
          params: { marker_step: 40 },
          answer_type: "single_graph",
          key: 4,
          grid,
          quadrant_side: null,
        },
        {
          id: "train_CBP_1",
          task_id: "T01",
          stimulus: "stimuli/training_CBP_1.svg",
          params: { marker_step: 12 },
          answer_type: "single_graph",
          key: 7,
          grid,
          quadrant_side: null,
        },
      ],
      CHG: [
        {
          id: "train_CHG_0",
          task_id: "T01",
          stimulus: "stimuli/training_CHG_0.svg",
          params: { marker_step: 3 },
          answer_type: "single_graph",
          key: 0,
          grid,
          quadrant_side: null,
        },
      ],
    },
    trials: {
      "0": [
        trial("p00_CBP_T01_r0", "T01", "CBP", 0, "single_graph", { marker_step: 40 }),
        trial("p00_CBP_T01_r1", "T01", "CBP", 1, "single_graph", { marker_step: 17 }),
        trial("p00_CBP_T05_r0", "T05", "CBP", 0, "value_input", { marker_steps: [10, 60] }),
        trial("p00_CHG_T06_r0", "T06", "CHG", 0, "time_slider", { highlight: 2 }),
        trial("p00_CHG_T07_r0", "T07", "CHG", 0, "multi_graph", {
          threshold: 70,
          interval: [24, 47],
        }),
        trial("p00_CHG_T09_r0", "T09", "CHG", 0, "yes_no", { highlight: 4, tolerance: 15 }),
        trial(
          "p00_CHG_T08_r0",
          "T08",
          "CHG",
          0,
          "quadrant",
          { interval: [0, 71], variant: "full" },
          [9, 9],
          4,
        ),
        trial("p00_CHG_T10_r0", "T10", "CHG", 0, "quadrant", {}, [9, 9], 4),
      ],
    },
  };
}

export const VALID_DEMOGRAPHICS = {
  age: 29,
  gender: "female",
  degree: "master",
  familiarity: 5,
  normal_vision: true,
  color_normal: true,
};
