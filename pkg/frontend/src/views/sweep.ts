/**
 * Refinement review: similarity-threshold slider over the server-computed
 * sweep curve (precision / recall / precision-leaning mean), rerun trigger,
 * and the list of segments the current run removed as hallucinations.
 */

import { SweepRow } from "../api.js";
import { ReviewStore } from "../state.js";
import { el, svgEl } from "../format.js";

const W = 420;
const H = 160;
const PAD = 28;
const DEFAULT_THRESHOLD = 0.2;

const SERIES: Array<{ key: keyof SweepRow; color: string; label: string }> = [
  { key: "precision", color: "#2563eb", label: "precision" },
  { key: "recall", color: "#16a34a", label: "recall" },
  { key: "plm", color: "#dc2626", label: "PLM" },
];

export function mountSweep(container: HTMLElement, store: ReviewStore): void {
  container.append(el("h2", {}, "Refinement threshold"));
  const chartHolder = el("div", { class: "sweep-holder" });
  const sliderRow = el("div", { class: "slider-row" });
  const slider = el("input", {
    type: "range",
    min: "0",
    max: "1",
    step: "0.01",
    "data-testid": "threshold-slider",
  }) as HTMLInputElement;
  const sliderValue = el("span", { "data-testid": "threshold-value" });
  const rerun = el("button", { "data-testid": "rerun-refine" }, "Apply threshold + rerun");
  sliderRow.append(slider, sliderValue, rerun);
  const removedBox = el("div", { class: "removed-box" });
  const removedTitle = el("h3", {}, "Removed as hallucination");
  const removedList = el("ul", { "data-testid": "removed-list" });
  removedBox.append(removedTitle, removedList);
  container.append(chartHolder, sliderRow, removedBox);

  slider.addEventListener("input", () => {
    store.setThresholdDraft(Number(slider.value));
  });
  rerun.addEventListener("click", () => void store.applyThresholdAndRerun());

  store.subscribe((state) => {
    slider.value = String(state.thresholdDraft);
    const isDefault = Math.abs(state.thresholdDraft - DEFAULT_THRESHOLD) < 1e-9;
    sliderValue.textContent =
      state.thresholdDraft.toFixed(2) + (isDefault ? " (default)" : "");
    sliderValue.classList.toggle("default-threshold", isDefault);
    (rerun as HTMLButtonElement).disabled = state.busy;

    chartHolder.replaceChildren();
    const rows = state.sweep?.rows ?? [];
    if (rows.length === 0) {
      chartHolder.append(
        el("div", { class: "muted" }, "sweep unavailable (anchors or double ASR runs missing)"),
      );
    } else {
      chartHolder.append(renderChart(rows, state.thresholdDraft));
    }

    removedList.replaceChildren();
    const removed =
      state.timeline?.segments.filter((s) => s.outcome === "hallucination") ?? [];
    removedTitle.textContent = `Removed as hallucination (${removed.length})`;
    for (const segment of removed) {
      removedList.append(
        el(
          "li",
          { "data-removed-id": String(segment.id) },
          `#${segment.id} [${segment.start_s.toFixed(2)}s] ` +
            `sims ${segment.sim_trainer?.toFixed(3)}/${segment.sim_trainee?.toFixed(3)} ` +
            `${segment.text}`,
        ),
      );
    }
  });
}

function renderChart(rows: SweepRow[], draft: number): SVGElement {
  const svg = svgEl("svg", {
    viewBox: `0 0 ${W} ${H}`,
    width: String(W),
    height: String(H),
    "data-testid": "sweep-chart",
  });
  const xs = rows.map((r) => r.threshold);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const values = rows.flatMap((r) =>
    SERIES.map((s) => r[s.key]).filter((v): v is number => typeof v === "number"),
  );
  const yMax = Math.max(1, ...values);
  const x = (t: number) => PAD + ((t - xMin) / (xMax - xMin || 1)) * (W - 2 * PAD);
  const y = (v: number) => H - PAD - (v / yMax) * (H - 2 * PAD);

  svg.append(
    svgEl("line", { x1: String(PAD), x2: String(W - PAD), y1: String(H - PAD), y2: String(H - PAD), stroke: "#9ca3af" }),
    svgEl("line", { x1: String(PAD), x2: String(PAD), y1: String(PAD), y2: String(H - PAD), stroke: "#9ca3af" }),
  );

  for (const series of SERIES) {
    const points = rows
      .filter((r) => typeof r[series.key] === "number")
      .map((r) => `${x(r.threshold)},${y(r[series.key] as number)}`)
      .join(" ");
    if (points) {
      svg.append(
        svgEl("polyline", {
          points,
          fill: "none",
          stroke: series.color,
          "stroke-width": "1.5",
          "data-series": series.label,
        }),
      );
    }
  }

  // draft threshold marker; the published default (0.2) gets a dashed marker
  svg.append(
    svgEl("line", {
      x1: String(x(DEFAULT_THRESHOLD)),
      x2: String(x(DEFAULT_THRESHOLD)),
      y1: String(PAD),
      y2: String(H - PAD),
      stroke: "#6b7280",
      "stroke-dasharray": "4 3",
      "data-testid": "default-threshold-marker",
    }),
    svgEl("line", {
      x1: String(x(draft)),
      x2: String(x(draft)),
      y1: String(PAD),
      y2: String(H - PAD),
      stroke: "#111827",
      "data-testid": "draft-threshold-marker",
    }),
  );
  return svg;
}
