/**
 * Timeline view: downsampled voice-activity strip, segment lanes colored by
 * role decision, anchor markers, and a playhead that follows the selected
 * segment. Rendered spans come straight from /timeline.
 */

import { ReviewStore } from "../state.js";
import { el, roleColor, svgEl } from "../format.js";

const WIDTH = 960;
const ACTIVITY_H = 36;
const LANE_H = 26;
const ANCHOR_H = 14;
const HEIGHT = ACTIVITY_H + LANE_H + ANCHOR_H + 8;

export function mountTimeline(container: HTMLElement, store: ReviewStore): void {
  const title = el("h2", {}, "Timeline");
  const status = el("div", { class: "muted", "data-testid": "timeline-status" });
  const holder = el("div", { class: "timeline-holder" });
  container.append(title, status, holder);

  store.subscribe((state) => {
    holder.replaceChildren();
    const timeline = state.timeline;
    if (!timeline) {
      status.textContent = "loading…";
      return;
    }
    status.textContent =
      `${timeline.surgery_id} — ${timeline.duration_s.toFixed(0)} s, ` +
      `${timeline.segments.length} segments` +
      (timeline.simulation ? " (simulation mode: audition disabled)" : "");

    const svg = svgEl("svg", {
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
      width: "100%",
      height: String(HEIGHT),
      "data-testid": "timeline-svg",
      role: "img",
    });
    const scale = WIDTH / timeline.duration_s;

    for (const point of timeline.activity) {
      const h = Math.max(1, point.v * ACTIVITY_H);
      svg.append(
        svgEl("rect", {
          x: String(point.t0 * scale),
          y: String(ACTIVITY_H - h),
          width: String(Math.max(0.5, (point.t1 - point.t0) * scale)),
          height: String(h),
          fill: "#64748b",
        }),
      );
    }

    for (const segment of timeline.segments) {
      const rect = svgEl("rect", {
        x: String(segment.start_s * scale),
        y: String(ACTIVITY_H + 2),
        width: String(Math.max(1, (segment.end_s - segment.start_s) * scale)),
        height: String(LANE_H - 4),
        fill: roleColor(segment.outcome),
        "data-segment-id": String(segment.id),
        class: "segment-rect" + (state.selectedSegment === segment.id ? " selected" : ""),
      });
      rect.addEventListener("click", () => store.selectSegment(segment.id));
      const label = svgEl("title");
      label.textContent = `#${segment.id} ${segment.outcome ?? "unrefined"}: ${segment.text}`;
      rect.append(label);
      svg.append(rect);
    }

    for (const anchor of timeline.anchors) {
      svg.append(
        svgEl("rect", {
          x: String(anchor.start_s * scale),
          y: String(ACTIVITY_H + LANE_H + 2),
          width: String(Math.max(1.5, (anchor.end_s - anchor.start_s) * scale)),
          height: String(ANCHOR_H - 4),
          fill: roleColor(anchor.role),
          class: "anchor-mark",
          "data-anchor-id": anchor.id,
        }),
      );
    }

    const selected = timeline.segments.find((s) => s.id === state.selectedSegment);
    if (selected) {
      svg.append(
        svgEl("line", {
          x1: String(selected.start_s * scale),
          x2: String(selected.start_s * scale),
          y1: "0",
          y2: String(HEIGHT),
          stroke: "#111827",
          "stroke-width": "1.5",
          class: "playhead",
        }),
      );
    }
    holder.append(svg);
  });
}
