/**
 * Anchor-vs-anchor cosine similarity grid. Within-role blocks should read
 * visibly warmer than cross-role blocks once both anchor sets are healthy.
 */

import { ReviewStore } from "../state.js";
import { el, similarityColor } from "../format.js";

export function mountMatrix(container: HTMLElement, store: ReviewStore): void {
  container.append(el("h2", {}, "Anchor similarity"));
  const holder = el("div", { class: "matrix-holder" });
  container.append(holder);

  store.subscribe((state) => {
    holder.replaceChildren();
    const matrix = state.matrix;
    if (!matrix || matrix.labels.length === 0) {
      holder.append(el("div", { class: "muted" }, "no anchors embedded yet"));
      return;
    }
    const table = el("table", { class: "matrix", "data-testid": "similarity-matrix" });
    const head = el("tr");
    head.append(el("th"));
    for (const label of matrix.labels) head.append(el("th", {}, label));
    table.append(head);
    matrix.matrix.forEach((row, i) => {
      const tr = el("tr");
      tr.append(el("th", {}, matrix.labels[i] ?? ""));
      row.forEach((value, j) => {
        const cell = el(
          "td",
          {
            "data-cell": `${i}-${j}`,
            style: `background:${similarityColor(value)}`,
            title: `${matrix.labels[i]} vs ${matrix.labels[j]}: ${value.toFixed(3)}`,
          },
          value.toFixed(2),
        );
        tr.append(cell);
      });
      table.append(tr);
    });
    holder.append(table);
  });
}
