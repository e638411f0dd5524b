/** Composition root: build the store, mount every view, load initial state. */

import { ApiClient } from "./api.js";
import { ReviewStore } from "./state.js";
import { el } from "./format.js";
import { mountAnchors } from "./views/anchors.js";
import { mountDialogue } from "./views/dialogue.js";
import { mountMatrix } from "./views/matrix.js";
import { mountSweep } from "./views/sweep.js";
import { mountTimeline } from "./views/timeline.js";

export interface App {
  store: ReviewStore;
  root: HTMLElement;
}

export function createApp(root: HTMLElement, baseUrl = ""): App {
  const store = new ReviewStore(new ApiClient(baseUrl));

  const notice = el("div", { class: "notice", "data-testid": "notice" });
  notice.addEventListener("click", () => store.dismissNotice());
  const grid = el("div", { class: "grid" });
  const timelinePanel = el("section", { class: "panel panel-wide" });
  const anchorsPanel = el("section", { class: "panel" });
  const matrixPanel = el("section", { class: "panel" });
  const sweepPanel = el("section", { class: "panel" });
  const dialoguePanel = el("section", { class: "panel" });
  grid.append(timelinePanel, anchorsPanel, matrixPanel, sweepPanel, dialoguePanel);
  root.append(el("h1", {}, "Dialogue review"), notice, grid);

  mountTimeline(timelinePanel, store);
  mountAnchors(anchorsPanel, store);
  mountMatrix(matrixPanel, store);
  mountSweep(sweepPanel, store);
  mountDialogue(dialoguePanel, store);

  store.subscribe((state) => {
    notice.textContent = state.notice ?? "";
    notice.style.display = state.notice ? "block" : "none";
  });

  return { store, root };
}
