/**
 * Anchor curation: audition or inspect the selected segment, assign it as a
 * trainer/trainee anchor, track per-role counts against the required minimum,
 * and remove mistakes. The similarity matrix refetches after every change
 * because the store reloads all reads on mutation.
 */

import { ReviewStore, insufficientRoles } from "../state.js";
import { el } from "../format.js";

export function mountAnchors(container: HTMLElement, store: ReviewStore): void {
  container.append(el("h2", {}, "Anchor curation"));
  const banner = el("div", { class: "banner", "data-testid": "anchor-banner" });
  const selectedBox = el("div", { class: "selected-segment" });
  const form = el("div", { class: "anchor-form" });
  const roleSelect = el("select", { "data-testid": "anchor-role" });
  roleSelect.append(el("option", { value: "trainer" }, "trainer"));
  roleSelect.append(el("option", { value: "trainee" }, "trainee"));
  const labelInput = el("input", {
    type: "text",
    placeholder: "label (optional)",
    "data-testid": "anchor-label",
  });
  const addButton = el("button", { "data-testid": "anchor-add" }, "Add as anchor");
  form.append(roleSelect, labelInput, addButton);
  const listBox = el("ul", { class: "anchor-list", "data-testid": "anchor-list" });
  container.append(banner, selectedBox, form, listBox);

  addButton.addEventListener("click", () => {
    const state = store.state;
    const segment = state.timeline?.segments.find((s) => s.id === state.selectedSegment);
    if (!segment) return;
    void store.addAnchor(
      roleSelect.value,
      segment.start_s,
      segment.end_s,
      (labelInput as HTMLInputElement).value,
    );
  });

  store.subscribe((state) => {
    const missing = insufficientRoles(state.anchors);
    if (missing.length > 0) {
      banner.textContent = `insufficient anchors: ${missing.join(", ")}`;
      banner.classList.add("warning");
    } else if (state.anchors) {
      banner.textContent = "anchor sets complete";
      banner.classList.remove("warning");
    } else {
      banner.textContent = "";
    }

    selectedBox.replaceChildren();
    const segment = state.timeline?.segments.find((s) => s.id === state.selectedSegment);
    if (segment) {
      selectedBox.append(
        el(
          "div",
          { "data-testid": "selected-text" },
          `#${segment.id} [${segment.start_s.toFixed(2)}–${segment.end_s.toFixed(2)}] ${segment.text}`,
        ),
      );
      if (state.timeline?.simulation) {
        selectedBox.append(
          el("div", { class: "muted" }, "simulation mode: scripted text shown, no audio"),
        );
      } else {
        const audio = el("audio", {
          controls: "",
          src: store.api.segmentAudioUrl(segment.id),
          "data-testid": "segment-audio",
        });
        selectedBox.append(audio);
      }
    } else {
      selectedBox.append(el("div", { class: "muted" }, "select a segment on the timeline"));
    }
    (addButton as HTMLButtonElement).disabled = !segment || state.busy;

    listBox.replaceChildren();
    for (const anchor of state.anchors?.anchors ?? []) {
      const item = el("li", { "data-anchor-id": anchor.id });
      item.append(
        el(
          "span",
          {},
          `${anchor.role} [${anchor.start_s.toFixed(2)}–${anchor.end_s.toFixed(2)}] ${anchor.label}`,
        ),
      );
      const remove = el("button", { "data-testid": `anchor-remove-${anchor.id}` }, "remove");
      remove.addEventListener("click", () => void store.removeAnchor(anchor.id));
      item.append(remove);
      listBox.append(item);
    }
  });
}
