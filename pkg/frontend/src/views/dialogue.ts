/**
 * Role-attributed dialogue with override recording. Overrides are an overlay
 * the server applies at export time; the pipeline artifacts stay untouched.
 */

import { ReviewStore } from "../state.js";
import { el, roleColor } from "../format.js";

export function mountDialogue(container: HTMLElement, store: ReviewStore): void {
  container.append(el("h2", {}, "Dialogue"));
  const overrideForm = el("div", { class: "override-form" });
  const roleSelect = el("select", { "data-testid": "override-role" });
  for (const role of ["trainer", "trainee", "unknown"]) {
    roleSelect.append(el("option", { value: role }, role));
  }
  const noteInput = el("input", {
    type: "text",
    placeholder: "audit note",
    "data-testid": "override-note",
  }) as HTMLInputElement;
  const overrideButton = el("button", { "data-testid": "override-apply" }, "Override role");
  overrideForm.append(
    el("span", {}, "Override selected segment:"),
    roleSelect,
    noteInput,
    overrideButton,
  );
  const list = el("ol", { class: "dialogue-list", "data-testid": "dialogue-list" });
  container.append(overrideForm, list);

  overrideButton.addEventListener("click", () => {
    const segmentId = store.state.selectedSegment;
    if (segmentId === null) return;
    void store.overrideRole(segmentId, roleSelect.value, noteInput.value);
  });

  store.subscribe((state) => {
    (overrideButton as HTMLButtonElement).disabled =
      state.selectedSegment === null || state.busy;
    list.replaceChildren();
    for (const turn of state.dialogue?.turns ?? []) {
      const item = el("li", { "data-turn-index": String(turn.index) });
      const roleTag = el("span", { class: "role-tag" }, turn.role);
      roleTag.style.color = roleColor(turn.role);
      item.append(
        el("span", { class: "muted" }, `${turn.timestamp_label} `),
        roleTag,
        el("span", {}, `: ${turn.text}`),
      );
      if (turn.override_note !== undefined) {
        item.append(el("span", { class: "override-note" }, ` (override: ${turn.override_note})`));
      }
      list.append(item);
    }
    if ((state.dialogue?.turns ?? []).length === 0) {
      list.append(el("li", { class: "muted" }, "no refined dialogue yet — run refinement"));
    }
  });
}
