/** Small presentation helpers shared by the views. */

export function clock(seconds: number): string {
  const total = Math.floor(seconds);
  const h = Math.floor(total / 3600);
  const m = Math.floor((total % 3600) / 60);
  const s = total % 60;
  const pad = (n: number) => String(n).padStart(2, "0");
  return `${pad(h)}:${pad(m)}:${pad(s)}`;
}

export const ROLE_COLORS: Record<string, string> = {
  trainer: "#2563eb",
  trainee: "#16a34a",
  unknown: "#a16207",
  hallucination: "#dc2626",
};

export function roleColor(outcome: string | null): string {
  return (outcome && ROLE_COLORS[outcome]) || "#9ca3af";
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function svgEl(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

/** Heat color for a cosine similarity in [-1, 1]. */
export function similarityColor(value: number): string {
  const clamped = Math.max(0, Math.min(1, (value + 1) / 2));
  const warm = Math.round(255 * clamped);
  const cold = Math.round(255 * (1 - clamped));
  return `rgb(${warm}, ${Math.round(64 + 96 * clamped)}, ${cold})`;
}
