import { createApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
// Served at /app by the review service; the API lives at the origin root.
const app = createApp(root, "");
void app.store.refreshAll();
