/** Browser entry point: mount the app against a same-origin or configured API. */

import { ApiClient } from "./api.js";
import { App } from "./app.js";

declare global {
  interface Window {
    PREFLOOP_API_URL?: string;
  }
}

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const baseUrl = window.PREFLOOP_API_URL ?? "";
  new App(root, new ApiClient(baseUrl));
});
