/** Preference dashboard rendering.
 *
 * Renders exactly the server snapshot: every number shown carries the exact
 * payload value in a data attribute (the parity tests compare those), with
 * rounded text for humans. Malformed payloads get a diagnostic panel
 * instead of a crash.
 */

import { orBar, snapshotProblems } from "./state.js";
import type { Snapshot } from "./types.js";

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function renderDashboard(container: HTMLElement, payload: unknown): void {
  container.textContent = "";
  const problems = snapshotProblems(payload);
  if (problems.length > 0) {
    const panel = el("div", "diagnostic-panel");
    panel.appendChild(el("h3", "diagnostic-title", "Snapshot payload rejected"));
    const list = el("ul", "diagnostic-list");
    for (const problem of problems) {
      list.appendChild(el("li", "diagnostic-item", problem));
    }
    panel.appendChild(list);
    container.appendChild(panel);
    return;
  }
  const snapshot = payload as Snapshot;

  const meta = el("div", "dashboard-meta");
  const rounds = el("span", "meta-rounds", `rounds: ${snapshot.rounds_ingested}`);
  rounds.dataset.exact = String(snapshot.rounds_ingested);
  const pool = el("span", "meta-pool", `pool: ${snapshot.pool_size}`);
  pool.dataset.exact = String(snapshot.pool_size);
  meta.append(rounds, " ", pool);
  container.appendChild(meta);

  const discrete = el("div", "discrete-section");
  for (const [featureId, entries] of Object.entries(snapshot.discrete)) {
    const block = el("div", "feature-block");
    block.dataset.feature = featureId;
    block.appendChild(el("h4", "feature-name", featureId));
    for (const entry of entries) {
      const row = el("div", "or-row");
      row.dataset.value = entry.value;
      row.appendChild(el("span", "or-value-name", entry.value));

      const bar = el("div", "or-bar");
      const geometry = orBar(entry.odds_ratio);
      const fill = el("div", `or-fill ${geometry.side}`);
      fill.style.width = `${geometry.percent}%`;
      bar.appendChild(fill);
      row.appendChild(bar);

      const number = el("span", "or-number", entry.odds_ratio.toFixed(2));
      number.dataset.exact = String(entry.odds_ratio);
      row.appendChild(number);
      block.appendChild(row);
    }
    discrete.appendChild(block);
  }
  container.appendChild(discrete);

  const ordinal = el("div", "ordinal-section");
  for (const [featureId, stats] of Object.entries(snapshot.ordinal)) {
    const row = el("div", "ordinal-row");
    row.dataset.feature = featureId;
    row.appendChild(el("span", "feature-name", featureId));
    if (stats.insufficient_data || stats.d === undefined) {
      row.appendChild(el("span", "ordinal-pending", "awaiting mixed feedback"));
      ordinal.appendChild(row);
      continue;
    }
    const d = el("span", "ordinal-d", `d=${stats.d.toFixed(2)}`);
    d.dataset.exact = String(stats.d);
    row.appendChild(d);
    // direction arrow points toward the liked-group mean's nearest level
    const arrow = stats.d >= 0 ? "↑" : "↓";
    row.appendChild(
      el("span", "ordinal-direction", `${arrow} ${stats.preferred_level ?? ""}`),
    );
    const muLiked = el("span", "ordinal-mu", `liked at ${Number(stats.mu_liked).toFixed(2)}`);
    muLiked.dataset.exact = String(stats.mu_liked);
    row.appendChild(muLiked);
    if (stats.emphasis) {
      row.appendChild(el("span", "emphasis-badge", "high emphasis"));
    }
    ordinal.appendChild(row);
  }
  container.appendChild(ordinal);
}
