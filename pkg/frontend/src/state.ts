/** Pure view-model logic: local annotations, submit payloads, validation. */

import type {
  Annotation,
  CandidateCard,
  CandidatePayload,
  SessionView,
  Snapshot,
} from "./types.js";

/** Fresh cards for a new round; local annotations always reset. */
export function newRoundView(
  sessionId: string,
  roundIndex: number,
  candidates: CandidatePayload[],
): SessionView {
  return {
    sessionId,
    phase: "awaiting_feedback",
    roundIndex,
    cards: candidates.map((payload) => ({ payload, annotation: "unlabeled" })),
  };
}

/** Clicking a mark sets it; clicking the active mark clears back to unlabeled. */
export function toggleAnnotation(current: Annotation, clicked: "liked" | "disliked"): Annotation {
  return current === clicked ? "unlabeled" : clicked;
}

export function annotate(
  view: SessionView,
  imageId: string,
  clicked: "liked" | "disliked",
): SessionView {
  return {
    ...view,
    cards: view.cards.map((card) =>
      card.payload.image_id === imageId
        ? { ...card, annotation: toggleAnnotation(card.annotation, clicked) }
        : card,
    ),
  };
}

/** Every card is submitted; unmarked ones go as unlabeled (multi-select semantics). */
export function annotationsPayload(view: SessionView): Record<string, Annotation> {
  const payload: Record<string, Annotation> = {};
  for (const card of view.cards) {
    payload[card.payload.image_id] = card.annotation;
  }
  return payload;
}

export function annotatedCount(view: SessionView): number {
  return view.cards.filter((c) => c.annotation !== "unlabeled").length;
}

/** A round with no liked or no disliked entries is statistics-neutral. */
export function isStatisticsNeutral(view: SessionView): boolean {
  const marks = new Set(view.cards.map((c) => c.annotation));
  return !(marks.has("liked") && marks.has("disliked"));
}

/** Structural validation of the snapshot payload; returns human-readable
 * problems (empty when the payload is renderable). */
export function snapshotProblems(payload: unknown): string[] {
  const problems: string[] = [];
  if (payload === null || typeof payload !== "object") {
    return ["snapshot is not an object"];
  }
  const snap = payload as Partial<Snapshot>;
  if (typeof snap.rounds_ingested !== "number") problems.push("missing rounds_ingested");
  if (typeof snap.pool_size !== "number") problems.push("missing pool_size");
  if (snap.discrete === null || typeof snap.discrete !== "object") {
    problems.push("missing discrete section");
  } else {
    for (const [feature, entries] of Object.entries(snap.discrete)) {
      if (!Array.isArray(entries)) {
        problems.push(`discrete ${feature} is not a list`);
        continue;
      }
      for (const entry of entries) {
        if (typeof entry?.value !== "string" || typeof entry?.odds_ratio !== "number") {
          problems.push(`discrete ${feature} has a malformed entry`);
          break;
        }
      }
    }
  }
  if (snap.ordinal === null || typeof snap.ordinal !== "object") {
    problems.push("missing ordinal section");
  } else {
    for (const [feature, stats] of Object.entries(snap.ordinal)) {
      if (stats === null || typeof stats !== "object") {
        problems.push(`ordinal ${feature} is malformed`);
      } else if (!stats.insufficient_data && typeof stats.d !== "number") {
        problems.push(`ordinal ${feature} lacks both d and the insufficient-data marker`);
      }
    }
  }
  return problems;
}

/** Log-scaled bar geometry for odds ratios: OR=1 sits on the midline,
 * 2x and 1/2x render symmetrically. Purely presentational. */
export function orBar(oddsRatio: number, maxAbsLog = Math.log(100)): {
  side: "positive" | "negative";
  percent: number;
} {
  const logged = Math.log(Math.max(oddsRatio, 1e-9));
  const clamped = Math.max(-maxAbsLog, Math.min(maxAbsLog, logged));
  return {
    side: clamped >= 0 ? "positive" : "negative",
    percent: Math.round((Math.abs(clamped) / maxAbsLog) * 500) / 10,
  };
}
