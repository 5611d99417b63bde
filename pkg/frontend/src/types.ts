/** Wire types mirroring the session service's HTTP payloads. */

export type Annotation = "liked" | "disliked" | "unlabeled";

export interface CandidatePayload {
  image_id: string;
  uri: string;
  prompt: string;
  negative_prompt?: string;
}

export interface CreateSessionResponse {
  session_id: string;
  candidates: CandidatePayload[];
}

export interface NextRoundResponse {
  session_id: string;
  round_index: number;
  candidates: CandidatePayload[];
}

export interface SessionViewPayload {
  session_id: string;
  phase: string;
  round_index: number;
  initial_prompt: string;
  candidates: CandidatePayload[];
}

export interface DiscreteEntry {
  value: string;
  odds_ratio: number;
}

export interface OrdinalStats {
  insufficient_data?: boolean;
  d?: number;
  mu_liked?: number;
  mu_disliked?: number;
  emphasis?: boolean;
  preferred_level?: string;
}

export interface Snapshot {
  rounds_ingested: number;
  pool_size: number;
  discrete: Record<string, DiscreteEntry[]>;
  ordinal: Record<string, OrdinalStats>;
}

/** One candidate card plus its local, not-yet-submitted annotation. */
export interface CandidateCard {
  payload: CandidatePayload;
  annotation: Annotation;
}

export interface SessionView {
  sessionId: string;
  phase: string;
  roundIndex: number;
  cards: CandidateCard[];
}
