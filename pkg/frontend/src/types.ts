// Shapes served by the review API (GET /api/queue, /api/item, /api/progress).

export interface Weights {
  comprehension: number;
  factual: number;
  completeness: number;
  clarity: number;
  length: number;
}

export interface MachineVerdict {
  reasoning: string;
  likert: number[];
  script_valid: boolean;
  confidence: number;
  final_score: number;
}

export interface QueueItemPayload {
  standard_question: string;
  dialect_question: string;
  standard_response: string;
  dialect_response: string;
  machine: MachineVerdict;
}

export interface HumanOverride {
  likert: number[];
  script_valid: boolean;
  confidence: number;
  final_score: number;
  note: string;
}

export interface QueueItem {
  verdict_ref: string;
  question_id: string;
  dialect: string;
  model_name: string;
  judge: string;
  payload: QueueItemPayload;
  status: 'pending' | 'resolved';
  human_override: HumanOverride | null;
}

export interface QueueCounts {
  pending: number;
  resolved: number;
  total: number;
}

export interface QueueResponse {
  items: QueueItem[];
  counts: QueueCounts;
}

export interface Progress extends QueueCounts {
  weights: Weights;
  scale_max: number;
  verdicts?: { total: number; ok: number; failed: number };
}

export interface OverridePayload {
  verdict_ref: string;
  likert_comprehension: number;
  likert_factual: number;
  likert_completeness: number;
  likert_clarity: number;
  likert_length: number;
  script_valid: boolean;
  note: string;
  viewed_machine_reasoning: boolean;
}

export interface VerdictResponse {
  verdict_ref: string;
  status: string;
  final_score: number;
  was_resolved: boolean;
}

export type StatusFilter = 'pending' | 'resolved' | 'all';
