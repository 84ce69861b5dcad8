// Documents as delivered by the coordination service. The client never
// computes domain state from these; it only projects them for display.

export type Role = "submitter" | "vendor" | "adjudicator" | "system";

export type CaseState =
  | "submitted"
  | "triaged"
  | "rejected_technical"
  | "in_review"
  | "data_requested"
  | "accepted"
  | "rejected_out_of_scope"
  | "rejected_in_intent"
  | "rejected_statistical"
  | "appealed"
  | "in_adjudication"
  | "awarded"
  | "rejection_upheld"
  | "flagged_common_use"
  | "edge_assessment"
  | "remediation"
  | "reverification"
  | "regressed"
  | "published"
  | "closed";

export interface TransitionDoc {
  from: CaseState;
  to: CaseState;
  actor: Role;
  reason: string;
  occurred_at: string;
  evidence_ref: string | null;
  evidence_sensitive: boolean;
}

export interface CaseDoc {
  case_id: string;
  state: CaseState;
  vendor: string;
  report_id: string;
  cfe_id: string | null;
  embargo_deadline: string | null;
  history: TransitionDoc[];
  available_actions?: string[];
}

export interface SampleDoc {
  input: string; // base64
  input_media: string;
  output: string; // base64
  output_media: string;
  match_rule: string;
  predicate?: string | null;
}

export interface ReportDoc {
  report_id: string;
  reporter: { name: string; contact: string };
  vendor: string;
  system: string;
  card_ref: { card_id: string; version: number };
  flaw_class: string;
  error_kind: string;
  narrative: string;
  claim: { behavior_description: string; cited_measure?: string | null };
  samples: SampleDoc[];
}

export interface PerSampleResult {
  sample_index: number;
  reproduced: boolean;
  observed: string;
}

export interface VerificationResultDoc {
  result_id: string;
  case_ref: string;
  all_reproduced: boolean;
  per_sample: PerSampleResult[];
}

export interface FeedItemDoc {
  cfe_id: string;
  case: CaseDoc;
  report: ReportDoc;
}
