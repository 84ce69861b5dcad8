import { availableActions, isAppealable, isTerminal } from "./matrix.js";
import type {
  CaseDoc,
  CaseState,
  TransitionDoc,
  VerificationResultDoc,
} from "./types.js";

// Role workspaces are pure projections: (role, API documents) -> view rows.
// No transition logic lives here beyond reading the shared actor table.

export interface CaseRow {
  caseId: string;
  state: CaseState;
  badge: "open" | "rejected" | "issued" | "closed";
  actions: string[];
}

const REJECTED: CaseState[] = [
  "rejected_technical",
  "rejected_out_of_scope",
  "rejected_in_intent",
  "rejected_statistical",
];

function badge(state: CaseState): CaseRow["badge"] {
  if (isTerminal(state)) return "closed";
  if (REJECTED.includes(state)) return "rejected";
  if (["accepted", "awarded", "remediation", "reverification", "regressed", "published"].includes(state)) {
    return "issued";
  }
  return "open";
}

export interface SubmitterRow extends CaseRow {
  appealEnabled: boolean;
}

export function submitterCaseList(cases: CaseDoc[]): SubmitterRow[] {
  return cases.map((c) => ({
    caseId: c.case_id,
    state: c.state,
    badge: badge(c.state),
    actions: availableActions("submitter", c.state),
    appealEnabled: isAppealable(c.state),
  }));
}

export interface VendorRow extends CaseRow {
  // Preselected rejection suggestion shown in the review form, derived only
  // from the verification result the API returned.
  suggestion: "rejected_technical" | null;
}

export function vendorBoard(
  vendorName: string,
  cases: CaseDoc[],
  results: Map<string, VerificationResultDoc>,
): VendorRow[] {
  return cases
    .filter((c) => c.vendor === vendorName)
    .map((c) => {
      const result = results.get(c.case_id);
      return {
        caseId: c.case_id,
        state: c.state,
        badge: badge(c.state),
        actions: availableActions("vendor", c.state),
        suggestion:
          result !== undefined && !result.all_reproduced
            ? "rejected_technical"
            : null,
      };
    });
}

export interface DecisionForm {
  outcomes: string[];
  isWizard: boolean;
  wizardSteps: string[];
}

export const EDGE_WIZARD_STEPS = [
  "Confirm the flagged use case and affected population",
  "Review adoption evidence from the observation tracker",
  "Assess whether the use is in fact common",
  "Rate potential harm (low / medium / high)",
  "Hear vendor and submitter positions",
  "Record the panel decision",
];

/** Which decision form an adjudicator sees for a case, if any. */
export function adjudicatorDecisionForm(state: CaseState): DecisionForm | null {
  if (state === "appealed" || state === "in_adjudication") {
    return { outcomes: ["award", "uphold_rejection"], isWizard: false, wizardSteps: [] };
  }
  if (state === "flagged_common_use") {
    return {
      outcomes: [
        "include_in_cfd",
        "update_model_card",
        "interim_mitigation",
        "public_disclosure",
      ],
      isWizard: true,
      wizardSteps: EDGE_WIZARD_STEPS,
    };
  }
  return null;
}

export interface TimelineEntry {
  label: string;
  actor: string;
  at: string;
  redacted: boolean;
}

/** The case timeline renders every transition in history order, verbatim. */
export function caseTimeline(history: TransitionDoc[]): TimelineEntry[] {
  return history.map((t) => ({
    label: `${t.from} → ${t.to}`,
    actor: t.actor,
    at: t.occurred_at,
    redacted: t.evidence_ref === "[redacted-evidence]",
  }));
}

/** Embargo countdown in whole seconds; null once published or no deadline. */
export function embargoCountdown(
  deadline: string | null,
  now: Date,
): number | null {
  if (deadline === null) return null;
  const remaining = Math.floor((Date.parse(deadline) - now.getTime()) / 1000);
  return remaining > 0 ? remaining : null;
}
