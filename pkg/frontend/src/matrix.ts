import type { CaseState, Role } from "./types.js";

// Shape of GET /matrix. A generated copy lives in fixtures/action-matrix.json
// and the contract test keeps UI_ACTION_RULES identical to it.
export interface ActionMatrix {
  states: CaseState[];
  roles: Role[];
  actions: Record<string, { role: Role; states: CaseState[] }>;
  terminal_states: CaseState[];
  rejected_states: CaseState[];
}

// The client's own copy of the actor table. Buttons are enabled from this
// table alone; the server re-checks every call, so a drift here can only
// hide actions, never forge them — and the contract test forbids drift too.
export const UI_ACTION_RULES: Record<
  string,
  { role: Role; states: CaseState[] }
> = {
  triage: { role: "vendor", states: ["submitted"] },
  review: { role: "vendor", states: ["data_requested", "triaged"] },
  flag_common_use: { role: "vendor", states: ["submitted", "triaged"] },
  appeal: {
    role: "submitter",
    states: [
      "rejected_in_intent",
      "rejected_out_of_scope",
      "rejected_statistical",
      "rejected_technical",
    ],
  },
  adjudicate: { role: "adjudicator", states: ["appealed", "in_adjudication"] },
  edge_adjudicate: { role: "adjudicator", states: ["flagged_common_use"] },
  record_remediation: { role: "vendor", states: ["accepted", "awarded"] },
  mark_remediated: { role: "vendor", states: ["remediation"] },
  reverify: { role: "system", states: ["reverification"] },
  close: { role: "vendor", states: ["published", "reverification"] },
};

/** Actions the given role may take on a case in the given state, sorted. */
export function availableActions(role: Role, state: CaseState): string[] {
  return Object.keys(UI_ACTION_RULES)
    .filter((name) => {
      const rule = UI_ACTION_RULES[name];
      return rule.role === role && rule.states.includes(state);
    })
    .sort();
}

/** True exactly when the appeal control must be shown to a submitter. */
export function isAppealable(state: CaseState): boolean {
  return UI_ACTION_RULES.appeal.states.includes(state);
}

export function isTerminal(state: CaseState): boolean {
  return state === "closed" || state === "rejection_upheld";
}
