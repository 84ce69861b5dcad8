import { describe, expect, it } from "vitest";

import {
  canSubmit,
  emptyDraft,
  validateDraft,
  type ReportDraft,
} from "../src/composer.js";

function filledDraft(): ReportDraft {
  return {
    reporterName: "Rowan Vale",
    reporterContact: "rowan@example.org",
    cardId: "card-judge",
    flawClass: "error",
    errorKind: "systematic",
    narrative: "The system upholds disputes it should deny.",
    behaviorDescription: "False positive rate exceeds the declared bound.",
    samples: [{ input: "dispute 0", output: "uphold 0", matchRule: "exact" }],
  };
}

describe("report composer", () => {
  it("blocks submission with zero samples", () => {
    const draft = { ...filledDraft(), samples: [] };
    expect(canSubmit(draft)).toBe(false);
    const findings = validateDraft(draft);
    expect(findings.some((f) => f.field === "samples")).toBe(true);
  });

  it("enables submission once a sample pair is added", () => {
    expect(canSubmit(filledDraft())).toBe(true);
  });

  it("requires both halves of every sample pair", () => {
    const draft = filledDraft();
    draft.samples.push({ input: "", output: "x", matchRule: "exact" });
    expect(validateDraft(draft).map((f) => f.field)).toContain("samples[1]");
  });

  it("requires a predicate name for predicate_tag samples", () => {
    const draft = filledDraft();
    draft.samples[0].matchRule = "predicate_tag";
    expect(canSubmit(draft)).toBe(false);
    draft.samples[0].predicate = "valid_json";
    expect(canSubmit(draft)).toBe(true);
  });

  it("restricts error kind to error-class flaws", () => {
    const draft = { ...filledDraft(), flawClass: "safety" };
    expect(canSubmit(draft)).toBe(false);
    expect(canSubmit({ ...draft, errorKind: "not_applicable" })).toBe(true);
  });

  it("starts empty and unsubmittable", () => {
    expect(canSubmit(emptyDraft())).toBe(false);
  });
});
