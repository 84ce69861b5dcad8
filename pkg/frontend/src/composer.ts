// Report composer state. Mirrors the server's submission rules so a draft
// that passes here will not bounce with a schema error; the server remains
// the authority.

export interface SampleDraft {
  input: string;
  output: string;
  matchRule: "exact" | "contains" | "predicate_tag";
  predicate?: string;
}

export interface ReportDraft {
  reporterName: string;
  reporterContact: string;
  cardId: string;
  flawClass: string;
  errorKind: string;
  narrative: string;
  behaviorDescription: string;
  samples: SampleDraft[];
}

export interface Finding {
  field: string;
  message: string;
}

export function emptyDraft(): ReportDraft {
  return {
    reporterName: "",
    reporterContact: "",
    cardId: "",
    flawClass: "error",
    errorKind: "systematic",
    narrative: "",
    behaviorDescription: "",
    samples: [],
  };
}

export function validateDraft(draft: ReportDraft): Finding[] {
  const findings: Finding[] = [];
  if (draft.samples.length === 0) {
    findings.push({
      field: "samples",
      message: "At least one input/output sample pair is required.",
    });
  }
  draft.samples.forEach((sample, i) => {
    if (sample.input.length === 0 || sample.output.length === 0) {
      findings.push({
        field: `samples[${i}]`,
        message: "Sample input and output must both be nonempty.",
      });
    }
    if (sample.matchRule === "predicate_tag" && !sample.predicate) {
      findings.push({
        field: `samples[${i}]`,
        message: "A predicate_tag sample must name its predicate.",
      });
    }
  });
  if (!draft.reporterName.trim() || !draft.reporterContact.trim()) {
    findings.push({ field: "reporter", message: "Reporter name and contact are required." });
  }
  if (!draft.cardId.trim()) {
    findings.push({ field: "cardId", message: "A model card must be selected." });
  }
  if (!draft.narrative.trim()) {
    findings.push({ field: "narrative", message: "A narrative is required." });
  }
  if (!draft.behaviorDescription.trim()) {
    findings.push({
      field: "claim",
      message: "Describe the violating behavior.",
    });
  }
  if (draft.flawClass !== "error" && draft.errorKind !== "not_applicable") {
    findings.push({
      field: "errorKind",
      message: "Error kind applies only to error-class flaws.",
    });
  }
  return findings;
}

/** The submit button is enabled iff the draft has no findings. */
export function canSubmit(draft: ReportDraft): boolean {
  return validateDraft(draft).length === 0;
}
