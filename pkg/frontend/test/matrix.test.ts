import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  availableActions,
  isAppealable,
  UI_ACTION_RULES,
  type ActionMatrix,
} from "../src/matrix.js";
import type { CaseState, Role } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture: ActionMatrix = JSON.parse(
  readFileSync(join(here, "..", "fixtures", "action-matrix.json"), "utf-8"),
);

describe("action availability contract against the service matrix", () => {
  it("declares exactly the actions the service exports", () => {
    expect(Object.keys(UI_ACTION_RULES).sort()).toEqual(
      Object.keys(fixture.actions).sort(),
    );
  });

  it("matches role and states for every action", () => {
    for (const [name, rule] of Object.entries(fixture.actions)) {
      expect(UI_ACTION_RULES[name].role).toBe(rule.role);
      expect([...UI_ACTION_RULES[name].states].sort()).toEqual(
        [...rule.states].sort(),
      );
    }
  });

  it("agrees with the fixture for every (role, state) pair", () => {
    for (const role of fixture.roles) {
      for (const state of fixture.states) {
        const expected = Object.entries(fixture.actions)
          .filter(([, r]) => r.role === role && r.states.includes(state))
          .map(([name]) => name)
          .sort();
        expect(availableActions(role as Role, state as CaseState)).toEqual(
          expected,
        );
      }
    }
  });

  it("offers no actions in terminal states", () => {
    for (const state of fixture.terminal_states) {
      for (const role of fixture.roles) {
        expect(availableActions(role as Role, state as CaseState)).toEqual([]);
      }
    }
  });
});

describe("appeal control placement", () => {
  it("appears on exactly the four rejected states", () => {
    const appealable = fixture.states.filter((s) =>
      isAppealable(s as CaseState),
    );
    expect(appealable.sort()).toEqual([...fixture.rejected_states].sort());
    expect(appealable).toHaveLength(4);
  });

  it("is absent on accepted and closed cases", () => {
    expect(isAppealable("accepted")).toBe(false);
    expect(isAppealable("closed")).toBe(false);
    expect(isAppealable("rejection_upheld")).toBe(false);
  });
});
