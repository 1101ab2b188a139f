import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { validateDob, validateEstimate, validateZip } from "../src/validate.js";

interface Case {
  name: string;
  payload: Record<string, unknown>;
  valid: boolean;
  field?: string;
}

const cases: Case[] = JSON.parse(
  readFileSync(join(__dirname, "..", "fixtures", "validation_cases.json"), "utf-8"),
);

describe("shared validation fixture", () => {
  it("covers both verdicts", () => {
    expect(cases.some((c) => c.valid)).toBe(true);
    expect(cases.some((c) => !c.valid)).toBe(true);
  });

  for (const testCase of cases) {
    it(`matches the service verdict for ${testCase.name}`, () => {
      const verdict = validateEstimate(testCase.payload);
      expect(verdict.ok).toBe(testCase.valid);
      if (!verdict.ok) {
        expect(verdict.field).toBe(testCase.field);
      }
    });
  }
});

describe("date validation details", () => {
  it("accepts leap day on leap years only", () => {
    expect(validateDob("2000-02-29").ok).toBe(true);
    expect(validateDob("1900-02-29").ok).toBe(false);
  });

  it("accepts truncated forms", () => {
    expect(validateDob("1975").ok).toBe(true);
    expect(validateDob("1975-03").ok).toBe(true);
  });
});

describe("zip validation details", () => {
  it("requires exactly five digits", () => {
    expect(validateZip("02139").ok).toBe(true);
    for (const bad of ["0213", "021394", "2139a", ""]) {
      expect(validateZip(bad).ok).toBe(false);
    }
  });
});
