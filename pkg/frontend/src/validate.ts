/**
 * Client-side validation of the estimate payload.
 *
 * These rules mirror the service's 400 conditions exactly: the shared
 * fixture file frontend/fixtures/validation_cases.json is asserted against
 * both this function and the live service, so the sets of accepted inputs
 * cannot drift apart.
 */

const GENDER_TOKENS = new Set(["f", "female", "m", "male", "u", "unreported"]);
const MIN_BIRTH_YEAR = 1878;
const DOB_PATTERN = /^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$/;

export interface ValidationFailure {
  ok: false;
  field: string;
  message: string;
}

export interface ValidationSuccess {
  ok: true;
}

export type ValidationResult = ValidationSuccess | ValidationFailure;

function fail(field: string, message: string): ValidationFailure {
  return { ok: false, field, message };
}

function isValidCalendarDate(year: number, month: number, day: number): boolean {
  const date = new Date(Date.UTC(year, month - 1, day));
  return (
    date.getUTCFullYear() === year &&
    date.getUTCMonth() === month - 1 &&
    date.getUTCDate() === day
  );
}

export function validateDob(dob: unknown): ValidationResult {
  if (dob === undefined || dob === null || dob === "") {
    return fail("dob", "date of birth is required");
  }
  const match = DOB_PATTERN.exec(String(dob).trim());
  if (!match) {
    return fail("dob", "use YYYY, YYYY-MM, or YYYY-MM-DD");
  }
  const year = Number(match[1]);
  const currentYear = new Date().getFullYear();
  if (year < MIN_BIRTH_YEAR || year > currentYear) {
    return fail("dob", `year must be between ${MIN_BIRTH_YEAR} and ${currentYear}`);
  }
  if (match[2] !== undefined) {
    const month = Number(match[2]);
    if (month < 1 || month > 12) {
      return fail("dob", "month must be 01..12");
    }
    if (match[3] !== undefined && !isValidCalendarDate(year, month, Number(match[3]))) {
      return fail("dob", "not a valid calendar date");
    }
  }
  return { ok: true };
}

export function validateZip(zip: unknown): ValidationResult {
  if (zip === undefined || zip === null || zip === "") {
    return fail("zip", "ZIP code is required");
  }
  if (!/^\d{5}$/.test(String(zip).trim())) {
    return fail("zip", "ZIP must be exactly 5 digits");
  }
  return { ok: true };
}

export function validateGender(gender: unknown): ValidationResult {
  if (gender === undefined || gender === null || gender === "") {
    return fail("gender", "gender is required");
  }
  if (!GENDER_TOKENS.has(String(gender).trim().toLowerCase())) {
    return fail("gender", "use f/female, m/male, or u/unreported");
  }
  return { ok: true };
}

export function validateWindow(window: unknown): ValidationResult {
  if (window === undefined || window === null) {
    return { ok: true };
  }
  if (typeof window !== "number" || !Number.isInteger(window) || window < 1) {
    return fail("window", "window must be a whole number of years, at least 1");
  }
  return { ok: true };
}

export function validateAsOfYear(asOfYear: unknown): ValidationResult {
  if (asOfYear === undefined || asOfYear === null) {
    return { ok: true };
  }
  if (typeof asOfYear !== "number" || !Number.isInteger(asOfYear)) {
    return fail("as_of_year", "as_of_year must be a whole year");
  }
  return { ok: true };
}

/** Validate a whole payload the way the service will; first failure wins. */
export function validateEstimate(payload: Record<string, unknown>): ValidationResult {
  // The service checks fields in this order: zip, gender, dob, window, as_of_year.
  const checks = [
    validateZip(payload["zip"]),
    validateGender(payload["gender"]),
    validateDob(payload["dob"]),
    validateWindow(payload["window"]),
    validateAsOfYear(payload["as_of_year"]),
  ];
  for (const result of checks) {
    if (!result.ok) {
      return result;
    }
  }
  return { ok: true };
}
