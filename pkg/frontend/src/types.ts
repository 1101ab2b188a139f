/**
 * Wire types for the risk service. These mirror the canonical JSON the
 * service emits; the UI never derives statistics of its own from them.
 */

export type Flag = "known" | "unknown-bin";

export interface RiskCell {
  population: number;
  date_space: number;
  expected_bin: number;
  p_unique: number;
  flag: Flag;
}

/** Cell keys look like "YearOnly/Zip3": birth level slash zip level. */
export type CellKey = string;

export interface RiskReportJson {
  zip: string;
  gender: string;
  birth: string | null;
  window: number;
  as_of_year: number;
  focal: CellKey;
  cells: Record<CellKey, RiskCell>;
}

export interface WhatIfResponse {
  before: RiskReportJson;
  after: RiskReportJson;
}

export interface ErrorBody {
  code: string;
  message: string;
  field?: string;
}

export interface ScrubSummary {
  mode: "year" | "remove";
  edited_span: [number, number] | null;
  replacement: string | null;
  flag: string | null;
}

export interface EstimatePayload {
  zip: string;
  gender: string;
  dob: string;
  window?: number;
  as_of_year?: number;
}

export interface WhatIfPayload extends EstimatePayload {
  birth_level?: string;
  zip_level?: string;
}

export const BIRTH_LEVELS = ["Full", "YearMonth", "YearOnly", "Absent"] as const;
export const ZIP_LEVELS = ["Zip5", "Zip3", "Zip2", "Absent"] as const;

export type BirthLevel = (typeof BIRTH_LEVELS)[number];
export type ZipLevel = (typeof ZIP_LEVELS)[number];
