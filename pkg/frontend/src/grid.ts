/**
 * Rendering for the uniqueness grid and the what-if comparison strip.
 *
 * The UI computes no statistics: every number shown is a value from a
 * service response, formatted exactly as the service's canonical JSON prints
 * it (integers plain, floats with a trailing .0 when integer-valued, float
 * exponents padded to two digits).
 */

import type { BirthLevel, CellKey, RiskCell, RiskReportJson, ZipLevel } from "./types.js";
import { BIRTH_LEVELS, ZIP_LEVELS } from "./types.js";

/** Render an integer field the way canonical JSON prints it. */
export function canonicalInt(value: number): string {
  return String(value);
}

/** Render a float field the way canonical JSON prints it. */
export function canonicalFloat(value: number): string {
  if (Number.isInteger(value) && Math.abs(value) < 1e16) {
    return value.toFixed(1);
  }
  // canonical JSON pads single-digit exponents: 1e-7 prints as 1e-07
  return String(value).replace(/e([+-])(\d)$/, "e$10$2");
}

const BIRTH_PHRASES: Record<BirthLevel, string> = {
  Full: "your full date of birth",
  YearMonth: "your birth year and month",
  YearOnly: "only your birth year",
  Absent: "no date of birth",
};

const ZIP_PHRASES: Record<ZipLevel, string> = {
  Zip5: "your full 5-digit ZIP",
  Zip3: "a 3-digit ZIP prefix",
  Zip2: "a 2-digit ZIP prefix",
  Absent: "no ZIP code",
};

export function splitCellKey(key: CellKey): [BirthLevel, ZipLevel] {
  const [birth, zip] = key.split("/");
  return [birth as BirthLevel, zip as ZipLevel];
}

function presentLevels(report: RiskReportJson): { births: BirthLevel[]; zips: ZipLevel[] } {
  const keys = Object.keys(report.cells).map(splitCellKey);
  return {
    births: BIRTH_LEVELS.filter((b) => keys.some(([kb]) => kb === b)),
    zips: ZIP_LEVELS.filter((z) => keys.some(([, kz]) => kz === z)),
  };
}

/**
 * Build the (birth level x zip level) table. Each cell shows p_unique,
 * expected bin size, and bin population verbatim; unknown bins are marked.
 * Clicking a cell fires `onSelect` with the cell's levels.
 */
export function renderGrid(
  report: RiskReportJson,
  onSelect?: (birth: BirthLevel, zip: ZipLevel) => void,
): HTMLTableElement {
  const { births, zips } = presentLevels(report);
  const table = document.createElement("table");
  table.className = "risk-grid";

  const head = table.createTHead().insertRow();
  head.appendChild(document.createElement("th"));
  for (const zip of zips) {
    const th = document.createElement("th");
    th.textContent = zip;
    head.appendChild(th);
  }

  const body = table.createTBody();
  for (const birth of births) {
    const row = body.insertRow();
    const label = document.createElement("th");
    label.textContent = birth;
    row.appendChild(label);
    for (const zip of zips) {
      const key = `${birth}/${zip}`;
      const cell = report.cells[key];
      const td = row.insertCell();
      if (!cell) {
        td.className = "missing";
        continue;
      }
      td.className = cell.flag === "known" ? "known" : "unknown";
      td.dataset["cellKey"] = key;
      if (key === report.focal) {
        td.classList.add("focal");
      }
      td.appendChild(cellContents(cell));
      if (onSelect) {
        td.tabIndex = 0;
        td.addEventListener("click", () => onSelect(birth, zip));
        td.addEventListener("keydown", (event) => {
          if (event.key === "Enter" || event.key === " ") {
            event.preventDefault();
            onSelect(birth, zip);
          }
        });
      }
    }
  }
  return table;
}

function cellContents(cell: RiskCell): DocumentFragment {
  const fragment = document.createDocumentFragment();

  const p = document.createElement("span");
  p.className = "p-unique";
  p.textContent = canonicalFloat(cell.p_unique);
  fragment.appendChild(p);

  const bin = document.createElement("span");
  bin.className = "expected-bin";
  bin.textContent = canonicalFloat(cell.expected_bin);
  fragment.appendChild(bin);

  const population = document.createElement("span");
  population.className = "population";
  population.textContent = canonicalInt(cell.population);
  fragment.appendChild(population);

  if (cell.flag !== "known") {
    const mark = document.createElement("span");
    mark.className = "flag";
    mark.textContent = "no census data";
    mark.title = "The population table does not cover this bin; treat as identifying.";
    fragment.appendChild(mark);
  }
  return fragment;
}

/** The plain-language line under the comparison: numbers verbatim from the report. */
export function whatIfSentence(report: RiskReportJson): string {
  const [birth, zip] = splitCellKey(report.focal);
  const cell = report.cells[report.focal];
  if (!cell) {
    return "No estimate is available for this combination.";
  }
  if (cell.flag !== "known") {
    return (
      `Reporting ${BIRTH_PHRASES[birth]} and ${ZIP_PHRASES[zip]}: the census table ` +
      `does not cover this combination, so treat it as uniquely identifying.`
    );
  }
  return (
    `Reporting ${BIRTH_PHRASES[birth]} and ${ZIP_PHRASES[zip]} makes you one of about ` +
    `${canonicalFloat(cell.expected_bin)} people, with a ${canonicalFloat(cell.p_unique)} ` +
    `probability that nobody else in your area shares these details.`
  );
}

/** Side-by-side focal cells for a before/after pair, plus the sentence. */
export function renderComparison(before: RiskReportJson, after: RiskReportJson): HTMLElement {
  const container = document.createElement("div");
  container.className = "comparison";

  const unchanged =
    before.focal === after.focal && JSON.stringify(before.cells) === JSON.stringify(after.cells);

  for (const [label, report] of [["before", before], ["after", after]] as const) {
    const side = document.createElement("div");
    side.className = `side ${label}`;
    const caption = document.createElement("h3");
    caption.textContent = label === "before" ? "Sharing now" : "After this change";
    side.appendChild(caption);
    const cell = report.cells[report.focal];
    const value = document.createElement("div");
    value.className = "focal-value";
    value.textContent = cell ? canonicalFloat(cell.p_unique) : "?";
    side.appendChild(value);
    container.appendChild(side);
  }

  const sentence = document.createElement("p");
  sentence.className = "sentence";
  sentence.textContent = unchanged
    ? "No change: this is what you are sharing already."
    : whatIfSentence(after);
  container.appendChild(sentence);
  return container;
}
