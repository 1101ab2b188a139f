/**
 * Page wiring: estimate form, what-if grid, and CCR scrubber.
 *
 * Single page, no routing, and no persistence: demographics live only in
 * form fields and in-flight requests. Network failures always leave a retry
 * affordance, never a silent blank state.
 */

import { ApiClient, ApiError, isAbort } from "./api.js";
import { renderComparison, renderGrid } from "./grid.js";
import type { BirthLevel, EstimatePayload, ZipLevel } from "./types.js";
import { validateEstimate } from "./validate.js";

const api = new ApiClient("");

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) {
    throw new Error(`missing element #${id}`);
  }
  return element as T;
}

function populateDateSelectors(): void {
  const year = byId<HTMLSelectElement>("dob-year");
  const currentYear = new Date().getFullYear();
  for (let y = currentYear; y >= 1878; y--) {
    const option = document.createElement("option");
    option.value = String(y);
    option.textContent = String(y);
    year.appendChild(option);
  }
  const month = byId<HTMLSelectElement>("dob-month");
  for (let m = 1; m <= 12; m++) {
    const option = document.createElement("option");
    option.value = String(m).padStart(2, "0");
    option.textContent = String(m).padStart(2, "0");
    month.appendChild(option);
  }
  const day = byId<HTMLSelectElement>("dob-day");
  for (let d = 1; d <= 31; d++) {
    const option = document.createElement("option");
    option.value = String(d).padStart(2, "0");
    option.textContent = String(d).padStart(2, "0");
    day.appendChild(option);
  }
}

function composeDob(): string {
  const year = byId<HTMLSelectElement>("dob-year").value;
  const month = byId<HTMLSelectElement>("dob-month").value;
  const day = byId<HTMLSelectElement>("dob-day").value;
  if (!year) {
    return "";
  }
  let dob = year;
  if (month) {
    dob += `-${month}`;
    if (day) {
      dob += `-${day}`;
    }
  }
  return dob;
}

function currentPayload(): EstimatePayload {
  const payload: EstimatePayload = {
    zip: byId<HTMLInputElement>("zip").value.trim(),
    gender: byId<HTMLSelectElement>("gender").value,
    dob: composeDob(),
  };
  const window = byId<HTMLSelectElement>("window").value;
  if (window) {
    payload.window = Number(window);
  }
  return payload;
}

function clearFieldErrors(): void {
  for (const span of document.querySelectorAll<HTMLElement>(".field-error")) {
    span.textContent = "";
  }
}

function showFieldError(field: string, message: string): void {
  const span = document.querySelector<HTMLElement>(`.field-error[data-field="${field}"]`);
  if (span) {
    span.textContent = message;
  }
}

function refreshSubmitState(): void {
  // day without month is impossible to submit; mirror that in the controls
  const month = byId<HTMLSelectElement>("dob-month");
  const day = byId<HTMLSelectElement>("dob-day");
  day.disabled = !month.value;
  if (!month.value) {
    day.value = "";
  }
  const verdict = validateEstimate(currentPayload() as unknown as Record<string, unknown>);
  byId<HTMLButtonElement>("submit").disabled = !verdict.ok;
}

function showNetworkError(message: string, retry: () => void): void {
  const box = byId<HTMLElement>("network-error");
  box.hidden = false;
  byId<HTMLElement>("network-error-message").textContent = message;
  const button = byId<HTMLButtonElement>("retry");
  button.onclick = () => {
    box.hidden = true;
    retry();
  };
}

async function submitEstimate(): Promise<void> {
  clearFieldErrors();
  const payload = currentPayload();
  const verdict = validateEstimate(payload as unknown as Record<string, unknown>);
  if (!verdict.ok) {
    showFieldError(verdict.field, verdict.message);
    return;
  }
  try {
    const report = await api.estimate(payload);
    const results = byId<HTMLElement>("results");
    results.hidden = false;
    const gridBox = byId<HTMLElement>("grid-box");
    gridBox.replaceChildren(
      renderGrid(report, (birth, zip) => {
        void exploreWhatIf(payload, birth, zip);
      }),
    );
    byId<HTMLElement>("whatif-box").replaceChildren();
  } catch (error) {
    if (isAbort(error)) {
      return;
    }
    if (error instanceof ApiError) {
      showFieldError(error.body.field ?? "zip", error.body.message);
      return;
    }
    showNetworkError("Could not reach the risk service.", () => void submitEstimate());
  }
}

async function exploreWhatIf(
  payload: EstimatePayload,
  birth: BirthLevel,
  zip: ZipLevel,
): Promise<void> {
  try {
    const pair = await api.whatIf({ ...payload, birth_level: birth, zip_level: zip });
    byId<HTMLElement>("whatif-box").replaceChildren(renderComparison(pair.before, pair.after));
  } catch (error) {
    if (isAbort(error)) {
      return;
    }
    if (error instanceof ApiError) {
      showFieldError(error.body.field ?? "zip", error.body.message);
      return;
    }
    showNetworkError("Could not reach the risk service.", () => void exploreWhatIf(payload, birth, zip));
  }
}

async function scrubCcr(): Promise<void> {
  const input = byId<HTMLInputElement>("ccr-file");
  const status = byId<HTMLElement>("scrub-result");
  const file = input.files?.[0];
  if (!file) {
    status.textContent = "Choose a CCR file first.";
    return;
  }
  const mode = byId<HTMLSelectElement>("scrub-mode").value as "year" | "remove";
  try {
    const { bytes, summary } = await api.scrub(file, mode);
    const url = URL.createObjectURL(new Blob([bytes], { type: "application/xml" }));
    status.replaceChildren();
    const link = document.createElement("a");
    link.href = url;
    link.download = file.name.replace(/(\.xml)?$/i, ".scrubbed.xml");
    link.textContent = "Download scrubbed file";
    status.appendChild(link);
    const detail = document.createElement("p");
    detail.className = "scrub-summary";
    detail.textContent = summary.flag
      ? `Nothing to edit: ${summary.flag}.`
      : summary.edited_span
        ? `Edited bytes ${summary.edited_span[0]}..${summary.edited_span[1]} (${summary.mode}).`
        : "No edit was necessary.";
    status.appendChild(detail);
  } catch (error) {
    if (isAbort(error)) {
      return;
    }
    if (error instanceof ApiError) {
      status.textContent = `${error.status}: ${error.body.message}`;
      return;
    }
    showNetworkError("Could not reach the risk service.", () => void scrubCcr());
  }
}

export function boot(): void {
  populateDateSelectors();
  refreshSubmitState();
  byId<HTMLFormElement>("demo-form").addEventListener("input", refreshSubmitState);
  byId<HTMLFormElement>("demo-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void submitEstimate();
  });
  byId<HTMLButtonElement>("scrub-btn").addEventListener("click", () => void scrubCcr());
}

if (typeof document !== "undefined" && document.getElementById("demo-form")) {
  boot();
}
