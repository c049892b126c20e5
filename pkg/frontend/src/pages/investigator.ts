// Investigator page: everything recorded for a trial (filename, hash,
// timestamp, submitter), the missing-files list from the manifest, per-file
// verify buttons, and a per-file history drill-down. Every value shown is
// API data.

import { ApiClient, ApiError, MetadataRecord } from "../api.js";

export interface InvestigatorPage {
  root: HTMLElement;
  load(trialId: string): Promise<void>;
  verifyFile(filename: string): Promise<string>;
  showHistory(filename: string): Promise<MetadataRecord[]>;
  recordRows(): HTMLTableRowElement[];
  missingNames(): string[];
  badgeText(filename: string): string;
  historyRows(): HTMLTableRowElement[];
}

export function setupInvestigatorPage(
  doc: Document,
  parent: HTMLElement,
  api: ApiClient,
): InvestigatorPage {
  const root = doc.createElement("section");
  root.id = "page-investigator";
  root.innerHTML = `
    <h2>Investigate a trial</h2>
    <label>Trial ID <input id="inv-trial" placeholder="TRIAL-7"></label>
    <button id="inv-load">Load</button>
    <div id="inv-status" class="status"></div>
    <h3>Submitted records</h3>
    <table id="inv-records">
      <thead><tr><th>filename</th><th>file hash</th><th>timestamp</th><th>submitter</th>
        <th>integrity</th><th>history</th></tr></thead>
      <tbody></tbody>
    </table>
    <h3>Missing against the manifest</h3>
    <ul id="inv-missing"></ul>
    <h3>History</h3>
    <div id="inv-history-name"></div>
    <table id="inv-history">
      <thead><tr><th>#</th><th>file hash</th><th>timestamp</th><th>submitter</th></tr></thead>
      <tbody></tbody>
    </table>
  `;
  parent.appendChild(root);

  const trialInput = root.querySelector<HTMLInputElement>("#inv-trial")!;
  const status = root.querySelector<HTMLElement>("#inv-status")!;
  const recordsBody = root.querySelector<HTMLElement>("#inv-records tbody")!;
  const missingList = root.querySelector<HTMLElement>("#inv-missing")!;
  const historyName = root.querySelector<HTMLElement>("#inv-history-name")!;
  const historyBody = root.querySelector<HTMLElement>("#inv-history tbody")!;

  let currentTrial = "";
  const badges = new Map<string, HTMLElement>();

  async function load(trialId: string): Promise<void> {
    currentTrial = trialId;
    status.className = "status";
    status.textContent = "";
    recordsBody.textContent = "";
    missingList.textContent = "";
    historyBody.textContent = "";
    historyName.textContent = "";
    badges.clear();
    try {
      const [records, completeness] = await Promise.all([
        api.records(trialId),
        api.completeness(trialId),
      ]);
      for (const record of records.records) {
        const row = doc.createElement("tr");
        const badge = doc.createElement("span");
        badge.className = "badge";
        badge.textContent = "unchecked";
        const verifyBtn = doc.createElement("button");
        verifyBtn.textContent = "verify";
        verifyBtn.addEventListener("click", () => void verifyFile(record.filename));
        const historyBtn = doc.createElement("button");
        historyBtn.textContent = "history";
        historyBtn.addEventListener("click", () => void showHistory(record.filename));
        for (const text of [
          record.filename,
          record.file_hash,
          String(record.timestamp),
          record.submitter,
        ]) {
          const cell = doc.createElement("td");
          cell.textContent = text;
          row.appendChild(cell);
        }
        const verifyCell = doc.createElement("td");
        verifyCell.append(verifyBtn, badge);
        row.appendChild(verifyCell);
        const historyCell = doc.createElement("td");
        historyCell.appendChild(historyBtn);
        row.appendChild(historyCell);
        recordsBody.appendChild(row);
        badges.set(record.filename, badge);
      }
      for (const name of completeness.missing) {
        const item = doc.createElement("li");
        item.textContent = name;
        missingList.appendChild(item);
      }
    } catch (err) {
      status.className = "status error";
      status.textContent =
        err instanceof ApiError && err.status === 404
          ? `unknown trial ${trialId}`
          : String(err);
    }
  }

  async function verifyFile(filename: string): Promise<string> {
    const verdict = await api.verifyFile(currentTrial, filename);
    const badge = badges.get(filename);
    if (badge) {
      badge.textContent = verdict.status;
      badge.className = `badge ${verdict.status === "verified" ? "ok" : "error"}`;
    }
    return verdict.status;
  }

  async function showHistory(filename: string): Promise<MetadataRecord[]> {
    const body = await api.history(currentTrial, filename);
    historyName.textContent = `${filename}: ${body.history.length} record(s), oldest first`;
    historyBody.textContent = "";
    for (const record of body.history) {
      const row = doc.createElement("tr");
      for (const text of [
        String(record.record_id),
        record.file_hash,
        String(record.timestamp),
        record.submitter,
      ]) {
        const cell = doc.createElement("td");
        cell.textContent = text;
        row.appendChild(cell);
      }
      historyBody.appendChild(row);
    }
    return body.history;
  }

  root.querySelector("#inv-load")!.addEventListener("click", () => {
    void load(trialInput.value.trim());
  });

  return {
    root,
    load,
    verifyFile,
    showHistory,
    recordRows: () => Array.from(recordsBody.querySelectorAll("tr")),
    missingNames: () => Array.from(missingList.querySelectorAll("li"), (li) => li.textContent ?? ""),
    badgeText: (filename) => badges.get(filename)?.textContent ?? "",
    historyRows: () => Array.from(historyBody.querySelectorAll("tr")),
  };
}
