// Submitter page: pick a dataset, see its digest computed locally before
// anything is uploaded, then sign and submit. The digest shown here is the
// one value the UI computes itself; the server recomputes it and rejects on
// mismatch.

import { ApiClient, ApiError, Receipt } from "../api.js";
import { hashFile } from "../hashing.js";
import { StoredKey } from "../identity.js";

export interface RecordPage {
  root: HTMLElement;
  chooseFile(file: File): Promise<string>;
  submit(trialId: string): Promise<Receipt | null>;
  digestText(): string;
  statusText(): string;
}

export function setupRecordPage(
  doc: Document,
  parent: HTMLElement,
  api: ApiClient,
  getKey: () => StoredKey | null,
): RecordPage {
  const root = doc.createElement("section");
  root.id = "page-record";
  root.innerHTML = `
    <h2>Submit dataset metadata</h2>
    <label>Trial ID <input id="record-trial" placeholder="TRIAL-7"></label>
    <label>Dataset <input id="record-file" type="file"></label>
    <div>local digest: <code id="record-digest">—</code></div>
    <button id="record-submit">Sign and upload</button>
    <div id="record-status" class="status"></div>
  `;
  parent.appendChild(root);

  const trialInput = root.querySelector<HTMLInputElement>("#record-trial")!;
  const fileInput = root.querySelector<HTMLInputElement>("#record-file")!;
  const digestOut = root.querySelector<HTMLElement>("#record-digest")!;
  const status = root.querySelector<HTMLElement>("#record-status")!;

  let chosen: { file: File; digest: string } | null = null;

  async function chooseFile(file: File): Promise<string> {
    const digest = await hashFile(file);
    chosen = { file, digest };
    digestOut.textContent = digest;
    return digest;
  }

  async function submit(trialId: string): Promise<Receipt | null> {
    status.className = "status";
    if (chosen === null) {
      status.className = "status error";
      status.textContent = "choose a file first";
      return null;
    }
    const key = getKey();
    if (key === null) {
      status.className = "status error";
      status.textContent = "no key loaded — create or import one in the key panel first";
      return null;
    }
    try {
      const body = await api.addRecord(key, trialId, chosen.file.name, chosen.digest, chosen.file);
      const receipt = body.receipt as unknown as Receipt;
      status.className = "status ok";
      status.textContent =
        `record ${body.record_id} sealed in block ${receipt.block_height}; ` +
        `content id ${body.content_id}`;
      return receipt;
    } catch (err) {
      status.className = "status error";
      if (err instanceof ApiError && err.status === 403) {
        status.textContent =
          "rejected (403): this key is not on the submitter whitelist — " +
          "ask the trial owner to add it";
      } else {
        status.textContent = err instanceof ApiError ? `rejected: ${err.message}` : String(err);
      }
      return null;
    }
  }

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file) void chooseFile(file);
  });
  root.querySelector("#record-submit")!.addEventListener("click", () => {
    void submit(trialInput.value.trim());
  });

  return {
    root,
    chooseFile,
    submit,
    digestText: () => digestOut.textContent ?? "",
    statusText: () => status.textContent ?? "",
  };
}
