// Trial-organization page: register the required dataset filenames for a
// trial. Validates duplicates inline, signs with the local key, and shows
// the sealed receipt with a link into the block explorer.

import { ApiClient, ApiError, Receipt } from "../api.js";
import { StoredKey } from "../identity.js";

export interface ManifestPage {
  root: HTMLElement;
  submit(trialId: string, filenames: string[]): Promise<void>;
  statusText(): string;
}

export function setupManifestPage(
  doc: Document,
  parent: HTMLElement,
  api: ApiClient,
  getKey: () => StoredKey | null,
): ManifestPage {
  const root = doc.createElement("section");
  root.id = "page-manifest";
  root.innerHTML = `
    <h2>Required datasets (manifest)</h2>
    <label>Trial ID <input id="manifest-trial" placeholder="TRIAL-7"></label>
    <label>Filenames, one per line
      <textarea id="manifest-files" rows="6" placeholder="camera.mp4&#10;lidar.bin"></textarea>
    </label>
    <button id="manifest-submit">Submit manifest</button>
    <div id="manifest-status" class="status"></div>
  `;
  parent.appendChild(root);

  const trialInput = root.querySelector<HTMLInputElement>("#manifest-trial")!;
  const filesInput = root.querySelector<HTMLTextAreaElement>("#manifest-files")!;
  const status = root.querySelector<HTMLElement>("#manifest-status")!;

  async function submit(trialId: string, filenames: string[]): Promise<void> {
    status.className = "status";
    if (new Set(filenames).size !== filenames.length) {
      status.className = "status error";
      status.textContent = "duplicate filename in the list";
      return;
    }
    const key = getKey();
    if (key === null) {
      status.className = "status error";
      status.textContent = "no key loaded — create or import one in the key panel first";
      return;
    }
    try {
      const body = await api.setManifest(key, trialId, filenames);
      const receipt = body.receipt as unknown as Receipt;
      status.className = "status ok";
      status.innerHTML =
        `manifest sealed in block ${receipt.block_height} ` +
        `(<a href="${api.explorerUrl(receipt.block_height)}" target="_blank">explorer</a>)`;
    } catch (err) {
      status.className = "status error";
      status.textContent = err instanceof ApiError ? `rejected: ${err.message}` : String(err);
    }
  }

  root.querySelector("#manifest-submit")!.addEventListener("click", () => {
    const filenames = filesInput.value
      .split("\n")
      .map((line) => line.trim())
      .filter((line) => line.length > 0);
    void submit(trialInput.value.trim(), filenames);
  });

  return { root, submit, statusText: () => status.textContent ?? "" };
}
