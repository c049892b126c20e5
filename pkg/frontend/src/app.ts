// Application shell: key panel, page tabs, and the live event feed that
// drives toasts. State renders only after receipts or events arrive; there
// is no optimistic UI.

import { ApiClient } from "./api.js";
import { EventFeed, EventFrame } from "./events.js";
import {
  clearKey,
  generateKeypair,
  importSecretKey,
  KeyStorage,
  loadKey,
  saveKey,
  StoredKey,
} from "./identity.js";
import { setupInvestigatorPage } from "./pages/investigator.js";
import { setupManifestPage } from "./pages/manifest.js";
import { setupRecordPage } from "./pages/record.js";
import { Toaster } from "./toast.js";

export interface App {
  key: StoredKey | null;
  toaster: Toaster;
  feed: EventFeed;
  manifestPage: ReturnType<typeof setupManifestPage>;
  recordPage: ReturnType<typeof setupRecordPage>;
  investigatorPage: ReturnType<typeof setupInvestigatorPage>;
  createKey(): Promise<StoredKey>;
  importKey(secretHex: string): Promise<StoredKey>;
  stop(): void;
}

function describeEvent(frame: EventFrame): string {
  const { kind, payload, block_height } = frame.event;
  switch (kind) {
    case "RecordAdded":
      return `stored: ${payload.filename} for ${payload.trial_id} (block ${block_height})`;
    case "ManifestSet":
      return `manifest set for ${payload.trial_id} (block ${block_height})`;
    case "WhitelistChanged":
      return `whitelist ${payload.action}: ${String(payload.key).slice(0, 12)}…`;
    case "OwnershipTransferred":
      return `ownership transferred to ${String(payload.new_owner).slice(0, 12)}…`;
    default:
      return kind;
  }
}

export function startApp(
  doc: Document,
  mount: HTMLElement,
  serverUrl: string,
  storage: KeyStorage,
  fetchFn?: typeof fetch,
): App {
  const api = new ApiClient(serverUrl, fetchFn);
  let key = loadKey(storage);

  mount.innerHTML = `
    <header>
      <h1>Trial evidence custody</h1>
      <div id="key-panel">
        <span id="key-display"></span>
        <button id="key-create">New key</button>
        <input id="key-import-hex" placeholder="secret key hex">
        <button id="key-import">Import</button>
        <button id="key-forget">Forget</button>
      </div>
      <nav>
        <button data-page="manifest">Manifest</button>
        <button data-page="record">Submit data</button>
        <button data-page="investigator">Investigate</button>
      </nav>
    </header>
    <main id="pages"></main>
  `;

  const keyDisplay = mount.querySelector<HTMLElement>("#key-display")!;
  const pages = mount.querySelector<HTMLElement>("#pages")!;

  function renderKey(): void {
    keyDisplay.textContent = key
      ? `key loaded: ${key.publicKeyHex.slice(0, 16)}…`
      : "no key loaded — create or import one to submit";
  }
  renderKey();

  const getKey = () => key;
  const manifestPage = setupManifestPage(doc, pages, api, getKey);
  const recordPage = setupRecordPage(doc, pages, api, getKey);
  const investigatorPage = setupInvestigatorPage(doc, pages, api);

  const pageRoots: Record<string, HTMLElement> = {
    manifest: manifestPage.root,
    record: recordPage.root,
    investigator: investigatorPage.root,
  };

  function showPage(name: string): void {
    for (const [pageName, element] of Object.entries(pageRoots)) {
      element.style.display = pageName === name ? "" : "none";
    }
  }
  showPage("manifest");
  for (const button of mount.querySelectorAll<HTMLButtonElement>("nav button")) {
    button.addEventListener("click", () => showPage(button.dataset.page!));
  }

  const toaster = new Toaster(doc, mount);
  const feed = new EventFeed(serverUrl, (frame) => toaster.show(describeEvent(frame)), 0, fetchFn);
  feed.start();

  async function createKey(): Promise<StoredKey> {
    key = await generateKeypair();
    saveKey(storage, key);
    renderKey();
    return key;
  }

  async function importKey(secretHex: string): Promise<StoredKey> {
    key = await importSecretKey(secretHex.trim());
    saveKey(storage, key);
    renderKey();
    return key;
  }

  mount.querySelector("#key-create")!.addEventListener("click", () => void createKey());
  mount.querySelector("#key-import")!.addEventListener("click", () => {
    const input = mount.querySelector<HTMLInputElement>("#key-import-hex")!;
    void importKey(input.value);
  });
  mount.querySelector("#key-forget")!.addEventListener("click", () => {
    key = null;
    clearKey(storage);
    renderKey();
  });

  return {
    get key() {
      return key;
    },
    set key(value: StoredKey | null) {
      key = value;
      renderKey();
    },
    toaster,
    feed,
    manifestPage,
    recordPage,
    investigatorPage,
    createKey,
    importKey,
    stop: () => feed.stop(),
  };
}
