// Typed client over the service's JSON API. Writes are signed locally:
// the signature covers the canonical call encoding plus sender and nonce,
// which is exactly the ledger transaction the server will seal.

import {
  encodeRecordMetadata,
  encodeSetManifest,
  encodeWhitelistAdd,
  encodeWhitelistRemove,
  fromHex,
  signingMaterial,
  toHex,
} from "./codec.js";
import { sign, StoredKey } from "./identity.js";

export interface Receipt {
  tx_id: string;
  block_height: number;
  position: number;
  status: string;
  reason: string | null;
  result: Record<string, unknown> | null;
}

export interface MetadataRecord {
  record_id: number;
  filename: string;
  trial_id: string;
  file_hash: string;
  timestamp: number;
  submitter: string;
}

export interface Completeness {
  trial_id: string;
  required: string[];
  submitted: string[];
  missing: string[];
}

export interface Verdict {
  filename: string;
  trial_id: string;
  ledger_hash: string | null;
  computed_hash: string | null;
  status: string;
  record_id: number | null;
}

export interface TrialVerification {
  trial_id: string;
  verdicts: Verdict[];
  missing: string[];
  counts: Record<string, number>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly body: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async check(response: Response): Promise<Record<string, unknown>> {
    let body: Record<string, unknown> = {};
    try {
      body = (await response.json()) as Record<string, unknown>;
    } catch {
      /* non-JSON error body */
    }
    if (!response.ok) {
      const message = (body.error as string) ?? (body.detail as string) ?? `HTTP ${response.status}`;
      throw new ApiError(response.status, String(message), body);
    }
    return body;
  }

  private async get<T = Record<string, unknown>>(path: string): Promise<T> {
    return (await this.check(await this.fetchFn(this.baseUrl + path))) as T;
  }

  async nextNonce(publicKeyHex: string): Promise<number> {
    const body = await this.get(`/accounts/${publicKeyHex}/nonce`);
    return body.next_nonce as number;
  }

  private async signedFields(key: StoredKey, payload: Uint8Array) {
    const nonce = await this.nextNonce(key.publicKeyHex);
    const material = signingMaterial(payload, fromHex(key.publicKeyHex), nonce);
    const signature = await sign(key, material);
    return { sender: key.publicKeyHex, nonce, signature: toHex(signature) };
  }

  async setManifest(key: StoredKey, trialId: string, filenames: string[]) {
    const fields = await this.signedFields(key, encodeSetManifest(trialId, filenames));
    const response = await this.fetchFn(
      `${this.baseUrl}/trials/${encodeURIComponent(trialId)}/manifest`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ ...fields, filenames }),
      },
    );
    return this.check(response);
  }

  async addRecord(
    key: StoredKey,
    trialId: string,
    filename: string,
    fileHash: string,
    file?: Blob,
  ) {
    const payload = encodeRecordMetadata(filename, trialId, fileHash);
    const fields = await this.signedFields(key, payload);
    const form = new FormData();
    form.set("sender", fields.sender);
    form.set("nonce", String(fields.nonce));
    form.set("signature", fields.signature);
    form.set("filename", filename);
    form.set("file_hash", fileHash);
    if (file !== undefined) {
      form.set("file", file, filename || "upload");
    }
    const response = await this.fetchFn(
      `${this.baseUrl}/trials/${encodeURIComponent(trialId)}/records`,
      { method: "POST", body: form },
    );
    return this.check(response);
  }

  async changeWhitelist(key: StoredKey, action: "add" | "remove", memberHex: string) {
    const payload =
      action === "add"
        ? encodeWhitelistAdd(fromHex(memberHex))
        : encodeWhitelistRemove(fromHex(memberHex));
    const fields = await this.signedFields(key, payload);
    const response = await this.fetchFn(`${this.baseUrl}/whitelist`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ...fields, action, key: memberHex }),
    });
    return this.check(response);
  }

  async records(trialId: string) {
    return this.get<{ trial_id: string; count: number; records: MetadataRecord[] }>(
      `/trials/${encodeURIComponent(trialId)}/records`,
    );
  }

  async completeness(trialId: string) {
    return this.get<Completeness>(`/trials/${encodeURIComponent(trialId)}/completeness`);
  }

  async history(trialId: string, filename: string) {
    return this.get<{ history: MetadataRecord[] }>(
      `/trials/${encodeURIComponent(trialId)}/files/${encodeURIComponent(filename)}/history`,
    );
  }

  async verifyTrial(trialId: string) {
    return this.get<TrialVerification>(`/trials/${encodeURIComponent(trialId)}/verify`);
  }

  async verifyFile(trialId: string, filename: string) {
    return this.get<Verdict>(
      `/trials/${encodeURIComponent(trialId)}/files/${encodeURIComponent(filename)}/verify`,
    );
  }

  explorerUrl(blockHeight: number): string {
    return `${this.baseUrl}/blocks/${blockHeight}`;
  }
}
