// In-browser key management: Ed25519 via WebCrypto, persisted in
// localStorage. Replaces an external wallet; the secret key never leaves
// the browser.

import { fromHex, toHex } from "./codec.js";

const STORAGE_KEY = "trialcustody.key";

// PKCS#8 wrapper for a raw Ed25519 seed (RFC 8410 structure, fixed prefix).
const PKCS8_PREFIX = fromHex("302e020100300506032b657004220420");

export interface StoredKey {
  publicKeyHex: string;
  secretKeyHex: string;
}

function base64UrlToBytes(b64url: string): Uint8Array {
  const b64 = b64url.replace(/-/g, "+").replace(/_/g, "/");
  const padded = b64 + "=".repeat((4 - (b64.length % 4)) % 4);
  const raw = atob(padded);
  return Uint8Array.from(raw, (c) => c.charCodeAt(0));
}

function pkcs8ForSeed(seedHex: string): Uint8Array {
  const seed = fromHex(seedHex);
  if (seed.length !== 32) throw new Error("secret key must be 32 bytes");
  const out = new Uint8Array(PKCS8_PREFIX.length + seed.length);
  out.set(PKCS8_PREFIX);
  out.set(seed, PKCS8_PREFIX.length);
  return out;
}

export async function generateKeypair(): Promise<StoredKey> {
  const pair = (await crypto.subtle.generateKey({ name: "Ed25519" }, true, [
    "sign",
    "verify",
  ])) as CryptoKeyPair;
  const publicRaw = new Uint8Array(await crypto.subtle.exportKey("raw", pair.publicKey));
  const jwk = await crypto.subtle.exportKey("jwk", pair.privateKey);
  return {
    publicKeyHex: toHex(publicRaw),
    secretKeyHex: toHex(base64UrlToBytes(jwk.d!)),
  };
}

export async function importSecretKey(secretKeyHex: string): Promise<StoredKey> {
  const privateKey = await crypto.subtle.importKey(
    "pkcs8",
    pkcs8ForSeed(secretKeyHex) as BufferSource,
    { name: "Ed25519" },
    true,
    ["sign"],
  );
  // the OKP JWK carries the public half alongside the seed
  const jwk = await crypto.subtle.exportKey("jwk", privateKey);
  return {
    publicKeyHex: toHex(base64UrlToBytes(jwk.x!)),
    secretKeyHex,
  };
}

export async function sign(key: StoredKey, message: Uint8Array): Promise<Uint8Array> {
  const privateKey = await crypto.subtle.importKey(
    "pkcs8",
    pkcs8ForSeed(key.secretKeyHex) as BufferSource,
    { name: "Ed25519" },
    false,
    ["sign"],
  );
  const signature = await crypto.subtle.sign(
    { name: "Ed25519" },
    privateKey,
    message as BufferSource,
  );
  return new Uint8Array(signature);
}

export async function verify(
  publicKeyHex: string,
  message: Uint8Array,
  signature: Uint8Array,
): Promise<boolean> {
  const publicKey = await crypto.subtle.importKey(
    "raw",
    fromHex(publicKeyHex) as BufferSource,
    { name: "Ed25519" },
    false,
    ["verify"],
  );
  return crypto.subtle.verify(
    { name: "Ed25519" },
    publicKey,
    signature as BufferSource,
    message as BufferSource,
  );
}

export interface KeyStorage {
  getItem(name: string): string | null;
  setItem(name: string, value: string): void;
  removeItem(name: string): void;
}

export function saveKey(storage: KeyStorage, key: StoredKey): void {
  storage.setItem(STORAGE_KEY, JSON.stringify(key));
}

export function loadKey(storage: KeyStorage): StoredKey | null {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) return null;
  try {
    const parsed = JSON.parse(raw);
    if (typeof parsed.publicKeyHex === "string" && typeof parsed.secretKeyHex === "string") {
      return parsed;
    }
  } catch {
    /* fall through */
  }
  return null;
}

export function clearKey(storage: KeyStorage): void {
  storage.removeItem(STORAGE_KEY);
}
