// Canonical length-prefixed encoding, mirroring the server's wire format
// (docs/wire_format.md): big-endian u32/u64, u32-length-prefixed bytes,
// u32-count-prefixed lists, and 4-byte ASCII call tags.

const textEncoder = new TextEncoder();

export function concatBytes(...parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const part of parts) {
    out.set(part, offset);
    offset += part.length;
  }
  return out;
}

export function encodeU32(value: number): Uint8Array {
  if (!Number.isInteger(value) || value < 0 || value > 0xffffffff) {
    throw new Error(`u32 out of range: ${value}`);
  }
  const out = new Uint8Array(4);
  new DataView(out.buffer).setUint32(0, value);
  return out;
}

export function encodeU64(value: number | bigint): Uint8Array {
  const big = BigInt(value);
  if (big < 0n || big > 0xffffffffffffffffn) {
    throw new Error(`u64 out of range: ${value}`);
  }
  const out = new Uint8Array(8);
  new DataView(out.buffer).setBigUint64(0, big);
  return out;
}

export function encodeBytes(data: Uint8Array): Uint8Array {
  return concatBytes(encodeU32(data.length), data);
}

export function encodeStr(text: string): Uint8Array {
  return encodeBytes(textEncoder.encode(text));
}

export function encodeList(items: Uint8Array[]): Uint8Array {
  return concatBytes(encodeU32(items.length), ...items);
}

export function toHex(data: Uint8Array): string {
  return Array.from(data, (b) => b.toString(16).padStart(2, "0")).join("");
}

export function fromHex(hex: string): Uint8Array {
  if (hex.length % 2 !== 0 || /[^0-9a-fA-F]/.test(hex)) {
    throw new Error(`not hex: ${hex}`);
  }
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

const tag = (ascii: string) => textEncoder.encode(ascii);

export function encodeSetManifest(trialId: string, filenames: string[]): Uint8Array {
  return concatBytes(tag("MSET"), encodeStr(trialId), encodeList(filenames.map(encodeStr)));
}

export function encodeRecordMetadata(
  filename: string,
  trialId: string,
  fileHash: string,
): Uint8Array {
  return concatBytes(tag("RADD"), encodeStr(filename), encodeStr(trialId), encodeStr(fileHash));
}

export function encodeWhitelistAdd(key: Uint8Array): Uint8Array {
  return concatBytes(tag("WLAD"), encodeBytes(key));
}

export function encodeWhitelistRemove(key: Uint8Array): Uint8Array {
  return concatBytes(tag("WLRM"), encodeBytes(key));
}

export function encodeTransferOwnership(newOwner: Uint8Array): Uint8Array {
  return concatBytes(tag("OWNR"), encodeBytes(newOwner));
}

// What the sender's key signs: payload, sender, nonce.
export function signingMaterial(
  payload: Uint8Array,
  sender: Uint8Array,
  nonce: number,
): Uint8Array {
  return concatBytes(encodeBytes(payload), encodeBytes(sender), encodeU64(nonce));
}
