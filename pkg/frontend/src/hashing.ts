// Client-side SHA-256 matching the server's digest, computed before upload
// so the user can confirm what they are about to sign.

export async function sha256Hex(data: Uint8Array | ArrayBuffer): Promise<string> {
  const digest = await crypto.subtle.digest("SHA-256", data as BufferSource);
  return Array.from(new Uint8Array(digest), (b) => b.toString(16).padStart(2, "0")).join("");
}

export async function hashFile(file: Blob): Promise<string> {
  return sha256Hex(await file.arrayBuffer());
}
