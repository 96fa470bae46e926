/**
 * Ed25519 over WebCrypto. Keys are imported from the 32-byte seed the
 * actor holds (pasted at login); signatures are byte-compatible with
 * the gateway's verifier.
 */

import { bytesToHex, hexToBytes } from "./canonical.js";

// PKCS#8 wrapper for a raw Ed25519 seed.
const PKCS8_PREFIX = hexToBytes("302e020100300506032b657004220420");

function subtle(): SubtleCrypto {
  const c = globalThis.crypto;
  if (!c || !c.subtle) throw new Error("WebCrypto unavailable");
  return c.subtle;
}

export interface Signer {
  readonly verificationKeyHex: string;
  sign(message: Uint8Array): Promise<Uint8Array>;
}

function base64UrlToBytes(data: string): Uint8Array {
  const b64 = data.replace(/-/g, "+").replace(/_/g, "/");
  const raw = atob(b64);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

export async function signerFromSeed(seedHex: string): Promise<Signer> {
  const seed = hexToBytes(seedHex.trim().toLowerCase());
  if (seed.length !== 32) throw new Error("seed must be 32 bytes of hex");
  const pkcs8 = new Uint8Array(PKCS8_PREFIX.length + seed.length);
  pkcs8.set(PKCS8_PREFIX);
  pkcs8.set(seed, PKCS8_PREFIX.length);
  const key = await subtle().importKey(
    "pkcs8", pkcs8 as BufferSource, { name: "Ed25519" }, true, ["sign"]);
  const jwk = await subtle().exportKey("jwk", key);
  if (!jwk.x) throw new Error("cannot derive verification key");
  const verificationKey = base64UrlToBytes(jwk.x);
  return {
    verificationKeyHex: bytesToHex(verificationKey),
    async sign(message: Uint8Array): Promise<Uint8Array> {
      const sig = await subtle().sign("Ed25519", key, message as BufferSource);
      return new Uint8Array(sig);
    },
  };
}

export async function verify(
  verificationKeyHex: string,
  message: Uint8Array,
  signature: Uint8Array,
): Promise<boolean> {
  const key = await subtle().importKey(
    "raw", hexToBytes(verificationKeyHex) as BufferSource,
    { name: "Ed25519" }, false, ["verify"]);
  return subtle().verify(
    "Ed25519", key, signature as BufferSource, message as BufferSource);
}

export function randomChallenge(): Uint8Array {
  const out = new Uint8Array(32);
  globalThis.crypto.getRandomValues(out);
  return out;
}
