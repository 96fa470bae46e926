/**
 * Canonical byte form, mirrored exactly from the gateway's serializer:
 * sorted map keys (by UTF-8 byte order), no whitespace, ASCII-escaped
 * strings, byte blobs as lowercase hex, floats rejected. Signing and
 * hashing interoperate only if these bytes match the server bit for bit.
 */

export type CanonicalValue =
  | string
  | number
  | boolean
  | Uint8Array
  | CanonicalValue[]
  | { [key: string]: CanonicalValue };

const SHORT_ESCAPES: Record<number, string> = {
  0x08: "\\b",
  0x09: "\\t",
  0x0a: "\\n",
  0x0c: "\\f",
  0x0d: "\\r",
  0x22: '\\"',
  0x5c: "\\\\",
};

function escapeString(value: string): string {
  let out = '"';
  for (let i = 0; i < value.length; i++) {
    const unit = value.charCodeAt(i); // UTF-16 unit; surrogates escape pairwise
    const short = SHORT_ESCAPES[unit];
    if (short !== undefined) {
      out += short;
    } else if (unit >= 0x20 && unit < 0x7f) {
      out += value[i];
    } else {
      out += "\\u" + unit.toString(16).padStart(4, "0");
    }
  }
  return out + '"';
}

export function bytesToHex(bytes: Uint8Array): string {
  let out = "";
  for (const b of bytes) out += b.toString(16).padStart(2, "0");
  return out;
}

export function hexToBytes(hex: string): Uint8Array {
  if (hex.length % 2 !== 0 || /[^0-9a-f]/.test(hex)) {
    throw new Error(`not lowercase hex: ${hex.slice(0, 32)}`);
  }
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

const utf8 = new TextEncoder();

function compareUtf8(a: string, b: string): number {
  const ba = utf8.encode(a);
  const bb = utf8.encode(b);
  const n = Math.min(ba.length, bb.length);
  for (let i = 0; i < n; i++) {
    if (ba[i]! !== bb[i]!) return ba[i]! - bb[i]!;
  }
  return ba.length - bb.length;
}

function emit(value: CanonicalValue): string {
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (!Number.isInteger(value)) {
      throw new Error("floats are banned from canonical values");
    }
    if (!Number.isSafeInteger(value)) {
      throw new Error("integer exceeds exact float64 range");
    }
    return String(value);
  }
  if (typeof value === "string") return escapeString(value);
  if (value instanceof Uint8Array) return '"' + bytesToHex(value) + '"';
  if (Array.isArray(value)) return "[" + value.map(emit).join(",") + "]";
  if (value !== null && typeof value === "object") {
    const keys = Object.keys(value).sort(compareUtf8);
    const parts = keys.map(
      (key) => escapeString(key) + ":" + emit((value as Record<string, CanonicalValue>)[key]!),
    );
    return "{" + parts.join(",") + "}";
  }
  throw new Error(`cannot canonicalize ${String(value)}`);
}

export function canonicalText(value: CanonicalValue): string {
  return emit(value);
}

export function canonicalSerialize(value: CanonicalValue): Uint8Array {
  return utf8.encode(emit(value));
}

/** Strict parse: the input must re-serialize to itself. */
export function canonicalParse(text: string): CanonicalValue {
  let value: CanonicalValue;
  try {
    value = JSON.parse(text) as CanonicalValue;
  } catch (err) {
    throw new Error(`not parseable: ${(err as Error).message}`);
  }
  if (canonicalText(value) !== text) {
    throw new Error("input is not in canonical form");
  }
  return value;
}
