/**
 * `.cert` interchange files: the file content IS the canonical
 * certificate byte form. Parsing validates the round trip so a corrupt
 * or hand-edited file is rejected before it reaches the gateway.
 */

import { CanonicalValue, canonicalParse, canonicalText } from "./canonical.js";

export interface CertificateView {
  student_id: string;
  full_name: string;
  degree: string;
  institution: string;
  issue_date: string;
  grade_records: Array<{ course: string; grade: string; date: string }>;
  extensions: Record<string, string>;
}

const FIELDS = [
  "degree", "extensions", "full_name", "grade_records",
  "institution", "issue_date", "student_id",
];

export function parseCertFile(text: string): { cert: CertificateView; canonical: string } {
  let value: CanonicalValue;
  try {
    value = canonicalParse(text.trim());
  } catch (err) {
    throw new Error(`not a canonical certificate: ${(err as Error).message}`);
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new Error("certificate must be a map");
  }
  const map = value as Record<string, CanonicalValue>;
  const keys = Object.keys(map).sort();
  if (keys.join(",") !== FIELDS.join(",")) {
    throw new Error(`unexpected certificate fields: ${keys.join(", ")}`);
  }
  const cert = map as unknown as CertificateView;
  if (!Array.isArray(cert.grade_records)) {
    throw new Error("grade_records must be a list");
  }
  for (const record of cert.grade_records) {
    if (!record.course || !record.grade || !record.date) {
      throw new Error("grade record fields must be non-empty");
    }
  }
  if (!/^\d{4}-\d{2}-\d{2}$/.test(cert.issue_date)) {
    throw new Error("issue_date must be an ISO date");
  }
  return { cert, canonical: canonicalText(value) };
}
