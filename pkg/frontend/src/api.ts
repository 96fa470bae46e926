/**
 * Typed client for the gateway's documented HTTP API. Nothing outside
 * this surface is ever called.
 */

import {
  CanonicalValue,
  bytesToHex,
  canonicalSerialize,
} from "./canonical.js";
import { Signer } from "./signing.js";

export type Operation =
  | "UC1" | "UC2" | "UC3" | "UC4" | "UC5" | "UC6" | "UC7" | "UC8";

const ENDPOINTS: Record<Operation, string> = {
  UC1: "register",
  UC2: "grant",
  UC3: "revoke",
  UC4: "access",
  UC5: "verify",
  UC6: "owner-change",
  UC7: "controller-change",
  UC8: "audit",
};

export interface UseCaseResponse {
  outcome: "GRANTED" | "DENIED" | "ERROR";
  payload?: Record<string, unknown>;
  reason?: string;
  audit_seq?: number;
}

export interface AuditEntry {
  seq: number;
  timestamp: number;
  actor: string;
  operation: string;
  data_id?: string;
  outcome: string;
  detail: string;
}

export interface ChainBlock {
  index: number;
  timestamp: number;
  transactions: Array<{ payload: Record<string, CanonicalValue> }>;
}

export interface Envelope {
  actor: string;
  role_claim: string;
  operation: Operation;
  parameters: Record<string, CanonicalValue>;
}

export async function makeApproval(
  signer: Signer,
  actor: string,
  purpose: string,
  claims: Record<string, CanonicalValue>,
): Promise<Record<string, CanonicalValue>> {
  const message = canonicalSerialize({ actor, claims, purpose });
  const signature = await signer.sign(message);
  return { actor, purpose, claims, signature: bytesToHex(signature) };
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetcher: typeof fetch = fetch,
  ) {}

  private async signEnvelope(
    signer: Signer, envelope: Envelope,
  ): Promise<{ body: string; message: Uint8Array; signatureHex: string }> {
    const value: Record<string, CanonicalValue> = {
      actor: envelope.actor,
      operation: envelope.operation,
      parameters: envelope.parameters,
      role_claim: envelope.role_claim,
    };
    const message = canonicalSerialize(value);
    const signatureHex = bytesToHex(await signer.sign(message));
    const body = JSON.stringify({
      request: JSON.parse(new TextDecoder().decode(message)),
      signature: signatureHex,
    });
    return { body, message, signatureHex };
  }

  async submit(signer: Signer, envelope: Envelope): Promise<UseCaseResponse> {
    const { body, message, signatureHex } = await this.signEnvelope(signer, envelope);
    let response: Response;
    if (envelope.operation === "UC8") {
      const params = new URLSearchParams({
        request: bytesToHex(message),
        signature: signatureHex,
      });
      response = await this.fetcher(`${this.baseUrl}/uc/audit?${params}`);
    } else {
      response = await this.fetcher(
        `${this.baseUrl}/uc/${ENDPOINTS[envelope.operation]}`,
        { method: "POST", headers: { "content-type": "application/json" }, body },
      );
    }
    return (await response.json()) as UseCaseResponse;
  }

  async chainBlocks(): Promise<ChainBlock[]> {
    const response = await this.fetcher(`${this.baseUrl}/chain/blocks`);
    const data = (await response.json()) as { blocks: ChainBlock[] };
    return data.blocks;
  }

  async chainValidate(): Promise<{ ok: boolean; first_bad_height: number | null }> {
    const response = await this.fetcher(`${this.baseUrl}/chain/validate`);
    return (await response.json()) as { ok: boolean; first_bad_height: number | null };
  }
}
