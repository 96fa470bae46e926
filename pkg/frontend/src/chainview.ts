/**
 * Read-model over /chain/blocks: fold the typed payloads into the view
 * the dashboard renders (actors, ownership, grant states, record
 * status). Rendering state is always re-derived from fetched blocks,
 * never mutated locally ahead of gateway confirmation.
 */

import { ChainBlock } from "./api.js";

export interface GrantView {
  data_id: string;
  grantee: string;
  permission: string;
  granted_by: string;
  status: "ACTIVE" | "REVOKED";
  consent_ref: string;
}

export interface RecordView {
  data_id: string;
  owner: string;
  status: "ACTIVE" | "ERASED" | "PENDING";
  version: number;
}

export interface ChainView {
  roles: Map<string, string>;
  authorities: Set<string>;
  owners: Map<string, string>;
  records: Map<string, RecordView>;
  grants: GrantView[];
}

type Payload = Record<string, unknown>;

export function foldChain(blocks: ChainBlock[]): ChainView {
  const view: ChainView = {
    roles: new Map(),
    authorities: new Set(),
    owners: new Map(),
    records: new Map(),
    grants: [],
  };
  for (const block of blocks) {
    for (const tx of block.transactions) {
      const payload = tx.payload as Payload;
      const txId = (tx as unknown as { tx_id: string }).tx_id ?? "";
      applyPayload(view, payload, txId);
    }
  }
  return view;
}

function applyPayload(view: ChainView, payload: Payload, txId: string): void {
  switch (payload["kind"]) {
    case "policy.genesis": {
      const actors = payload["actors"] as Array<Payload> | undefined;
      for (const actor of actors ?? []) {
        view.roles.set(String(actor["actor_id"]), String(actor["role"]));
        if (actor["authority"] === true) {
          view.authorities.add(String(actor["actor_id"]));
        }
      }
      break;
    }
    case "policy.register_data": {
      const dataId = String(payload["data_id"]);
      if (!view.owners.has(dataId)) {
        view.owners.set(dataId, String(payload["owner"]));
        view.records.set(dataId, {
          data_id: dataId,
          owner: String(payload["owner"]),
          status: "PENDING",
          version: 0,
        });
      }
      break;
    }
    case "policy.grant": {
      const dataId = String(payload["data_id"]);
      if (!view.owners.has(dataId)) break; // rejected on-chain
      view.grants.push({
        data_id: dataId,
        grantee: String(payload["grantee"]),
        permission: String(payload["permission"]),
        granted_by: String(payload["granted_by"]),
        status: "ACTIVE",
        consent_ref: payload["consent"] !== undefined ? txId : "",
      });
      break;
    }
    case "policy.revoke": {
      const dataId = String(payload["data_id"]);
      const grantee = String(payload["grantee"]);
      const permission = payload["permission"];
      for (const grant of view.grants) {
        if (grant.data_id !== dataId || grant.grantee !== grantee) continue;
        if (grant.status !== "ACTIVE") continue;
        if (permission !== undefined && grant.permission !== permission) continue;
        grant.status = "REVOKED";
      }
      break;
    }
    case "integrity.record": {
      const record = view.records.get(String(payload["data_id"]));
      if (record && record.status === "PENDING") {
        record.status = "ACTIVE";
        record.version = 1;
      }
      break;
    }
    case "integrity.update": {
      const record = view.records.get(String(payload["data_id"]));
      if (record && record.status === "ACTIVE") record.version += 1;
      break;
    }
    case "integrity.erase": {
      const record = view.records.get(String(payload["data_id"]));
      if (record && record.status === "ACTIVE") record.status = "ERASED";
      break;
    }
    default:
      break; // audit entries are fetched through UC8, not folded here
  }
}

export function recordsOwnedBy(view: ChainView, actor: string): RecordView[] {
  return [...view.records.values()].filter((r) => r.owner === actor);
}

export function grantsForOwner(view: ChainView, actor: string): GrantView[] {
  return view.grants.filter((g) => view.owners.get(g.data_id) === actor);
}
