/**
 * The portal: students grant/revoke consent and read their audit
 * trail; employers verify certificate files. Every action round-trips
 * to the gateway and the page re-renders from fetched state only.
 */

import { AuditEntry, GatewayClient, UseCaseResponse, makeApproval } from "./api.js";
import { CanonicalValue } from "./canonical.js";
import { parseCertFile } from "./certfile.js";
import { ChainView, foldChain, grantsForOwner, recordsOwnedBy } from "./chainview.js";
import { Session, login } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

export class PortalApp {
  private session: Session | null = null;
  private view: ChainView | null = null;
  private auditEntries: AuditEntry[] = [];
  private notice = "";
  private lastVerification = "";
  private pending: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly client: GatewayClient,
  ) {
    this.renderLogin();
  }

  /** Settles when all in-flight actions have completed (for tests). */
  whenIdle(): Promise<void> {
    return this.pending;
  }

  private track(work: Promise<void>): void {
    this.pending = this.pending.then(() => work).catch(() => undefined);
  }

  private async refresh(): Promise<void> {
    this.view = foldChain(await this.client.chainBlocks());
    this.render();
  }

  private describe(response: UseCaseResponse): string {
    if (response.outcome === "GRANTED") return "GRANTED";
    if (response.outcome === "DENIED") {
      return `DENIED: ${response.reason} (audit_seq=${response.audit_seq})`;
    }
    return `ERROR: ${response.reason}`;
  }

  // -- login ------------------------------------------------------------

  private renderLogin(): void {
    this.root.replaceChildren();
    const box = el("div", { class: "login" });
    box.append(el("h1", {}, "certledger consent portal"));
    const actor = el("input", { id: "login-actor", placeholder: "actor id" });
    const seed = el("input", {
      id: "login-seed", placeholder: "signing key seed (64 hex chars)",
      type: "password",
    });
    const button = el("button", { id: "login-button" }, "Sign in");
    const status = el("p", { id: "login-status" }, this.notice);
    button.addEventListener("click", () => {
      this.track(this.doLogin(actor.value.trim(), seed.value.trim()));
    });
    box.append(actor, seed, button, status);
    this.root.append(box);
  }

  private async doLogin(actorId: string, seedHex: string): Promise<void> {
    try {
      const { session, view } = await login(this.client, actorId, seedHex);
      this.session = session;
      this.view = view;
      this.notice = "";
      this.render();
    } catch (err) {
      this.notice = `sign-in failed: ${(err as Error).message}`;
      this.renderLogin();
    }
  }

  // -- rendering ------------------------------------------------------------

  private render(): void {
    if (!this.session || !this.view) {
      this.renderLogin();
      return;
    }
    this.root.replaceChildren();
    const header = el("div", { class: "header" });
    header.append(
      el("h1", {}, "certledger consent portal"),
      el("span", { id: "whoami" },
        `${this.session.actorId} (${this.session.role})`),
    );
    this.root.append(header);
    if (this.notice) {
      this.root.append(el("p", { id: "notice", class: "notice" }, this.notice));
    }
    if (this.session.role === "DO") {
      this.renderDashboard();
    } else {
      this.renderVerification();
    }
  }

  // -- student dashboard -------------------------------------------------------

  private renderDashboard(): void {
    const session = this.session!;
    const view = this.view!;
    const panel = el("div", { id: "dashboard" });

    panel.append(el("h2", {}, "My records"));
    const records = el("table", { id: "records" });
    for (const record of recordsOwnedBy(view, session.actorId)) {
      const row = el("tr", { "data-record": record.data_id });
      row.append(
        el("td", {}, record.data_id),
        el("td", { class: "record-status" }, record.status),
        el("td", {}, `v${record.version}`),
      );
      records.append(row);
    }
    panel.append(records);

    panel.append(el("h2", {}, "Grants"));
    const grants = el("table", { id: "grants" });
    grantsForOwner(view, session.actorId).forEach((grant, index) => {
      const row = el("tr", {
        "data-grant": `${grant.data_id}:${grant.grantee}:${grant.permission}`,
      });
      row.append(
        el("td", {}, grant.data_id),
        el("td", {}, grant.grantee),
        el("td", {}, grant.permission),
        el("td", { class: "grant-status" }, grant.status),
      );
      const actions = el("td");
      if (grant.status === "ACTIVE") {
        const revoke = el("button", { class: "revoke-button", "data-index": `${index}` },
          "Revoke");
        revoke.addEventListener("click", () => {
          this.track(this.doRevoke(grant.data_id, grant.grantee, grant.permission));
        });
        actions.append(revoke);
      }
      row.append(actions);
      grants.append(row);
    });
    panel.append(grants);

    panel.append(el("h2", {}, "Grant new access"));
    const form = el("div", { id: "grant-form" });
    const dataId = el("input", { id: "grant-data-id", placeholder: "data id" });
    const grantee = el("input", { id: "grant-grantee", placeholder: "grantee" });
    const permission = el("select", { id: "grant-permission" });
    for (const p of ["VERIFY", "READ"]) {
      permission.append(el("option", { value: p }, p));
    }
    const grantButton = el("button", { id: "grant-button" }, "Grant");
    grantButton.addEventListener("click", () => {
      this.track(this.doGrant(dataId.value.trim(), grantee.value.trim(),
                              permission.value));
    });
    form.append(dataId, grantee, permission, grantButton);
    panel.append(form);

    panel.append(el("h2", {}, "Audit trail"));
    const auditButton = el("button", { id: "audit-button" }, "Refresh audit trail");
    auditButton.addEventListener("click", () => {
      this.track(this.doAudit());
    });
    panel.append(auditButton);
    const audit = el("table", { id: "audit" });
    for (const entry of this.auditEntries) {
      const row = el("tr", { class: "audit-entry" });
      row.append(
        el("td", {}, `#${entry.seq}`),
        el("td", {}, entry.operation),
        el("td", {}, entry.outcome),
        el("td", {}, entry.actor),
        el("td", {}, entry.detail),
      );
      audit.append(row);
    }
    panel.append(audit);
    this.root.append(panel);
  }

  private async doGrant(dataId: string, grantee: string,
                        permission: string): Promise<void> {
    const session = this.session!;
    const consent = await makeApproval(session.signer, session.actorId, "consent", {
      action: "grant", data_id: dataId, grantee, permission,
    });
    const response = await this.client.submit(session.signer, {
      actor: session.actorId,
      role_claim: session.role,
      operation: "UC2",
      parameters: { data_id: dataId, grantee, permission, consent },
    });
    this.notice = `grant ${grantee}/${permission}: ${this.describe(response)}`;
    await this.refresh();
  }

  private async doRevoke(dataId: string, grantee: string,
                         permission: string): Promise<void> {
    const session = this.session!;
    const response = await this.client.submit(session.signer, {
      actor: session.actorId,
      role_claim: session.role,
      operation: "UC3",
      parameters: { data_id: dataId, grantee, permission },
    });
    this.notice = `revoke ${grantee}: ${this.describe(response)}`;
    await this.refresh();
  }

  private async doAudit(): Promise<void> {
    const session = this.session!;
    const view = this.view!;
    const owned = recordsOwnedBy(view, session.actorId);
    this.auditEntries = [];
    for (const record of owned) {
      const response = await this.client.submit(session.signer, {
        actor: session.actorId,
        role_claim: session.role,
        operation: "UC8",
        parameters: { data_id: record.data_id },
      });
      if (response.outcome === "GRANTED" && response.payload) {
        this.auditEntries.push(
          ...(response.payload["entries"] as AuditEntry[]));
      } else {
        this.notice = `audit: ${this.describe(response)}`;
      }
    }
    this.auditEntries.sort((a, b) => a.seq - b.seq);
    this.render();
  }

  // -- employer verification ----------------------------------------------------

  private renderVerification(): void {
    const panel = el("div", { id: "verification" });
    panel.append(el("h2", {}, "Verify a certificate"));
    const dataId = el("input", { id: "verify-data-id", placeholder: "data id" });
    const fileInput = el("input", { id: "verify-file", type: "file" });
    const pasteArea = el("textarea", {
      id: "verify-paste",
      placeholder: "or paste the .cert file content here",
    });
    const button = el("button", { id: "verify-button" }, "Verify");
    const badge = el("div", { id: "verify-result", class: "badge" },
      this.lastVerification);
    fileInput.addEventListener("change", () => {
      const file = fileInput.files && fileInput.files[0];
      if (!file) return;
      this.track(file.text().then((text) => {
        pasteArea.value = text;
      }));
    });
    button.addEventListener("click", () => {
      this.track(this.doVerify(dataId.value.trim(), pasteArea.value));
    });
    panel.append(dataId, fileInput, pasteArea, button, badge);
    this.root.append(panel);
  }

  private async doVerify(dataId: string, certText: string): Promise<void> {
    const session = this.session!;
    let canonical: string;
    try {
      canonical = parseCertFile(certText).canonical;
    } catch (err) {
      this.lastVerification = `unreadable certificate: ${(err as Error).message}`;
      this.render();
      return;
    }
    const hex = Array.from(new TextEncoder().encode(canonical))
      .map((b) => b.toString(16).padStart(2, "0")).join("");
    const response = await this.client.submit(session.signer, {
      actor: session.actorId,
      role_claim: session.role,
      operation: "UC5",
      parameters: { data_id: dataId, candidate_plaintext: hex } as
        Record<string, CanonicalValue>,
    });
    if (response.outcome === "GRANTED" && response.payload) {
      const result = String(response.payload["result"]);
      const meanings: Record<string, string> = {
        VALID: "authentic: matches the anchored digest",
        INVALID: "does NOT match the anchored digest",
        ERASED: "the record was erased by its owner",
        UNKNOWN: "no integrity record exists",
      };
      this.lastVerification = `${result} — ${meanings[result] ?? ""}`;
    } else if (response.outcome === "DENIED") {
      const hint = response.reason === "no_grant" || response.reason === "revoked"
        ? "consent required: ask the student for a VERIFY grant"
        : response.reason;
      this.lastVerification =
        `DENIED — ${hint} (audit_seq=${response.audit_seq})`;
    } else {
      this.lastVerification = `ERROR — ${response.reason}`;
    }
    this.render();
  }
}

export function mountPortal(root: HTMLElement, gatewayUrl: string): PortalApp {
  return new PortalApp(root, new GatewayClient(gatewayUrl));
}
