// Portal round trip against a real gateway process:
// grant -> verify -> revoke -> verify showing ACTIVE, VALID, REVOKED,
// DENIED in that order, driven through the rendered DOM.

import { ChildProcess, spawn } from "node:child_process";
import { readFileSync } from "node:fs";
import { join } from "node:path";
import { Window } from "happy-dom";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { PortalApp } from "../src/app.js";

const HELPER = join(__dirname, "helpers", "gateway_server.py");
const GOLDEN_CERT = readFileSync(
  join(__dirname, "..", "..", "golden", "certificate.cert"), "utf-8");

interface ServerInfo {
  port: number;
  actors: Record<string, { role: string; seed: string }>;
  data_id: string;
}

let server: ChildProcess;
let info: ServerInfo;
let window: Window;

function startServer(): Promise<ServerInfo> {
  return new Promise((resolve, reject) => {
    server = spawn("python3", [HELPER], { stdio: ["ignore", "pipe", "inherit"] });
    let buffer = "";
    server.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const newline = buffer.indexOf("\n");
      if (newline >= 0) {
        resolve(JSON.parse(buffer.slice(0, newline)) as ServerInfo);
      }
    });
    server.on("error", reject);
    server.on("exit", (code) => reject(new Error(`gateway exited: ${code}`)));
  });
}

async function waitForGateway(url: string): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const response = await fetch(`${url}/chain/validate`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("gateway never became ready");
}

function mount(rootId: string): PortalApp {
  const root = window.document.createElement("div");
  root.id = rootId;
  window.document.body.appendChild(root);
  const url = `http://127.0.0.1:${info.port}`;
  return new PortalApp(
    root as unknown as HTMLElement, new GatewayClient(url));
}

function q<T extends HTMLElement>(rootId: string, selector: string): T {
  const node = window.document.querySelector(`#${rootId} ${selector}`);
  if (!node) throw new Error(`missing ${selector} under #${rootId}`);
  return node as unknown as T;
}

async function loginAs(app: PortalApp, rootId: string, actor: string): Promise<void> {
  q<HTMLInputElement>(rootId, "#login-actor").value = actor;
  q<HTMLInputElement>(rootId, "#login-seed").value = info.actors[actor]!.seed;
  q<HTMLButtonElement>(rootId, "#login-button").click();
  await app.whenIdle();
}

beforeAll(async () => {
  info = await startServer();
  await waitForGateway(`http://127.0.0.1:${info.port}`);
  window = new Window();
  (globalThis as Record<string, unknown>)["document"] = window.document;
}, 60000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("portal round trip", () => {
  it("shows ACTIVE, VALID, REVOKED, DENIED in order", async () => {
    // -- student session: grant the employer VERIFY access
    const student = mount("student");
    await loginAs(student, "student", "alice");
    expect(q("student", "#whoami").textContent).toBe("alice (DO)");
    expect(q("student", "#records tr td").textContent).toBe(info.data_id);

    q<HTMLInputElement>("student", "#grant-data-id").value = info.data_id;
    q<HTMLInputElement>("student", "#grant-grantee").value = "acme-corp";
    q<HTMLSelectElement>("student", "#grant-permission").value = "VERIFY";
    q<HTMLButtonElement>("student", "#grant-button").click();
    await student.whenIdle();
    expect(q("student", "#notice").textContent).toContain("GRANTED");
    const grantStatus = q("student", "#grants .grant-status");
    expect(grantStatus.textContent).toBe("ACTIVE");          // (1) ACTIVE

    // -- employer session: verify the authentic certificate file
    const employer = mount("employer");
    await loginAs(employer, "employer", "acme-corp");
    expect(q("employer", "#whoami").textContent).toBe("acme-corp (RECIPIENT)");
    q<HTMLInputElement>("employer", "#verify-data-id").value = info.data_id;
    q<HTMLTextAreaElement>("employer", "#verify-paste").value = GOLDEN_CERT;
    q<HTMLButtonElement>("employer", "#verify-button").click();
    await employer.whenIdle();
    expect(q("employer", "#verify-result").textContent)
      .toContain("VALID");                                   // (2) VALID

    // -- student session: revoke
    q<HTMLButtonElement>("student", "#grants .revoke-button").click();
    await student.whenIdle();
    expect(q("student", "#notice").textContent).toContain("GRANTED");
    expect(q("student", "#grants .grant-status").textContent)
      .toBe("REVOKED");                                      // (3) REVOKED

    // -- employer session: verification is now refused
    q<HTMLInputElement>("employer", "#verify-data-id").value = info.data_id;
    q<HTMLTextAreaElement>("employer", "#verify-paste").value = GOLDEN_CERT;
    q<HTMLButtonElement>("employer", "#verify-button").click();
    await employer.whenIdle();
    const refusal = q("employer", "#verify-result").textContent ?? "";
    expect(refusal).toContain("DENIED");                     // (4) DENIED
    expect(refusal).toContain("consent");
    expect(refusal).toMatch(/audit_seq=\d+/);
  }, 60000);

  it("rejects a tampered certificate and an unknown actor", async () => {
    const employer = mount("employer2");
    await loginAs(employer, "employer2", "acme-corp");
    q<HTMLInputElement>("employer2", "#verify-data-id").value = info.data_id;
    q<HTMLTextAreaElement>("employer2", "#verify-paste").value =
      GOLDEN_CERT.replace('"degree":', '"degree" :');
    q<HTMLButtonElement>("employer2", "#verify-button").click();
    await employer.whenIdle();
    // hand-edited file breaks canonical form before any network call
    expect(q("employer2", "#verify-result").textContent)
      .toContain("unreadable certificate");

    const ghost = mount("ghost");
    q<HTMLInputElement>("ghost", "#login-actor").value = "nobody";
    q<HTMLInputElement>("ghost", "#login-seed").value = "ab".repeat(32);
    q<HTMLButtonElement>("ghost", "#login-button").click();
    await ghost.whenIdle();
    expect(q("ghost", "#login-status").textContent)
      .toContain("not registered");
  }, 60000);

  it("student audit trail lists the session's events", async () => {
    const student = mount("student2");
    await loginAs(student, "student2", "alice");
    q<HTMLButtonElement>("student2", "#audit-button").click();
    await student.whenIdle();
    const rows = window.document.querySelectorAll("#student2 #audit .audit-entry");
    expect(rows.length).toBeGreaterThanOrEqual(4);
    const text = Array.from(rows).map((r) => r.textContent).join("\n");
    expect(text).toContain("UC1");
    expect(text).toContain("UC2");
    expect(text).toContain("UC5");
    expect(text).toContain("UC3");
  }, 60000);
});
