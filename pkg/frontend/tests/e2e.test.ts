/**
 * Drives the real audit service over HTTP: builds a judgment cache and
 * audit store with the gireval command line, boots `gireval audit serve`
 * on a free port, and exercises the client against it. Skips when the
 * gireval executable is not installed.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync, mkdirSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, AuditApiClient } from "../src/api.js";

const hasGireval = spawnSync("gireval", ["--help"]).status === 0;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

function runCli(args: string[], cwd: string): void {
  const result = spawnSync("gireval", args, { cwd, encoding: "utf-8" });
  if (result.status !== 0) {
    throw new Error(`gireval ${args[0]} failed: ${result.stderr}`);
  }
}

describe.skipIf(!hasGireval)("against the real audit service", () => {
  let workdir: string;
  let server: ChildProcess | undefined;
  let client: AuditApiClient;

  beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), "audit-e2e-"));
    writeFileSync(
      join(workdir, "queries.tsv"),
      "q1\twhat is a geon\nq2\thow do crystals form\n",
    );
    writeFileSync(
      join(workdir, "responses.jsonl"),
      [
        JSON.stringify({ system_id: "sysA", query_id: "q1", text: "geons are primitive shapes" }),
        JSON.stringify({ system_id: "sysA", query_id: "q2", text: "crystals grow from solutions" }),
        "",
      ].join("\n"),
    );
    writeFileSync(join(workdir, "fixtures.json"), JSON.stringify({ __default__: "Relevant" }));
    mkdirSync(join(workdir, "cache"));

    runCli(
      [
        "evaluate", "--method", "binary",
        "--responses", "responses.jsonl", "--queries", "queries.tsv",
        "--mock-fixtures", "fixtures.json",
        "--cache-dir", "cache", "--out", "scores.json",
      ],
      workdir,
    );
    runCli(
      ["audit", "sample", "--n", "2", "--cache-dir", "cache",
       "--audit-store", "audit.jsonl", "--seed", "3"],
      workdir,
    );

    const port = await freePort();
    const stderr: string[] = [];
    server = spawn(
      "gireval",
      ["audit", "serve", "--audit-store", "audit.jsonl",
       "--host", "127.0.0.1", "--port", String(port)],
      { cwd: workdir, stdio: ["ignore", "ignore", "pipe"] },
    );
    server.stderr?.on("data", (chunk: Buffer) => stderr.push(chunk.toString()));

    const baseUrl = `http://127.0.0.1:${port}`;
    client = new AuditApiClient({ baseUrl });
    const deadline = Date.now() + 20_000;
    for (;;) {
      try {
        await client.fetchReport();
        break;
      } catch {
        if (Date.now() > deadline) {
          throw new Error(`service never came up:\n${stderr.join("")}`);
        }
        await new Promise((resolve) => setTimeout(resolve, 200));
      }
    }
  }, 60_000);

  afterAll(() => {
    server?.kill("SIGTERM");
    if (workdir) rmSync(workdir, { recursive: true, force: true });
  });

  it("serves a blinded binary batch", async () => {
    const items = await client.fetchBatch("carol");
    expect(items).toHaveLength(2);
    for (const item of items) {
      expect(item.method_id).toBe("binary");
      expect(item.label_space).toEqual({
        kind: "choice",
        options: ["relevant", "not_relevant"],
      });
      expect(JSON.stringify(item)).not.toContain("llm_outcome");
    }
    const queries = items.map((item) => item.query).sort();
    expect(queries).toEqual(["how do crystals form", "what is a geon"]);
  });

  it("accepts a label, reveals the judged outcome, and reports agreement", async () => {
    const items = await client.fetchBatch("carol");
    const response = await client.submitLabel(items[0].item_id, "relevant", "carol");
    expect(response.status).toBe("ok");
    expect(response.reveal).toEqual({ llm_outcome: "relevant", match: true });

    // the labeled item leaves carol's batch but not dan's
    expect(await client.fetchBatch("carol")).toHaveLength(1);
    expect(await client.fetchBatch("dan")).toHaveLength(2);

    const report = await client.fetchReport();
    expect(report.n_labels).toBe(1);
    expect(report.per_method.binary).toMatchObject({ n_audited: 1, n_agree: 1 });
    expect(report.per_method.binary.agreement).toBeCloseTo(1.0, 12);
  });

  it("rejects labels outside the answer space with a 400", async () => {
    const items = await client.fetchBatch("dan");
    await expect(client.submitLabel(items[0].item_id, "maybe", "dan")).rejects.toMatchObject({
      status: 400,
    });
    await expect(client.submitLabel(items[0].item_id, "maybe", "dan")).rejects.toBeInstanceOf(
      ApiError,
    );
  });

  it("rejects unknown item ids with a 404", async () => {
    await expect(client.submitLabel("nope", "relevant", "dan")).rejects.toMatchObject({
      status: 404,
    });
  });
});
