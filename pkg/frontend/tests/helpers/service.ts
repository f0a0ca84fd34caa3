/** Spawn a real triage service on the shared fixture corpus. Each test file
 * gets its own process, port, and data directory, so suites stay isolated
 * and order-independent.
 */

import { type ChildProcess, spawn } from "node:child_process";
import { createServer } from "node:net";
import { mkdtemp, readdir, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { basename, join } from "node:path";

import { ServiceClient } from "../../src/api";
import { FIXTURE_INFO_PATH, REPO_ROOT, type FixtureInfo } from "./paths";

export const TOKEN = "fixture-token";

export interface RunningService {
  baseUrl: string;
  token: string;
  client: ServiceClient;
  /** record ids of the ingested fixture plates */
  itemIds: string[];
  stop(): Promise<void>;
}

async function freePort(): Promise<number> {
  return new Promise((resolvePort, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolvePort(address.port));
    });
  });
}

async function waitForHealth(baseUrl: string, proc: ChildProcess, stderr: string[]): Promise<void> {
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    if (proc.exitCode !== null) {
      throw new Error(`service exited early (${proc.exitCode}): ${stderr.join("")}`);
    }
    try {
      const response = await fetch(`${baseUrl}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error(`service never became healthy: ${stderr.join("")}`);
}

export async function readFixture(): Promise<FixtureInfo> {
  return JSON.parse(await readFile(FIXTURE_INFO_PATH, "utf8")) as FixtureInfo;
}

export async function startService(): Promise<RunningService> {
  const fixture = await readFixture();
  const dataDir = await mkdtemp(join(tmpdir(), "triage-ui-data-"));
  const port = await freePort();
  const configPath = join(dataDir, "service.yaml");
  await writeFile(
    configPath,
    [
      `listen_address: 127.0.0.1:${port}`,
      `data_dir: ${join(dataDir, "store")}`,
      `checkpoint_path: ${fixture.checkpoint}`,
      `auth_token: ${TOKEN}`,
      "",
    ].join("\n"),
  );

  const proc = spawn(
    "python3",
    ["-m", "crystaltriage.cli", "serve", "--config", configPath],
    { cwd: REPO_ROOT, stdio: ["ignore", "ignore", "pipe"] },
  );
  const stderr: string[] = [];
  proc.stderr?.on("data", (chunk: Buffer) => stderr.push(chunk.toString()));

  const baseUrl = `http://127.0.0.1:${port}`;
  try {
    await waitForHealth(baseUrl, proc, stderr);
  } catch (err) {
    proc.kill("SIGKILL");
    await rm(dataDir, { recursive: true, force: true });
    throw err;
  }

  const client = new ServiceClient({ baseUrl, token: TOKEN });
  const names = (await readdir(fixture.platesDir)).filter((n) => n.endsWith(".png")).sort();
  const files = await Promise.all(
    names.map(async (name) => ({
      name: basename(name),
      bytes: new Uint8Array(await readFile(join(fixture.platesDir, name))),
    })),
  );
  const itemIds = await client.ingestImages(files);

  return {
    baseUrl,
    token: TOKEN,
    client,
    itemIds,
    async stop() {
      proc.kill("SIGTERM");
      await new Promise<void>((resolveExit) => {
        const timer = setTimeout(() => {
          proc.kill("SIGKILL");
          resolveExit();
        }, 5_000);
        proc.once("exit", () => {
          clearTimeout(timer);
          resolveExit();
        });
      });
      await rm(dataDir, { recursive: true, force: true });
    },
  };
}
