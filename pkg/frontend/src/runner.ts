/**
 * Process plumbing: temp workspaces and invocations of the core CLI.
 *
 * The core is reached exclusively through its command-line interface and
 * file formats. Set UAVGEOM_CLI to override how the CLI is launched
 * (e.g. "python3 -m uavgeom.cli"); the default expects `uavgeom` on PATH.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export class CliError extends Error {
  readonly exitCode: number;
  constructor(message: string, exitCode: number) {
    super(message);
    this.name = "CliError";
    this.exitCode = exitCode;
  }
}

function cliCommand(): string[] {
  const override = process.env.UAVGEOM_CLI;
  return override ? override.split(" ").filter(Boolean) : ["uavgeom"];
}

export function runCli(args: string[]): void {
  const [cmd, ...prefix] = cliCommand();
  const result = spawnSync(cmd, [...prefix, ...args], {
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (result.error) {
    throw new CliError(`failed to launch ${cmd}: ${result.error.message}`, -1);
  }
  if (result.status !== 0) {
    const stderr = (result.stderr ?? "").trim();
    throw new CliError(
      `uavgeom ${args[0]} exited with ${result.status}: ${stderr}`,
      result.status ?? -1,
    );
  }
}

export function runCliJson<T>(args: string[], jsonPath: string): T {
  runCli(args);
  return JSON.parse(fs.readFileSync(jsonPath, "utf8")) as T;
}

export function withTempDir<T>(body: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "uavgeom-bind-"));
  try {
    return body(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}
