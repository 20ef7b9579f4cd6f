/**
 * Run the native CLI in a subprocess and translate its error contract.
 *
 * The native side prints `error: <ClassName>: <message>` on stderr for
 * input problems; this module lifts that line into a NativeError whose
 * name is the native class name, one to one. All solver math stays on
 * the other side of this boundary.
 */

import { spawnSync } from "node:child_process";
import { NativeError } from "./types.js";

export interface CliResult {
  code: number;
  stdout: string;
  stderr: string;
}

export function defaultPython(): string {
  return process.env.TINYSOCP_PYTHON ?? "python3";
}

export function runCli(python: string, args: string[]): CliResult {
  const res = spawnSync(python, ["-m", "tinysocp", ...args], {
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (res.error) {
    throw new NativeError("RunnerError", `failed to launch ${python}: ${res.error.message}`);
  }
  return { code: res.status ?? -1, stdout: res.stdout, stderr: res.stderr };
}

/** Pull the `error: Name: message` line out of stderr, if present. */
export function nativeErrorFrom(res: CliResult): NativeError | null {
  for (const line of res.stderr.split(/\r?\n/)) {
    const match = /^error: ([A-Za-z_][A-Za-z0-9_]*): (.*)$/.exec(line);
    if (match) return new NativeError(match[1]!, match[2]!);
  }
  return null;
}

/** Throw for any nonzero exit that the caller does not expect. */
export function expectOk(res: CliResult, what: string, okCodes: readonly number[] = [0]): void {
  if (okCodes.includes(res.code)) return;
  const native = nativeErrorFrom(res);
  if (native) throw native;
  throw new NativeError(
    "RunnerError",
    `${what} exited with code ${res.code}: ${res.stderr.trim() || res.stdout.trim()}`,
  );
}
