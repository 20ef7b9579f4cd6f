/**
 * The shared-file round trip: parse each problem file written by the
 * native side, rebuild it through the handle, solve on both sides of
 * the boundary, and require the trajectories to agree to 1e-12.
 * Numbers cross as shortest round-trip decimals, so the expected
 * disagreement is exactly zero.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterEach, describe, expect, it } from "vitest";

import { parseSolveTable } from "../src/csv";
import { parseProblemFile } from "../src/problemfile";
import { defaultPython, expectOk, runCli } from "../src/runner";
import { TinySOCP } from "../src/tinysocp";
import type { Matrix } from "../src/types";

const SHARED = ["di_box", "rocket_cone", "filter_axes", "spiral_cone", "tracking_linear"];

function sharedPath(name: string): string {
  return fileURLToPath(new URL(`../problems/${name}.json`, import.meta.url));
}

function maxAbsDiff(a: Matrix, b: Matrix): number {
  expect(a.length).toBe(b.length);
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    expect(a[i]!.length).toBe(b[i]!.length);
    for (let j = 0; j < a[i]!.length; j++) {
      worst = Math.max(worst, Math.abs(a[i]![j]! - b[i]![j]!));
    }
  }
  return worst;
}

describe("shared problem files solve identically on both sides", () => {
  const cleanups: Array<() => void> = [];
  afterEach(() => {
    while (cleanups.length > 0) cleanups.pop()!();
  });

  for (const name of SHARED) {
    it(`round trips ${name}`, () => {
      const original = sharedPath(name);
      const parsed = parseProblemFile(readFileSync(original, "utf8"));
      const n = parsed.A.length;
      const x0 = Array.from({ length: n }, (_, i) => 0.1 * (i + 1));

      // through the handle: re-emitted problem file, then the native solver
      const handle = new TinySOCP();
      cleanups.push(() => handle.dispose());
      handle.setup({
        N: parsed.N, A: parsed.A, B: parsed.B, c: parsed.c,
        Q: parsed.Q, R: parsed.R, q: parsed.q, r: parsed.r,
        bounds: parsed.bounds, socs: parsed.socs, settings: parsed.settings,
      });
      handle.set_x0(x0);
      const info = handle.solve();
      const xMine = handle.get_x(true) as Matrix;
      const uMine = handle.get_u(true) as Matrix;

      // directly: the untouched original file through the CLI
      const scratch = mkdtempSync(join(tmpdir(), "tinysocp-direct-"));
      cleanups.push(() => rmSync(scratch, { recursive: true, force: true }));
      const outPath = join(scratch, "direct.csv");
      const res = runCli(defaultPython(), [
        "solve", "--problem", original, "--x0", x0.map(String).join(","),
        "--out", outPath,
      ]);
      expectOk(res, "direct solve", [0, 2]);
      const m = parsed.B[0]!.length;
      const direct = parseSolveTable(readFileSync(outPath, "utf8"), n, m);

      const statusLine = res.stdout.trim().split(/\r?\n/).pop()!;
      const [statusName, iterStr] = statusLine.split(",");
      expect(info.status).toBe(statusName);
      expect(info.iterations).toBe(Number(iterStr));

      const worst = Math.max(maxAbsDiff(xMine, direct.x), maxAbsDiff(uMine, direct.u));
      expect(worst).toBeLessThanOrEqual(1e-12);

      // the plan has real content: inputs move and states start at x0
      expect(xMine[0]).toEqual(x0);
      expect(uMine.some((row) => row.some((v) => v !== 0))).toBe(true);
    });
  }

  it("adopts a problem file verbatim", () => {
    const original = sharedPath("tracking_linear");
    const parsed = parseProblemFile(readFileSync(original, "utf8"));
    const n = parsed.A.length;
    const m = parsed.B[0]!.length;
    const x0 = Array.from({ length: n }, (_, i) => 0.1 * (i + 1));

    const handle = new TinySOCP();
    cleanups.push(() => handle.dispose());
    handle.setupFromFile(original);
    handle.set_x0(x0);
    handle.solve();

    const scratch = mkdtempSync(join(tmpdir(), "tinysocp-verbatim-"));
    cleanups.push(() => rmSync(scratch, { recursive: true, force: true }));
    const outPath = join(scratch, "direct.csv");
    const res = runCli(defaultPython(), [
      "solve", "--problem", original, "--x0", x0.map(String).join(","),
      "--out", outPath,
    ]);
    expectOk(res, "direct solve", [0, 2]);
    const direct = parseSolveTable(readFileSync(outPath, "utf8"), n, m);
    expect(maxAbsDiff(handle.get_x(true) as Matrix, direct.x)).toBe(0);
    expect(maxAbsDiff(handle.get_u(true) as Matrix, direct.u)).toBe(0);
  });

  it("tracking references pass through unchanged", () => {
    // same file, but drive it through set_xref/set_uref and compare with
    // the CLI given equivalent CSV tables
    const original = sharedPath("di_box");
    const parsed = parseProblemFile(readFileSync(original, "utf8"));
    const n = parsed.A.length;
    const m = parsed.B[0]!.length;
    const N = parsed.N;

    const xref: Matrix = Array.from({ length: N }, (_, k) => [0.5 * Math.sin(0.2 * k), 0.05 * k]);
    const uref: Matrix = Array.from({ length: N - 1 }, (_, k) => [0.01 * (k - 3)]);
    const x0 = [0.3, -0.2];

    const handle = new TinySOCP();
    cleanups.push(() => handle.dispose());
    handle.setup({
      N, A: parsed.A, B: parsed.B, c: parsed.c, Q: parsed.Q, R: parsed.R,
      bounds: parsed.bounds, socs: parsed.socs, settings: parsed.settings,
    });
    handle.set_x0(x0);
    handle.set_xref(xref);
    handle.set_uref(uref);
    handle.solve();
    const mine = handle.get_u(true) as Matrix;

    const scratch = mkdtempSync(join(tmpdir(), "tinysocp-refs-"));
    cleanups.push(() => rmSync(scratch, { recursive: true, force: true }));
    const xrefPath = join(scratch, "xref.csv");
    const urefPath = join(scratch, "uref.csv");
    writeFileSync(xrefPath, xref.map((r) => r.map(String).join(",")).join("\n") + "\n");
    writeFileSync(urefPath, uref.map((r) => r.map(String).join(",")).join("\n") + "\n");
    const outPath = join(scratch, "direct.csv");
    const res = runCli(defaultPython(), [
      "solve", "--problem", original, "--x0", x0.map(String).join(","),
      "--xref", xrefPath, "--uref", urefPath, "--out", outPath,
    ]);
    expectOk(res, "direct solve with refs", [0, 2]);
    const direct = parseSolveTable(readFileSync(outPath, "utf8"), n, m);

    expect(maxAbsDiff(mine, direct.u)).toBeLessThanOrEqual(1e-12);
    // references actually moved the answer
    const plain = new TinySOCP();
    cleanups.push(() => plain.dispose());
    plain.setup({
      N, A: parsed.A, B: parsed.B, c: parsed.c, Q: parsed.Q, R: parsed.R,
      bounds: parsed.bounds, socs: parsed.socs, settings: parsed.settings,
    });
    plain.set_x0(x0);
    plain.solve();
    expect(maxAbsDiff(mine, plain.get_u(true) as Matrix)).toBeGreaterThan(1e-6);
  });
});
