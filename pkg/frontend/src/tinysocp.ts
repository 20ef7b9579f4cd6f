/**
 * A thin handle over the native solver's command-line interface.
 *
 * One handle owns one scratch workspace (a temp directory holding the
 * problem file and solve outputs). All numeric work happens in the
 * native process; this class only marshals arguments, enforces call
 * order, and maps native error names one to one.
 */

import { mkdtempSync, rmSync, writeFileSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { parseSolveTable } from "./csv.js";
import { emitProblemFile, parseProblemFile } from "./problemfile.js";
import { defaultPython, expectOk, runCli } from "./runner.js";
import { LifecycleError, NativeError } from "./types.js";
import type {
  Bounds, Matrix, MatrixLike, ProblemData, SettingsSpec, Socs,
  SolveInfo, SolveStatus, Vector, VectorLike,
} from "./types.js";

export interface SetupSpec {
  N: number;
  A: MatrixLike;
  B: MatrixLike;
  c?: VectorLike | null;
  Q: MatrixLike;
  R: MatrixLike;
  /** Per-knot linear state cost, N rows by n; omit for a pure regulator. */
  q?: MatrixLike | null;
  /** Per-knot linear input cost, N-1 rows by m. */
  r?: MatrixLike | null;
  bounds?: Bounds | null;
  socs?: Socs | null;
  settings?: SettingsSpec | null;
}

export interface TinySOCPOptions {
  python?: string;
}

function toMatrix(v: MatrixLike, where: string): Matrix {
  if (Array.isArray(v)) {
    return v.map((row, i) => {
      if (!Array.isArray(row)) {
        throw new NativeError("ValidationError", `${where}[${i}]: expected a row`);
      }
      return row.map(Number);
    });
  }
  const [rows, cols] = v.shape;
  const out: Matrix = [];
  for (let i = 0; i < rows; i++) {
    const row: number[] = [];
    for (let j = 0; j < cols; j++) row.push(Number(v.data[i * cols + j]));
    out.push(row);
  }
  return out;
}

function toVector(v: VectorLike): Vector {
  return Array.from(v, Number);
}

function fmt(v: number, where: string): string {
  if (!Number.isFinite(v)) {
    throw new NativeError("ValidationError", `${where}: entries must be finite`);
  }
  // -0 stringifies as "0"; keep the sign bit across the boundary
  return Object.is(v, -0) ? "-0" : String(v);
}

function copyMatrix(M: Matrix): Matrix {
  return M.map((row) => row.slice());
}

export class TinySOCP {
  private readonly python: string;
  private dir: string | null = null;
  private dims: { n: number; m: number; N: number } | null = null;
  private x0: Vector | null = null;
  private xref: Matrix | null = null;
  private uref: Matrix | null = null;
  private plan: { x: Matrix; u: Matrix } | null = null;
  private info: SolveInfo | null = null;

  constructor(opts: TinySOCPOptions = {}) {
    this.python = opts.python ?? defaultPython();
  }

  /**
   * Validate the problem natively and build its solver cache.
   *
   * The data is marshalled once, written to the handle's problem file,
   * and checked by running native code generation into a throwaway
   * directory; that path exercises validation plus the cache factory
   * without this layer holding any solver math.
   */
  setup(spec: SetupSpec): void {
    const problem: ProblemData = {
      N: spec.N,
      A: toMatrix(spec.A, "A"),
      B: toMatrix(spec.B, "B"),
      c: spec.c == null ? null : toVector(spec.c),
      Q: toMatrix(spec.Q, "Q"),
      R: toMatrix(spec.R, "R"),
      q: spec.q == null ? null : toMatrix(spec.q, "q"),
      r: spec.r == null ? null : toMatrix(spec.r, "r"),
      bounds: spec.bounds ?? null,
      socs: spec.socs ?? null,
      settings: spec.settings ?? null,
    };
    this.install(emitProblemFile(problem), problem.A.length, problem.B[0]!.length, problem.N);
  }

  /**
   * Adopt a problem file byte for byte instead of assembling one.
   * The text is parsed only to learn the dimensions; the native side
   * reads the original bytes.
   */
  setupFromFile(path: string): void {
    const text = readFileSync(path, "utf8");
    const p = parseProblemFile(text);
    this.install(text, p.A.length, p.B[0]!.length, p.N);
  }

  private install(text: string, n: number, m: number, N: number): void {
    if (this.dir === null) {
      this.dir = mkdtempSync(join(tmpdir(), "tinysocp-"));
    }
    writeFileSync(this.problemPath(), text);
    const res = runCli(this.python, [
      "codegen",
      "--problem", this.problemPath(),
      "--out", join(this.dir, "setup_check"),
      "--precision", "f32",
    ]);
    expectOk(res, "native setup check");
    this.dims = { n, m, N };
    this.x0 = null;
    this.xref = null;
    this.uref = null;
    this.plan = null;
    this.info = null;
  }

  set_x0(x0: VectorLike): void {
    const d = this.requireSetup("set_x0");
    const v = toVector(x0);
    if (v.length !== d.n) {
      throw new NativeError("ValidationError", `set_x0: expected ${d.n} entries, got ${v.length}`);
    }
    this.x0 = v;
  }

  set_xref(xref: MatrixLike): void {
    const d = this.requireSetup("set_xref");
    const M = toMatrix(xref, "xref");
    this.checkTable(M, d.N, d.n, "set_xref");
    this.xref = M;
  }

  set_uref(uref: MatrixLike): void {
    const d = this.requireSetup("set_uref");
    const M = toMatrix(uref, "uref");
    this.checkTable(M, d.N - 1, d.m, "set_uref");
    this.uref = M;
  }

  /** Run the native solver on the stored problem, start state, and references. */
  solve(): SolveInfo {
    const d = this.requireSetup("solve");
    if (this.x0 === null) {
      throw new LifecycleError("solve() needs a start state; call set_x0() first");
    }
    const dir = this.dir!;
    const args = [
      "solve",
      "--problem", this.problemPath(),
      "--x0", this.x0.map((v, i) => fmt(v, `x0[${i}]`)).join(","),
      "--out", join(dir, "out.csv"),
    ];
    if (this.xref !== null) {
      const path = join(dir, "xref.csv");
      writeFileSync(path, this.refCsv(this.xref));
      args.push("--xref", path);
    }
    if (this.uref !== null) {
      const path = join(dir, "uref.csv");
      writeFileSync(path, this.refCsv(this.uref));
      args.push("--uref", path);
    }
    const res = runCli(this.python, args);
    expectOk(res, "native solve", [0, 2]);

    let status: SolveStatus | null = null;
    let iterations = 0;
    let priRes = NaN;
    let duaRes = NaN;
    for (const line of res.stdout.split(/\r?\n/)) {
      const match = /^(Solved|MaxIters),(\d+),([^,]+),([^,]+)$/.exec(line.trim());
      if (match) {
        status = match[1] as SolveStatus;
        iterations = Number(match[2]);
        priRes = Number(match[3]);
        duaRes = Number(match[4]);
      }
    }
    if (status === null) {
      throw new NativeError("RunnerError", `no status line in solver output: ${res.stdout.trim()}`);
    }
    this.plan = parseSolveTable(readFileSync(join(dir, "out.csv"), "utf8"), d.n, d.m);
    this.info = { status, iterations, priRes, duaRes };
    return this.info;
  }

  /** First planned input, or the whole input plan with `full = true`. */
  get_u(full = false): Vector | Matrix {
    const plan = this.requireSolve("get_u");
    return full ? copyMatrix(plan.u) : plan.u[0]!.slice();
  }

  /** One-step state prediction, or the whole state plan with `full = true`. */
  get_x(full = false): Vector | Matrix {
    const plan = this.requireSolve("get_x");
    return full ? copyMatrix(plan.x) : plan.x[1]!.slice();
  }

  lastInfo(): SolveInfo | null {
    return this.info;
  }

  /** Emit the static-memory solver sources for the stored problem. */
  codegen(outputDir: string, precision: "f32" | "f64" = "f32"): void {
    this.requireSetup("codegen");
    const res = runCli(this.python, [
      "codegen",
      "--problem", this.problemPath(),
      "--out", outputDir,
      "--precision", precision,
    ]);
    expectOk(res, "native codegen");
  }

  /** Remove the handle's scratch directory. The handle can be set up again. */
  dispose(): void {
    if (this.dir !== null) {
      rmSync(this.dir, { recursive: true, force: true });
      this.dir = null;
    }
    this.dims = null;
    this.x0 = null;
    this.xref = null;
    this.uref = null;
    this.plan = null;
    this.info = null;
  }

  private problemPath(): string {
    return join(this.dir!, "problem.json");
  }

  private requireSetup(what: string): { n: number; m: number; N: number } {
    if (this.dims === null || this.dir === null) {
      throw new LifecycleError(`${what}() called before setup()`);
    }
    return this.dims;
  }

  private requireSolve(what: string): { x: Matrix; u: Matrix } {
    this.requireSetup(what);
    if (this.plan === null) {
      throw new LifecycleError(`${what}() called before solve()`);
    }
    return this.plan;
  }

  private checkTable(M: Matrix, rows: number, cols: number, what: string): void {
    if (M.length !== rows || M.some((row) => row.length !== cols)) {
      throw new NativeError(
        "ValidationError",
        `${what}: expected ${rows}x${cols}, got ${M.length}x${M[0]?.length ?? 0}`,
      );
    }
  }

  private refCsv(M: Matrix): string {
    return M.map((row, i) => row.map((v) => fmt(v, `row ${i}`)).join(",")).join("\n") + "\n";
  }
}
