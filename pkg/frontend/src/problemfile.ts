/**
 * Emit and parse the versioned JSON problem format.
 *
 * The native library is the authority on this format; this module only
 * marshals. Infinities are spelled "inf" / "-inf" because JSON has no
 * literal for them, and numbers are emitted through JSON.stringify,
 * whose shortest round-trip decimals reparse to the same float64 bit
 * pattern on the native side.
 */

import type { Bounds, ConeSpec, Matrix, ProblemData, SettingsSpec, Socs, Vector } from "./types.js";
import { NativeError } from "./types.js";

export const SCHEMA = "tinysocp-problem-v1";

type BoundCell = number | "inf" | "-inf";

function fail(msg: string): never {
  // marshalling failures use the same error name the native parser would
  throw new NativeError("ProblemFileError", msg);
}

function encodeBound(v: number): BoundCell {
  if (v === Infinity) return "inf";
  if (v === -Infinity) return "-inf";
  if (Number.isNaN(v)) fail("bounds: nan is not a valid bound");
  return v;
}

function decodeBound(v: unknown, where: string): number {
  if (v === "inf") return Infinity;
  if (v === "-inf") return -Infinity;
  if (typeof v === "number") return v;
  fail(`${where}: expected a number or "inf"/"-inf", got ${JSON.stringify(v)}`);
}

function checkMatrix(M: Matrix, rows: number, cols: number, where: string): void {
  if (M.length !== rows) fail(`${where}: expected ${rows} rows, got ${M.length}`);
  for (const [i, row] of M.entries()) {
    if (row.length !== cols) {
      fail(`${where}[${i}]: expected ${cols} entries, got ${row.length}`);
    }
    for (const v of row) {
      if (typeof v !== "number") fail(`${where}[${i}]: non-numeric entry`);
    }
  }
}

/** Serialize a problem to the exact on-disk format the native CLI reads. */
export function emitProblemFile(p: ProblemData): string {
  const n = p.A.length;
  if (n < 1) fail("dynamics.A: empty matrix");
  const m = (p.B[0] ?? []).length;
  if (m < 1) fail("dynamics.B: empty matrix");
  if (p.N < 2) fail("dims.N: need at least two knot points");
  checkMatrix(p.A, n, n, "dynamics.A");
  checkMatrix(p.B, n, m, "dynamics.B");
  checkMatrix(p.Q, n, n, "cost.Q");
  checkMatrix(p.R, m, m, "cost.R");
  if (p.c !== null && p.c.length !== n) {
    fail(`dynamics.c: expected ${n} entries, got ${p.c.length}`);
  }

  const doc: Record<string, unknown> = {
    schema: SCHEMA,
    dims: { n, m, N: p.N },
    dynamics: p.c === null ? { A: p.A, B: p.B } : { A: p.A, B: p.B, c: p.c },
  };

  const cost: Record<string, unknown> = { Q: p.Q, R: p.R };
  if (p.q != null) {
    checkMatrix(p.q, p.N, n, "cost.q");
    cost.q = p.q;
  }
  if (p.r != null) {
    checkMatrix(p.r, p.N - 1, m, "cost.r");
    cost.r = p.r;
  }
  doc.cost = cost;

  const constraints: Record<string, unknown> = {};
  const b = p.bounds ?? {};
  const sides: Array<[keyof Bounds, number]> = [
    ["x_min", n], ["x_max", n], ["u_min", m], ["u_max", m],
  ];
  for (const [key, dim] of sides) {
    const vec = b[key];
    if (vec === undefined) continue;
    if (vec.length !== dim) fail(`constraints.${key}: expected ${dim} entries, got ${vec.length}`);
    constraints[key] = vec.map(encodeBound);
  }
  const socs = p.socs ?? {};
  const coneKinds: Array<[keyof Socs, string]> = [
    ["state", "state_cones"], ["input", "input_cones"],
  ];
  for (const [kind, key] of coneKinds) {
    const cones = socs[kind];
    if (cones === undefined || cones.length === 0) continue;
    constraints[key] = cones.map((cone, i) => {
      if (!Number.isInteger(cone.start) || !Number.isInteger(cone.len)) {
        fail(`constraints.${key}[${i}]: start/len must be integers`);
      }
      return { start: cone.start, len: cone.len };
    });
  }
  doc.constraints = constraints;

  if (p.settings !== null) {
    const st: Record<string, number> = {};
    const keys: Array<keyof SettingsSpec> = [
      "rho", "abs_pri_tol", "abs_dua_tol", "max_iter", "check_termination",
    ];
    for (const key of keys) {
      const v = p.settings[key];
      if (v !== undefined) st[key] = v;
    }
    doc.settings = st;
  }

  return JSON.stringify(doc, null, 2) + "\n";
}

function asRecord(v: unknown, where: string): Record<string, unknown> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    fail(`${where}: expected an object`);
  }
  return v as Record<string, unknown>;
}

function numMatrix(v: unknown, where: string): Matrix {
  if (!Array.isArray(v)) fail(`${where}: expected a matrix`);
  return v.map((row, i) => {
    if (!Array.isArray(row)) fail(`${where}[${i}]: expected a row`);
    return row.map((cell) => {
      if (typeof cell !== "number") fail(`${where}[${i}]: non-numeric entry`);
      return cell;
    });
  });
}

function numVector(v: unknown, where: string): Vector {
  if (!Array.isArray(v)) fail(`${where}: expected a vector`);
  return v.map((cell) => {
    if (typeof cell !== "number") fail(`${where}: non-numeric entry`);
    return cell;
  });
}

function boundVector(v: unknown, where: string): Vector {
  if (!Array.isArray(v)) fail(`${where}: expected a vector`);
  return v.map((cell, i) => decodeBound(cell, `${where}[${i}]`));
}

function coneList(v: unknown, where: string): ConeSpec[] {
  if (!Array.isArray(v)) fail(`${where}: expected a list`);
  return v.map((cell, i) => {
    const rec = asRecord(cell, `${where}[${i}]`);
    const start = rec.start;
    const len = rec.len;
    if (typeof start !== "number" || typeof len !== "number") {
      fail(`${where}[${i}]: start/len must be numbers`);
    }
    return { start, len };
  });
}

/** Parse a problem file produced by either side back into ProblemData. */
export function parseProblemFile(text: string): ProblemData {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    fail(`not valid JSON: ${(e as Error).message}`);
  }
  const doc = asRecord(raw, "top-level");
  if (doc.schema !== undefined && doc.schema !== SCHEMA) {
    fail(`schema: expected "${SCHEMA}", got ${JSON.stringify(doc.schema)}`);
  }
  const dims = asRecord(doc.dims, "dims");
  const N = dims.N;
  if (typeof N !== "number" || !Number.isInteger(N)) fail("dims.N: expected an integer");

  const dyn = asRecord(doc.dynamics, "dynamics");
  const cost = asRecord(doc.cost, "cost");
  const con = doc.constraints === undefined ? {} : asRecord(doc.constraints, "constraints");

  const bounds: Bounds = {};
  for (const key of ["x_min", "x_max", "u_min", "u_max"] as const) {
    if (con[key] !== undefined) bounds[key] = boundVector(con[key], `constraints.${key}`);
  }
  const socs: Socs = {};
  if (con.state_cones !== undefined) socs.state = coneList(con.state_cones, "constraints.state_cones");
  if (con.input_cones !== undefined) socs.input = coneList(con.input_cones, "constraints.input_cones");

  let settings: SettingsSpec | null = null;
  if (doc.settings !== undefined) {
    const st = asRecord(doc.settings, "settings");
    settings = {};
    for (const key of ["rho", "abs_pri_tol", "abs_dua_tol", "max_iter", "check_termination"] as const) {
      const v = st[key];
      if (v === undefined) continue;
      if (typeof v !== "number") fail(`settings.${key}: expected a number`);
      settings[key] = v;
    }
  }

  return {
    N,
    A: numMatrix(dyn.A, "dynamics.A"),
    B: numMatrix(dyn.B, "dynamics.B"),
    c: dyn.c === undefined ? null : numVector(dyn.c, "dynamics.c"),
    Q: numMatrix(cost.Q, "cost.Q"),
    R: numMatrix(cost.R, "cost.R"),
    q: cost.q === undefined ? null : numMatrix(cost.q, "cost.q"),
    r: cost.r === undefined ? null : numMatrix(cost.r, "cost.r"),
    bounds: Object.keys(bounds).length > 0 ? bounds : null,
    socs: Object.keys(socs).length > 0 ? socs : null,
    settings,
  };
}
