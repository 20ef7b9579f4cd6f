/**
 * Parse the trajectory table the native `solve` command writes.
 *
 * Layout: a header row `k,x0..x{n-1},u0..u{m-1}`, then one row per knot.
 * The terminal row has no input, so its u cells are spelled "nan".
 * Cells are shortest round-trip decimals; parseFloat recovers the exact
 * float64 the solver held.
 */

import { NativeError } from "./types.js";
import type { Matrix } from "./types.js";

export interface SolveTable {
  x: Matrix; // N rows by n
  u: Matrix; // N-1 rows by m, terminal nan row dropped
}

function fail(msg: string): never {
  throw new NativeError("ProblemFileError", `solve table: ${msg}`);
}

function cell(tok: string, row: number): number {
  const v = Number(tok);
  if (Number.isNaN(v) && tok.trim().toLowerCase() !== "nan") {
    fail(`row ${row}: bad numeric cell ${JSON.stringify(tok)}`);
  }
  return v;
}

export function parseSolveTable(text: string, n: number, m: number): SolveTable {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length < 2) fail("missing header or rows");
  const header = lines[0]!.split(",");
  if (header[0] !== "k" || header.length !== 1 + n + m) {
    fail(`header ${JSON.stringify(lines[0])} does not match n=${n}, m=${m}`);
  }

  const N = lines.length - 1;
  const x: Matrix = [];
  const u: Matrix = [];
  for (let k = 0; k < N; k++) {
    const toks = lines[1 + k]!.split(",");
    if (toks.length !== 1 + n + m) {
      fail(`row ${k}: expected ${1 + n + m} cells, got ${toks.length}`);
    }
    if (Number(toks[0]) !== k) fail(`row ${k}: knot index ${JSON.stringify(toks[0])}`);
    x.push(toks.slice(1, 1 + n).map((t) => cell(t, k)));
    if (k < N - 1) {
      u.push(toks.slice(1 + n).map((t) => cell(t, k)));
    }
  }
  return { x, u };
}
