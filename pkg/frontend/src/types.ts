/**
 * Plain data shapes shared across the frontend.
 *
 * These mirror the native problem model field for field. The frontend
 * never interprets the numbers; it carries them across the process
 * boundary intact.
 */

export type Matrix = number[][];
export type Vector = number[];

/** Row-major buffer with an explicit shape, the one non-nested input form. */
export interface ShapedBuffer {
  shape: [number, number];
  data: ArrayLike<number>;
}

export type MatrixLike = Matrix | ShapedBuffer;
export type VectorLike = ArrayLike<number>;

/** Contiguous slice of a state or input vector living in a second-order cone. */
export interface ConeSpec {
  start: number;
  len: number;
}

export interface Bounds {
  x_min?: Vector;
  x_max?: Vector;
  u_min?: Vector;
  u_max?: Vector;
}

export interface Socs {
  state?: ConeSpec[];
  input?: ConeSpec[];
}

export interface SettingsSpec {
  rho?: number;
  abs_pri_tol?: number;
  abs_dua_tol?: number;
  max_iter?: number;
  check_termination?: number;
}

export interface ProblemData {
  N: number;
  A: Matrix;
  B: Matrix;
  c: Vector | null;
  Q: Matrix;
  R: Matrix;
  q?: Matrix | null;
  r?: Matrix | null;
  bounds: Bounds | null;
  socs: Socs | null;
  settings: SettingsSpec | null;
}

export type SolveStatus = "Solved" | "MaxIters";

export interface SolveInfo {
  status: SolveStatus;
  iterations: number;
  priRes: number;
  duaRes: number;
}

/** Error raised on the native side, carried across with its class name. */
export class NativeError extends Error {
  constructor(name: string, message: string) {
    super(message);
    this.name = name;
  }
}

/** A method was called out of order on a handle. */
export class LifecycleError extends Error {
  override name = "LifecycleError";
}
