export type {
  Bounds, ConeSpec, Matrix, MatrixLike, ProblemData, SettingsSpec, ShapedBuffer,
  Socs, SolveInfo, SolveStatus, Vector, VectorLike,
} from "./types.js";
export { LifecycleError, NativeError } from "./types.js";
export { emitProblemFile, parseProblemFile, SCHEMA } from "./problemfile.js";
export type { SolveTable } from "./csv.js";
export { parseSolveTable } from "./csv.js";
export type { CliResult } from "./runner.js";
export { defaultPython, expectOk, nativeErrorFrom, runCli } from "./runner.js";
export type { SetupSpec, TinySOCPOptions } from "./tinysocp.js";
export { TinySOCP } from "./tinysocp.js";
