/* tslint:disable */
/* eslint-disable */

/**
 * Gradient descent on S^2 that can be advanced a few iterations per animation frame.
 */
export class Relaxation {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Stationary class once converged (empty before, or when N != 5).
     */
    class_label(): string;
    energy(): number;
    grad_norm(): number;
    iterations(): number;
    /**
     * `start`: random | pyramid | pentagon | bipyramid; `potential`: log, riesz:S, gauss:A, biquad:A,B,C.
     */
    constructor(start: string, n: number, seed: bigint, potential: string);
    /**
     * Current points as [x0, y0, z0, x1, ..].
     */
    points(): Float64Array;
    /**
     * Runs up to `iterations` descent steps; true once converged.
     */
    step(iterations: number): boolean;
}

export function pyramid_curve(k: number, m: number, samples: number): Float64Array;

/**
 * Root of the gap in [lo, hi], or NaN when the bracket has no sign change.
 */
export function riesz_crossover(lo: number, hi: number): number;

export function riesz_gap_curve(from: number, to: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_relaxation_free: (a: number, b: number) => void;
    readonly pyramid_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly relaxation_class_label: (a: number) => [number, number];
    readonly relaxation_energy: (a: number) => number;
    readonly relaxation_grad_norm: (a: number) => number;
    readonly relaxation_iterations: (a: number) => number;
    readonly relaxation_new: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number];
    readonly relaxation_points: (a: number) => [number, number];
    readonly relaxation_step: (a: number, b: number) => [number, number, number];
    readonly riesz_crossover: (a: number, b: number) => number;
    readonly riesz_gap_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
