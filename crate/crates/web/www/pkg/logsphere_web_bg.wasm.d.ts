/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_relaxation_free: (a: number, b: number) => void;
export const pyramid_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const relaxation_class_label: (a: number) => [number, number];
export const relaxation_energy: (a: number) => number;
export const relaxation_grad_norm: (a: number) => number;
export const relaxation_iterations: (a: number) => number;
export const relaxation_new: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number];
export const relaxation_points: (a: number) => [number, number];
export const relaxation_step: (a: number, b: number) => [number, number, number];
export const riesz_crossover: (a: number, b: number) => number;
export const riesz_gap_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
