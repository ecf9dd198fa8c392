/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_roddemo_free: (a: number, b: number) => void;
export const cutoff: (a: number, b: number, c: number) => [number, number, number];
export const estimator_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const roddemo_error_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const roddemo_mu: (a: number) => number;
export const roddemo_n: (a: number) => number;
export const roddemo_new: (a: number, b: number, c: number) => [number, number, number];
export const roddemo_omega_m: (a: number) => number;
export const roddemo_r: (a: number) => number;
export const roddemo_spectrum: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
