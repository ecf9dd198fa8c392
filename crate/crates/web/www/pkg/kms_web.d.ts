/* tslint:disable */
/* eslint-disable */

/**
 * Unit-section steel rod, heat flux at the left end, convective lateral patches on
 * the left and right thirds.
 */
export class RodDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `[ω_0..ω_n, err_0..err_n, est_0..est_n]` for the heat-flux input read at the
     * heated end; undefined errors come back as NaN.
     */
    error_curve(h_left: number, h_right: number, lo: number, hi: number, points: number): Float64Array;
    mu(): number;
    n(): number;
    constructor(num_elements: number, epsilon: number, n_me: number);
    omega_m(): number;
    r(): number;
    /**
     * Decay rates `|α|` of the `k` slowest nonzero modes: `[full_0..full_k, reduced_0..reduced_k]`.
     */
    spectrum(h_left: number, h_right: number, k: number): Float64Array;
}

/**
 * Cutoff `ω_m` for an error budget.
 */
export function cutoff(epsilon: number, omega_max: number, s_e: number): number;

/**
 * Log grid followed by the estimator on it: `[ω_0..ω_n, e_0..e_n]`.
 */
export function estimator_curve(s_e: number, omega_m: number, lo: number, hi: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_roddemo_free: (a: number, b: number) => void;
    readonly cutoff: (a: number, b: number, c: number) => [number, number, number];
    readonly estimator_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly roddemo_error_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly roddemo_mu: (a: number) => number;
    readonly roddemo_n: (a: number) => number;
    readonly roddemo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly roddemo_omega_m: (a: number) => number;
    readonly roddemo_r: (a: number) => number;
    readonly roddemo_spectrum: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
