/* tslint:disable */
/* eslint-disable */

/**
 * One simulated path with its filter at the true parameter.
 */
export class Session {
    free(): void;
    [Symbol.dispose](): void;
    estimate_mle(): number;
    gamma_star(): Float64Array;
    /**
     * Interleaved `[θ_0, logL_0, θ_1, logL_1, ...]` on an even lattice.
     */
    likelihood_profile(n_points: number): Float64Array;
    m(): Float64Array;
    /**
     * `family` is one of CONST, LINEAR_F, EXP_A, RECIPROCAL, SQRT_B.
     */
    constructor(family: string, y0: number, theta: number, eps: number, delta: number, n_steps: number, seed: number);
    psi(): number;
    t(): Float64Array;
    theta_max(): number;
    theta_min(): number;
    x(): Float64Array;
    y(): Float64Array;
}

export function riccati_convergence(family: string, theta: number, delta: number, t0: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly riccati_convergence: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly session_estimate_mle: (a: number) => [number, number, number];
    readonly session_gamma_star: (a: number) => [number, number];
    readonly session_likelihood_profile: (a: number, b: number) => [number, number, number, number];
    readonly session_m: (a: number) => [number, number];
    readonly session_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly session_psi: (a: number) => number;
    readonly session_t: (a: number) => [number, number];
    readonly session_theta_max: (a: number) => number;
    readonly session_theta_min: (a: number) => number;
    readonly session_x: (a: number) => [number, number];
    readonly session_y: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
