/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_session_free: (a: number, b: number) => void;
export const riccati_convergence: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const session_estimate_mle: (a: number) => [number, number, number];
export const session_gamma_star: (a: number) => [number, number];
export const session_likelihood_profile: (a: number, b: number) => [number, number, number, number];
export const session_m: (a: number) => [number, number];
export const session_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const session_psi: (a: number) => number;
export const session_t: (a: number) => [number, number];
export const session_theta_max: (a: number) => number;
export const session_theta_min: (a: number) => number;
export const session_x: (a: number) => [number, number];
export const session_y: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
