/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demoparams_free: (a: number, b: number) => void;
export const __wbg_demosolution_free: (a: number, b: number) => void;
export const __wbg_get_demoparams_clusters: (a: number) => number;
export const __wbg_get_demoparams_damping: (a: number) => number;
export const __wbg_get_demoparams_horizon: (a: number) => number;
export const __wbg_get_demoparams_n: (a: number) => number;
export const __wbg_get_demoparams_p: (a: number) => number;
export const __wbg_get_demoparams_steps: (a: number) => number;
export const __wbg_set_demoparams_clusters: (a: number, b: number) => void;
export const __wbg_set_demoparams_damping: (a: number, b: number) => void;
export const __wbg_set_demoparams_horizon: (a: number, b: number) => void;
export const __wbg_set_demoparams_n: (a: number, b: number) => void;
export const __wbg_set_demoparams_p: (a: number, b: number) => void;
export const __wbg_set_demoparams_steps: (a: number, b: number) => void;
export const circle_w1: (a: number, b: number, c: number, d: number) => [number, number, number];
export const demoparams_new: () => number;
export const demoparams_set_drift: (a: number, b: number, c: number) => void;
export const demoparams_set_ell2: (a: number, b: number, c: number) => void;
export const demoparams_set_m0: (a: number, b: number, c: number) => void;
export const demosolution_alpha: (a: number, b: number) => number;
export const demosolution_alpha_variation: (a: number) => number;
export const demosolution_checks_passed: (a: number) => number;
export const demosolution_clusters: (a: number) => number;
export const demosolution_control: (a: number, b: number, c: number) => [number, number];
export const demosolution_converged: (a: number) => number;
export const demosolution_density: (a: number, b: number, c: number) => [number, number];
export const demosolution_iterations: (a: number) => number;
export const demosolution_levels: (a: number) => number;
export const demosolution_n: (a: number) => number;
export const demosolution_particles: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const demosolution_residuals: (a: number) => [number, number];
export const demosolution_time: (a: number, b: number) => number;
export const demosolution_value: (a: number, b: number, c: number) => [number, number];
export const solve_equilibrium: (a: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
