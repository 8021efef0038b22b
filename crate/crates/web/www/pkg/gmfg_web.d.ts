/* tslint:disable */
/* eslint-disable */

/**
 * Inputs of the demo form.
 */
export class DemoParams {
    free(): void;
    [Symbol.dispose](): void;
    constructor();
    set drift(value: string);
    set ell2(value: string);
    set m0(value: string);
    clusters: number;
    damping: number;
    horizon: number;
    n: number;
    /**
     * Constant graphon value; negative selects uniform attachment.
     */
    p: number;
    steps: number;
}

/**
 * A solved equilibrium kept on the Rust side; slices are copied out on
 * request.
 */
export class DemoSolution {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    alpha(j: number): number;
    alpha_variation(): number;
    checks_passed(): boolean;
    clusters(): number;
    control(k: number, j: number): Float64Array;
    converged(): boolean;
    density(k: number, j: number): Float64Array;
    iterations(): number;
    levels(): number;
    n(): number;
    /**
     * Particle histogram (as a density) of cluster `j` at level `k`,
     * simulated with the equilibrium drift.
     */
    particles(j: number, k: number, n_paths: number, seed: bigint): Float64Array;
    residuals(): Float64Array;
    time(k: number): number;
    value(k: number, j: number): Float64Array;
}

/**
 * `W1` on the circle between two nonnegative node densities of equal
 * length, each normalised to unit mass.
 */
export function circle_w1(a: Float64Array, b: Float64Array): number;

export function solve_equilibrium(params: DemoParams): DemoSolution;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demoparams_free: (a: number, b: number) => void;
    readonly __wbg_demosolution_free: (a: number, b: number) => void;
    readonly __wbg_get_demoparams_clusters: (a: number) => number;
    readonly __wbg_get_demoparams_damping: (a: number) => number;
    readonly __wbg_get_demoparams_horizon: (a: number) => number;
    readonly __wbg_get_demoparams_n: (a: number) => number;
    readonly __wbg_get_demoparams_p: (a: number) => number;
    readonly __wbg_get_demoparams_steps: (a: number) => number;
    readonly __wbg_set_demoparams_clusters: (a: number, b: number) => void;
    readonly __wbg_set_demoparams_damping: (a: number, b: number) => void;
    readonly __wbg_set_demoparams_horizon: (a: number, b: number) => void;
    readonly __wbg_set_demoparams_n: (a: number, b: number) => void;
    readonly __wbg_set_demoparams_p: (a: number, b: number) => void;
    readonly __wbg_set_demoparams_steps: (a: number, b: number) => void;
    readonly circle_w1: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demoparams_new: () => number;
    readonly demoparams_set_drift: (a: number, b: number, c: number) => void;
    readonly demoparams_set_ell2: (a: number, b: number, c: number) => void;
    readonly demoparams_set_m0: (a: number, b: number, c: number) => void;
    readonly demosolution_alpha: (a: number, b: number) => number;
    readonly demosolution_alpha_variation: (a: number) => number;
    readonly demosolution_checks_passed: (a: number) => number;
    readonly demosolution_clusters: (a: number) => number;
    readonly demosolution_control: (a: number, b: number, c: number) => [number, number];
    readonly demosolution_converged: (a: number) => number;
    readonly demosolution_density: (a: number, b: number, c: number) => [number, number];
    readonly demosolution_iterations: (a: number) => number;
    readonly demosolution_levels: (a: number) => number;
    readonly demosolution_n: (a: number) => number;
    readonly demosolution_particles: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly demosolution_residuals: (a: number) => [number, number];
    readonly demosolution_time: (a: number, b: number) => number;
    readonly demosolution_value: (a: number, b: number, c: number) => [number, number];
    readonly solve_equilibrium: (a: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
