/* tslint:disable */
/* eslint-disable */

/**
 * Errors and fitted values from [`Demo::compare`].
 */
export class Comparison {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Completed monitor values of one feature.
     */
    imputed(method: string, feature: number): Float64Array;
    /**
     * Spatial predictions at the new locations.
     */
    predicted(feature: number): Float64Array;
    lambda_lrmc: number;
    lambda_smc: number;
    mse_lrmc: number;
    mse_new_baseline: number;
    mse_new_smc: number;
    mse_smc: number;
}

/**
 * One simulated replicate plus the spatial design built on its monitors.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Fits both methods at the preset's target rank.
     */
    compare(): Comparison;
    /**
     * Grid coordinates as `[x0, y0, x1, y1, …]`, monitors first.
     */
    coords(): Float64Array;
    /**
     * Warm-started fits down a geometric λ grid from σ₁ to `1e-2·σ₁`.
     * Returns `[λ, rank, missing-entry MSE]` triples, largest λ first.
     */
    lambda_path(method: string, points: number): Float64Array;
    /**
     * `preset` is e.g. `toy-C`; the seed replaces the preset's data seed.
     */
    constructor(preset_name: string, mcar: number, seed: number);
    /**
     * Monitor values of one feature with hidden cells as NaN.
     */
    observed(feature: number): Float64Array;
    /**
     * True values of one feature at every location, monitors first.
     */
    truth(feature: number): Float64Array;
    readonly features: number;
    readonly grid_side: number;
    readonly missing_fraction: number;
    readonly n_monitor: number;
    readonly n_new: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_comparison_free: (a: number, b: number) => void;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_get_comparison_lambda_lrmc: (a: number) => number;
    readonly __wbg_get_comparison_lambda_smc: (a: number) => number;
    readonly __wbg_get_comparison_mse_lrmc: (a: number) => number;
    readonly __wbg_get_comparison_mse_new_baseline: (a: number) => number;
    readonly __wbg_get_comparison_mse_new_smc: (a: number) => number;
    readonly __wbg_get_comparison_mse_smc: (a: number) => number;
    readonly __wbg_set_comparison_lambda_lrmc: (a: number, b: number) => void;
    readonly __wbg_set_comparison_lambda_smc: (a: number, b: number) => void;
    readonly __wbg_set_comparison_mse_lrmc: (a: number, b: number) => void;
    readonly __wbg_set_comparison_mse_new_baseline: (a: number, b: number) => void;
    readonly __wbg_set_comparison_mse_new_smc: (a: number, b: number) => void;
    readonly __wbg_set_comparison_mse_smc: (a: number, b: number) => void;
    readonly comparison_imputed: (a: number, b: number, c: number, d: number) => [number, number];
    readonly comparison_predicted: (a: number, b: number) => [number, number];
    readonly demo_compare: (a: number) => [number, number, number];
    readonly demo_coords: (a: number) => [number, number];
    readonly demo_features: (a: number) => number;
    readonly demo_grid_side: (a: number) => number;
    readonly demo_lambda_path: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_missing_fraction: (a: number) => number;
    readonly demo_n_monitor: (a: number) => number;
    readonly demo_n_new: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_observed: (a: number, b: number) => [number, number];
    readonly demo_truth: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
