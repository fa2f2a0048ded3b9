/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_comparison_free: (a: number, b: number) => void;
export const __wbg_demo_free: (a: number, b: number) => void;
export const __wbg_get_comparison_lambda_lrmc: (a: number) => number;
export const __wbg_get_comparison_lambda_smc: (a: number) => number;
export const __wbg_get_comparison_mse_lrmc: (a: number) => number;
export const __wbg_get_comparison_mse_new_baseline: (a: number) => number;
export const __wbg_get_comparison_mse_new_smc: (a: number) => number;
export const __wbg_get_comparison_mse_smc: (a: number) => number;
export const __wbg_set_comparison_lambda_lrmc: (a: number, b: number) => void;
export const __wbg_set_comparison_lambda_smc: (a: number, b: number) => void;
export const __wbg_set_comparison_mse_lrmc: (a: number, b: number) => void;
export const __wbg_set_comparison_mse_new_baseline: (a: number, b: number) => void;
export const __wbg_set_comparison_mse_new_smc: (a: number, b: number) => void;
export const __wbg_set_comparison_mse_smc: (a: number, b: number) => void;
export const comparison_imputed: (a: number, b: number, c: number, d: number) => [number, number];
export const comparison_predicted: (a: number, b: number) => [number, number];
export const demo_compare: (a: number) => [number, number, number];
export const demo_coords: (a: number) => [number, number];
export const demo_features: (a: number) => number;
export const demo_grid_side: (a: number) => number;
export const demo_lambda_path: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_missing_fraction: (a: number) => number;
export const demo_n_monitor: (a: number) => number;
export const demo_n_new: (a: number) => number;
export const demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const demo_observed: (a: number, b: number) => [number, number];
export const demo_truth: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
