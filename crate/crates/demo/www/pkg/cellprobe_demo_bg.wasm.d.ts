/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_reverserun_free: (a: number, b: number) => void;
export const __wbg_toygan_free: (a: number, b: number) => void;
export const classNames: () => [number, number];
export const imageSide: () => number;
export const phantomRgba: (a: number, b: bigint) => [number, number, number, number];
export const reverseHistogram: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
export const reverserun_analytic: (a: number) => [number, number];
export const reverserun_edges: (a: number) => [number, number];
export const reverserun_empirical: (a: number) => [number, number];
export const reverserun_mean: (a: number) => number;
export const reverserun_variance: (a: number) => number;
export const toygan_conditioning: (a: number, b: number, c: bigint) => [number, number, number];
export const toygan_data: (a: number) => [number, number];
export const toygan_epochs: (a: number) => number;
export const toygan_labels: (a: number) => [number, number];
export const toygan_new: (a: bigint) => [number, number, number];
export const toygan_sample: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const toygan_train: (a: number, b: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
