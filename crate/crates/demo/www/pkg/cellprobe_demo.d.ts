/* tslint:disable */
/* eslint-disable */

/**
 * Reverse-diffusion samples of `N(mean, variance)` drawn with the exact
 * noise predictor, binned next to the target density.
 */
export class ReverseRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Target density at each bin centre.
     */
    analytic(): Float64Array;
    /**
     * `bins + 1` bin edges spanning mean ± 4σ.
     */
    edges(): Float64Array;
    /**
     * Empirical density per bin.
     */
    empirical(): Float64Array;
    readonly mean: number;
    readonly variance: number;
}

/**
 * A conditional GAN on two Gaussian blobs, trained a few epochs at a time.
 */
export class ToyGan {
    free(): void;
    [Symbol.dispose](): void;
    conditioning(count: number, seed: bigint): number;
    /**
     * Real training points, flattened; classes are in `labels()`.
     */
    data(): Float64Array;
    labels(): Uint32Array;
    constructor(seed: bigint);
    sample(_class: number, count: number, seed: bigint): Float64Array;
    train(epochs: number): number;
    readonly epochs: number;
}

export function classNames(): string[];

export function imageSide(): number;

export function phantomRgba(_class: number, seed: bigint): Uint8Array;

export function reverseHistogram(mean: number, variance: number, steps: number, samples: number, bins: number, seed: bigint): ReverseRun;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_reverserun_free: (a: number, b: number) => void;
    readonly __wbg_toygan_free: (a: number, b: number) => void;
    readonly classNames: () => [number, number];
    readonly imageSide: () => number;
    readonly phantomRgba: (a: number, b: bigint) => [number, number, number, number];
    readonly reverseHistogram: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly reverserun_analytic: (a: number) => [number, number];
    readonly reverserun_edges: (a: number) => [number, number];
    readonly reverserun_empirical: (a: number) => [number, number];
    readonly reverserun_mean: (a: number) => number;
    readonly reverserun_variance: (a: number) => number;
    readonly toygan_conditioning: (a: number, b: number, c: bigint) => [number, number, number];
    readonly toygan_data: (a: number) => [number, number];
    readonly toygan_epochs: (a: number) => number;
    readonly toygan_labels: (a: number) => [number, number];
    readonly toygan_new: (a: bigint) => [number, number, number];
    readonly toygan_sample: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly toygan_train: (a: number, b: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
