/* tslint:disable */
/* eslint-disable */

export class DemoScene {
    free(): void;
    [Symbol.dispose](): void;
    circle_radius(): number;
    human_radius(): number;
    /**
     * Largest window usable from anchor `t`.
     */
    max_window(t: number): number;
    n_frames(): number;
    n_humans(): number;
    constructor(n_humans: number, seed: number);
    /**
     * 1 where a person's link is blocked at frame `t`.
     */
    nlos(t: number): Uint8Array;
    /**
     * Interleaved [x0, y0, x1, y1, ...] at frame `t`.
     */
    positions(t: number): Float64Array;
    /**
     * Predicted first blocked step (0 = clear) per person over the next `w`
     * frames, using boxes fitted to the people at `t` and their true future
     * positions as the forecast.
     */
    predict(t: number, w: number, obb: boolean): Uint32Array;
    /**
     * Ground-truth window labels (1 = blocked somewhere in the next `w` frames).
     */
    truth(t: number, w: number): Uint8Array;
    /**
     * Transmitter as [x, y, z].
     */
    tx(): Float64Array;
}

/**
 * Distance along the segment `from -> to` where it enters a box with the
 * given center, half extents and yaw (radians). NaN on a miss.
 */
export function slab_test(from: Float64Array, to: Float64Array, center: Float64Array, half: Float64Array, yaw: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demoscene_free: (a: number, b: number) => void;
    readonly demoscene_circle_radius: (a: number) => number;
    readonly demoscene_human_radius: (a: number) => number;
    readonly demoscene_max_window: (a: number, b: number) => number;
    readonly demoscene_n_frames: (a: number) => number;
    readonly demoscene_n_humans: (a: number) => number;
    readonly demoscene_new: (a: number, b: number) => [number, number, number];
    readonly demoscene_nlos: (a: number, b: number) => [number, number, number, number];
    readonly demoscene_positions: (a: number, b: number) => [number, number];
    readonly demoscene_predict: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demoscene_truth: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demoscene_tx: (a: number) => [number, number];
    readonly slab_test: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
