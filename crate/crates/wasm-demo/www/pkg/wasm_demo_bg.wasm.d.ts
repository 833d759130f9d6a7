/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demoscene_free: (a: number, b: number) => void;
export const demoscene_circle_radius: (a: number) => number;
export const demoscene_human_radius: (a: number) => number;
export const demoscene_max_window: (a: number, b: number) => number;
export const demoscene_n_frames: (a: number) => number;
export const demoscene_n_humans: (a: number) => number;
export const demoscene_new: (a: number, b: number) => [number, number, number];
export const demoscene_nlos: (a: number, b: number) => [number, number, number, number];
export const demoscene_positions: (a: number, b: number) => [number, number];
export const demoscene_predict: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demoscene_truth: (a: number, b: number, c: number) => [number, number, number, number];
export const demoscene_tx: (a: number) => [number, number];
export const slab_test: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
