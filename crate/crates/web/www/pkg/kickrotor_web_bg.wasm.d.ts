/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_portraitview_free: (a: number, b: number) => void;
export const firstReturn: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const phasePortrait: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const portraitview_flagged: (a: number) => number;
export const portraitview_matchedFraction: (a: number) => number;
export const portraitview_recon: (a: number) => [number, number];
export const portraitview_restartPoints: (a: number) => [number, number];
export const portraitview_restarts: (a: number) => number;
export const portraitview_truth: (a: number) => [number, number];
export const transmissionCurve: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
