/* tslint:disable */
/* eslint-disable */

export class PortraitView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    recon(): Float64Array;
    restartPoints(): Uint32Array;
    truth(): Float64Array;
    readonly flagged: number;
    readonly matchedFraction: number;
    readonly restarts: number;
}

export function firstReturn(k: number, g: number, trajectories: number, kicks: number, seed: number): Float64Array;

export function phasePortrait(k: number, g: number, trajectories: number, kicks: number, seed: number): PortraitView;

export function transmissionCurve(k: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_portraitview_free: (a: number, b: number) => void;
    readonly firstReturn: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly phasePortrait: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly portraitview_flagged: (a: number) => number;
    readonly portraitview_matchedFraction: (a: number) => number;
    readonly portraitview_recon: (a: number) => [number, number];
    readonly portraitview_restartPoints: (a: number) => [number, number];
    readonly portraitview_restarts: (a: number) => number;
    readonly portraitview_truth: (a: number) => [number, number];
    readonly transmissionCurve: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
