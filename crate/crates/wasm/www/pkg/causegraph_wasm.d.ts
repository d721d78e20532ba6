/* tslint:disable */
/* eslint-disable */

/**
 * Analyses a graph given as one `cause -> effect` arc per line.
 */
export function analyze_graph(arcs: string): string;

/**
 * Orientation metrics for a 2x2 grid, rows are predictions.
 */
export function confusion_metrics(fwd_fwd: number, fwd_bwd: number, bwd_fwd: number, bwd_bwd: number): string;

/**
 * Renders the orientation prompt for `entity_a` (option A: a causes b)
 * and `entity_b`, both given as spans of `text`.
 */
export function orientation_prompt(text: string, entity_a: string, entity_b: string): string;

/**
 * Reads the verdict from a model reply.
 */
export function read_verdict(reply: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly analyze_graph: (a: number, b: number) => [number, number, number, number];
    readonly confusion_metrics: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly orientation_prompt: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly read_verdict: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
