/* tslint:disable */
/* eslint-disable */

/**
 * The scripted six-op walkthrough: per-step logs and a text rendering of
 * every state.
 */
export function dynamism_walkthrough(): string;

/**
 * Quality factor of both engines over caps from 10% to 120% of the corpus.
 */
export function qf_curve(seed: number, n_items: number, n_retrievals: number, priority_bias: number): string;

/**
 * Bytes held after every op, for both engines.
 */
export function space_timeline_json(seed: number, n_items: number, n_retrievals: number, tail_retentions: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly dynamism_walkthrough: () => [number, number];
    readonly qf_curve: (a: number, b: number, c: number, d: number) => [number, number];
    readonly space_timeline_json: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
