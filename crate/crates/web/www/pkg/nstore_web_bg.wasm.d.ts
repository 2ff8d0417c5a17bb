/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const dynamism_walkthrough: () => [number, number];
export const qf_curve: (a: number, b: number, c: number, d: number) => [number, number];
export const space_timeline_json: (a: number, b: number, c: number, d: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
