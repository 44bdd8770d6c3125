/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const classify_unital: (a: number, b: number, c: number) => [number, number];
export const da_demo: (a: number, b: number, c: bigint) => [number, number];
export const discord_landscape: (a: number, b: number, c: number, d: number) => [number, number];
export const tetra_slice: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
