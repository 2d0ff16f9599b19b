/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const alphaProfile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const buildId: () => [number, number];
export const infectionCurves: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const washoutCurve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
