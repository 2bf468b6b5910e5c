/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_troubleshooter_free: (a: number, b: number) => void;
export const moveSlider: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
export const questionView: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const sampleModel: () => [number, number];
export const setCondProb: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const treeView: (a: number, b: number) => [number, number, number, number];
export const troubleshooter_create: (a: number, b: number) => [number, number, number];
export const troubleshooter_record: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const troubleshooter_undo: (a: number) => [number, number, number, number];
export const troubleshooter_view: (a: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
