/* tslint:disable */
/* eslint-disable */

/**
 * A troubleshooting session over a model compiled with the standard
 * weights.
 */
export class Troubleshooter {
    free(): void;
    [Symbol.dispose](): void;
    constructor(model_json: string);
    record(step_id: string, outcome: string): string;
    undo(): string;
    view(): string;
}

export function moveSlider(model_json: string, question_id: string, cause: string, answer: string, value: number): string;

export function questionView(model_json: string, question_id: string): string;

export function sampleModel(): string;

export function setCondProb(model_json: string, node_id: string, value: number): string;

export function treeView(model_json: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_troubleshooter_free: (a: number, b: number) => void;
    readonly moveSlider: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly questionView: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly sampleModel: () => [number, number];
    readonly setCondProb: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly treeView: (a: number, b: number) => [number, number, number, number];
    readonly troubleshooter_create: (a: number, b: number) => [number, number, number];
    readonly troubleshooter_record: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly troubleshooter_undo: (a: number) => [number, number, number, number];
    readonly troubleshooter_view: (a: number) => [number, number, number, number];
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
