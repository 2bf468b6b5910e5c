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
