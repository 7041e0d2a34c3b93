/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Concepts labelled on `exercise`.
     */
    concepts_of(exercise: number): Uint32Array;
    /**
     * Generates a synthetic population and trains a small NeuralCDM on it.
     */
    constructor(seed: number, students: number, exercises: number, concepts: number, epochs: number);
    /**
     * Diagnosed proficiency `σ(A_s)`, one value per concept.
     */
    proficiency(student: number): Float64Array;
    response_curve(student: number, exercise: number, concept: number, points: number): Float64Array;
    /**
     * Proficiency the generator used for `student`.
     */
    true_proficiency(student: number): Float64Array;
    readonly doa: number;
    readonly epochs_run: number;
    readonly n_concepts: number;
    readonly n_exercises: number;
    readonly n_students: number;
    readonly random_doa: number;
    readonly test_auc: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_concepts_of: (a: number, b: number) => [number, number, number, number];
    readonly demo_doa: (a: number) => number;
    readonly demo_epochs_run: (a: number) => number;
    readonly demo_n_concepts: (a: number) => number;
    readonly demo_n_exercises: (a: number) => number;
    readonly demo_n_students: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_proficiency: (a: number, b: number) => [number, number, number, number];
    readonly demo_random_doa: (a: number) => number;
    readonly demo_response_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_test_auc: (a: number) => number;
    readonly demo_true_proficiency: (a: number, b: number) => [number, number, number, number];
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
