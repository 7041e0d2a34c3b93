/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_concepts_of: (a: number, b: number) => [number, number, number, number];
export const demo_doa: (a: number) => number;
export const demo_epochs_run: (a: number) => number;
export const demo_n_concepts: (a: number) => number;
export const demo_n_exercises: (a: number) => number;
export const demo_n_students: (a: number) => number;
export const demo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const demo_proficiency: (a: number, b: number) => [number, number, number, number];
export const demo_random_doa: (a: number) => number;
export const demo_response_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const demo_test_auc: (a: number) => number;
export const demo_true_proficiency: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
