//! Synthesis of cell-extraction programs for table completion.
//!
//! A completion task pairs a formula sketch such as `SUM(?1, 1)` with
//! input/output cell examples for each hole. Each hole is learned as a program
//! in a small extraction language, by intersecting per-example tree automata
//! and ranking the result.

pub mod deadline;
pub mod fta;
pub mod grid;
pub mod harness;
pub mod lang;
pub mod preds;
pub mod score;
pub mod sketch;
pub mod synth;
