//! Process-behaviour benchmark toolkit: process trees and their languages,
//! benchmark dataset generation, prompt rendering and scoring.

pub mod baseline;
pub mod eval;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod promptgen;
pub mod seeding;
pub mod semantics;
pub mod synth;
pub mod taskgen;
pub mod tree_dsl;

pub use model::{
    Activity, Dfg, EventLog, EventuallyFollows, Footprint, ModelError, Operator, ProcessModel, ProcessTree, Relation,
    Trace,
};
pub use semantics::{Language, PlayoutError};
pub use taskgen::{Label, Split, Task, TaskRecord};
pub use tree_dsl::{parse_tree, render_tree, ParseError};
