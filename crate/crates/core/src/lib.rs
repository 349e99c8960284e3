//! Oracle pushdown automata: machine descriptions, bounded exhaustive
//! simulation, oracle expressions with many-one, Turing and truth-table
//! decision procedures, machine constructions, hierarchy tooling, a zoo of
//! example languages and exact-probability pushdown automata.

pub mod error;
pub mod format;
pub mod hierarchy;
pub mod machine;
pub mod oracle;
pub mod ppda;
pub mod sim;
pub mod transforms;
pub mod symbol;
pub mod zoo;

pub use error::{Error, Result};
pub use machine::{flip_halting, validate, Kind, Machine, MachineSpec, OracleMode, Read, Rule, Violation};
pub use sim::{BoundsPolicy, Configuration, RunBounds, RunResult, Verdict};
pub use symbol::{Symbol, TrackString, Word};
pub use oracle::{Decider, LanguageExpr};
