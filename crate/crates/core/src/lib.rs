//! Size minimisation of propositional formulae.
//!
//! Three minimisers share one output space: exhaustive enumeration with
//! truth tables, enumeration with SAT-decided equivalence, and a QBF query
//! over a selector scheme that either proves no small equivalent exists or
//! hands one back.
//!
//! ```
//! use boolmin::{minimize, Algorithm, MinimizeConfig};
//!
//! let f: boolmin::Formula = "p & q | p & r".parse().unwrap();
//! let r = minimize(&f, Algorithm::Qbf, &MinimizeConfig::default()).unwrap();
//! assert_eq!(r.output_size, 5);
//! ```

pub mod bench;
pub mod cnf;
pub mod enumeration;
pub mod error;
pub mod formula;
pub mod minimize;
mod process;
pub mod qbf;
pub mod sat;

pub use cnf::{Clause, Cnf, Lit, Model};
pub use enumeration::{count, enumerate, sample_uniform, FormulaSpace, Sampler};
pub use error::{BenchError, DimacsError, FormulaError, MinimizeError, QbfError, SolverError, SpaceError};
pub use formula::{equivalent_tt, parse, Assignment, Connective, Formula, TruthTable};
pub use minimize::{
    minimize, minimize_bruteforce, minimize_qbf, minimize_sat, Algorithm, MinimizationResult, MinimizeConfig,
    QbfBackend, QbfMode, RunStatus, SatBackend,
};
pub use qbf::{QbfInstance, QbfResult};
pub use sat::SatResult;
