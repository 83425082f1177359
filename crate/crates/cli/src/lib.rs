//! Scenario loading, run orchestration and output for the `hyperfront` binary.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use error::{OutputError, ScenarioError};
pub use output::{read_timeseries, write_timeseries};
pub use run::{run, Outcome, RunRecord};
pub use scenario::{load_scenario, parse_scenario, Family, Scenario};
