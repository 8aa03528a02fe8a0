//! Parameter sweeps over the two-qubit correlating family and the qudit
//! construction, emitted as CSV.
//!
//! ```text
//! corrwork fig1 --beta-in 1 --out fig1.csv
//! corrwork fig3 --beta-in 100,1,0.1
//! corrwork qudit --d 3 --beta-out 0
//! ```

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{parse_config, Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use experiments::run_experiment;
pub use output::{write_csv, CsvDataset, Field};
