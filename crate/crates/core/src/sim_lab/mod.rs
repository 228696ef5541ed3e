//! Monte Carlo martingale verification, the brute-force oracle, scenario
//! ingestion and the CLI runner.

pub mod mc;
pub mod oracle;
pub mod presets;
pub mod report;
pub mod runner;
pub mod scenario;

pub use mc::{mc_martingale_test, representation_equivalence_test, MartingaleReport};
pub use oracle::{binomial_oracle, OracleTables};
pub use runner::{run_scenario, ExitStatus, Overrides, Stage};
pub use scenario::ScenarioFile;
