//! Scenario execution: stages, artifacts, exit statuses.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::drift_engine::{construct_consistent_drift, residual_check};
use crate::error::{Result, TsError};
use crate::model::{BondModel, ModelSampler, PathBundle};
use crate::sim_lab::mc::{mc_martingale_test, representation_equivalence_test};
use crate::sim_lab::oracle::binomial_oracle;
use crate::sim_lab::report;
use crate::sim_lab::scenario::ScenarioFile;

/// Residual tolerance for `--strict` audits.
pub const STRICT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    ConstructDrift,
    Audit,
    McTest,
    Oracle,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    SchemaViolation = 2,
    NumericFailure = 3,
    AuditFailure = 4,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub stage: String,
    pub n_paths: usize,
    pub seed: u64,
    pub artifacts: Vec<String>,
    pub representation_max_error: Option<f64>,
    pub residual_max: Option<f64>,
    pub max_abs_z: Option<f64>,
    pub oracle_max_mismatch: Option<f64>,
    pub pass: bool,
}

pub struct RunOutcome {
    pub status: ExitStatus,
    pub summary: RunSummary,
}

fn out_dir(overrides: &Overrides) -> PathBuf {
    overrides
        .out_dir
        .clone()
        .or_else(|| std::env::var("TERMSTRUCT_OUT").ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn sample_ensemble(
    model: &BondModel,
    seed: u64,
    n: usize,
) -> Result<Vec<(u64, PathBundle)>> {
    let sampler = ModelSampler::new(Arc::new(model.clone()))?;
    (0..n as u64)
        .map(|i| {
            let mut rng = crate::rng::path_rng(seed, i);
            sampler.sample(&mut rng).map(|b| (i, b))
        })
        .collect()
}

/// Execute one stage of a scenario file, writing artifacts into the output
/// directory. Deterministic given the seed.
pub fn run_scenario(path: &Path, stage: Stage, overrides: &Overrides) -> RunOutcome {
    match run_inner(path, stage, overrides) {
        Ok(outcome) => outcome,
        Err(e) => {
            let status = match &e {
                TsError::Schema(_) | TsError::Json(_) => ExitStatus::SchemaViolation,
                _ => ExitStatus::NumericFailure,
            };
            eprintln!("error: {e}");
            RunOutcome {
                status,
                summary: RunSummary {
                    stage: format!("{stage:?}"),
                    n_paths: 0,
                    seed: 0,
                    artifacts: vec![],
                    representation_max_error: None,
                    residual_max: None,
                    max_abs_z: None,
                    oracle_max_mismatch: None,
                    pass: false,
                },
            }
        }
    }
}

fn run_inner(path: &Path, stage: Stage, overrides: &Overrides) -> Result<RunOutcome> {
    let scenario = ScenarioFile::from_path(path)?;
    let mut model = scenario.to_model()?;
    let seed = overrides.seed.unwrap_or(scenario.mc.seed);
    let n_paths = overrides.paths.unwrap_or(scenario.mc.paths);
    let dir = out_dir(overrides);
    std::fs::create_dir_all(&dir)?;
    let mut artifacts: Vec<String> = Vec::new();
    let mut summary = RunSummary {
        stage: format!("{stage:?}"),
        n_paths,
        seed,
        artifacts: vec![],
        representation_max_error: None,
        residual_max: None,
        max_abs_z: None,
        oracle_max_mismatch: None,
        pass: true,
    };

    let mut built = None;
    if scenario.construct_drift || stage == Stage::ConstructDrift {
        let b = construct_consistent_drift(&model)?;
        model = b.model.clone();
        report::write_drift_csv(&dir.join("drift_field.csv"), &model, &b)?;
        report::write_short_rate_csv(&dir.join("short_rate.csv"), &model, &b)?;
        report::write_json(
            &dir.join("jump_compensators.json"),
            &b.compensator_jumps,
        )?;
        artifacts.extend(
            ["drift_field.csv", "short_rate.csv", "jump_compensators.json"]
                .map(String::from),
        );
        built = Some(b);
    }
    let _ = &built;

    let status = match stage {
        Stage::ConstructDrift => {
            // quick self-audit on a small ensemble
            let bundles = sample_ensemble(&model, seed, n_paths.clamp(1, 50))?;
            let only: Vec<PathBundle> = bundles.iter().map(|(_, b)| b.clone()).collect();
            let rep = residual_check(&model, &only, &scenario.maturities)?;
            summary.residual_max = Some(rep.overall_max);
            report::write_json(&dir.join("residual_report.json"), &rep)?;
            artifacts.push("residual_report.json".into());
            if overrides.strict && rep.overall_max > STRICT_RESIDUAL_TOL {
                summary.pass = false;
                ExitStatus::AuditFailure
            } else {
                ExitStatus::Ok
            }
        }
        Stage::Simulate => {
            let keep = n_paths.min(scenario.outputs.max_csv_paths);
            let bundles = sample_ensemble(&model, seed, keep)?;
            if scenario.outputs.prices_csv {
                report::write_prices_csv(
                    &dir.join("prices.csv"),
                    &model,
                    &bundles,
                    &scenario.maturities,
                )?;
                artifacts.push("prices.csv".into());
            }
            if scenario.outputs.decomposition_csv {
                report::write_decomposition_csv(
                    &dir.join("decomposition.csv"),
                    &model,
                    &bundles,
                    &scenario.maturities,
                )?;
                artifacts.push("decomposition.csv".into());
            }
            let rep_err = representation_equivalence_test(
                &model,
                &scenario.maturities,
                keep.max(1),
                seed,
            )?;
            summary.representation_max_error = Some(rep_err);
            ExitStatus::Ok
        }
        Stage::Audit => {
            let bundles = sample_ensemble(&model, seed, n_paths.max(1))?;
            let only: Vec<PathBundle> = bundles.iter().map(|(_, b)| b.clone()).collect();
            let rep = residual_check(&model, &only, &scenario.maturities)?;
            summary.residual_max = Some(rep.overall_max);
            if scenario.outputs.residuals_json {
                report::write_json(&dir.join("residual_report.json"), &rep)?;
                report::write_residual_csv(&dir.join("residual_detail.csv"), &rep)?;
                artifacts.push("residual_report.json".into());
                artifacts.push("residual_detail.csv".into());
            }
            if overrides.strict && rep.overall_max > STRICT_RESIDUAL_TOL {
                summary.pass = false;
                ExitStatus::AuditFailure
            } else {
                ExitStatus::Ok
            }
        }
        Stage::McTest => {
            let grid = Arc::clone(&model.grid);
            let checkpoints = scenario.checkpoints(&grid)?;
            let rep = mc_martingale_test(
                &model,
                &scenario.maturities,
                n_paths,
                &checkpoints,
                seed,
                scenario.mc.z_threshold,
            )?;
            summary.max_abs_z = Some(rep.max_abs_z);
            summary.pass = rep.pass;
            if scenario.outputs.martingale_csv {
                report::write_martingale_csv(&dir.join("martingale_report.csv"), &rep)?;
                artifacts.push("martingale_report.csv".into());
            }
            report::write_json(&dir.join("martingale_report.json"), &rep)?;
            artifacts.push("martingale_report.json".into());
            if !rep.blowups.is_empty() {
                eprintln!("non-finite prices on paths {:?}", rep.blowups);
                ExitStatus::NumericFailure
            } else if overrides.strict && !rep.pass {
                ExitStatus::AuditFailure
            } else {
                ExitStatus::Ok
            }
        }
        Stage::Oracle => {
            let tables = binomial_oracle(&model, &scenario.maturities)?;
            summary.oracle_max_mismatch = Some(tables.max_compensator_mismatch);
            report::write_json(&dir.join("oracle_tables.json"), &tables)?;
            artifacts.push("oracle_tables.json".into());
            if overrides.strict && tables.max_compensator_mismatch > 1e-12 {
                summary.pass = false;
                ExitStatus::AuditFailure
            } else {
                ExitStatus::Ok
            }
        }
    };

    summary.artifacts = artifacts;
    print_summary(&summary);
    Ok(RunOutcome { status, summary })
}

fn print_summary(s: &RunSummary) {
    println!("stage            {}", s.stage);
    println!("paths            {}", s.n_paths);
    println!("seed             {}", s.seed);
    if let Some(v) = s.representation_max_error {
        println!("max-rep-error    {v:.3e}");
    }
    if let Some(v) = s.residual_max {
        println!("max-residual     {v:.3e}");
    }
    if let Some(v) = s.max_abs_z {
        println!("max-abs-z        {v:.3}");
    }
    if let Some(v) = s.oracle_max_mismatch {
        println!("oracle-mismatch  {v:.3e}");
    }
    for a in &s.artifacts {
        println!("artifact         {a}");
    }
    println!("result           {}", if s.pass { "pass" } else { "FAIL" });
}
