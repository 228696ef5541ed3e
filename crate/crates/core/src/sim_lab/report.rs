//! CSV and JSON artifact writers (RFC-4180 quoting, '.' decimal, UTF-8).

use std::path::Path;

use crate::bond_engine::PathEngine;
use crate::drift_engine::{ConstructedDrift, ResidualReport};
use crate::error::Result;
use crate::model::{BondModel, PathBundle};
use crate::sim_lab::mc::MartingaleReport;

fn fmt(x: f64) -> String {
    // shortest round-trip representation; deterministic across runs
    format!("{x}")
}

/// Per-(t, T) price surface and decomposition table:
/// seed, t, T, price, discounted, M, fv_ac_cum, fv_sing_cum, fv_jump_cum.
pub fn write_decomposition_csv(
    path: &Path,
    model: &BondModel,
    bundles: &[(u64, PathBundle)],
    maturities: &[f64],
) -> Result<()> {
    let grid = &model.grid;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "seed",
        "t",
        "T",
        "price",
        "discounted",
        "M",
        "fv_ac_cum",
        "fv_sing_cum",
        "fv_jump_cum",
    ])
    .map_err(csv_err)?;
    for (seed, bundle) in bundles {
        let eng = PathEngine::new(model, bundle);
        let numeraire = eng.numeraire();
        for &mat in maturities {
            let cap = grid.idx(mat)?;
            let dec = eng.decompose_discounted(cap)?;
            for t in 0..=cap {
                let price = eng.price_direct(t, cap)?;
                w.write_record([
                    seed.to_string(),
                    fmt(grid.time(t)),
                    fmt(mat),
                    fmt(price),
                    fmt(price / numeraire[t]),
                    fmt(dec.mart[t]),
                    fmt(dec.fv_ac_cum(grid, t)),
                    fmt(dec.fv_sing_cum(t)),
                    fmt(dec.fv_jump_cum(grid, t)),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Price surface only: seed, t, T, price, discounted.
pub fn write_prices_csv(
    path: &Path,
    model: &BondModel,
    bundles: &[(u64, PathBundle)],
    maturities: &[f64],
) -> Result<()> {
    let grid = &model.grid;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["seed", "t", "T", "price", "discounted"])
        .map_err(csv_err)?;
    for (seed, bundle) in bundles {
        let eng = PathEngine::new(model, bundle);
        let numeraire = eng.numeraire();
        for &mat in maturities {
            let cap = grid.idx(mat)?;
            for t in 0..=cap {
                let price = eng.price_direct(t, cap)?;
                w.write_record([
                    seed.to_string(),
                    fmt(grid.time(t)),
                    fmt(mat),
                    fmt(price),
                    fmt(price / numeraire[t]),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_martingale_csv(path: &Path, report: &MartingaleReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["T", "t", "reference", "mean", "se", "z"])
        .map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            fmt(r.maturity),
            fmt(r.checkpoint),
            fmt(r.reference),
            fmt(r.mean),
            fmt(r.se),
            fmt(r.z),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    std::fs::write(path, s)?;
    Ok(())
}

/// Drift construction artifacts: the drift field as CSV (t, T, a, abar) and
/// the skeleton short rate (t, r).
pub fn write_drift_csv(path: &Path, model: &BondModel, built: &ConstructedDrift) -> Result<()> {
    let grid = &model.grid;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "T", "a", "abar"]).map_err(csv_err)?;
    for i in 0..grid.len() {
        for k in i..grid.len() {
            w.write_record([
                fmt(grid.time(i)),
                fmt(grid.time(k)),
                fmt(built.a_values[i][k]),
                fmt(built.abar[i][k]),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_short_rate_csv(path: &Path, model: &BondModel, built: &ConstructedDrift) -> Result<()> {
    let grid = &model.grid;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "r"]).map_err(csv_err)?;
    for i in 0..grid.len() {
        w.write_record([fmt(grid.time(i)), fmt(built.short_rate[i])])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Residual detail table: maturity, kind, time, residual.
pub fn write_residual_csv(path: &Path, report: &ResidualReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["maturity", "kind", "time", "value"])
        .map_err(csv_err)?;
    for m in &report.per_maturity {
        w.write_record([
            fmt(m.maturity),
            "ac_max".into(),
            fmt(m.ac_argmax_time),
            fmt(m.ac_max),
        ])
        .map_err(csv_err)?;
        w.write_record([
            fmt(m.maturity),
            "sing_max".into(),
            fmt(m.sing_argmax_time),
            fmt(m.sing_max),
        ])
        .map_err(csv_err)?;
        for (t, v) in &m.jump_residuals {
            w.write_record([fmt(m.maturity), "jump".into(), fmt(*t), fmt(*v)])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::TsError {
    crate::error::TsError::Numeric(format!("csv: {e}"))
}
