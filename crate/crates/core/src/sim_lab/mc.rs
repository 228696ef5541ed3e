//! Monte Carlo martingale verification and representation-equivalence tests.
//!
//! Paths are simulated on independent counter-derived streams and reduced
//! with pairwise summation in path order, so the reported digits do not
//! depend on thread count or scheduling.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bond_engine::{EngineTables, PathEngine};
use crate::error::{Result, TsError};
use crate::model::{BondModel, ModelSampler};

/// Pairwise (cascade) summation: associative enough that any fixed order
/// reproduces the same digits; we always sum in index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleRow {
    pub maturity: f64,
    pub checkpoint: f64,
    pub reference: f64,
    pub mean: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub n_paths: usize,
    pub seed: u64,
    pub z_threshold: f64,
    pub rows: Vec<MartingaleRow>,
    pub max_abs_z: f64,
    pub pass: bool,
    /// Path indices that produced non-finite prices.
    pub blowups: Vec<u64>,
}

/// Simulate `n_paths` scenarios and test that the ensemble mean of the
/// discounted price equals P(0,T) at every checkpoint, per maturity.
pub fn mc_martingale_test(
    model: &BondModel,
    maturities: &[f64],
    n_paths: usize,
    checkpoints: &[f64],
    seed: u64,
    z_threshold: f64,
) -> Result<MartingaleReport> {
    if n_paths == 0 {
        return Err(TsError::invalid("need at least one path"));
    }
    let grid = &model.grid;
    let cap_idx: Vec<usize> = maturities
        .iter()
        .map(|m| grid.idx(*m))
        .collect::<Result<_>>()?;
    let ck_idx: Vec<usize> = checkpoints
        .iter()
        .map(|c| grid.idx(*c))
        .collect::<Result<_>>()?;
    let sampler = ModelSampler::new(Arc::new(model.clone()))?;
    let tables = EngineTables::new(model);

    // reference values P(0, T) (deterministic at time zero)
    let refs: Vec<f64> = {
        let mut rng = crate::rng::path_rng(seed, 0);
        let b = sampler.sample(&mut rng)?;
        let eng = PathEngine::with_tables(model, &b, &tables);
        cap_idx
            .iter()
            .map(|&cap| eng.price_direct(0, cap))
            .collect::<Result<_>>()?
    };

    let cells: Vec<(usize, usize)> = cap_idx
        .iter()
        .enumerate()
        .flat_map(|(mi, &cap)| {
            ck_idx
                .iter()
                .filter(move |&&ck| ck <= cap)
                .map(move |&ck| (mi, ck))
        })
        .collect();

    let per_path: Vec<(Vec<f64>, bool)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::path_rng(seed, i);
            let b = sampler.sample(&mut rng).expect("sampling");
            let eng = PathEngine::with_tables(model, &b, &tables);
            let numeraire = eng.numeraire();
            let mut vals = Vec::with_capacity(cells.len());
            let mut finite = true;
            for &(mi, ck) in &cells {
                let p = eng.price_direct(ck, cap_idx[mi]).expect("price");
                let v = p / numeraire[ck];
                if !v.is_finite() {
                    finite = false;
                }
                vals.push(v);
            }
            (vals, finite)
        })
        .collect();

    let blowups: Vec<u64> = per_path
        .iter()
        .enumerate()
        .filter(|(_, (_, finite))| !finite)
        .map(|(i, _)| i as u64)
        .collect();
    if !blowups.is_empty() {
        return Ok(MartingaleReport {
            n_paths,
            seed,
            z_threshold,
            rows: Vec::new(),
            max_abs_z: f64::INFINITY,
            pass: false,
            blowups,
        });
    }

    let n = n_paths as f64;
    let mut rows = Vec::with_capacity(cells.len());
    let mut max_abs_z = 0.0_f64;
    for (k, &(mi, ck)) in cells.iter().enumerate() {
        let col: Vec<f64> = per_path.iter().map(|(v, _)| v[k]).collect();
        let mean = pairwise_sum(&col) / n;
        let sq: Vec<f64> = col.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        let dev = mean - refs[mi];
        // a degenerate ensemble (all paths equal up to rounding) has no
        // statistical content: z is zero unless the deviation is real
        let floor = 1e-13 * refs[mi].abs().max(1.0);
        let z = if se <= floor {
            if dev.abs() <= floor {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            dev / se
        };
        max_abs_z = max_abs_z.max(z.abs());
        rows.push(MartingaleRow {
            maturity: maturities[mi],
            checkpoint: grid.time(ck),
            reference: refs[mi],
            mean,
            se,
            z,
        });
    }
    Ok(MartingaleReport {
        n_paths,
        seed,
        z_threshold,
        rows,
        max_abs_z,
        pass: max_abs_z <= z_threshold,
        blowups,
    })
}

/// Max pathwise discrepancy among the three price representations over
/// paths, grid times and maturities.
pub fn representation_equivalence_test(
    model: &BondModel,
    maturities: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<f64> {
    let grid = &model.grid;
    let cap_idx: Vec<usize> = maturities
        .iter()
        .map(|m| grid.idx(*m))
        .collect::<Result<_>>()?;
    let sampler = ModelSampler::new(Arc::new(model.clone()))?;
    let tables = EngineTables::new(model);
    let worst = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::path_rng(seed, i);
            let b = sampler.sample(&mut rng).expect("sampling");
            let eng = PathEngine::with_tables(model, &b, &tables);
            let mut w = 0.0_f64;
            for &cap in &cap_idx {
                let exp_rep = eng.exp_xt_representation(cap);
                let se_rep = eng.stoch_exp_representation(cap).expect("rep");
                for t in 0..=cap {
                    let direct = eng.price_direct(t, cap).expect("price");
                    w = w.max((exp_rep[t] - direct).abs());
                    w = w.max((se_rep[t] - direct).abs());
                }
            }
            w
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RecoveryMode;

    #[test]
    fn pairwise_sum_matches_naive_on_small() {
        let xs: Vec<f64> = (0..17).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn deterministic_model_zero_z() {
        // deterministic curve-only model satisfying the conditions: all
        // discounted prices are constants; z is defined as zero
        let m = {
            let mut m = crate::drift_engine::tests::constructible_model(RecoveryMode::Zero);
            m.coefs.b = vec![
                crate::forward_fields::CoefField::Zero,
                crate::forward_fields::CoefField::Zero,
            ];
            m.driver = crate::time_paths::driver::DriverSpec::zero(2);
            m.risky = crate::risky_measure::RiskySpec::empty();
            m.default_spec = crate::credit_events::DefaultSpec::none();
            m.coefs.alpha = crate::forward_fields::CoefField::Zero;
            m
        };
        let built = crate::drift_engine::construct_consistent_drift(&m).unwrap();
        let report =
            mc_martingale_test(&built.model, &[1.0, 2.0], 64, &[0.5, 1.0], 7, 3.0).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_abs_z, 0.0);
    }
}
