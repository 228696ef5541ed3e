//! The optional random measure of risky dates.
//!
//! Mass lives on pairs (s, u): revelation time s and risky maturity u with
//! s < u. Random mass is a finite list of atoms at grid pairs; deterministic
//! diffuse mass is supported through an absolutely continuous density per
//! (s-cell, u-cell) below the diagonal and a singular-in-maturity Cantor
//! component revealed at time zero. Atoms with s = u are accepted but flagged
//! and excluded from every aggregate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TsError};
use crate::time_paths::driver::MarkLaw;
use crate::time_paths::fv::{Atom, FvPath, SingularSpec};
use crate::time_paths::grid::{TimeGrid, LOOKUP_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskyAtomSpec {
    /// Revelation time (grid point).
    pub reveal: f64,
    /// Risky maturity (grid point, > reveal).
    pub maturity: f64,
    /// Weight law; nonnegative outcomes, zero draws are omitted.
    pub law: MarkLaw,
}

/// Deterministic absolutely continuous density on (s, u) cells, strictly
/// below the diagonal (the s-cell must end before the u-cell starts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuAcSpec {
    /// `density[i][k]` for s-cell i, u-cell k; must vanish unless i < k.
    pub density: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskySpec {
    pub atoms: Vec<RiskyAtomSpec>,
    pub ac: Option<MuAcSpec>,
    /// Singular-in-maturity component, revealed at time zero.
    pub singular: Option<SingularSpec>,
}

impl RiskySpec {
    pub fn empty() -> Self {
        RiskySpec {
            atoms: Vec::new(),
            ac: None,
            singular: None,
        }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        for a in &self.atoms {
            if grid.idx(a.reveal).is_err() {
                return Err(TsError::OffGrid(a.reveal));
            }
            if grid.idx(a.maturity).is_err() {
                return Err(TsError::OffGrid(a.maturity));
            }
            if a.reveal > a.maturity + LOOKUP_TOL {
                return Err(TsError::invalid(format!(
                    "risky atom revealed at {} after its maturity {}",
                    a.reveal, a.maturity
                )));
            }
            a.law.validate()?;
            if a.law.outcomes().iter().any(|&(v, p)| v < 0.0 && p > 0.0) {
                return Err(TsError::invalid("risky weights must be nonnegative"));
            }
        }
        if let Some(ac) = &self.ac {
            if ac.density.len() != grid.n_cells() {
                return Err(TsError::invalid("mu density needs one row per s-cell"));
            }
            for (i, row) in ac.density.iter().enumerate() {
                if row.len() != grid.n_cells() {
                    return Err(TsError::invalid("mu density rows need one value per u-cell"));
                }
                for (k, &v) in row.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        return Err(TsError::invalid("mu density must be finite and >= 0"));
                    }
                    if v != 0.0 && k <= i {
                        return Err(TsError::invalid(
                            "mu density must vanish on and above the diagonal (s < u)",
                        ));
                    }
                }
            }
        }
        if let Some(s) = &self.singular {
            s.validate()?;
        }
        Ok(())
    }

    pub fn maturities(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.maturity).collect()
    }

    pub fn reveal_times(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.reveal).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskyAtom {
    pub reveal: f64,
    pub maturity: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct RiskyMeasurePath {
    pub grid: Arc<TimeGrid>,
    /// Realized atoms with positive weight and reveal < maturity.
    pub atoms: Vec<RiskyAtom>,
    /// Atoms with reveal == maturity: kept for diagnostics, never aggregated.
    pub flagged: Vec<RiskyAtom>,
    pub ac: Option<MuAcSpec>,
    pub singular: Option<SingularSpec>,
}

impl RiskyMeasurePath {
    pub fn empty(grid: Arc<TimeGrid>) -> Self {
        RiskyMeasurePath {
            grid,
            atoms: Vec::new(),
            flagged: Vec::new(),
            ac: None,
            singular: None,
        }
    }

    /// Draw atom weights independently from their laws.
    pub fn sample(
        spec: &RiskySpec,
        grid: &Arc<TimeGrid>,
        rng: &mut rand_chacha::ChaCha12Rng,
    ) -> Result<Self> {
        spec.validate(grid)?;
        let mut atoms = Vec::new();
        let mut flagged = Vec::new();
        for a in &spec.atoms {
            let w = a.law.sample(rng);
            if w == 0.0 {
                continue;
            }
            let atom = RiskyAtom {
                reveal: a.reveal,
                maturity: a.maturity,
                weight: w,
            };
            if (a.reveal - a.maturity).abs() <= LOOKUP_TOL {
                flagged.push(atom);
            } else {
                atoms.push(atom);
            }
        }
        atoms.sort_by(|x, y| x.reveal.partial_cmp(&y.reveal).unwrap());
        Ok(RiskyMeasurePath {
            grid: Arc::clone(grid),
            atoms,
            flagged,
            ac: spec.ac.clone(),
            singular: spec.singular.clone(),
        })
    }

    /// mu_t(du) as a discrete measure: weights of atoms revealed by `t`,
    /// grouped by maturity, ascending.
    pub fn slice(&self, t_idx: usize) -> Vec<(f64, f64)> {
        let t = self.grid.time(t_idx);
        let mut grouped: Vec<(f64, f64)> = Vec::new();
        for a in &self.atoms {
            if a.reveal <= t + LOOKUP_TOL {
                match grouped
                    .iter_mut()
                    .find(|(u, _)| (*u - a.maturity).abs() <= LOOKUP_TOL)
                {
                    Some((_, w)) => *w += a.weight,
                    None => grouped.push((a.maturity, a.weight)),
                }
            }
        }
        grouped.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        grouped
    }

    /// Atoms revealed exactly at `t`.
    pub fn revealed_at(&self, t: f64) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .filter(|a| (a.reveal - t).abs() <= LOOKUP_TOL)
            .map(|a| (a.maturity, a.weight))
            .collect()
    }

    /// Atoms revealed strictly before `t` (the previsible slice).
    pub fn revealed_before(&self, t: f64) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .filter(|a| a.reveal < t - LOOKUP_TOL)
            .map(|a| (a.maturity, a.weight))
            .collect()
    }

    /// Jump of mu_bar at maturity time `u` (aggregated weight of atoms with
    /// that maturity). Previsible: every contributing atom reveals before u.
    pub fn mu_bar_jump_at(&self, u: f64, cap_t: f64) -> f64 {
        if u > cap_t + LOOKUP_TOL {
            return 0.0;
        }
        self.atoms
            .iter()
            .filter(|a| (a.maturity - u).abs() <= LOOKUP_TOL)
            .map(|a| a.weight)
            .sum()
    }

    /// Distinct atom maturities <= cap, ascending.
    pub fn jump_maturities(&self, cap_t: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for a in &self.atoms {
            if a.maturity <= cap_t + LOOKUP_TOL
                && !out.iter().any(|u| (*u - a.maturity).abs() <= LOOKUP_TOL)
            {
                out.push(a.maturity);
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out
    }

    /// Pointwise density m of the absolutely continuous part of mu_bar at
    /// grid point `k` (the value on the cell starting there).
    pub fn mu_bar_ac_density(&self, k: usize) -> f64 {
        match &self.ac {
            None => 0.0,
            Some(ac) => {
                if k >= self.grid.n_cells() {
                    return 0.0;
                }
                (0..k)
                    .map(|i| ac.density[i][k] * self.grid.cell_dt(i))
                    .sum()
            }
        }
    }

    /// Singular increment of mu_bar over cell `k`.
    pub fn mu_bar_sing_inc(&self, k: usize) -> f64 {
        match &self.singular {
            None => 0.0,
            Some(s) => s.increment(self.grid.time(k), self.grid.time(k + 1)),
        }
    }

    /// mu_bar^{(T)} with its three components. Constant after T.
    pub fn mu_bar(&self, t_cap_idx: usize) -> FvPath {
        let cap = self.grid.time(t_cap_idx);
        let mut out = FvPath::zero(Arc::clone(&self.grid));
        for k in 0..t_cap_idx.min(self.grid.n_cells()) {
            out.ac_density[k] = self.mu_bar_ac_density(k);
            out.sing_inc[k] = self.mu_bar_sing_inc(k);
        }
        for u in self.jump_maturities(cap) {
            out.jumps.push(Atom {
                time: u,
                size: self.mu_bar_jump_at(u, cap),
            });
        }
        out
    }

    /// Total atom mass over [0, t] x [0, T]: atoms with s <= t and u <= T.
    pub fn atom_mass(&self, t: f64, cap_t: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.reveal <= t + LOOKUP_TOL && a.maturity <= cap_t + LOOKUP_TOL)
            .map(|a| a.weight)
            .sum()
    }

    pub fn has_diffuse(&self) -> bool {
        self.ac.is_some() || self.singular.is_some()
    }
}

/// One-shot sampling entry point.
pub fn sample_risky_measure(
    spec: &RiskySpec,
    grid: &Arc<TimeGrid>,
    seed: u64,
) -> Result<RiskyMeasurePath> {
    let mut rng = crate::rng::path_rng(seed, 0);
    RiskyMeasurePath::sample(spec, grid, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<TimeGrid> {
        Arc::new(TimeGrid::build(2.0, 0.25, &[]).unwrap())
    }

    fn det_atom(s: f64, u: f64, w: f64) -> RiskyAtomSpec {
        RiskyAtomSpec {
            reveal: s,
            maturity: u,
            law: MarkLaw::degenerate(w),
        }
    }

    #[test]
    fn empty_spec_no_atoms() {
        let g = grid();
        let p = sample_risky_measure(&RiskySpec::empty(), &g, 1).unwrap();
        assert!(p.atoms.is_empty());
        assert!(p.mu_bar(g.len() - 1).jumps.is_empty());
    }

    #[test]
    fn deterministic_atom_every_seed() {
        let g = grid();
        let spec = RiskySpec {
            atoms: vec![det_atom(0.0, 1.0, 1.0)],
            ac: None,
            singular: None,
        };
        for seed in 0..20 {
            let p = sample_risky_measure(&spec, &g, seed).unwrap();
            assert_eq!(p.atoms.len(), 1);
            assert_eq!(p.atoms[0].weight, 1.0);
        }
    }

    #[test]
    fn weight_law_frequency() {
        let g = grid();
        let spec = RiskySpec {
            atoms: vec![RiskyAtomSpec {
                reveal: 0.25,
                maturity: 1.0,
                law: MarkLaw(vec![(0.0, 0.5), (1.0, 0.5)]),
            }],
            ac: None,
            singular: None,
        };
        let n = 10_000;
        let mut hits = 0;
        for seed in 0..n {
            let p = sample_risky_measure(&spec, &g, seed).unwrap();
            hits += p.atoms.len();
        }
        let freq = hits as f64 / n as f64;
        assert!(
            (freq - 0.5).abs() < 0.02,
            "atom frequency {freq} should be within 0.5 +/- 0.02"
        );
    }

    #[test]
    fn slice_revelation_and_additivity() {
        let g = grid();
        let spec = RiskySpec {
            atoms: vec![
                det_atom(0.5, 1.0, 0.3),
                det_atom(0.25, 1.0, 0.1),
                det_atom(0.5, 1.0, 0.2),
            ],
            ac: None,
            singular: None,
        };
        let p = sample_risky_measure(&spec, &g, 0).unwrap();
        assert!(p.slice(g.idx(0.0).unwrap()).is_empty());
        let at_025 = p.slice(g.idx(0.25).unwrap());
        assert_eq!(at_025, vec![(1.0, 0.1)]);
        let at_05 = p.slice(g.idx(0.5).unwrap());
        assert_eq!(at_05.len(), 1);
        assert!((at_05[0].1 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn mu_bar_step_and_aggregation() {
        let g = grid();
        let spec = RiskySpec {
            atoms: vec![det_atom(0.0, 1.0, 0.5), det_atom(0.5, 1.0, 0.25)],
            ac: None,
            singular: None,
        };
        let p = sample_risky_measure(&spec, &g, 0).unwrap();
        let mb = p.mu_bar(g.len() - 1);
        assert_eq!(mb.jumps.len(), 1);
        assert!((mb.jumps[0].size - 0.75).abs() < 1e-15);
        assert_eq!(mb.jumps[0].time, 1.0);
        let i1 = g.idx(1.0).unwrap();
        assert_eq!(mb.value(i1 - 1), 0.0);
        assert!((mb.value(i1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn same_time_atoms_flagged_and_excluded() {
        let g = grid();
        let spec = RiskySpec {
            atoms: vec![det_atom(1.0, 1.0, 0.4), det_atom(0.0, 1.0, 0.5)],
            ac: None,
            singular: None,
        };
        let p = sample_risky_measure(&spec, &g, 0).unwrap();
        assert_eq!(p.flagged.len(), 1);
        assert_eq!(p.atoms.len(), 1);
        assert!((p.mu_bar(g.len() - 1).jumps[0].size - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reveal_after_maturity_rejected() {
        let g = grid();
        let spec = RiskySpec {
            atoms: vec![det_atom(1.0, 0.5, 0.4)],
            ac: None,
            singular: None,
        };
        assert!(sample_risky_measure(&spec, &g, 0).is_err());
    }

    #[test]
    fn monotonicity_in_t_and_cap() {
        let g = grid();
        let spec = RiskySpec {
            atoms: vec![
                det_atom(0.0, 0.5, 0.2),
                det_atom(0.25, 1.5, 0.3),
                det_atom(0.5, 2.0, 0.1),
            ],
            ac: None,
            singular: Some(SingularSpec::cantor(0.25, 1.75, 0.5)),
        };
        let p = sample_risky_measure(&spec, &g, 0).unwrap();
        let full = p.mu_bar(g.len() - 1);
        let mut prev = 0.0;
        for i in 0..g.len() {
            let v = full.value(i);
            assert!(v >= prev - 1e-15, "mu_bar not monotone at {i}");
            prev = v;
        }
        // monotone in the cap
        for i in 0..g.len() {
            let a = p.mu_bar(g.idx(1.0).unwrap()).value(i.min(g.idx(1.0).unwrap()));
            let b = full.value(i.min(g.idx(1.0).unwrap()));
            assert!(a <= b + 1e-15);
        }
    }

    #[test]
    fn jump_sum_matches_slice_mass() {
        let g = grid();
        let spec = RiskySpec {
            atoms: vec![
                det_atom(0.0, 0.5, 0.2),
                det_atom(0.25, 1.0, 0.3),
                det_atom(0.75, 1.0, 0.4),
                det_atom(0.5, 1.75, 0.1),
            ],
            ac: None,
            singular: None,
        };
        let p = sample_risky_measure(&spec, &g, 0).unwrap();
        let cap = g.time(g.len() - 1);
        for i in 0..g.len() {
            let t = g.time(i);
            let jump_mass: f64 = p
                .mu_bar(g.len() - 1)
                .jumps
                .iter()
                .filter(|a| a.time <= t + LOOKUP_TOL)
                .map(|a| a.size)
                .sum();
            // every atom matures after it reveals, so mass over [0,T] x [0,t]
            // equals the revealed-by-t mass with maturity <= t
            assert!((jump_mass - p.atom_mass(t, cap.min(t))).abs() < 1e-15);
        }
    }

    #[test]
    fn mu_bar_ac_density_lower_triangular() {
        let g = Arc::new(TimeGrid::build(1.0, 0.25, &[]).unwrap());
        let mut density = vec![vec![0.0; 4]; 4];
        density[0][2] = 2.0; // mass 2.0*0.25 over u-cell 2
        density[1][3] = 4.0;
        let spec = RiskySpec {
            atoms: vec![],
            ac: Some(MuAcSpec { density }),
            singular: None,
        };
        let p = sample_risky_measure(&spec, &g, 0).unwrap();
        assert_eq!(p.mu_bar_ac_density(0), 0.0);
        assert_eq!(p.mu_bar_ac_density(1), 0.0);
        assert!((p.mu_bar_ac_density(2) - 0.5).abs() < 1e-15);
        assert!((p.mu_bar_ac_density(3) - 1.0).abs() < 1e-15);
        let mb = p.mu_bar(g.len() - 1);
        assert!((mb.value(4) - (0.5 + 1.0) * 0.25).abs() < 1e-15);
    }
}
