//! Default times with explicit compensator decompositions, and recovery
//! processes xi = E(R) with their compensating process C.
//!
//! The default time is sampled by exact inverse transform so that the
//! compensator of the indicator is exactly the declared triplet
//! (density h, singular part, discrete jumps): survival across a cell is
//! exp(-int h ds - d(singular)), then an independent Bernoulli draw applies
//! at cell-end times carrying discrete hazard mass. Recovery jumps attach to
//! scheduled times or to Poisson events of a driver component; their
//! compensating process C is an exact finite expression of the spec.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TsError};
use crate::stoch_calc::{stochastic_exponential, SemimartingalePath};
use crate::time_paths::driver::MarkLaw;
use crate::time_paths::fv::{Atom, DensitySpec, SingularSpec};
use crate::time_paths::grid::{TimeGrid, LOOKUP_TOL};

// ---------------------------------------------------------------------------
// Default machinery (zero recovery)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteHazard {
    pub time: f64,
    /// Jump of the compensator, in [0, 1].
    pub dhp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultSpec {
    pub hazard: DensitySpec,
    pub singular: Option<SingularSpec>,
    pub discrete: Vec<DiscreteHazard>,
}

impl DefaultSpec {
    pub fn none() -> Self {
        DefaultSpec {
            hazard: DensitySpec::zero(),
            singular: None,
            discrete: Vec::new(),
        }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        self.hazard.validate(grid)?;
        match &self.hazard {
            DensitySpec::Const(c) if *c < 0.0 => {
                return Err(TsError::invalid("hazard density must be >= 0"))
            }
            DensitySpec::Cells(v) if v.iter().any(|x| *x < 0.0) => {
                return Err(TsError::invalid("hazard density must be >= 0"))
            }
            _ => {}
        }
        if let Some(s) = &self.singular {
            s.validate()?;
        }
        for dh in &self.discrete {
            if grid.idx(dh.time).is_err() {
                return Err(TsError::OffGrid(dh.time));
            }
            if dh.time <= 0.0 {
                return Err(TsError::invalid("discrete hazard times must be > 0"));
            }
            if !(0.0..=1.0).contains(&dh.dhp) {
                return Err(TsError::invalid(format!(
                    "discrete hazard {} at {} outside [0,1]",
                    dh.dhp, dh.time
                )));
            }
        }
        Ok(())
    }

    pub fn dhp_at(&self, t: f64) -> f64 {
        self.discrete
            .iter()
            .filter(|d| (d.time - t).abs() <= LOOKUP_TOL)
            .map(|d| d.dhp)
            .sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.hazard.is_zero() && self.singular.is_none() && self.discrete.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefaultKind {
    ContinuousHazard,
    DiscreteHazard,
}

#[derive(Debug, Clone)]
pub struct DefaultPath {
    pub grid: Arc<TimeGrid>,
    pub spec: DefaultSpec,
    /// Default time; None encodes "beyond the horizon" (+infinity).
    pub tau: Option<f64>,
    pub kind: Option<DefaultKind>,
}

impl DefaultPath {
    /// Indicator H_t at grid index i.
    pub fn h_value(&self, i: usize) -> f64 {
        match self.tau {
            Some(tau) if tau <= self.grid.time(i) + LOOKUP_TOL => 1.0,
            _ => 0.0,
        }
    }

    pub fn alive_at(&self, t: f64) -> bool {
        match self.tau {
            Some(tau) => t < tau - LOOKUP_TOL,
            None => true,
        }
    }

    /// Compensator H^p_{t and tau} (stopped at default), exact.
    pub fn hp_stopped(&self, t: f64) -> f64 {
        let cut = match self.tau {
            Some(tau) => t.min(tau),
            None => t,
        };
        let mut acc = 0.0;
        for j in 0..self.grid.n_cells() {
            let lo = self.grid.time(j);
            if lo >= cut {
                break;
            }
            let hi = self.grid.time(j + 1).min(cut);
            acc += self.spec.hazard.at_cell(j) * (hi - lo);
        }
        if let Some(s) = &self.spec.singular {
            acc += s.value(cut);
        }
        acc += self
            .spec
            .discrete
            .iter()
            .filter(|d| d.time <= cut + LOOKUP_TOL)
            .map(|d| d.dhp)
            .sum::<f64>();
        acc
    }
}

/// Exact inverse-transform sampling of the default time. Tie-break at a cell
/// end carrying discrete hazard: continuous survival over the open cell is
/// drawn first, the Bernoulli applies after it.
pub fn sample_default(
    spec: &DefaultSpec,
    grid: &Arc<TimeGrid>,
    rng: &mut ChaCha12Rng,
) -> Result<DefaultPath> {
    spec.validate(grid)?;
    let mut tau = None;
    let mut kind = None;
    'cells: for j in 0..grid.n_cells() {
        let (lo, hi) = (grid.time(j), grid.time(j + 1));
        let h = spec.hazard.at_cell(j);
        let sing_inc = spec.singular.as_ref().map_or(0.0, |s| s.increment(lo, hi));
        let s_cell = (-h * (hi - lo) - sing_inc).exp();
        if s_cell < 1.0 {
            let u: f64 = rng.random();
            if u > s_cell {
                // default inside the cell: solve S(x) = u exactly
                let x = if sing_inc == 0.0 {
                    lo + (-u.ln()) / h
                } else {
                    let surv = |x: f64| {
                        (-h * (x - lo)
                            - spec.singular.as_ref().map_or(0.0, |s| s.increment(lo, x)))
                        .exp()
                    };
                    let (mut a, mut b) = (lo, hi);
                    for _ in 0..80 {
                        let m = 0.5 * (a + b);
                        if surv(m) > u {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    0.5 * (a + b)
                };
                tau = Some(x.min(hi));
                kind = Some(DefaultKind::ContinuousHazard);
                break 'cells;
            }
        }
        let dhp = spec.dhp_at(hi);
        if dhp > 0.0 {
            let u: f64 = rng.random();
            if u < dhp {
                tau = Some(hi);
                kind = Some(DefaultKind::DiscreteHazard);
                break 'cells;
            }
        }
    }
    Ok(DefaultPath {
        grid: Arc::clone(grid),
        spec: spec.clone(),
        tau,
        kind,
    })
}

// ---------------------------------------------------------------------------
// Recovery machinery (general recovery)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledRecovery {
    pub time: f64,
    /// Law of the relative loss dR in [-1, 0].
    pub law: MarkLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonRecovery {
    /// Driver component whose Poisson events trigger recovery jumps.
    pub component: usize,
    pub law: MarkLaw,
}

/// Credit events at totally inaccessible times: R jumps with marks from
/// `law` at intensity `hazard` (plus an optional singular hazard clock).
/// Events repeat until the recovery is exhausted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryHazard {
    pub hazard: DensitySpec,
    pub singular: Option<SingularSpec>,
    pub law: MarkLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySpec {
    /// Continuous drawdown density rho >= 0 (R loses mass at rate rho).
    pub drawdown: DensitySpec,
    /// Singular-continuous drawdown.
    pub singular: Option<SingularSpec>,
    pub scheduled: Vec<ScheduledRecovery>,
    pub poisson: Vec<PoissonRecovery>,
    /// Hazard-driven credit events.
    pub hazard_jump: Option<RecoveryHazard>,
}

impl RecoverySpec {
    pub fn none() -> Self {
        RecoverySpec {
            drawdown: DensitySpec::zero(),
            singular: None,
            scheduled: Vec::new(),
            poisson: Vec::new(),
            hazard_jump: None,
        }
    }

    fn validate_law(law: &MarkLaw) -> Result<()> {
        law.validate()?;
        if law
            .outcomes()
            .iter()
            .any(|&(v, p)| p > 0.0 && !(-1.0..=0.0).contains(&v))
        {
            return Err(TsError::invalid("recovery jump marks must lie in [-1, 0]"));
        }
        Ok(())
    }

    pub fn validate(&self, grid: &TimeGrid, driver_dim: usize) -> Result<()> {
        self.drawdown.validate(grid)?;
        match &self.drawdown {
            DensitySpec::Const(c) if *c < 0.0 => {
                return Err(TsError::invalid("drawdown density must be >= 0"))
            }
            DensitySpec::Cells(v) if v.iter().any(|x| *x < 0.0) => {
                return Err(TsError::invalid("drawdown density must be >= 0"))
            }
            _ => {}
        }
        if let Some(s) = &self.singular {
            s.validate()?;
        }
        for s in &self.scheduled {
            if grid.idx(s.time).is_err() {
                return Err(TsError::OffGrid(s.time));
            }
            if s.time <= 0.0 {
                return Err(TsError::invalid("scheduled recovery times must be > 0"));
            }
            Self::validate_law(&s.law)?;
        }
        for p in &self.poisson {
            if p.component >= driver_dim {
                return Err(TsError::invalid("recovery component out of range"));
            }
            Self::validate_law(&p.law)?;
        }
        if let Some(h) = &self.hazard_jump {
            h.hazard.validate(grid)?;
            if let Some(s) = &h.singular {
                s.validate()?;
            }
            Self::validate_law(&h.law)?;
        }
        Ok(())
    }

    pub fn scheduled_law_at(&self, t: f64) -> Option<&MarkLaw> {
        self.scheduled
            .iter()
            .find(|s| (s.time - t).abs() <= LOOKUP_TOL)
            .map(|s| &s.law)
    }

    pub fn poisson_law_for(&self, comp: usize) -> Option<&MarkLaw> {
        self.poisson
            .iter()
            .find(|p| p.component == comp)
            .map(|p| &p.law)
    }

    /// Jump of C at a scheduled time: -E[dR].
    pub fn dc_at(&self, t: f64) -> f64 {
        self.scheduled_law_at(t).map_or(0.0, |law| -law.mean())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RAtomKind {
    Scheduled,
    Poisson,
    Hazard,
}

#[derive(Debug, Clone)]
pub struct RecoveryPath {
    pub grid: Arc<TimeGrid>,
    pub spec: RecoverySpec,
    /// Realized jumps of R (dR in [-1, 0]), sorted by time.
    pub r_atoms: Vec<Atom>,
    /// What triggered each jump, parallel to `r_atoms`.
    pub r_atom_kinds: Vec<RAtomKind>,
    /// xi = E(R) at grid points.
    pub xi: Vec<f64>,
    /// First time xi hits zero.
    pub tau: Option<f64>,
    /// Densities of the compound-Poisson compensator part of C, per driver
    /// component intensity already multiplied in (sum over attached laws).
    pub c_poisson_density: f64,
}

impl RecoveryPath {
    /// Build R as a semimartingale path.
    pub fn r_path(&self) -> SemimartingalePath {
        let mut r = SemimartingalePath::zero(Arc::clone(&self.grid));
        for j in 0..self.grid.n_cells() {
            r.fv_ac_inc[j] = -self.spec.drawdown.at_cell(j) * self.grid.cell_dt(j);
            r.fv_sing_inc[j] = -self
                .spec
                .singular
                .as_ref()
                .map_or(0.0, |s| s.increment(self.grid.time(j), self.grid.time(j + 1)));
        }
        r.atoms = self.r_atoms.clone();
        r
    }

    pub fn xi_value(&self, i: usize) -> f64 {
        self.xi[i]
    }

    pub fn alive_at(&self, t: f64) -> bool {
        match self.tau {
            Some(tau) => t < tau - LOOKUP_TOL,
            None => true,
        }
    }

    /// Pointwise density of C^ac at grid index j (value on cell j), not
    /// stopped: drawdown plus expected Poisson-attached and hazard-driven
    /// losses.
    pub fn c_ac_density(&self, j: usize) -> f64 {
        let hazard_part = self
            .spec
            .hazard_jump
            .as_ref()
            .map_or(0.0, |h| h.hazard.at_cell(j) * (-h.law.mean()));
        self.spec.drawdown.at_cell(j) + self.c_poisson_density + hazard_part
    }

    pub fn c_sing_inc(&self, j: usize) -> f64 {
        let (lo, hi) = (self.grid.time(j), self.grid.time(j + 1));
        let mut inc = self
            .spec
            .singular
            .as_ref()
            .map_or(0.0, |s| s.increment(lo, hi));
        if let Some(h) = &self.spec.hazard_jump {
            if let Some(s) = &h.singular {
                inc += s.increment(lo, hi) * (-h.law.mean());
            }
        }
        inc
    }

    /// C_{t and tau}, exact (stopped at absorption).
    pub fn c_stopped(&self, t: f64) -> f64 {
        let cut = match self.tau {
            Some(tau) => t.min(tau),
            None => t,
        };
        let mut acc = 0.0;
        for j in 0..self.grid.n_cells() {
            let lo = self.grid.time(j);
            if lo >= cut {
                break;
            }
            let hi = self.grid.time(j + 1).min(cut);
            acc += (self.spec.drawdown.at_cell(j)
                + self.c_poisson_density
                + self
                    .spec
                    .hazard_jump
                    .as_ref()
                    .map_or(0.0, |h| h.hazard.at_cell(j) * (-h.law.mean())))
                * (hi - lo);
        }
        if let Some(s) = &self.spec.singular {
            acc += s.value(cut);
        }
        if let Some(h) = &self.spec.hazard_jump {
            if let Some(s) = &h.singular {
                acc += s.value(cut) * (-h.law.mean());
            }
        }
        acc += self
            .spec
            .scheduled
            .iter()
            .filter(|s| s.time <= cut + LOOKUP_TOL)
            .map(|s| -s.law.mean())
            .sum::<f64>();
        acc
    }
}

/// Sample the recovery pair (R, xi). Draw order (fixed): hazard-driven
/// event times cell by cell (with their marks), then the scheduled and
/// Poisson-attached marks merged chronologically.
pub fn sample_recovery(
    spec: &RecoverySpec,
    grid: &Arc<TimeGrid>,
    rng: &mut ChaCha12Rng,
    poisson_events: &[(f64, usize)],
    driver_dim: usize,
) -> Result<RecoveryPath> {
    spec.validate(grid, driver_dim)?;
    let mut r_atoms: Vec<Atom> = Vec::new();
    let mut kinds: Vec<RAtomKind> = Vec::new();
    if let Some(hj) = &spec.hazard_jump {
        // sequential inverse-transform event times; events repeat after a
        // partial loss, absorption ends the scan
        let mut absorbed = false;
        for j in 0..grid.n_cells() {
            if absorbed {
                break;
            }
            let (lo, hi) = (grid.time(j), grid.time(j + 1));
            let mut from = lo;
            loop {
                let h = hj.hazard.at_cell(j);
                let sing_inc = hj.singular.as_ref().map_or(0.0, |s| s.increment(from, hi));
                let s_rest = (-h * (hi - from) - sing_inc).exp();
                if s_rest >= 1.0 {
                    break;
                }
                let u: f64 = rng.random();
                if u <= s_rest {
                    break;
                }
                let x = if sing_inc == 0.0 {
                    from + (-u.ln()) / h
                } else {
                    let surv = |x: f64| {
                        (-h * (x - from)
                            - hj.singular.as_ref().map_or(0.0, |s| s.increment(from, x)))
                        .exp()
                    };
                    let (mut a, mut b) = (from, hi);
                    for _ in 0..80 {
                        let m = 0.5 * (a + b);
                        if surv(m) > u {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    0.5 * (a + b)
                };
                let x = x.min(hi);
                let dr = hj.law.sample(rng);
                if dr != 0.0 {
                    r_atoms.push(Atom { time: x, size: dr });
                    kinds.push(RAtomKind::Hazard);
                    if dr <= -1.0 {
                        absorbed = true;
                        break;
                    }
                }
                if x >= hi - 1e-15 {
                    break;
                }
                from = x;
            }
        }
    }
    enum Ev<'a> {
        Sched(&'a ScheduledRecovery),
        Pois(&'a MarkLaw),
    }
    let mut evs: Vec<(f64, Ev)> = spec
        .scheduled
        .iter()
        .map(|s| (s.time, Ev::Sched(s)))
        .collect();
    for &(t, comp) in poisson_events {
        if let Some(law) = spec.poisson_law_for(comp) {
            evs.push((t, Ev::Pois(law)));
        }
    }
    evs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (t, ev) in evs {
        let (law, kind) = match ev {
            Ev::Sched(s) => (&s.law, RAtomKind::Scheduled),
            Ev::Pois(law) => (law, RAtomKind::Poisson),
        };
        let dr = law.sample(rng);
        if dr != 0.0 {
            r_atoms.push(Atom { time: t, size: dr });
            kinds.push(kind);
        }
    }
    let mut order: Vec<usize> = (0..r_atoms.len()).collect();
    order.sort_by(|&a, &b| r_atoms[a].time.partial_cmp(&r_atoms[b].time).unwrap());
    let r_atoms: Vec<Atom> = order.iter().map(|&i| r_atoms[i]).collect();
    let kinds: Vec<RAtomKind> = order.iter().map(|&i| kinds[i]).collect();
    let mut path = RecoveryPath {
        grid: Arc::clone(grid),
        spec: spec.clone(),
        r_atoms,
        r_atom_kinds: kinds,
        xi: Vec::new(),
        tau: None,
        c_poisson_density: 0.0, // filled by the caller with intensities
    };
    let exp = stochastic_exponential(&path.r_path());
    path.xi = exp.values;
    path.tau = exp.absorbed_at;
    Ok(path)
}

/// One-shot recovery sampling for specs without Poisson attachment.
pub fn recovery_pair(
    spec: &RecoverySpec,
    grid: &Arc<TimeGrid>,
    seed: u64,
) -> Result<RecoveryPath> {
    if !spec.poisson.is_empty() {
        return Err(TsError::invalid(
            "poisson-attached recovery needs the driver's events; sample through the model",
        ));
    }
    let mut rng = crate::rng::path_rng(seed, 0);
    sample_recovery(spec, grid, &mut rng, &[], 1)
}

/// Zero recovery embedded as a recovery pair: R = -H (a pure jump of size
/// -1 at the default time), xi = 1 - H, and C equal to the compensator
/// triplet of the default path (the continuous hazard becomes a
/// hazard-driven full-loss jump law).
pub fn embed_zero_recovery(default_path: &DefaultPath) -> RecoveryPath {
    let grid = Arc::clone(&default_path.grid);
    let (r_atoms, kinds) = match default_path.tau {
        Some(tau) if tau <= grid.horizon() + LOOKUP_TOL => (
            vec![Atom {
                time: tau,
                size: -1.0,
            }],
            vec![match default_path.kind {
                Some(DefaultKind::DiscreteHazard) => RAtomKind::Scheduled,
                _ => RAtomKind::Hazard,
            }],
        ),
        _ => (Vec::new(), Vec::new()),
    };
    let spec = RecoverySpec {
        drawdown: DensitySpec::zero(),
        singular: None,
        scheduled: default_path
            .spec
            .discrete
            .iter()
            .map(|d| ScheduledRecovery {
                time: d.time,
                law: MarkLaw(vec![(-1.0, d.dhp), (0.0, 1.0 - d.dhp)]),
            })
            .collect(),
        poisson: Vec::new(),
        hazard_jump: Some(RecoveryHazard {
            hazard: default_path.spec.hazard.clone(),
            singular: default_path.spec.singular.clone(),
            law: MarkLaw::degenerate(-1.0),
        }),
    };
    let mut path = RecoveryPath {
        grid,
        spec,
        r_atoms,
        r_atom_kinds: kinds,
        xi: Vec::new(),
        tau: None,
        c_poisson_density: 0.0,
    };
    // xi = 1 - H exactly: E(-H)
    let mut r = SemimartingalePath::zero(Arc::clone(&path.grid));
    r.atoms = path.r_atoms.clone();
    let exp = stochastic_exponential(&r);
    path.xi = exp.values;
    path.tau = exp.absorbed_at;
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<TimeGrid> {
        Arc::new(TimeGrid::build(1.0, 0.25, &[]).unwrap())
    }

    #[test]
    fn zero_hazard_never_defaults() {
        let g = grid();
        for seed in 0..50 {
            let mut rng = crate::rng::path_rng(seed, 0);
            let p = sample_default(&DefaultSpec::none(), &g, &mut rng).unwrap();
            assert!(p.tau.is_none());
            assert_eq!(p.h_value(g.len() - 1), 0.0);
        }
    }

    #[test]
    fn certain_discrete_default() {
        let g = grid();
        let spec = DefaultSpec {
            hazard: DensitySpec::zero(),
            singular: None,
            discrete: vec![DiscreteHazard {
                time: 0.5,
                dhp: 1.0,
            }],
        };
        for seed in 0..50 {
            let mut rng = crate::rng::path_rng(seed, 0);
            let p = sample_default(&spec, &g, &mut rng).unwrap();
            assert_eq!(p.tau, Some(0.5));
            assert_eq!(p.kind, Some(DefaultKind::DiscreteHazard));
        }
    }

    #[test]
    fn hazard_default_frequency() {
        let g = grid();
        let spec = DefaultSpec {
            hazard: DensitySpec::Const(0.1),
            singular: None,
            discrete: vec![],
        };
        let n = 100_000;
        let mut defaults = 0usize;
        for seed in 0..n {
            let mut rng = crate::rng::path_rng(5, seed as u64);
            let p = sample_default(&spec, &g, &mut rng).unwrap();
            if p.tau.is_some() {
                defaults += 1;
            }
        }
        let freq = defaults as f64 / n as f64;
        let expect = 1.0 - (-0.1_f64).exp();
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (freq - expect).abs() < 3.0 * se,
            "default frequency {freq}, expected {expect} +/- {}",
            3.0 * se
        );
    }

    #[test]
    fn compensator_martingale_check() {
        let g = grid();
        let spec = DefaultSpec {
            hazard: DensitySpec::Const(0.2),
            singular: Some(SingularSpec::cantor(0.1, 0.9, 0.05)),
            discrete: vec![DiscreteHazard {
                time: 0.5,
                dhp: 0.1,
            }],
        };
        let n = 100_000;
        let checkpoints: Vec<usize> = (1..g.len()).collect();
        let mut sums = vec![0.0; checkpoints.len()];
        let mut sumsq = vec![0.0; checkpoints.len()];
        for seed in 0..n {
            let mut rng = crate::rng::path_rng(6, seed as u64);
            let p = sample_default(&spec, &g, &mut rng).unwrap();
            for (k, &i) in checkpoints.iter().enumerate() {
                let m = p.h_value(i) - p.hp_stopped(g.time(i));
                sums[k] += m;
                sumsq[k] += m * m;
            }
        }
        for k in 0..checkpoints.len() {
            let mean = sums[k] / n as f64;
            let var = sumsq[k] / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            assert!(
                mean.abs() <= 3.0 * se,
                "H - H^p mean {mean} at checkpoint {k} exceeds 3 SE {}",
                3.0 * se
            );
        }
    }

    #[test]
    fn recovery_trivial() {
        let g = grid();
        let p = recovery_pair(&RecoverySpec::none(), &g, 3).unwrap();
        assert!(p.xi.iter().all(|x| *x == 1.0));
        assert_eq!(p.c_stopped(1.0), 0.0);
        assert!(p.tau.is_none());
    }

    #[test]
    fn single_fractional_loss() {
        let g = grid();
        let spec = RecoverySpec {
            drawdown: DensitySpec::zero(),
            singular: None,
            scheduled: vec![ScheduledRecovery {
                time: 0.5,
                law: MarkLaw::degenerate(-0.4),
            }],
            poisson: vec![],
            hazard_jump: None,
        };
        let p = recovery_pair(&spec, &g, 1).unwrap();
        let i = g.idx(0.5).unwrap();
        assert!((p.xi[i - 1] - 1.0).abs() < 1e-15);
        assert!((p.xi[i] - 0.6).abs() < 1e-15);
        assert!((p.xi[g.len() - 1] - 0.6).abs() < 1e-15);
        assert!((p.spec.dc_at(0.5) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn kill_law_frequency_and_dc() {
        let g = grid();
        let prob = 0.3;
        let spec = RecoverySpec {
            drawdown: DensitySpec::zero(),
            singular: None,
            scheduled: vec![ScheduledRecovery {
                time: 0.75,
                law: MarkLaw(vec![(-1.0, prob), (0.0, 1.0 - prob)]),
            }],
            poisson: vec![],
            hazard_jump: None,
        };
        assert!((spec.dc_at(0.75) - prob).abs() < 1e-15);
        let n = 10_000;
        let mut kills = 0;
        for seed in 0..n {
            let p = recovery_pair(&spec, &g, seed).unwrap();
            if p.tau.is_some() {
                kills += 1;
            }
        }
        let freq = kills as f64 / n as f64;
        let se = (prob * (1.0 - prob) / n as f64).sqrt();
        assert!(
            (freq - prob).abs() < 3.0 * se + 1e-9,
            "kill frequency {freq} vs {prob}"
        );
    }

    #[test]
    fn xi_monotone_and_starts_at_one() {
        let g = grid();
        let spec = RecoverySpec {
            drawdown: DensitySpec::Const(0.1),
            singular: Some(SingularSpec::cantor(0.0, 1.0, 0.2)),
            scheduled: vec![
                ScheduledRecovery {
                    time: 0.25,
                    law: MarkLaw(vec![(-0.2, 0.5), (0.0, 0.5)]),
                },
                ScheduledRecovery {
                    time: 0.75,
                    law: MarkLaw(vec![(-1.0, 0.2), (-0.5, 0.3), (0.0, 0.5)]),
                },
            ],
            poisson: vec![],
            hazard_jump: None,
        };
        for seed in 0..200 {
            let p = recovery_pair(&spec, &g, seed).unwrap();
            assert_eq!(p.xi[0], 1.0);
            for i in 1..p.xi.len() {
                assert!(p.xi[i] <= p.xi[i - 1] + 1e-15);
                assert!((0.0..=1.0).contains(&p.xi[i]));
            }
        }
    }

    #[test]
    fn embed_zero_recovery_identities() {
        let g = grid();
        // tau = +inf
        let spec = DefaultSpec::none();
        let mut rng = crate::rng::path_rng(0, 0);
        let d = sample_default(&spec, &g, &mut rng).unwrap();
        let r = embed_zero_recovery(&d);
        assert!(r.xi.iter().all(|x| *x == 1.0));

        // tau = 0.5 via certain discrete default
        let spec = DefaultSpec {
            hazard: DensitySpec::zero(),
            singular: None,
            discrete: vec![DiscreteHazard {
                time: 0.5,
                dhp: 1.0,
            }],
        };
        let mut rng = crate::rng::path_rng(0, 0);
        let d = sample_default(&spec, &g, &mut rng).unwrap();
        let r = embed_zero_recovery(&d);
        for i in 0..g.len() {
            let expect = if g.time(i) < 0.5 { 1.0 } else { 0.0 };
            assert_eq!(r.xi[i], expect);
        }

        // E(-H) = 1 - H pathwise on random hazard paths
        let spec = DefaultSpec {
            hazard: DensitySpec::Const(1.5),
            singular: None,
            discrete: vec![DiscreteHazard {
                time: 0.25,
                dhp: 0.3,
            }],
        };
        for seed in 0..100 {
            let mut rng = crate::rng::path_rng(7, seed);
            let d = sample_default(&spec, &g, &mut rng).unwrap();
            let r = embed_zero_recovery(&d);
            for i in 0..g.len() {
                assert_eq!(r.xi[i], 1.0 - d.h_value(i), "seed {seed} idx {i}");
            }
            // C triplet equals the stopped compensator of H
            for i in 0..g.len() {
                let t = g.time(i);
                assert!((r.c_stopped(t) - d.hp_stopped(t)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let g = grid();
        let bad = DefaultSpec {
            hazard: DensitySpec::zero(),
            singular: None,
            discrete: vec![DiscreteHazard {
                time: 0.5,
                dhp: 1.2,
            }],
        };
        assert!(bad.validate(&g).is_err());
        let bad = RecoverySpec {
            drawdown: DensitySpec::zero(),
            singular: None,
            scheduled: vec![ScheduledRecovery {
                time: 0.5,
                law: MarkLaw::degenerate(0.5),
            }],
            poisson: vec![],
            hazard_jump: None,
        };
        assert!(bad.validate(&g, 1).is_err());
    }
}
