//! The bond model: all component specs plus per-path sampling.
//!
//! Sampling order per path (fixed, documented): driver (cells then jumps),
//! then the A-integrator's scheduled jumps in time order, then risky atom
//! weights in spec order, then the credit component (default draw or
//! recovery marks). One ChaCha stream per path makes any path reproducible
//! in isolation.

use std::sync::Arc;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::credit_events::{
    embed_zero_recovery, sample_default, sample_recovery, DefaultPath, DefaultSpec, RecoveryPath,
    RecoverySpec,
};
use crate::error::{Result, TsError};
use crate::forward_fields::{CoefficientSpec, InitialCurves};
use crate::risky_measure::{RiskyMeasurePath, RiskySpec};
use crate::time_paths::driver::{DriverPath, DriverSampler, DriverSpec, JumpKind, MarkLaw};
use crate::time_paths::fv::{Atom, FvPath, FvSpec};
use crate::time_paths::grid::{TimeGrid, LOOKUP_TOL};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// The integrator A of the drift fields: a deterministic increasing part
/// plus optional random nonnegative jumps at scheduled times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AIntegratorSpec {
    pub fv: FvSpec,
    pub scheduled: Vec<(f64, MarkLaw)>,
}

impl AIntegratorSpec {
    /// A_t = t.
    pub fn lebesgue() -> Self {
        AIntegratorSpec {
            fv: FvSpec {
                ac: crate::time_paths::fv::DensitySpec::Const(1.0),
                singular: None,
                jumps: Vec::new(),
                increasing: true,
            },
            scheduled: Vec::new(),
        }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if !self.fv.increasing {
            return Err(TsError::invalid("A must be declared increasing"));
        }
        for (t, law) in &self.scheduled {
            if grid.idx(*t).is_err() {
                return Err(TsError::OffGrid(*t));
            }
            if *t <= 0.0 {
                return Err(TsError::invalid("scheduled A-jump times must be > 0"));
            }
            law.validate()?;
            if law.outcomes().iter().any(|&(v, p)| p > 0.0 && v < 0.0) {
                return Err(TsError::invalid("A-jump marks must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn law_at(&self, t: f64) -> Option<&MarkLaw> {
        self.scheduled
            .iter()
            .find(|(s, _)| (*s - t).abs() <= LOOKUP_TOL)
            .map(|(_, l)| l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortRateSpec {
    Const(f64),
    /// One value per grid point (value on the cell starting there).
    Grid(Vec<f64>),
    /// r_t = f(t,t) + g(t,t) m_t - h_t (zero recovery) or - C^ac_t (general),
    /// evaluated pathwise; the rate produced by the drift condition.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMode {
    Zero,
    General,
}

#[derive(Debug, Clone)]
pub struct BondModel {
    pub grid: Arc<TimeGrid>,
    pub curves: InitialCurves,
    pub coefs: CoefficientSpec,
    pub driver: DriverSpec,
    pub a_integrator: AIntegratorSpec,
    pub risky: RiskySpec,
    pub mode: RecoveryMode,
    pub default_spec: DefaultSpec,
    pub recovery_spec: RecoverySpec,
    pub short_rate: ShortRateSpec,
}

impl BondModel {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        self.driver.validate(g)?;
        self.curves.f0.validate(g)?;
        self.curves.g0.validate(g)?;
        self.coefs.validate(self.driver.dim, g)?;
        self.a_integrator.validate(g)?;
        self.risky.validate(g)?;
        self.default_spec.validate(g)?;
        self.recovery_spec.validate(g, self.driver.dim)?;
        match &self.short_rate {
            ShortRateSpec::Const(r) => {
                if !r.is_finite() {
                    return Err(TsError::invalid("short rate must be finite"));
                }
            }
            ShortRateSpec::Grid(v) => {
                if v.len() != g.len() {
                    return Err(TsError::invalid("short rate needs one value per grid point"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(TsError::invalid("short rate must be finite"));
                }
            }
            ShortRateSpec::Diagonal => {}
        }
        // time-zero revelations must be deterministic so that P(0,T) is a
        // constant
        for a in &self.risky.atoms {
            if a.reveal <= LOOKUP_TOL && !a.law.is_degenerate() {
                return Err(TsError::invalid(
                    "risky atoms revealed at time zero must have degenerate weight laws",
                ));
            }
        }
        match self.mode {
            RecoveryMode::Zero => {
                if !self.recovery_spec.scheduled.is_empty()
                    || !self.recovery_spec.poisson.is_empty()
                {
                    return Err(TsError::invalid(
                        "zero-recovery mode does not take a recovery spec",
                    ));
                }
            }
            RecoveryMode::General => {
                if !self.default_spec.is_trivial() {
                    return Err(TsError::invalid(
                        "general-recovery mode encodes credit events in the recovery spec",
                    ));
                }
            }
        }
        Ok(())
    }

    /// All times that must sit on the grid (scheduled jumps, risky dates,
    /// discrete hazards, scheduled recoveries).
    pub fn required_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend(self.driver.scheduled_times());
        for f in &self.driver.fv {
            out.extend(f.jumps.iter().map(|a| a.time));
        }
        out.extend(self.a_integrator.fv.jumps.iter().map(|a| a.time));
        out.extend(self.a_integrator.scheduled.iter().map(|(t, _)| *t));
        for a in &self.risky.atoms {
            out.push(a.reveal);
            out.push(a.maturity);
        }
        out.extend(self.default_spec.discrete.iter().map(|d| d.time));
        out.extend(self.recovery_spec.scheduled.iter().map(|s| s.time));
        out
    }

    /// Predictable event times: grid times where any component can jump.
    pub fn predictable_event_times(&self) -> Vec<f64> {
        let mut out = self.required_times();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() <= LOOKUP_TOL);
        out.retain(|t| *t > LOOKUP_TOL);
        out
    }
}

// ---------------------------------------------------------------------------
// Path bundle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum CreditPath {
    /// Zero recovery: the default path plus its embedding xi = 1 - H.
    Zero(DefaultPath, RecoveryPath),
    General(RecoveryPath),
}

impl CreditPath {
    pub fn xi(&self, i: usize) -> f64 {
        match self {
            CreditPath::Zero(_, r) | CreditPath::General(r) => r.xi[i],
        }
    }

    /// Absorption time (default / recovery exhausted).
    pub fn tau(&self) -> Option<f64> {
        match self {
            CreditPath::Zero(_, r) | CreditPath::General(r) => r.tau,
        }
    }

    pub fn alive_at(&self, t: f64) -> bool {
        match self.tau() {
            Some(tau) => t < tau - LOOKUP_TOL,
            None => true,
        }
    }

    pub fn recovery(&self) -> &RecoveryPath {
        match self {
            CreditPath::Zero(_, r) | CreditPath::General(r) => r,
        }
    }
}

/// One discrete event on a path: everything that jumps at this time.
#[derive(Debug, Clone)]
pub struct PathEvent {
    pub time: f64,
    /// Raw jump of A.
    pub da: f64,
    /// Raw jump of X per component.
    pub dx: Vec<f64>,
    /// Jump of the purely discontinuous martingale part of X.
    pub dxd: Vec<f64>,
    /// Risky atoms revealed here: (maturity, weight).
    pub revealed: Vec<(f64, f64)>,
    /// Jump of the default indicator (0 or 1).
    pub dh: f64,
    /// Jump of the recovery process R (zero recovery: -dh).
    pub dr: f64,
    /// Aggregated weight of atoms maturing here (the mu_bar jump, before
    /// any maturity cap).
    pub maturing_weight: f64,
    /// True at scheduled/grid times; false at Poisson events and at a
    /// continuous-hazard default time.
    pub predictable: bool,
    /// Component index when this is a Poisson event.
    pub poisson_comp: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PathBundle {
    pub grid: Arc<TimeGrid>,
    pub driver: DriverPath,
    pub a_proc: FvPath,
    pub risky: RiskyMeasurePath,
    pub credit: CreditPath,
    /// Discrete events merged by exact time, chronological.
    pub events: Vec<PathEvent>,
}

pub(crate) fn merge_events(
    grid: &TimeGrid,
    driver: &DriverPath,
    a_proc: &FvPath,
    risky: &RiskyMeasurePath,
    credit: &CreditPath,
) -> Vec<PathEvent> {
    let d = driver.dim;
    let mut events: Vec<PathEvent> = Vec::new();
    let at = |time: f64, events: &mut Vec<PathEvent>| -> usize {
        if let Some(i) = events
            .iter()
            .position(|e: &PathEvent| (e.time - time).abs() <= LOOKUP_TOL)
        {
            i
        } else {
            events.push(PathEvent {
                time,
                da: 0.0,
                dx: vec![0.0; d],
                dxd: vec![0.0; d],
                revealed: Vec::new(),
                dh: 0.0,
                dr: 0.0,
                maturing_weight: 0.0,
                predictable: true,
                poisson_comp: None,
            });
            events.len() - 1
        }
    };
    for j in &driver.jumps {
        let i = at(j.time, &mut events);
        for c in 0..d {
            events[i].dx[c] += j.dx[c];
            events[i].dxd[c] += j.dxd[c];
        }
        if j.kind == JumpKind::Poisson {
            events[i].predictable = false;
            events[i].poisson_comp = Some(
                j.dx.iter()
                    .position(|x| *x != 0.0)
                    .unwrap_or(0),
            );
        }
    }
    for c in 0..d {
        for a in &driver.fv[c].jumps {
            let i = at(a.time, &mut events);
            events[i].dx[c] += a.size;
        }
    }
    for a in &a_proc.jumps {
        let i = at(a.time, &mut events);
        events[i].da += a.size;
    }
    for atom in &risky.atoms {
        let i = at(atom.reveal, &mut events);
        events[i].revealed.push((atom.maturity, atom.weight));
        let i = at(atom.maturity, &mut events);
        events[i].maturing_weight += atom.weight;
    }
    match credit {
        CreditPath::Zero(dp, _) => {
            if let Some(tau) = dp.tau {
                if tau <= grid.horizon() + LOOKUP_TOL {
                    let i = at(tau, &mut events);
                    events[i].dh = 1.0;
                    events[i].dr = -1.0;
                    if dp.kind == Some(crate::credit_events::DefaultKind::ContinuousHazard) {
                        events[i].predictable = false;
                    }
                }
            }
        }
        CreditPath::General(rp) => {
            for (a, kind) in rp.r_atoms.iter().zip(rp.r_atom_kinds.iter()) {
                let i = at(a.time, &mut events);
                events[i].dr += a.size;
                // Poisson-attached marks inherit unpredictability through the
                // driver merge; hazard-driven events are inaccessible too
                if *kind == crate::credit_events::RAtomKind::Hazard {
                    events[i].predictable = false;
                }
            }
        }
    }
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    events
}

// ---------------------------------------------------------------------------
// Sampler
// ---------------------------------------------------------------------------

pub struct ModelSampler {
    pub model: Arc<BondModel>,
    driver_sampler: DriverSampler,
}

impl ModelSampler {
    pub fn new(model: Arc<BondModel>) -> Result<Self> {
        model.validate()?;
        for t in model.required_times() {
            if model.grid.idx(t).is_err() {
                return Err(TsError::OffGrid(t));
            }
        }
        let driver_sampler = DriverSampler::prepare(&model.driver, &model.grid)?;
        Ok(ModelSampler {
            model,
            driver_sampler,
        })
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> Result<PathBundle> {
        let m = &self.model;
        let grid = &m.grid;
        let driver = self.driver_sampler.sample(rng)?;

        let mut a_proc = FvPath::sample(&m.a_integrator.fv, grid)?;
        let mut sched: Vec<&(f64, MarkLaw)> = m.a_integrator.scheduled.iter().collect();
        sched.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for (t, law) in sched {
            let v = law.sample(rng);
            if v != 0.0 {
                a_proc.jumps.push(Atom { time: *t, size: v });
            }
        }
        a_proc
            .jumps
            .sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());

        let risky = RiskyMeasurePath::sample(&m.risky, grid, rng)?;

        let credit = match m.mode {
            RecoveryMode::Zero => {
                let dp = sample_default(&m.default_spec, grid, rng)?;
                let rp = embed_zero_recovery(&dp);
                CreditPath::Zero(dp, rp)
            }
            RecoveryMode::General => {
                let poisson_events: Vec<(f64, usize)> = driver
                    .jumps
                    .iter()
                    .filter(|j| j.kind == JumpKind::Poisson)
                    .map(|j| {
                        (
                            j.time,
                            j.dx.iter().position(|x| *x != 0.0).unwrap_or(0),
                        )
                    })
                    .collect();
                let mut rp =
                    sample_recovery(&m.recovery_spec, grid, rng, &poisson_events, m.driver.dim)?;
                rp.c_poisson_density = m
                    .recovery_spec
                    .poisson
                    .iter()
                    .map(|p| m.driver.poisson[p.component].intensity * (-p.law.mean()))
                    .sum();
                CreditPath::General(rp)
            }
        };

        let events = merge_events(grid, &driver, &a_proc, &risky, &credit);
        Ok(PathBundle {
            grid: Arc::clone(grid),
            driver,
            a_proc,
            risky,
            credit,
            events,
        })
    }

    /// Deterministic previsible skeleton for the drift constructor and the
    /// closed-form compensator solvers. Requires the tractable class:
    /// deterministic A, deterministic risky weights, beta identically zero.
    pub fn skeleton(&self) -> Result<PathBundle> {
        let m = &self.model;
        for (t, law) in &m.a_integrator.scheduled {
            if !law.is_degenerate() {
                return Err(TsError::Untractable(format!(
                    "A-jump law at {t} is random; the skeleton needs deterministic A"
                )));
            }
        }
        for a in &m.risky.atoms {
            if !a.law.is_degenerate() {
                return Err(TsError::Untractable(format!(
                    "risky weight at ({}, {}) is random; the skeleton needs deterministic weights",
                    a.reveal, a.maturity
                )));
            }
        }
        if m.coefs.beta.iter().any(|f| !f.is_zero()) {
            return Err(TsError::Untractable(
                "beta must vanish for deterministic g-dynamics".into(),
            ));
        }
        let grid = &m.grid;
        let driver = self.driver_sampler.zero_path()?;
        let mut a_proc = FvPath::sample(&m.a_integrator.fv, grid)?;
        for (t, law) in &m.a_integrator.scheduled {
            let v = law.mean();
            if v != 0.0 {
                a_proc.jumps.push(Atom { time: *t, size: v });
            }
        }
        a_proc
            .jumps
            .sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        let mut risky = RiskyMeasurePath::empty(Arc::clone(grid));
        risky.ac = m.risky.ac.clone();
        risky.singular = m.risky.singular.clone();
        for a in &m.risky.atoms {
            let w = a.law.mean();
            if w == 0.0 {
                continue;
            }
            let atom = crate::risky_measure::RiskyAtom {
                reveal: a.reveal,
                maturity: a.maturity,
                weight: w,
            };
            if (a.reveal - a.maturity).abs() <= crate::time_paths::grid::LOOKUP_TOL {
                risky.flagged.push(atom);
            } else {
                risky.atoms.push(atom);
            }
        }
        let credit = match m.mode {
            RecoveryMode::Zero => {
                let dp = DefaultPath {
                    grid: Arc::clone(grid),
                    spec: m.default_spec.clone(),
                    tau: None,
                    kind: None,
                };
                let rp = embed_zero_recovery(&dp);
                CreditPath::Zero(dp, rp)
            }
            RecoveryMode::General => {
                let mut rp = sample_recovery(
                    &RecoverySpec {
                        drawdown: m.recovery_spec.drawdown.clone(),
                        singular: m.recovery_spec.singular.clone(),
                        scheduled: Vec::new(),
                        poisson: Vec::new(),
                        hazard_jump: None,
                    },
                    grid,
                    &mut crate::rng::path_rng(0, 0),
                    &[],
                    m.driver.dim,
                )?;
                rp.spec = m.recovery_spec.clone();
                rp.c_poisson_density = m
                    .recovery_spec
                    .poisson
                    .iter()
                    .map(|p| m.driver.poisson[p.component].intensity * (-p.law.mean()))
                    .sum();
                CreditPath::General(rp)
            }
        };
        let events = merge_events(grid, &driver, &a_proc, &risky, &credit);
        Ok(PathBundle {
            grid: Arc::clone(grid),
            driver,
            a_proc,
            risky,
            credit,
            events,
        })
    }
}

/// Map a zero-recovery model and one of its sampled bundles onto the
/// general-recovery pipeline with R = -H: the recovery spec carries the
/// hazard triplet as its compensating process and the bundle reuses the very
/// same realized randomness.
pub fn embed_zero_as_general(
    model: &BondModel,
    bundle: &PathBundle,
) -> Result<(BondModel, PathBundle)> {
    let dp = match &bundle.credit {
        CreditPath::Zero(dp, _) => dp,
        CreditPath::General(_) => {
            return Err(TsError::invalid("bundle is already general-recovery"))
        }
    };
    let rp = embed_zero_recovery(dp);
    let mut general = model.clone();
    general.mode = RecoveryMode::General;
    general.recovery_spec = rp.spec.clone();
    general.default_spec = DefaultSpec::none();
    let credit = CreditPath::General(rp);
    let events = merge_events(&model.grid, &bundle.driver, &bundle.a_proc, &bundle.risky, &credit);
    Ok((
        general,
        PathBundle {
            grid: Arc::clone(&bundle.grid),
            driver: bundle.driver.clone(),
            a_proc: bundle.a_proc.clone(),
            risky: bundle.risky.clone(),
            credit,
            events,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward_fields::{CoefField, CurveSpec};
    use crate::risky_measure::RiskyAtomSpec;

    pub fn tiny_model() -> BondModel {
        let grid = Arc::new(TimeGrid::build(1.0, 0.25, &[]).unwrap());
        BondModel {
            grid,
            curves: InitialCurves {
                f0: CurveSpec::Const(0.02),
                g0: CurveSpec::Const(0.05),
            },
            coefs: CoefficientSpec {
                a: CoefField::Zero,
                b: vec![CoefField::Zero],
                alpha: CoefField::Zero,
                beta: vec![CoefField::Zero],
            },
            driver: DriverSpec::zero(1),
            a_integrator: AIntegratorSpec::lebesgue(),
            risky: RiskySpec::empty(),
            mode: RecoveryMode::Zero,
            default_spec: DefaultSpec::none(),
            recovery_spec: RecoverySpec::none(),
            short_rate: ShortRateSpec::Const(0.0),
        }
    }

    #[test]
    fn sampler_roundtrip_and_events() {
        let mut m = tiny_model();
        m.risky.atoms.push(RiskyAtomSpec {
            reveal: 0.25,
            maturity: 0.75,
            law: MarkLaw::degenerate(0.5),
        });
        let sampler = ModelSampler::new(Arc::new(m)).unwrap();
        let mut rng = crate::rng::path_rng(1, 0);
        let b = sampler.sample(&mut rng).unwrap();
        // revelation event and maturity marker present
        assert!(b
            .events
            .iter()
            .any(|e| (e.time - 0.25).abs() < 1e-12 && !e.revealed.is_empty()));
        assert!(b
            .events
            .iter()
            .any(|e| (e.time - 0.75).abs() < 1e-12 && e.maturing_weight == 0.5));
    }

    #[test]
    fn zero_reveal_must_be_deterministic() {
        let mut m = tiny_model();
        m.risky.atoms.push(RiskyAtomSpec {
            reveal: 0.0,
            maturity: 0.5,
            law: MarkLaw(vec![(0.0, 0.5), (1.0, 0.5)]),
        });
        assert!(m.validate().is_err());
    }

    #[test]
    fn skeleton_rejects_random_weights() {
        let mut m = tiny_model();
        m.risky.atoms.push(RiskyAtomSpec {
            reveal: 0.25,
            maturity: 0.75,
            law: MarkLaw(vec![(0.0, 0.5), (1.0, 0.5)]),
        });
        let sampler = ModelSampler::new(Arc::new(m)).unwrap();
        assert!(matches!(
            sampler.skeleton(),
            Err(TsError::Untractable(_))
        ));
    }
}
