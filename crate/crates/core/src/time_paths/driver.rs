//! The d-dimensional driving semimartingale.
//!
//! A driver path is carried in canonical form: the continuous local
//! martingale X^c with an explicit bracket decomposition (matrix density psi
//! plus singular increments zeta), the purely discontinuous martingale X^d
//! (compensated compound Poisson plus centered scheduled jumps), and a
//! finite-variation part. Scheduled jump marks are split at sampling time:
//! the centered mark goes to X^d, the mean is a predictable jump of the
//! finite-variation part.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TsError};
use crate::time_paths::fv::{FvPath, FvSpec, SingularSpec};
use crate::time_paths::grid::{TimeGrid, LOOKUP_TOL};

// ---------------------------------------------------------------------------
// Finite discrete mark laws
// ---------------------------------------------------------------------------

/// Finite discrete distribution with probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkLaw(pub Vec<(f64, f64)>);

impl MarkLaw {
    pub fn degenerate(v: f64) -> Self {
        MarkLaw(vec![(v, 1.0)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(TsError::invalid("mark law must have at least one outcome"));
        }
        let mut total = 0.0;
        for &(v, p) in &self.0 {
            if !v.is_finite() || !p.is_finite() || p < 0.0 {
                return Err(TsError::invalid("mark law entries must be finite, probs >= 0"));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(TsError::invalid(format!(
                "mark law probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().map(|&(v, p)| v * p).sum()
    }

    /// E[f(V)] as an exact finite sum.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.0.iter().map(|&(v, p)| p * f(v)).sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.0.iter().filter(|&&(_, p)| p > 0.0).count() <= 1
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(v, p) in &self.0 {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.0.last().unwrap().0
    }
}

// ---------------------------------------------------------------------------
// Small symmetric matrices (d is tiny)
// ---------------------------------------------------------------------------

/// Dense symmetric d x d matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SymMat {
    pub fn zero(dim: usize) -> Self {
        SymMat {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(TsError::invalid("covariance matrix must be square"));
            }
            data.extend_from_slice(r);
        }
        let m = SymMat { dim, data };
        m.validate()?;
        Ok(m)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..i {
                if (self.get(i, j) - self.get(j, i)).abs() > 1e-12 {
                    return Err(TsError::invalid("covariance matrix must be symmetric"));
                }
            }
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(TsError::invalid("covariance matrix must be finite"));
        }
        psd_chol(self).map(|_| ())
    }

    pub fn scaled(&self, s: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &SymMat, s: f64) {
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * s;
        }
    }

    /// x' M y
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i] * self.get(i, j) * y[j];
            }
        }
        acc
    }
}

/// Lower-triangular factor L with L L' = M for a positive semidefinite M.
/// Zero pivots are allowed (rank-deficient covariances).
pub fn psd_chol(m: &SymMat) -> Result<Vec<f64>> {
    let n = m.dim;
    let mut l = vec![0.0; n * n];
    let max_diag = (0..n).map(|i| m.get(i, i).abs()).fold(0.0_f64, f64::max);
    let tol = 1e-10 * max_diag.max(1.0);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d > tol {
            let root = d.sqrt();
            l[j * n + j] = root;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / root;
            }
        } else if d > -tol {
            l[j * n + j] = 0.0;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if s.abs() > 1e-8 * max_diag.max(1.0) {
                    return Err(TsError::invalid(
                        "covariance matrix is not positive semidefinite",
                    ));
                }
                l[i * n + j] = 0.0;
            }
        } else {
            return Err(TsError::invalid(
                "covariance matrix is not positive semidefinite",
            ));
        }
    }
    Ok(l)
}

/// Matrix-valued step function of time: one PSD matrix per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMatrix {
    Const(SymMat),
    Cells(Vec<SymMat>),
}

impl StepMatrix {
    pub fn at_cell(&self, j: usize) -> &SymMat {
        match self {
            StepMatrix::Const(m) => m,
            StepMatrix::Cells(v) => &v[j],
        }
    }

    pub fn validate(&self, dim: usize, grid: &TimeGrid) -> Result<()> {
        match self {
            StepMatrix::Const(m) => {
                if m.dim != dim {
                    return Err(TsError::invalid("covariance dimension mismatch"));
                }
                m.validate()
            }
            StepMatrix::Cells(v) => {
                if v.len() != grid.n_cells() {
                    return Err(TsError::invalid("covariance needs one matrix per cell"));
                }
                for m in v {
                    if m.dim != dim {
                        return Err(TsError::invalid("covariance dimension mismatch"));
                    }
                    m.validate()?;
                }
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Driver specification
// ---------------------------------------------------------------------------

/// Singular-continuous part of the bracket: scalar Cantor-type clock times a
/// fixed PSD direction matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularBracket {
    pub clock: SingularSpec,
    pub direction: SymMat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonComp {
    pub intensity: f64,
    pub marks: MarkLaw,
}

impl PoissonComp {
    pub fn none() -> Self {
        PoissonComp {
            intensity: 0.0,
            marks: MarkLaw::degenerate(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledJumpSpec {
    pub time: f64,
    /// One mark law per driver component; independent across components.
    pub laws: Vec<MarkLaw>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverSpec {
    pub dim: usize,
    pub brownian_cov: StepMatrix,
    pub bracket_sing: Option<SingularBracket>,
    /// One entry per component.
    pub poisson: Vec<PoissonComp>,
    pub scheduled: Vec<ScheduledJumpSpec>,
    /// Finite-variation part per component (drift density, singular, jumps).
    pub fv: Vec<FvSpec>,
}

impl DriverSpec {
    /// Driver with all components identically zero.
    pub fn zero(dim: usize) -> Self {
        DriverSpec {
            dim,
            brownian_cov: StepMatrix::Const(SymMat::zero(dim)),
            bracket_sing: None,
            poisson: vec![PoissonComp::none(); dim],
            scheduled: Vec::new(),
            fv: vec![FvSpec::zero(); dim],
        }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if self.dim == 0 {
            return Err(TsError::invalid("driver dimension must be >= 1"));
        }
        self.brownian_cov.validate(self.dim, grid)?;
        if let Some(sb) = &self.bracket_sing {
            sb.clock.validate()?;
            if sb.direction.dim != self.dim {
                return Err(TsError::invalid("singular bracket dimension mismatch"));
            }
            sb.direction.validate()?;
        }
        if self.poisson.len() != self.dim {
            return Err(TsError::invalid("need one poisson entry per component"));
        }
        for p in &self.poisson {
            if !p.intensity.is_finite() || p.intensity < 0.0 {
                return Err(TsError::invalid("poisson intensity must be >= 0"));
            }
            if p.intensity > 0.0 {
                p.marks.validate()?;
            }
        }
        for s in &self.scheduled {
            if grid.idx(s.time).is_err() {
                return Err(TsError::OffGrid(s.time));
            }
            if s.time <= 0.0 {
                return Err(TsError::invalid("scheduled jump times must be > 0"));
            }
            if s.laws.len() != self.dim {
                return Err(TsError::invalid("scheduled jump needs one law per component"));
            }
            for l in &s.laws {
                l.validate()?;
            }
        }
        if self.fv.len() != self.dim {
            return Err(TsError::invalid("need one fv spec per component"));
        }
        Ok(())
    }

    pub fn scheduled_times(&self) -> Vec<f64> {
        self.scheduled.iter().map(|s| s.time).collect()
    }
}

// ---------------------------------------------------------------------------
// Driver paths
// ---------------------------------------------------------------------------

/// Per-cell bracket of X^c shared by every path of a scenario.
#[derive(Debug, Clone)]
pub struct DriverBracket {
    /// Pointwise matrix density per cell.
    pub psi: Vec<SymMat>,
    /// psi integrated over the cell.
    pub ac_mass: Vec<SymMat>,
    /// Singular increment matrix per cell.
    pub sing: Vec<SymMat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpKind {
    Poisson,
    Scheduled,
}

/// One jump event of the driver. `dx` is the raw jump of X, `dxd` the jump of
/// the purely discontinuous martingale part (centered at scheduled times).
#[derive(Debug, Clone)]
pub struct DriverJump {
    pub time: f64,
    pub kind: JumpKind,
    pub dx: Vec<f64>,
    pub dxd: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DriverPath {
    pub grid: Arc<TimeGrid>,
    pub dim: usize,
    /// Continuous-martingale increment per cell, per component.
    pub xc_inc: Vec<Vec<f64>>,
    pub bracket: Arc<DriverBracket>,
    /// Jump events sorted by time.
    pub jumps: Vec<DriverJump>,
    /// Compensator drift of the compound-Poisson part, per component
    /// (density -lambda_i E[V_i], part of X^d).
    pub xd_drift: Vec<f64>,
    /// Finite-variation part per component (user drift; scheduled-jump means
    /// are separate predictable atoms, see `fv_mean_jump_at`).
    pub fv: Vec<FvPath>,
    /// Scheduled-jump means per event time (jump of the FV part).
    pub scheduled_means: Vec<(f64, Vec<f64>)>,
}

impl DriverPath {
    /// Raw value of component `c` at grid index `i`.
    pub fn x_value(&self, c: usize, i: usize) -> f64 {
        let t = self.grid.time(i);
        let mut v = 0.0;
        for j in 0..i {
            v += self.xc_inc[j][c];
        }
        v += self.xd_drift[c] * t;
        v += self
            .jumps
            .iter()
            .take_while(|j| j.time <= t + LOOKUP_TOL)
            .map(|j| j.dx[c])
            .sum::<f64>();
        v + self.fv[c].value(i)
    }

    /// Cumulative bracket matrix at grid index `i` (quadratic form access).
    pub fn bracket_quad_to(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..i {
            acc += self.bracket.ac_mass[j].quad_form(x, x) + self.bracket.sing[j].quad_form(x, x);
        }
        acc
    }
}

/// Prepared sampler: factorizations and event bookkeeping done once per
/// scenario, shared across paths.
#[derive(Debug, Clone)]
pub struct DriverSampler {
    spec: DriverSpec,
    grid: Arc<TimeGrid>,
    bracket: Arc<DriverBracket>,
    /// Lower-triangular factor of the per-cell increment covariance.
    cell_chol: Vec<Vec<f64>>,
    xd_drift: Vec<f64>,
}

impl DriverSampler {
    pub fn prepare(spec: &DriverSpec, grid: &Arc<TimeGrid>) -> Result<Self> {
        spec.validate(grid)?;
        let n = grid.n_cells();
        let mut psi = Vec::with_capacity(n);
        let mut ac_mass = Vec::with_capacity(n);
        let mut sing = Vec::with_capacity(n);
        let mut cell_chol = Vec::with_capacity(n);
        for j in 0..n {
            let dt = grid.cell_dt(j);
            let point = spec.brownian_cov.at_cell(j).clone();
            let mass = point.scaled(dt);
            let sing_j = match &spec.bracket_sing {
                Some(sb) => sb
                    .direction
                    .scaled(sb.clock.increment(grid.time(j), grid.time(j + 1))),
                None => SymMat::zero(spec.dim),
            };
            let mut total = mass.clone();
            total.add_scaled(&sing_j, 1.0);
            cell_chol.push(psd_chol(&total)?);
            psi.push(point);
            ac_mass.push(mass);
            sing.push(sing_j);
        }
        let xd_drift = spec
            .poisson
            .iter()
            .map(|p| {
                if p.intensity > 0.0 {
                    -p.intensity * p.marks.mean()
                } else {
                    0.0
                }
            })
            .collect();
        Ok(DriverSampler {
            spec: spec.clone(),
            grid: Arc::clone(grid),
            bracket: Arc::new(DriverBracket { psi, ac_mass, sing }),
            cell_chol,
            xd_drift,
        })
    }

    pub fn spec(&self) -> &DriverSpec {
        &self.spec
    }

    /// Draw one path. Draw order (fixed): per cell the Gaussian vector, then
    /// per component the Poisson count, event times and marks; finally the
    /// scheduled jumps in time order.
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> Result<DriverPath> {
        let d = self.spec.dim;
        let n = self.grid.n_cells();
        let mut xc_inc = Vec::with_capacity(n);
        let mut jumps: Vec<DriverJump> = Vec::new();
        for j in 0..n {
            // Gaussian increment with covariance psi dt + d zeta.
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let l = &self.cell_chol[j];
            let mut inc = vec![0.0; d];
            for i in 0..d {
                let mut s = 0.0;
                for k in 0..=i {
                    s += l[i * d + k] * z[k];
                }
                inc[i] = s;
            }
            xc_inc.push(inc);

            // Poisson events inside the cell, exact event times.
            let dt = self.grid.cell_dt(j);
            let (lo, hi) = (self.grid.time(j), self.grid.time(j + 1));
            for (c, p) in self.spec.poisson.iter().enumerate() {
                if p.intensity <= 0.0 {
                    continue;
                }
                let pois = Poisson::new(p.intensity * dt)
                    .map_err(|e| TsError::Numeric(format!("poisson: {e}")))?;
                let count = pois.sample(rng) as usize;
                if count == 0 {
                    continue;
                }
                let mut times: Vec<f64> = (0..count)
                    .map(|_| lo + rng.random::<f64>() * (hi - lo))
                    .collect();
                times.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for t in times {
                    let mark = p.marks.sample(rng);
                    let mut dx = vec![0.0; d];
                    dx[c] = mark;
                    jumps.push(DriverJump {
                        time: t,
                        kind: JumpKind::Poisson,
                        dx: dx.clone(),
                        dxd: dx,
                    });
                }
            }
        }

        let mut scheduled_means = Vec::new();
        let mut scheduled: Vec<&ScheduledJumpSpec> = self.spec.scheduled.iter().collect();
        scheduled.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        for s in scheduled {
            let mut dx = vec![0.0; d];
            let mut dxd = vec![0.0; d];
            let mut mean = vec![0.0; d];
            for c in 0..d {
                let v = s.laws[c].sample(rng);
                let m = s.laws[c].mean();
                dx[c] = v;
                dxd[c] = v - m;
                mean[c] = m;
            }
            jumps.push(DriverJump {
                time: s.time,
                kind: JumpKind::Scheduled,
                dx,
                dxd,
            });
            scheduled_means.push((s.time, mean));
        }
        jumps.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());

        let fv = self
            .spec
            .fv
            .iter()
            .map(|f| FvPath::sample(f, &self.grid))
            .collect::<Result<Vec<_>>>()?;

        Ok(DriverPath {
            grid: Arc::clone(&self.grid),
            dim: d,
            xc_inc,
            bracket: Arc::clone(&self.bracket),
            jumps,
            xd_drift: self.xd_drift.clone(),
            fv,
            scheduled_means,
        })
    }
}

impl DriverSampler {
    /// The previsible zero path: no Gaussian or jump draws, but the bracket,
    /// the compensator drift and the deterministic FV parts of the model.
    pub fn zero_path(&self) -> Result<DriverPath> {
        let d = self.spec.dim;
        let n = self.grid.n_cells();
        let fv = self
            .spec
            .fv
            .iter()
            .map(|f| FvPath::sample(f, &self.grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(DriverPath {
            grid: Arc::clone(&self.grid),
            dim: d,
            xc_inc: vec![vec![0.0; d]; n],
            bracket: Arc::clone(&self.bracket),
            jumps: Vec::new(),
            xd_drift: self.xd_drift.clone(),
            fv,
            scheduled_means: Vec::new(),
        })
    }
}

/// One-shot sampling entry point.
pub fn sample_driver(spec: &DriverSpec, grid: &Arc<TimeGrid>, seed: u64) -> Result<DriverPath> {
    let sampler = DriverSampler::prepare(spec, grid)?;
    let mut rng = crate::rng::path_rng(seed, 0);
    sampler.sample(&mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time_paths::fv::{Atom, DensitySpec};

    fn grid(h: f64, s: f64) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::build(h, s, &[]).unwrap())
    }

    #[test]
    fn zero_spec_gives_zero_path() {
        let g = grid(1.0, 0.25);
        let p = sample_driver(&DriverSpec::zero(2), &g, 7).unwrap();
        for i in 0..g.len() {
            assert_eq!(p.x_value(0, i), 0.0);
            assert_eq!(p.x_value(1, i), 0.0);
        }
        assert!(p.jumps.is_empty());
    }

    #[test]
    fn pure_drift() {
        let g = grid(1.0, 0.25);
        let mut spec = DriverSpec::zero(1);
        spec.fv[0].ac = DensitySpec::Const(0.03);
        let p = sample_driver(&spec, &g, 1).unwrap();
        assert!((p.x_value(0, g.len() - 1) - 0.03).abs() < 1e-15);
        assert!(p.jumps.is_empty());
        assert!(p.xc_inc.iter().all(|c| c[0] == 0.0));
    }

    #[test]
    fn brownian_unit_variance() {
        let g = grid(1.0, 1.0);
        let mut spec = DriverSpec::zero(1);
        spec.brownian_cov = StepMatrix::Const(SymMat::identity(1));
        let sampler = DriverSampler::prepare(&spec, &g).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut rng = crate::rng::path_rng(42, i);
            let p = sampler.sample(&mut rng).unwrap();
            let x = p.x_value(0, 1);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(
            (var - 1.0).abs() < 0.02,
            "sample variance {var} should be within 1 +/- 0.02"
        );
    }

    #[test]
    fn seed_determinism_bitwise() {
        let g = grid(1.0, 0.125);
        let mut spec = DriverSpec::zero(2);
        spec.brownian_cov = StepMatrix::Const(SymMat::identity(2));
        spec.poisson[0] = PoissonComp {
            intensity: 2.0,
            marks: MarkLaw(vec![(0.1, 0.5), (-0.1, 0.5)]),
        };
        spec.scheduled.push(ScheduledJumpSpec {
            time: 0.5,
            laws: vec![MarkLaw(vec![(0.2, 0.5), (0.0, 0.5)]), MarkLaw::degenerate(0.0)],
        });
        let a = sample_driver(&spec, &g, 99).unwrap();
        let b = sample_driver(&spec, &g, 99).unwrap();
        for i in 0..g.len() {
            assert_eq!(a.x_value(0, i).to_bits(), b.x_value(0, i).to_bits());
            assert_eq!(a.x_value(1, i).to_bits(), b.x_value(1, i).to_bits());
        }
        assert_eq!(a.jumps.len(), b.jumps.len());
    }

    #[test]
    fn no_jump_sources_means_no_jumps() {
        let g = grid(1.0, 0.25);
        let mut spec = DriverSpec::zero(1);
        spec.brownian_cov = StepMatrix::Const(SymMat::identity(1));
        for seed in 0..50 {
            let p = sample_driver(&spec, &g, seed).unwrap();
            assert!(p.jumps.is_empty());
        }
    }

    #[test]
    fn bracket_nondecreasing_with_singular_part() {
        let g = grid(1.0, 0.125);
        let mut spec = DriverSpec::zero(1);
        spec.brownian_cov = StepMatrix::Const(SymMat::identity(1));
        spec.bracket_sing = Some(SingularBracket {
            clock: SingularSpec::cantor(0.0, 1.0, 0.5),
            direction: SymMat::identity(1),
        });
        let p = sample_driver(&spec, &g, 3).unwrap();
        let e = [1.0];
        let mut prev = 0.0;
        for i in 0..=g.n_cells() {
            let b = p.bracket_quad_to(i, &e);
            assert!(b >= prev - 1e-15);
            prev = b;
        }
        assert!((p.bracket_quad_to(g.n_cells(), &e) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn scheduled_jump_is_centered() {
        let g = grid(1.0, 0.5);
        let mut spec = DriverSpec::zero(1);
        spec.scheduled.push(ScheduledJumpSpec {
            time: 0.5,
            laws: vec![MarkLaw(vec![(0.3, 0.5), (0.1, 0.5)])],
        });
        let p = sample_driver(&spec, &g, 11).unwrap();
        let j = &p.jumps[0];
        assert!((j.dx[0] - j.dxd[0] - 0.2).abs() < 1e-15);
        assert_eq!(p.scheduled_means[0].1[0], 0.2);
    }

    #[test]
    fn psd_chol_rejects_indefinite() {
        let m = SymMat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(m.is_err());
    }

    #[test]
    fn fv_jumps_on_grid_enforced() {
        let g = grid(1.0, 0.25);
        let mut spec = DriverSpec::zero(1);
        spec.fv[0].jumps.push(Atom {
            time: 0.33,
            size: 0.1,
        });
        assert!(sample_driver(&spec, &g, 0).is_err());
    }
}
