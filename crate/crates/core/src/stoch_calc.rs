//! Pathwise stochastic-calculus primitives.
//!
//! All identities are certified at grid points. A semimartingale path keeps
//! its continuous-martingale, absolutely continuous, singular-continuous and
//! jump increments in separate buckets, plus the bracket of its continuous
//! part. Cross brackets are available when both paths carry loadings on the
//! same driver.

use std::sync::Arc;

use crate::error::{Result, TsError};
use crate::time_paths::driver::DriverBracket;
use crate::time_paths::fv::{Atom, FvPath};
use crate::time_paths::grid::{TimeGrid, LOOKUP_TOL};

#[derive(Debug, Clone)]
pub struct SemimartingalePath {
    pub grid: Arc<TimeGrid>,
    /// Value at time 0 before any time-0 atoms.
    pub v0: f64,
    /// Continuous local-martingale increment per cell.
    pub mart_inc: Vec<f64>,
    /// Absolutely continuous finite-variation increment (mass) per cell.
    pub fv_ac_inc: Vec<f64>,
    /// Singular-continuous finite-variation increment per cell.
    pub fv_sing_inc: Vec<f64>,
    /// Bracket of the continuous part: absolutely continuous mass per cell.
    pub bracket_ac: Vec<f64>,
    /// Bracket of the continuous part: singular increment per cell.
    pub bracket_sing: Vec<f64>,
    /// Jump atoms sorted by time (time-0 atoms allowed).
    pub atoms: Vec<Atom>,
    /// Loadings on the shared driver's continuous part, per cell.
    pub loadings: Option<Vec<Vec<f64>>>,
    /// The driver bracket the loadings refer to.
    pub kernel: Option<Arc<DriverBracket>>,
}

impl SemimartingalePath {
    pub fn zero(grid: Arc<TimeGrid>) -> Self {
        let n = grid.n_cells();
        SemimartingalePath {
            grid,
            v0: 0.0,
            mart_inc: vec![0.0; n],
            fv_ac_inc: vec![0.0; n],
            fv_sing_inc: vec![0.0; n],
            bracket_ac: vec![0.0; n],
            bracket_sing: vec![0.0; n],
            atoms: Vec::new(),
            loadings: None,
            kernel: None,
        }
    }

    /// Pure-jump path from a sorted atom list.
    pub fn from_atoms(grid: Arc<TimeGrid>, atoms: Vec<Atom>) -> Self {
        let mut p = Self::zero(grid);
        p.atoms = atoms;
        p.atoms
            .sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        p
    }

    pub fn has_continuous_mart(&self) -> bool {
        self.mart_inc.iter().any(|x| *x != 0.0)
            || self.bracket_ac.iter().any(|x| *x != 0.0)
            || self.bracket_sing.iter().any(|x| *x != 0.0)
    }

    /// Value at grid index i (includes atoms with time <= t_i).
    pub fn value(&self, i: usize) -> f64 {
        let mut v = self.v0;
        for j in 0..i {
            v += self.mart_inc[j] + self.fv_ac_inc[j] + self.fv_sing_inc[j];
        }
        let t = self.grid.time(i);
        v + self
            .atoms
            .iter()
            .take_while(|a| a.time <= t + LOOKUP_TOL)
            .map(|a| a.size)
            .sum::<f64>()
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut cont = self.v0;
        let mut ai = 0;
        let mut jump_sum = 0.0;
        for i in 0..self.grid.len() {
            if i > 0 {
                cont += self.mart_inc[i - 1] + self.fv_ac_inc[i - 1] + self.fv_sing_inc[i - 1];
            }
            let t = self.grid.time(i);
            while ai < self.atoms.len() && self.atoms[ai].time <= t + LOOKUP_TOL {
                jump_sum += self.atoms[ai].size;
                ai += 1;
            }
            out.push(cont + jump_sum);
        }
        out
    }

    pub fn bracket_value(&self, i: usize) -> f64 {
        (0..i).map(|j| self.bracket_ac[j] + self.bracket_sing[j]).sum()
    }

    /// Sum of atom sizes at exactly `t`.
    pub fn jump_at(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.time - t).abs() <= LOOKUP_TOL)
            .map(|a| a.size)
            .sum()
    }

    fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.times() == other.grid.times()
    }
}

/// Result of a stochastic exponential: values at grid points, the first
/// absorption time (a jump of size -1) and whether any jump below -1 made the
/// path change sign.
#[derive(Debug, Clone)]
pub struct ExpPath {
    pub values: Vec<f64>,
    pub absorbed_at: Option<f64>,
    pub sign_changed: bool,
}

/// Doleans-Dade exponential evaluated pathwise:
/// `E(Z)_t = exp(Z_t^cont - 1/2 <Z^c>_t) * prod_{s<=t} (1 + dZ_s)`,
/// where `Z^cont` is `Z` minus its jump sum. The initial value `v0` counts as
/// a continuous contribution at time zero, so `E(Z)_0 = exp(v0) * prod(1+dZ_0)`.
/// From the first jump of size -1 on, the path is absorbed at zero.
pub fn stochastic_exponential(z: &SemimartingalePath) -> ExpPath {
    let n = z.grid.len();
    let mut values = Vec::with_capacity(n);
    let mut cont = z.v0;
    let mut bracket = 0.0;
    let mut jump_factor = 1.0_f64;
    let mut absorbed_at = None;
    let mut sign_changed = false;
    let mut ai = 0;
    for i in 0..n {
        if i > 0 {
            cont += z.mart_inc[i - 1] + z.fv_ac_inc[i - 1] + z.fv_sing_inc[i - 1];
            bracket += z.bracket_ac[i - 1] + z.bracket_sing[i - 1];
        }
        let t = z.grid.time(i);
        while ai < z.atoms.len() && z.atoms[ai].time <= t + LOOKUP_TOL {
            let factor = 1.0 + z.atoms[ai].size;
            if factor == 0.0 && absorbed_at.is_none() {
                absorbed_at = Some(z.atoms[ai].time);
            }
            if factor < 0.0 {
                sign_changed = true;
            }
            jump_factor *= factor;
            ai += 1;
        }
        if absorbed_at.is_some() && jump_factor == 0.0 {
            values.push(0.0);
        } else {
            values.push((cont - 0.5 * bracket).exp() * jump_factor);
        }
    }
    ExpPath {
        values,
        absorbed_at,
        sign_changed,
    }
}

/// Transform an ordinary exponential into stochastic-exponential form:
/// returns `X~ = X + 1/2 <X^c> + sum (e^dX - 1 - dX)` so that
/// `exp(X_t) = E(X~)_t` at every grid point.
pub fn exp_to_stoch_log(x: &SemimartingalePath) -> SemimartingalePath {
    let mut out = x.clone();
    for j in 0..x.grid.n_cells() {
        out.fv_ac_inc[j] += 0.5 * x.bracket_ac[j];
        out.fv_sing_inc[j] += 0.5 * x.bracket_sing[j];
    }
    for a in &mut out.atoms {
        a.size = a.size.exp_m1();
    }
    out
}

fn merge_atom_times(u: &SemimartingalePath, v: &SemimartingalePath) -> Vec<f64> {
    let mut times: Vec<f64> = u
        .atoms
        .iter()
        .map(|a| a.time)
        .chain(v.atoms.iter().map(|a| a.time))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup_by(|a, b| (*a - *b).abs() <= LOOKUP_TOL);
    times
}

fn cross_bracket_cell(u: &SemimartingalePath, v: &SemimartingalePath, j: usize) -> Result<(f64, f64)> {
    let u_cont = u.has_continuous_mart();
    let v_cont = v.has_continuous_mart();
    if !u_cont || !v_cont {
        return Ok((0.0, 0.0));
    }
    match (&u.loadings, &u.kernel, &v.loadings, &v.kernel) {
        (Some(lu), Some(ku), Some(lv), Some(kv)) => {
            if !Arc::ptr_eq(ku, kv) {
                return Err(TsError::invalid(
                    "cross bracket requires paths driven by the same driver",
                ));
            }
            Ok((
                ku.ac_mass[j].quad_form(&lu[j], &lv[j]),
                ku.sing[j].quad_form(&lu[j], &lv[j]),
            ))
        }
        _ => Err(TsError::invalid(
            "cross bracket unavailable: paths carry no common driver loadings",
        )),
    }
}

/// Quadratic covariation `[U,V]` as a finite-variation path: continuous part
/// from the brackets, jump part `sum dU dV`.
pub fn quad_covar(u: &SemimartingalePath, v: &SemimartingalePath) -> Result<FvPath> {
    if !u.same_grid(v) {
        return Err(TsError::GridMismatch);
    }
    let n = u.grid.n_cells();
    let mut out = FvPath::zero(Arc::clone(&u.grid));
    for j in 0..n {
        let (ac, sing) = cross_bracket_cell(u, v, j)?;
        out.ac_density[j] = ac / u.grid.cell_dt(j);
        out.sing_inc[j] = sing;
    }
    for t in merge_atom_times(u, v) {
        let du = u.jump_at(t);
        let dv = v.jump_at(t);
        if du != 0.0 && dv != 0.0 {
            out.jumps.push(Atom {
                time: t,
                size: du * dv,
            });
        }
    }
    Ok(out)
}

/// Yor's product combination: returns `U + V + [U,V]`, which satisfies
/// `E(U) E(V) = E(U + V + [U,V])` pathwise. Simultaneous jumps are summed
/// per time before the product term is formed.
pub fn yor_combine(
    u: &SemimartingalePath,
    v: &SemimartingalePath,
) -> Result<SemimartingalePath> {
    if !u.same_grid(v) {
        return Err(TsError::GridMismatch);
    }
    let n = u.grid.n_cells();
    let mut out = SemimartingalePath::zero(Arc::clone(&u.grid));
    out.v0 = u.v0 + v.v0;
    for j in 0..n {
        let (cross_ac, cross_sing) = cross_bracket_cell(u, v, j)?;
        out.mart_inc[j] = u.mart_inc[j] + v.mart_inc[j];
        out.fv_ac_inc[j] = u.fv_ac_inc[j] + v.fv_ac_inc[j] + cross_ac;
        out.fv_sing_inc[j] = u.fv_sing_inc[j] + v.fv_sing_inc[j] + cross_sing;
        out.bracket_ac[j] = u.bracket_ac[j] + v.bracket_ac[j] + 2.0 * cross_ac;
        out.bracket_sing[j] = u.bracket_sing[j] + v.bracket_sing[j] + 2.0 * cross_sing;
    }
    for t in merge_atom_times(u, v) {
        let du = u.jump_at(t);
        let dv = v.jump_at(t);
        let total = du + dv + du * dv;
        if total != 0.0 || (du != 0.0 || dv != 0.0) {
            out.atoms.push(Atom {
                time: t,
                size: total,
            });
        }
    }
    out.atoms
        .sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    // combined loadings when both sides share a kernel
    out.loadings = match (&u.loadings, &v.loadings) {
        (Some(lu), Some(lv))
            if u.kernel.is_some()
                && v.kernel.is_some()
                && Arc::ptr_eq(u.kernel.as_ref().unwrap(), v.kernel.as_ref().unwrap()) =>
        {
            out.kernel = u.kernel.clone();
            Some(
                lu.iter()
                    .zip(lv.iter())
                    .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x + y).collect())
                    .collect(),
            )
        }
        (Some(lu), None) if !v.has_continuous_mart() => {
            out.kernel = u.kernel.clone();
            Some(lu.clone())
        }
        (None, Some(lv)) if !u.has_continuous_mart() => {
            out.kernel = v.kernel.clone();
            Some(lv.clone())
        }
        _ => None,
    };
    Ok(out)
}
