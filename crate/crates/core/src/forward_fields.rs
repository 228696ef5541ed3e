//! Forward-rate random fields f(t,T), g(t,T) and the maturity-integrated
//! bar coefficients.
//!
//! Coefficient fields are deterministic functions of (s, T) with support
//! T >= s. Maturity integrals go through per-cell masses that are additive
//! over maturity ranges by construction: pricing, the pathwise identity
//! checks and the drift conditions all consume the same masses, so the
//! algebraic identities hold at grid points to rounding error.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TsError};
use crate::risky_measure::RiskyMeasurePath;
use crate::time_paths::driver::DriverPath;
use crate::time_paths::fv::FvPath;
use crate::time_paths::grid::{TimeGrid, LOOKUP_TOL};

// ---------------------------------------------------------------------------
// Initial curves
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSpec {
    Const(f64),
    /// intercept + slope * u
    Linear { intercept: f64, slope: f64 },
    /// One value per grid point, linear in between.
    Grid(Vec<f64>),
}

impl CurveSpec {
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        match self {
            CurveSpec::Const(c) => {
                if !c.is_finite() {
                    return Err(TsError::invalid("curve value must be finite"));
                }
            }
            CurveSpec::Linear { intercept, slope } => {
                if !intercept.is_finite() || !slope.is_finite() {
                    return Err(TsError::invalid("curve parameters must be finite"));
                }
            }
            CurveSpec::Grid(v) => {
                if v.len() != grid.len() {
                    return Err(TsError::invalid("curve needs one value per grid point"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(TsError::invalid("curve values must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, grid: &TimeGrid, u: f64) -> f64 {
        match self {
            CurveSpec::Const(c) => *c,
            CurveSpec::Linear { intercept, slope } => intercept + slope * u,
            CurveSpec::Grid(v) => {
                let times = grid.times();
                if u <= times[0] {
                    return v[0];
                }
                if u >= *times.last().unwrap() {
                    return *v.last().unwrap();
                }
                let j = grid.cell_containing(u);
                let w = (u - times[j]) / (times[j + 1] - times[j]);
                v[j] * (1.0 - w) + v[j + 1] * w
            }
        }
    }

    /// Integral over [a, b] (trapezoid for sampled curves, exact otherwise).
    pub fn mass(&self, grid: &TimeGrid, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            CurveSpec::Const(c) => c * (b - a),
            CurveSpec::Linear { intercept, slope } => {
                intercept * (b - a) + 0.5 * slope * (b * b - a * a)
            }
            CurveSpec::Grid(_) => {
                // trapezoid over grid cells, linear tails at the off-grid ends
                let mut acc = 0.0;
                let mut x = a;
                while x < b - 1e-15 {
                    let j = grid.cell_containing(x + 1e-15);
                    let hi = grid.time(j + 1).min(b);
                    acc += 0.5 * (self.value(grid, x) + self.value(grid, hi)) * (hi - x);
                    x = hi;
                }
                acc
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Coefficient fields
// ---------------------------------------------------------------------------

/// Sampled field c(t_i, u_k) on the full grid mesh, trapezoid maturity masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    /// `values[i][k]`: value at s = t_i, u = u_k. Must vanish for u_k < t_i.
    pub values: Vec<Vec<f64>>,
}

/// Field given through its maturity integrals: `bars[i][k]` is the integral
/// of c(t_i, .) from t_i to u_k (zero for u_k <= t_i). Cell masses are exact
/// differences, so maturity additivity telescopes to machine precision.
/// Pointwise values are second-order finite differences, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarField {
    pub bars: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefField {
    Zero,
    Const(f64),
    /// scale * (u - s) on u >= s.
    LinearTenor { scale: f64 },
    /// scale * exp(-rate (u - s)) on u >= s.
    ExpDecay { scale: f64, rate: f64 },
    Grid(GridField),
    Bar(BarField),
}

/// Derivative of the Lagrange interpolant through three points, at `at`.
fn three_point_derivative(x: [f64; 3], f: [f64; 3], at: f64) -> f64 {
    let [x0, x1, x2] = x;
    let [f0, f1, f2] = f;
    f0 * ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2))
        + f1 * ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2))
        + f2 * ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1))
}

impl CoefField {
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        let n = grid.len();
        match self {
            CoefField::Zero => Ok(()),
            CoefField::Const(c) => {
                if !c.is_finite() {
                    return Err(TsError::invalid("coefficient must be finite"));
                }
                Ok(())
            }
            CoefField::LinearTenor { scale } => {
                if !scale.is_finite() {
                    return Err(TsError::invalid("coefficient must be finite"));
                }
                Ok(())
            }
            CoefField::ExpDecay { scale, rate } => {
                if !scale.is_finite() || !rate.is_finite() || *rate < 0.0 {
                    return Err(TsError::invalid("exp-decay needs finite scale, rate >= 0"));
                }
                Ok(())
            }
            CoefField::Grid(f) => {
                if f.values.len() != n || f.values.iter().any(|r| r.len() != n) {
                    return Err(TsError::invalid("grid field must be (n x n) on grid points"));
                }
                for (i, row) in f.values.iter().enumerate() {
                    for (k, v) in row.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(TsError::invalid("grid field must be finite"));
                        }
                        if k < i && *v != 0.0 {
                            return Err(TsError::invalid(
                                "grid field must vanish for maturities before s",
                            ));
                        }
                    }
                }
                Ok(())
            }
            CoefField::Bar(f) => {
                if f.bars.len() != n || f.bars.iter().any(|r| r.len() != n) {
                    return Err(TsError::invalid("bar field must be (n x n) on grid points"));
                }
                for (i, row) in f.bars.iter().enumerate() {
                    for (k, v) in row.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(TsError::invalid("bar field must be finite"));
                        }
                        if k <= i && *v != 0.0 {
                            return Err(TsError::invalid(
                                "bar field must vanish at and before the diagonal",
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, CoefField::Zero) || matches!(self, CoefField::Const(c) if *c == 0.0)
    }

    fn grid_row(values: &[Vec<f64>], grid: &TimeGrid, s: f64, k: usize) -> f64 {
        // linear interpolation across rows for off-grid s
        if let Ok(i) = grid.idx(s) {
            return values[i][k];
        }
        let j = grid.cell_containing(s);
        let w = (s - grid.time(j)) / grid.cell_dt(j);
        values[j][k] * (1.0 - w) + values[j + 1][k] * w
    }

    /// Pointwise value c(s, u); zero for u < s.
    pub fn value(&self, grid: &TimeGrid, s: f64, u: f64) -> f64 {
        if u < s - LOOKUP_TOL {
            return 0.0;
        }
        match self {
            CoefField::Zero => 0.0,
            CoefField::Const(c) => *c,
            CoefField::LinearTenor { scale } => scale * (u - s),
            CoefField::ExpDecay { scale, rate } => scale * (-rate * (u - s)).exp(),
            CoefField::Grid(f) => {
                let k = match grid.idx(u) {
                    Ok(k) => k,
                    Err(_) => {
                        let j = grid.cell_containing(u);
                        let w = (u - grid.time(j)) / grid.cell_dt(j);
                        return Self::grid_row(&f.values, grid, s, j) * (1.0 - w)
                            + Self::grid_row(&f.values, grid, s, j + 1) * w;
                    }
                };
                Self::grid_row(&f.values, grid, s, k)
            }
            CoefField::Bar(f) => {
                // d/du of the bar row, second order, exact on quadratics;
                // the stencil never dips below the support diagonal
                let k = grid
                    .idx(u)
                    .unwrap_or_else(|_| grid.cell_containing(u).min(grid.len() - 1));
                let n = grid.len();
                let k0 = grid.idx(s).unwrap_or_else(|_| grid.cell_containing(s));
                if n - k0 < 2 {
                    return 0.0;
                }
                if n - k0 == 2 {
                    // only two support points: one-sided first order
                    let lo = k0;
                    return (Self::grid_row(&f.bars, grid, s, lo + 1)
                        - Self::grid_row(&f.bars, grid, s, lo))
                        / (grid.time(lo + 1) - grid.time(lo));
                }
                let lo = k.saturating_sub(1).clamp(k0, n - 3);
                let xs = [grid.time(lo), grid.time(lo + 1), grid.time(lo + 2)];
                let fs = [
                    Self::grid_row(&f.bars, grid, s, lo),
                    Self::grid_row(&f.bars, grid, s, lo + 1),
                    Self::grid_row(&f.bars, grid, s, lo + 2),
                ];
                three_point_derivative(xs, fs, u)
            }
        }
    }

    /// Cumulative maturity integral from s to x (x may be off-grid for
    /// sampled fields, handled by interpolation).
    fn bar_to(&self, grid: &TimeGrid, s: f64, x: f64) -> f64 {
        if x <= s + 0.0 {
            return 0.0;
        }
        match self {
            CoefField::Zero => 0.0,
            CoefField::Const(c) => c * (x - s),
            CoefField::LinearTenor { scale } => 0.5 * scale * (x - s) * (x - s),
            CoefField::ExpDecay { scale, rate } => {
                if *rate == 0.0 {
                    scale * (x - s)
                } else {
                    scale / rate * (1.0 - (-rate * (x - s)).exp())
                }
            }
            CoefField::Grid(_) => {
                let mut acc = 0.0;
                let mut lo = s;
                while lo < x - 1e-15 {
                    let j = grid.cell_containing(lo + 1e-15);
                    let hi = grid.time(j + 1).min(x);
                    acc += 0.5
                        * (self.value(grid, s, lo) + self.value(grid, s, hi))
                        * (hi - lo);
                    lo = hi;
                }
                acc
            }
            CoefField::Bar(f) => {
                if let Ok(k) = grid.idx(x) {
                    return Self::grid_row(&f.bars, grid, s, k);
                }
                let j = grid.cell_containing(x);
                let w = (x - grid.time(j)) / grid.cell_dt(j);
                Self::grid_row(&f.bars, grid, s, j) * (1.0 - w)
                    + Self::grid_row(&f.bars, grid, s, j + 1) * w
            }
        }
    }

    /// Integral of c(s, .) over [a, b] intersected with the support [s, inf).
    pub fn mass(&self, grid: &TimeGrid, s: f64, a: f64, b: f64) -> f64 {
        let a = a.max(s);
        if b <= a {
            return 0.0;
        }
        self.bar_to(grid, s, b) - self.bar_to(grid, s, a)
    }

    /// Cumulative maturity integrals from s to every grid point, in one
    /// pass (same numbers as `bar_to` at grid points).
    pub fn cum_row(&self, grid: &TimeGrid, s: f64) -> Vec<f64> {
        let n = grid.len();
        let mut out = vec![0.0; n];
        match self {
            CoefField::Zero => {}
            CoefField::Const(c) => {
                for (k, v) in out.iter_mut().enumerate() {
                    let x = grid.time(k);
                    if x > s {
                        *v = c * (x - s);
                    }
                }
            }
            CoefField::LinearTenor { scale } => {
                for (k, v) in out.iter_mut().enumerate() {
                    let x = grid.time(k);
                    if x > s {
                        *v = 0.5 * scale * (x - s) * (x - s);
                    }
                }
            }
            CoefField::ExpDecay { scale, rate } => {
                for (k, v) in out.iter_mut().enumerate() {
                    let x = grid.time(k);
                    if x > s {
                        *v = if *rate == 0.0 {
                            scale * (x - s)
                        } else {
                            scale / rate * (1.0 - (-rate * (x - s)).exp())
                        };
                    }
                }
            }
            CoefField::Grid(_) => {
                for (k, v) in out.iter_mut().enumerate() {
                    *v = self.bar_to(grid, s, grid.time(k));
                }
            }
            CoefField::Bar(f) => {
                if let Ok(i) = grid.idx(s) {
                    out.copy_from_slice(&f.bars[i]);
                } else {
                    let j = grid.cell_containing(s);
                    let w = (s - grid.time(j)) / grid.cell_dt(j);
                    for (k, v) in out.iter_mut().enumerate() {
                        *v = f.bars[j][k] * (1.0 - w) + f.bars[j + 1][k] * w;
                    }
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Specs bundling curves and coefficients
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCurves {
    pub f0: CurveSpec,
    pub g0: CurveSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub a: CoefField,
    pub b: Vec<CoefField>,
    pub alpha: CoefField,
    pub beta: Vec<CoefField>,
}

impl CoefficientSpec {
    pub fn zero(dim: usize) -> Self {
        CoefficientSpec {
            a: CoefField::Zero,
            b: vec![CoefField::Zero; dim],
            alpha: CoefField::Zero,
            beta: vec![CoefField::Zero; dim],
        }
    }

    pub fn validate(&self, dim: usize, grid: &TimeGrid) -> Result<()> {
        self.a.validate(grid)?;
        self.alpha.validate(grid)?;
        if self.b.len() != dim || self.beta.len() != dim {
            return Err(TsError::invalid(
                "volatility fields need one component per driver dimension",
            ));
        }
        for f in self.b.iter().chain(self.beta.iter()) {
            f.validate(grid)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Mu-slice evaluation rules
// ---------------------------------------------------------------------------

/// How the revealed-mass slice is cut at the evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceCut {
    /// Right-continuous state: atoms revealed at or before the time,
    /// diffuse ac cells completed by the time.
    Closed,
    /// Previsible state: strictly-before versions of the above.
    Strict,
}

/// Whether the diffuse maturity range includes the cell starting at the
/// evaluation time (pricing and atom events) or not (cell events).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatCut {
    FromIncl,
    FromExcl,
}

#[derive(Debug, Clone, Copy)]
pub struct MuRule {
    pub cut: SliceCut,
    pub mat: MatCut,
}

impl MuRule {
    /// Rule for mu_t integrals in prices (and the public bar coefficients).
    pub const PRICING: MuRule = MuRule {
        cut: SliceCut::Closed,
        mat: MatCut::FromIncl,
    };
    /// Rule for Stieltjes cell integrands frozen at the cell's left point.
    pub const CELL: MuRule = MuRule {
        cut: SliceCut::Closed,
        mat: MatCut::FromExcl,
    };
    /// Rule for integrands at jump times (previsible state).
    pub const ATOM: MuRule = MuRule {
        cut: SliceCut::Strict,
        mat: MatCut::FromIncl,
    };
}

/// Integral of `field(s_arg, u)` against the revealed measure slice at
/// evaluation time `at`, over maturities in (at, cap], under `rule`.
pub fn mu_weighted_integral(
    risky: &RiskyMeasurePath,
    grid: &TimeGrid,
    field: &CoefField,
    s_arg: f64,
    at: f64,
    cap: f64,
    rule: MuRule,
) -> f64 {
    if field.is_zero() || cap <= at + LOOKUP_TOL {
        return 0.0;
    }
    let mut acc = 0.0;
    // atoms
    for a in &risky.atoms {
        let revealed = match rule.cut {
            SliceCut::Closed => a.reveal <= at + LOOKUP_TOL,
            SliceCut::Strict => a.reveal < at - LOOKUP_TOL,
        };
        if revealed && a.maturity > at + LOOKUP_TOL && a.maturity <= cap + LOOKUP_TOL {
            acc += field.value(grid, s_arg, a.maturity) * a.weight;
        }
    }
    // diffuse components: left-point pairing per maturity cell
    let k_cap = match grid.idx(cap) {
        Ok(k) => k,
        Err(_) => grid.cell_containing(cap) + 1,
    };
    let k_from = {
        // first maturity cell with t_k >= at (FromIncl) or t_k > at (FromExcl)
        let mut k = grid.times().partition_point(|&x| x < at - LOOKUP_TOL);
        if rule.mat == MatCut::FromExcl
            && k < grid.times().len()
            && (grid.time(k) - at).abs() <= LOOKUP_TOL
        {
            k += 1;
        }
        k
    };
    if let Some(ac) = &risky.ac {
        for k in k_from..k_cap.min(grid.n_cells()) {
            // mass of u-cell k revealed by the slice: completed s-cells
            let mut revealed_mass = 0.0;
            for i in 0..k {
                let completed = match rule.cut {
                    SliceCut::Closed => grid.time(i + 1) <= at + LOOKUP_TOL,
                    SliceCut::Strict => grid.time(i + 1) < at - LOOKUP_TOL,
                };
                if completed {
                    revealed_mass += ac.density[i][k] * grid.cell_dt(i);
                }
            }
            if revealed_mass != 0.0 {
                acc += field.value(grid, s_arg, grid.time(k))
                    * revealed_mass
                    * grid.cell_dt(k);
            }
        }
    }
    if let Some(sing) = &risky.singular {
        let visible = match rule.cut {
            SliceCut::Closed => true,
            SliceCut::Strict => at > LOOKUP_TOL,
        };
        if visible {
            for k in k_from..k_cap.min(grid.n_cells()) {
                let inc = sing.increment(grid.time(k), grid.time(k + 1));
                if inc != 0.0 {
                    acc += field.value(grid, s_arg, grid.time(k)) * inc;
                }
            }
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Field state: pathwise evaluation of f and g
// ---------------------------------------------------------------------------

/// Everything needed to evaluate the forward fields on one path.
pub struct FieldState<'a> {
    pub grid: &'a Arc<TimeGrid>,
    pub curves: &'a InitialCurves,
    pub coefs: &'a CoefficientSpec,
    pub driver: &'a DriverPath,
    pub a_proc: &'a FvPath,
    pub risky: &'a RiskyMeasurePath,
}

/// One field-updating event: a Stieltjes cell (continuous increments frozen
/// at the left point) or an exact jump atom.
#[derive(Debug, Clone)]
pub struct FieldEvent {
    pub s: f64,
    pub is_atom: bool,
    /// dA weight (cell mass or atom size).
    pub da: f64,
    /// dX weight per component (cell increments or raw jump).
    pub dx: Vec<f64>,
    /// X^d jump part (atoms only; zero for cells).
    pub dxd: Vec<f64>,
}

impl<'a> FieldState<'a> {
    /// Chronological field events up to and including grid index `t_idx`
    /// cells; atoms are merged in by exact time.
    pub fn events(&self) -> Vec<FieldEvent> {
        let grid = self.grid;
        let d = self.driver.dim;
        let mut out: Vec<FieldEvent> = Vec::new();
        for j in 0..grid.n_cells() {
            let dt = grid.cell_dt(j);
            let mut dx = vec![0.0; d];
            for c in 0..d {
                dx[c] = self.driver.xc_inc[j][c]
                    + self.driver.fv[c].cell_ac_mass(j)
                    + self.driver.fv[c].sing_inc[j]
                    + self.driver.xd_drift[c] * dt;
            }
            out.push(FieldEvent {
                s: grid.time(j),
                is_atom: false,
                da: self.a_proc.cell_ac_mass(j) + self.a_proc.sing_inc[j],
                dx,
                dxd: vec![0.0; d],
            });
        }
        for a in &self.a_proc.jumps {
            out.push(FieldEvent {
                s: a.time,
                is_atom: true,
                da: a.size,
                dx: vec![0.0; d],
                dxd: vec![0.0; d],
            });
        }
        for j in &self.driver.jumps {
            out.push(FieldEvent {
                s: j.time,
                is_atom: true,
                da: 0.0,
                dx: j.dx.clone(),
                dxd: j.dxd.clone(),
            });
        }
        // FV jumps of the driver components (deterministic) and scheduled means
        for c in 0..d {
            for a in &self.driver.fv[c].jumps {
                let mut dx = vec![0.0; d];
                dx[c] = a.size;
                out.push(FieldEvent {
                    s: a.time,
                    is_atom: true,
                    da: 0.0,
                    dx,
                    dxd: vec![0.0; d],
                });
            }
        }
        for (t, mean) in &self.driver.scheduled_means {
            // the mean is a predictable FV jump; the centered part is already
            // in the driver jump's dxd, and dx there is the raw mark, so the
            // mean must not be double counted as a separate dx event
            let _ = (t, mean);
        }
        out.sort_by(|a, b| {
            a.s.partial_cmp(&b.s)
                .unwrap()
                .then(b.is_atom.cmp(&a.is_atom).reverse())
        });
        out
    }

    fn event_field_term(&self, field: &CoefField, bfields: &[CoefField], e: &FieldEvent, u: f64) -> f64 {
        let mut acc = 0.0;
        if e.da != 0.0 {
            acc += field.value(self.grid, e.s, u) * e.da;
        }
        for (c, f) in bfields.iter().enumerate() {
            if e.dx[c] != 0.0 {
                acc += f.value(self.grid, e.s, u) * e.dx[c];
            }
        }
        acc
    }

    fn field_value(
        &self,
        f0: &CurveSpec,
        drift: &CoefField,
        vols: &[CoefField],
        t_idx: usize,
        u: f64,
        include_atoms_at_t: bool,
    ) -> f64 {
        let t = self.grid.time(t_idx);
        let mut acc = f0.value(self.grid, u);
        for e in self.events() {
            let counted = if e.is_atom {
                if include_atoms_at_t {
                    e.s <= t + LOOKUP_TOL
                } else {
                    e.s < t - LOOKUP_TOL
                }
            } else {
                // cell increments are credited at cell completion
                e.s < t - LOOKUP_TOL
            };
            if counted {
                acc += self.event_field_term(drift, vols, &e, u);
            }
        }
        acc
    }

    /// f(t, u) (right-continuous in t).
    pub fn f_value(&self, t_idx: usize, u: f64) -> f64 {
        self.field_value(&self.curves.f0, &self.coefs.a, &self.coefs.b, t_idx, u, true)
    }

    /// g(t, u) (right-continuous in t).
    pub fn g_value(&self, t_idx: usize, u: f64) -> f64 {
        self.field_value(
            &self.curves.g0,
            &self.coefs.alpha,
            &self.coefs.beta,
            t_idx,
            u,
            true,
        )
    }

    /// g(t-, u): the left limit (atoms at t excluded).
    pub fn g_value_left(&self, t_idx: usize, u: f64) -> f64 {
        self.field_value(
            &self.curves.g0,
            &self.coefs.alpha,
            &self.coefs.beta,
            t_idx,
            u,
            false,
        )
    }

    /// f(t-, u).
    pub fn f_value_left(&self, t_idx: usize, u: f64) -> f64 {
        self.field_value(&self.curves.f0, &self.coefs.a, &self.coefs.b, t_idx, u, false)
    }
}

// ---------------------------------------------------------------------------
// Bar coefficients
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct BarCoefficients {
    pub a_bar: f64,
    pub b_bar: Vec<f64>,
    pub alpha_bar: f64,
    pub beta_bar: Vec<f64>,
    /// a_bar + alpha_bar
    pub cap_a: f64,
    /// b_bar + beta_bar, componentwise
    pub cap_b: Vec<f64>,
}

/// Bar coefficients with an explicit slice rule and an arbitrary (possibly
/// off-grid) evaluation time; the engine's Stieltjes sums use this with
/// `MuRule::CELL` / `MuRule::ATOM`.
pub fn bar_coefficients_at(
    coefs: &CoefficientSpec,
    risky: &RiskyMeasurePath,
    grid: &TimeGrid,
    s: f64,
    cap: f64,
    rule: MuRule,
) -> BarCoefficients {
    let d = coefs.b.len();
    if cap <= s + LOOKUP_TOL {
        return BarCoefficients {
            a_bar: 0.0,
            b_bar: vec![0.0; d],
            alpha_bar: 0.0,
            beta_bar: vec![0.0; d],
            cap_a: 0.0,
            cap_b: vec![0.0; d],
        };
    }
    let a_bar = coefs.a.mass(grid, s, s, cap);
    let b_bar: Vec<f64> = coefs.b.iter().map(|f| f.mass(grid, s, s, cap)).collect();
    let alpha_bar = mu_weighted_integral(risky, grid, &coefs.alpha, s, s, cap, rule);
    let beta_bar: Vec<f64> = coefs
        .beta
        .iter()
        .map(|f| mu_weighted_integral(risky, grid, f, s, s, cap, rule))
        .collect();
    let cap_a = a_bar + alpha_bar;
    let cap_b = b_bar
        .iter()
        .zip(beta_bar.iter())
        .map(|(x, y)| x + y)
        .collect();
    BarCoefficients {
        a_bar,
        b_bar,
        alpha_bar,
        beta_bar,
        cap_a,
        cap_b,
    }
}

/// Public bar-coefficient evaluation at grid (t, T) with the closed slice
/// mu_t (atoms with s <= t), maturities restricted to (t, T].
pub fn bar_coefficients(
    coefs: &CoefficientSpec,
    risky: &RiskyMeasurePath,
    grid: &TimeGrid,
    t_idx: usize,
    cap_idx: usize,
) -> Result<BarCoefficients> {
    if cap_idx < t_idx {
        return Err(TsError::invalid("bar coefficients need t <= T"));
    }
    Ok(bar_coefficients_at(
        coefs,
        risky,
        grid,
        grid.time(t_idx),
        grid.time(cap_idx),
        MuRule::PRICING,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risky_measure::{RiskyAtomSpec, RiskySpec};
    use crate::time_paths::driver::{sample_driver, DriverSpec, MarkLaw, StepMatrix, SymMat};
    use crate::time_paths::fv::{DensitySpec, FvSpec};

    fn grid() -> Arc<TimeGrid> {
        Arc::new(TimeGrid::build(2.0, 0.25, &[]).unwrap())
    }

    fn risky_with(atoms: Vec<RiskyAtomSpec>, g: &Arc<TimeGrid>) -> RiskyMeasurePath {
        crate::risky_measure::sample_risky_measure(
            &RiskySpec {
                atoms,
                ac: None,
                singular: None,
            },
            g,
            0,
        )
        .unwrap()
    }

    #[test]
    fn coef_masses_closed_forms() {
        let g = grid();
        let c = CoefField::Const(0.02);
        assert!((c.mass(&g, 0.25, 0.5, 1.5) - 0.02).abs() < 1e-15);
        // support clip
        assert!((c.mass(&g, 0.75, 0.5, 1.0) - 0.02 * 0.25).abs() < 1e-15);

        let l = CoefField::LinearTenor { scale: 2.0 };
        // int_s^T 2 (u-s) du = (T-s)^2
        assert!((l.mass(&g, 0.5, 0.5, 1.5) - 1.0).abs() < 1e-15);

        let e = CoefField::ExpDecay {
            scale: 1.0,
            rate: 2.0,
        };
        let expect = (1.0 - (-2.0_f64 * 1.0).exp()) / 2.0;
        assert!((e.mass(&g, 0.5, 0.5, 1.5) - expect).abs() < 1e-15);
    }

    #[test]
    fn maturity_additivity_exact() {
        let g = grid();
        for field in [
            CoefField::Const(0.5),
            CoefField::LinearTenor { scale: 0.2 },
            CoefField::ExpDecay {
                scale: 0.3,
                rate: 1.5,
            },
        ] {
            for t1 in 0..g.len() {
                for t2 in t1..g.len() {
                    let s = 0.0;
                    let full = field.mass(&g, s, s, g.time(t2));
                    let split =
                        field.mass(&g, s, s, g.time(t1)) + field.mass(&g, s, g.time(t1), g.time(t2));
                    assert!(
                        (full - split).abs() < 1e-12,
                        "additivity broke for {field:?} at ({t1},{t2})"
                    );
                }
            }
        }
    }

    #[test]
    fn bar_field_masses_telescope_and_fd_values() {
        let g = grid();
        // bars of a(t,u) = sigma^2 (u - t): bar(t,x) = sigma^2 (x-t)^2 / 2
        let s2 = 1e-4;
        let n = g.len();
        let mut bars = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in (i + 1)..n {
                let x = g.time(k) - g.time(i);
                bars[i][k] = 0.5 * s2 * x * x;
            }
        }
        let f = CoefField::Bar(BarField { bars });
        f.validate(&g).unwrap();
        // fd values exact on the quadratic bar wherever a 3-point stencil
        // fits inside the support; first order at the very corner
        for i in 0..n - 1 {
            for k in i..n {
                let expect = s2 * (g.time(k) - g.time(i));
                let tol = if n - i >= 3 { 1e-12 } else { s2 * 0.25 };
                assert!(
                    (f.value(&g, g.time(i), g.time(k)) - expect).abs() <= tol,
                    "fd value at ({i},{k})"
                );
            }
        }
        // masses telescope
        let m = f.mass(&g, 0.25, 0.5, 1.0) + f.mass(&g, 0.25, 1.0, 2.0);
        assert!((m - f.mass(&g, 0.25, 0.5, 2.0)).abs() < 1e-15);
    }

    #[test]
    fn support_condition() {
        let g = grid();
        let fields = [
            CoefField::Const(1.0),
            CoefField::LinearTenor { scale: 1.0 },
            CoefField::ExpDecay {
                scale: 1.0,
                rate: 0.3,
            },
        ];
        for f in &fields {
            assert_eq!(f.value(&g, 1.0, 0.5), 0.0);
            assert_eq!(f.mass(&g, 1.0, 0.0, 0.75), 0.0);
        }
    }

    #[test]
    fn bar_coefficients_trivial_and_atom_cases() {
        let g = grid();
        let coefs = CoefficientSpec {
            a: CoefField::Const(0.5),
            b: vec![CoefField::Zero],
            alpha: CoefField::Const(1.0),
            beta: vec![CoefField::Zero],
        };
        let risky = risky_with(vec![], &g);
        // T = t: all zero
        let bc = bar_coefficients(&coefs, &risky, &g, 2, 2).unwrap();
        assert_eq!(bc.cap_a, 0.0);
        assert_eq!(bc.a_bar, 0.0);
        // a == c constant, no atoms: cap_a = c (T - t)
        let bc = bar_coefficients(&coefs, &risky, &g, 2, 6).unwrap();
        assert!((bc.cap_a - 0.5 * 1.0).abs() < 1e-15);

        // alpha == 1, single atom (0, u=1, w=0.5), t=0.5, T=2: alpha_bar = 0.5
        let risky = risky_with(
            vec![RiskyAtomSpec {
                reveal: 0.0,
                maturity: 1.0,
                law: MarkLaw::degenerate(0.5),
            }],
            &g,
        );
        let bc = bar_coefficients(&coefs, &risky, &g, g.idx(0.5).unwrap(), g.idx(2.0).unwrap())
            .unwrap();
        assert!((bc.alpha_bar - 0.5).abs() < 1e-15);
        assert!((bc.cap_a - (0.5 * 1.5 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn eval_f_static_and_deterministic_drift() {
        let g = grid();
        let curves = InitialCurves {
            f0: CurveSpec::Const(0.02),
            g0: CurveSpec::Const(0.0),
        };
        // a = b = 0: f(t,T) = f(0,T)
        let coefs = CoefficientSpec::zero(1);
        let spec = DriverSpec::zero(1);
        let driver = sample_driver(&spec, &g, 0).unwrap();
        let a_proc = FvPath::sample(
            &FvSpec {
                ac: DensitySpec::Const(1.0),
                singular: None,
                jumps: vec![],
                increasing: true,
            },
            &g,
        )
        .unwrap();
        let risky = risky_with(vec![], &g);
        let st = FieldState {
            grid: &g,
            curves: &curves,
            coefs: &coefs,
            driver: &driver,
            a_proc: &a_proc,
            risky: &risky,
        };
        assert!((st.f_value(3, 1.5) - 0.02).abs() < 1e-15);

        // a = 1, A_t = t, b = 0: f(t,T) = f(0,T) + t
        let coefs = CoefficientSpec {
            a: CoefField::Const(1.0),
            b: vec![CoefField::Zero],
            alpha: CoefField::Zero,
            beta: vec![CoefField::Zero],
        };
        let st = FieldState {
            grid: &g,
            curves: &curves,
            coefs: &coefs,
            driver: &driver,
            a_proc: &a_proc,
            risky: &risky,
        };
        let t_idx = g.idx(0.75).unwrap();
        assert!((st.f_value(t_idx, 1.5) - (0.02 + 0.75)).abs() < 1e-14);
    }

    #[test]
    fn eval_g_jump_pass_through() {
        let g = grid();
        let curves = InitialCurves {
            f0: CurveSpec::Const(0.0),
            g0: CurveSpec::Const(0.04),
        };
        let coefs = CoefficientSpec {
            a: CoefField::Zero,
            b: vec![CoefField::Zero],
            alpha: CoefField::Const(1.0),
            beta: vec![CoefField::Zero],
        };
        let spec = DriverSpec::zero(1);
        let driver = sample_driver(&spec, &g, 0).unwrap();
        let a_proc = FvPath::sample(
            &FvSpec {
                ac: DensitySpec::zero(),
                singular: None,
                jumps: vec![crate::time_paths::fv::Atom {
                    time: 0.25,
                    size: 0.5,
                }],
                increasing: true,
            },
            &g,
        )
        .unwrap();
        let risky = risky_with(vec![], &g);
        let st = FieldState {
            grid: &g,
            curves: &curves,
            coefs: &coefs,
            driver: &driver,
            a_proc: &a_proc,
            risky: &risky,
        };
        let i = g.idx(0.25).unwrap();
        assert!((st.g_value(i, 1.0) - 0.54).abs() < 1e-15);
        assert!((st.g_value_left(i, 1.0) - 0.04).abs() < 1e-15);
        assert!((st.g_value(i - 1, 1.0) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn f_vol_variance_statistical() {
        let g = Arc::new(TimeGrid::build(1.0, 0.25, &[]).unwrap());
        let curves = InitialCurves {
            f0: CurveSpec::Const(0.02),
            g0: CurveSpec::Const(0.0),
        };
        let sigma = 0.5;
        let coefs = CoefficientSpec {
            a: CoefField::Zero,
            b: vec![CoefField::Const(sigma)],
            alpha: CoefField::Zero,
            beta: vec![CoefField::Zero],
        };
        let mut spec = DriverSpec::zero(1);
        spec.brownian_cov = StepMatrix::Const(SymMat::identity(1));
        let sampler = crate::time_paths::driver::DriverSampler::prepare(&spec, &g).unwrap();
        let a_proc = FvPath::zero(Arc::clone(&g));
        let risky = risky_with(vec![], &g);
        let n = 100_000;
        let t_idx = g.idx(0.5).unwrap();
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut rng = crate::rng::path_rng(11, i);
            let driver = sampler.sample(&mut rng).unwrap();
            let st = FieldState {
                grid: &g,
                curves: &curves,
                coefs: &coefs,
                driver: &driver,
                a_proc: &a_proc,
                risky: &risky,
            };
            let v = st.f_value(t_idx, 1.0);
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let expect = sigma * sigma * 0.5;
        let se = expect * (2.0_f64 / n as f64).sqrt();
        assert!(
            (var - expect).abs() < 3.0 * se + 1e-6,
            "Var[f] = {var}, expected {expect}"
        );
    }
}
