//! Bond prices in three equivalent representations, the auxiliary processes
//! behind them, jump functionals with exact compensators, and the
//! semimartingale decomposition of discounted prices.
//!
//! All maturity integrals go through additive cell masses and all Stieltjes
//! sums use predictable left-point evaluation plus exact jump terms, so the
//! representation identities hold at grid points to rounding error.

use std::sync::Arc;

use crate::error::{Result, TsError};
use crate::forward_fields::{bar_coefficients_at, BarCoefficients, MuRule};
use crate::model::{BondModel, CreditPath, PathBundle, PathEvent, RecoveryMode, ShortRateSpec};
use crate::stoch_calc::{
    exp_to_stoch_log, stochastic_exponential, yor_combine, SemimartingalePath,
};
use crate::time_paths::fv::{Atom, FvPath};
use crate::time_paths::grid::LOOKUP_TOL;

// ---------------------------------------------------------------------------
// Per-path engine with field-event caches
// ---------------------------------------------------------------------------

/// A field-updating event: a Stieltjes cell (coefficients frozen at the left
/// point, increments credited at completion) or an exact atom.
#[derive(Debug, Clone)]
struct FEvent {
    /// Coefficient evaluation time.
    s: f64,
    /// Time at which the field update registers (cells: cell end).
    registers: f64,
    da: f64,
    dx: Vec<f64>,
}

impl FEvent {
    fn is_atom(&self) -> bool {
        self.registers < self.s + LOOKUP_TOL
    }
}

/// Path-independent tables shared by every path of a scenario: cumulative
/// coefficient masses from each grid point.
#[derive(Debug)]
pub struct EngineTables {
    /// a-rows: `a[i][k]` = integral of a(t_i, .) from t_i to t_k.
    a_rows: Vec<Vec<f64>>,
    /// per driver component: same for b.
    b_rows: Vec<Vec<Vec<f64>>>,
    f0cum: Vec<f64>,
}

impl EngineTables {
    pub fn new(model: &BondModel) -> Arc<Self> {
        let grid = &model.grid;
        let a_rows = (0..grid.len())
            .map(|i| model.coefs.a.cum_row(grid, grid.time(i)))
            .collect();
        let b_rows = model
            .coefs
            .b
            .iter()
            .map(|f| {
                (0..grid.len())
                    .map(|i| f.cum_row(grid, grid.time(i)))
                    .collect()
            })
            .collect();
        let f0cum = (0..grid.len())
            .map(|k| model.curves.f0.mass(grid, 0.0, grid.time(k)))
            .collect();
        Arc::new(EngineTables {
            a_rows,
            b_rows,
            f0cum,
        })
    }
}

pub struct PathEngine<'a> {
    pub model: &'a BondModel,
    pub bundle: &'a PathBundle,
    events: Vec<FEvent>,
    /// Prefix sums over events (sorted by registration, cells before atoms
    /// at ties) of the cumulative f-coefficient masses: `fprefix[i][k]` is
    /// the sum over the first i events of the mass from s_e to t_k.
    fprefix: Vec<Vec<f64>>,
    /// Cumulative f0 mass from 0 to each grid point.
    f0cum: Vec<f64>,
    /// g(t_j, t_j) at grid points.
    g_diag: Vec<f64>,
}

impl<'a> PathEngine<'a> {
    pub fn new(model: &'a BondModel, bundle: &'a PathBundle) -> Self {
        Self::with_tables(model, bundle, &EngineTables::new(model))
    }

    pub fn with_tables(
        model: &'a BondModel,
        bundle: &'a PathBundle,
        tables: &EngineTables,
    ) -> Self {
        let grid = &model.grid;
        let d = model.driver.dim;
        let n = grid.n_cells();
        let mut events = Vec::with_capacity(n + bundle.events.len());
        for j in 0..n {
            let dt = grid.cell_dt(j);
            let mut dx = vec![0.0; d];
            for c in 0..d {
                dx[c] = bundle.driver.xc_inc[j][c]
                    + bundle.driver.fv[c].cell_ac_mass(j)
                    + bundle.driver.fv[c].sing_inc[j]
                    + bundle.driver.xd_drift[c] * dt;
            }
            events.push(FEvent {
                s: grid.time(j),
                registers: grid.time(j + 1),
                da: bundle.a_proc.cell_ac_mass(j) + bundle.a_proc.sing_inc[j],
                dx,
            });
        }
        for e in &bundle.events {
            if e.da != 0.0 || e.dx.iter().any(|x| *x != 0.0) {
                events.push(FEvent {
                    s: e.time,
                    registers: e.time,
                    da: e.da,
                    dx: e.dx.clone(),
                });
            }
        }
        // cells sort before atoms at registration ties: the left limit at a
        // grid time drops atoms there but keeps completed cells
        events.sort_by(|a, b| {
            a.registers
                .partial_cmp(&b.registers)
                .unwrap()
                .then_with(|| a.is_atom().cmp(&b.is_atom()))
        });
        let n = grid.len();
        let mut fprefix = Vec::with_capacity(events.len() + 1);
        fprefix.push(vec![0.0; n]);
        for e in &events {
            let mut row = fprefix.last().unwrap().clone();
            let grid_row = grid.idx(e.s).ok();
            if e.da != 0.0 {
                match grid_row {
                    Some(i) => {
                        for (v, c) in row.iter_mut().zip(tables.a_rows[i].iter()) {
                            *v += c * e.da;
                        }
                    }
                    None => {
                        for (v, c) in row.iter_mut().zip(model.coefs.a.cum_row(grid, e.s)) {
                            *v += c * e.da;
                        }
                    }
                }
            }
            for (c, f) in model.coefs.b.iter().enumerate() {
                if e.dx[c] != 0.0 {
                    match grid_row {
                        Some(i) => {
                            for (v, m) in row.iter_mut().zip(tables.b_rows[c][i].iter()) {
                                *v += m * e.dx[c];
                            }
                        }
                        None => {
                            for (v, m) in row.iter_mut().zip(f.cum_row(grid, e.s)) {
                                *v += m * e.dx[c];
                            }
                        }
                    }
                }
            }
            fprefix.push(row);
        }
        let f0cum = tables.f0cum.clone();
        let mut engine = PathEngine {
            model,
            bundle,
            events,
            fprefix,
            f0cum,
            g_diag: Vec::new(),
        };
        engine.g_diag = engine.compute_g_diag();
        engine
    }

    /// Number of events counted at time t (right limit or left limit).
    fn event_cut(&self, t: f64, left: bool) -> usize {
        self.events.partition_point(|e| {
            if e.is_atom() {
                if left {
                    e.registers < t - LOOKUP_TOL
                } else {
                    e.registers <= t + LOOKUP_TOL
                }
            } else {
                e.registers <= t + LOOKUP_TOL
            }
        })
    }

    /// Single sweep over (grid point, event) pairs; events are few and the
    /// coefficient evaluations are cheap.
    fn compute_g_diag(&self) -> Vec<f64> {
        let grid = self.grid();
        let alpha_zero = self.model.coefs.alpha.is_zero();
        let beta_zero = self.model.coefs.beta.iter().all(|f| f.is_zero());
        (0..grid.len())
            .map(|j| {
                let t = grid.time(j);
                let mut acc = self.model.curves.g0.value(grid, t);
                if alpha_zero && beta_zero {
                    return acc;
                }
                for e in &self.events {
                    if !Self::counted(e, t, false) {
                        continue;
                    }
                    if !alpha_zero && e.da != 0.0 {
                        acc += self.model.coefs.alpha.value(grid, e.s, t) * e.da;
                    }
                    if !beta_zero {
                        for (c, f) in self.model.coefs.beta.iter().enumerate() {
                            if e.dx[c] != 0.0 {
                                acc += f.value(grid, e.s, t) * e.dx[c];
                            }
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Cached g(t_j, t_j) (right-continuous) at grid points.
    pub fn g_diag_at(&self, j: usize) -> f64 {
        self.g_diag[j]
    }

    fn grid(&self) -> &Arc<crate::time_paths::grid::TimeGrid> {
        &self.model.grid
    }

    fn counted(e: &FEvent, t: f64, left: bool) -> bool {
        if e.registers < e.s + LOOKUP_TOL {
            // atom: excluded from the left limit at its own time
            if left {
                e.registers < t - LOOKUP_TOL
            } else {
                e.registers <= t + LOOKUP_TOL
            }
        } else {
            // cell: continuous accrual, same for both limits
            e.registers <= t + LOOKUP_TOL
        }
    }

    /// Pointwise field value g(t, u) (or its left limit).
    pub fn g_value(&self, t: f64, u: f64, left: bool) -> f64 {
        let grid = self.grid();
        let mut acc = self.model.curves.g0.value(grid, u);
        for e in &self.events {
            if !Self::counted(e, t, left) {
                continue;
            }
            if e.da != 0.0 {
                acc += self.model.coefs.alpha.value(grid, e.s, u) * e.da;
            }
            for (c, f) in self.model.coefs.beta.iter().enumerate() {
                if e.dx[c] != 0.0 {
                    acc += f.value(grid, e.s, u) * e.dx[c];
                }
            }
        }
        acc
    }

    /// Pointwise field value f(t, u).
    pub fn f_value(&self, t: f64, u: f64, left: bool) -> f64 {
        let grid = self.grid();
        let mut acc = self.model.curves.f0.value(grid, u);
        for e in &self.events {
            if !Self::counted(e, t, left) {
                continue;
            }
            if e.da != 0.0 {
                acc += self.model.coefs.a.value(grid, e.s, u) * e.da;
            }
            for (c, f) in self.model.coefs.b.iter().enumerate() {
                if e.dx[c] != 0.0 {
                    acc += f.value(grid, e.s, u) * e.dx[c];
                }
            }
        }
        acc
    }

    /// Integral of the field f(t, .) over [t_lo, t_hi] (grid indices).
    pub fn f_field_mass(&self, t_idx: usize, lo_idx: usize, hi_idx: usize, left: bool) -> f64 {
        let t = self.grid().time(t_idx);
        let cut = self.event_cut(t, left);
        let row = &self.fprefix[cut];
        self.f0cum[hi_idx] - self.f0cum[lo_idx] + row[hi_idx] - row[lo_idx]
    }

    /// Integral of the pathwise g(t, .) against the revealed measure over
    /// maturities in (from, cap], pricing-rule slice.
    fn g_mu_integral(&self, t_idx: usize, cap_idx: usize, left: bool) -> f64 {
        let grid = self.grid();
        let t = grid.time(t_idx);
        let cap = grid.time(cap_idx);
        let mut acc = 0.0;
        for a in &self.bundle.risky.atoms {
            let revealed = if left {
                a.reveal < t - LOOKUP_TOL
            } else {
                a.reveal <= t + LOOKUP_TOL
            };
            // the left limit keeps the maturity closed at t
            let in_range = if left {
                a.maturity >= t - LOOKUP_TOL && a.maturity <= cap + LOOKUP_TOL
            } else {
                a.maturity > t + LOOKUP_TOL && a.maturity <= cap + LOOKUP_TOL
            };
            if revealed && in_range {
                acc += self.g_value(t, a.maturity, left) * a.weight;
            }
        }
        let k_from = grid.times().partition_point(|&x| x < t - LOOKUP_TOL);
        if let Some(ac) = &self.bundle.risky.ac {
            for k in k_from..cap_idx.min(grid.n_cells()) {
                let mut mass = 0.0;
                for i in 0..k {
                    let completed = if left {
                        grid.time(i + 1) < t - LOOKUP_TOL
                    } else {
                        grid.time(i + 1) <= t + LOOKUP_TOL
                    };
                    if completed {
                        mass += ac.density[i][k] * grid.cell_dt(i);
                    }
                }
                if mass != 0.0 {
                    acc += self.g_value(t, grid.time(k), left) * mass * grid.cell_dt(k);
                }
            }
        }
        if let Some(sing) = &self.bundle.risky.singular {
            for k in k_from..cap_idx.min(grid.n_cells()) {
                let inc = sing.increment(grid.time(k), grid.time(k + 1));
                if inc != 0.0 {
                    acc += self.g_value(t, grid.time(k), left) * inc;
                }
            }
        }
        acc
    }

    // -----------------------------------------------------------------------
    // Prices
    // -----------------------------------------------------------------------

    /// P(t, T) = xi_t exp( -int_t^T f(t,u) du - int_(t,T] g(t,u) mu_t(du) ).
    pub fn price_direct(&self, t_idx: usize, cap_idx: usize) -> Result<f64> {
        if cap_idx < t_idx {
            return Err(TsError::invalid("price needs t <= T"));
        }
        let xi = self.bundle.credit.xi(t_idx);
        if xi == 0.0 {
            return Ok(0.0);
        }
        let lf = self.f_field_mass(t_idx, t_idx, cap_idx, false);
        let lg = self.g_mu_integral(t_idx, cap_idx, false);
        Ok(xi * (-lf - lg).exp())
    }

    /// Left limit P(t-, T): previsible state, maturity range closed at t.
    pub fn price_left(&self, t_idx: usize, cap_idx: usize) -> Result<f64> {
        if cap_idx < t_idx {
            return Err(TsError::invalid("price needs t <= T"));
        }
        let xi = match self.bundle.credit.tau() {
            Some(tau) if tau < self.grid().time(t_idx) - LOOKUP_TOL => 0.0,
            _ => {
                // xi_{t-}: undo the time-t recovery jumps
                let xi_t = self.bundle.credit.xi(t_idx);
                let mut undo = 1.0;
                for a in &self.bundle.credit.recovery().r_atoms {
                    if (a.time - self.grid().time(t_idx)).abs() <= LOOKUP_TOL {
                        undo *= 1.0 + a.size;
                    }
                }
                if undo == 0.0 {
                    // jump to zero exactly at t: left limit from the previous state
                    if t_idx == 0 {
                        1.0
                    } else {
                        self.bundle.credit.xi(t_idx - 1)
                    }
                } else {
                    xi_t / undo
                }
            }
        };
        if xi == 0.0 {
            return Ok(0.0);
        }
        let lf = self.f_field_mass(t_idx, t_idx, cap_idx, true);
        let lg = self.g_mu_integral(t_idx, cap_idx, true);
        Ok(xi * (-lf - lg).exp())
    }

    /// Pointwise short rate at grid index j (value on the cell starting
    /// there).
    pub fn short_rate(&self, j: usize) -> f64 {
        let grid = self.grid();
        match &self.model.short_rate {
            ShortRateSpec::Const(r) => *r,
            ShortRateSpec::Grid(v) => v[j.min(v.len() - 1)],
            ShortRateSpec::Diagonal => {
                let t = grid.time(j);
                let f_tt = self.f_value(t, t, false);
                let g_tt = self.g_diag_at(j.min(grid.len() - 1));
                let m = self.bundle.risky.mu_bar_ac_density(j.min(grid.n_cells() - 1));
                let alive = self.bundle.credit.alive_at(t + LOOKUP_TOL * 0.5);
                let credit_term = if !alive {
                    0.0
                } else {
                    match &self.bundle.credit {
                        CreditPath::Zero(dp, _) => dp.spec.hazard.at_cell(j.min(grid.n_cells() - 1)),
                        CreditPath::General(rp) => rp.c_ac_density(j.min(grid.n_cells() - 1)),
                    }
                };
                f_tt + g_tt * m - credit_term
            }
        }
    }

    /// Cell mass of the diagonal accrual int f(s,s) ds over cell j, using
    /// the same per-event maturity masses as every other f-integral.
    pub fn f_diag_cell_mass(&self, j: usize) -> f64 {
        let row = self.fprefix.last().unwrap();
        self.f0cum[j + 1] - self.f0cum[j] + row[j + 1] - row[j]
    }

    /// Bank-account cell mass over cell j. For the diagonal short rate the
    /// mass mirrors the engine's own diagonal accrual term for term, so a
    /// drift-consistent deterministic model discounts exactly.
    pub fn bank_cell_mass(&self, j: usize) -> f64 {
        let grid = self.grid();
        let dt = grid.cell_dt(j);
        match &self.model.short_rate {
            ShortRateSpec::Const(r) => r * dt,
            ShortRateSpec::Grid(v) => v[j.min(v.len() - 1)] * dt,
            ShortRateSpec::Diagonal => {
                let t = grid.time(j);
                let gm = self.g_diag_at(j) * self.bundle.risky.mu_bar_ac_density(j) * dt;
                let alive = self.bundle.credit.alive_at(t + LOOKUP_TOL * 0.5);
                let credit = if !alive {
                    0.0
                } else {
                    match &self.bundle.credit {
                        CreditPath::Zero(dp, _) => dp.spec.hazard.at_cell(j) * dt,
                        CreditPath::General(rp) => rp.c_ac_density(j) * dt,
                    }
                };
                self.f_diag_cell_mass(j) + gm - credit
            }
        }
    }

    /// Bank-account values B at grid points.
    pub fn numeraire(&self) -> Vec<f64> {
        let grid = self.grid();
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        out.push(1.0);
        for j in 0..grid.n_cells() {
            acc += self.bank_cell_mass(j);
            out.push(acc.exp());
        }
        out
    }

    // -----------------------------------------------------------------------
    // X^(T) and Y^(T)
    // -----------------------------------------------------------------------

    fn bars_cell(&self, j: usize, cap: f64) -> BarCoefficients {
        bar_coefficients_at(
            &self.model.coefs,
            &self.bundle.risky,
            self.grid(),
            self.grid().time(j),
            cap,
            MuRule::CELL,
        )
    }

    fn bars_previsible(&self, s: f64, cap: f64) -> BarCoefficients {
        bar_coefficients_at(
            &self.model.coefs,
            &self.bundle.risky,
            self.grid(),
            s,
            cap,
            MuRule::ATOM,
        )
    }

    /// Jump size of X^(T) (or Y^(T) with `yt = true`) at a discrete event.
    fn event_jump(&self, e: &PathEvent, cap_idx: usize, yt: bool) -> f64 {
        let grid = self.grid();
        let cap = grid.time(cap_idx);
        let bc = self.bars_previsible(e.time, cap);
        let mut size = 0.0;
        let sign = if yt { 1.0 } else { -1.0 };
        size += sign * bc.cap_a * e.da;
        for c in 0..e.dx.len() {
            size += sign * bc.cap_b[c] * e.dx[c];
        }
        for &(u, w) in &e.revealed {
            if u > e.time + LOOKUP_TOL && u <= cap + LOOKUP_TOL {
                size += sign * self.g_value(e.time, u, false) * w;
            }
        }
        if !yt && e.time <= cap + LOOKUP_TOL && e.maturing_weight != 0.0 {
            size += self.g_value(e.time, e.time, true) * e.maturing_weight;
        }
        size
    }

    fn assemble(&self, cap_idx: usize, yt: bool) -> SemimartingalePath {
        let grid = self.grid();
        let n = grid.n_cells();
        let cap = grid.time(cap_idx);
        let sign = if yt { 1.0 } else { -1.0 };
        let mut p = SemimartingalePath::zero(Arc::clone(grid));
        p.kernel = Some(Arc::clone(&self.bundle.driver.bracket));
        let mut loadings = Vec::with_capacity(n);
        if !yt {
            p.v0 = -(self.f0cum[cap_idx] - self.f0cum[0]);
        }
        // singular mu mass is revealed at time zero: one-shot g-integral
        if let Some(sing_mu) = &self.bundle.risky.singular {
            let mut reveal = 0.0;
            for k in 0..cap_idx.min(n) {
                let inc = sing_mu.increment(grid.time(k), grid.time(k + 1));
                if inc != 0.0 {
                    reveal += self.g_value(0.0, grid.time(k), false) * inc;
                }
            }
            p.v0 += sign * reveal;
        }
        for j in 0..n {
            let dt = grid.cell_dt(j);
            let bc = self.bars_cell(j, cap);
            if !yt {
                // diagonal short-rate accrual of the f field
                p.fv_ac_inc[j] += self.f_diag_cell_mass(j);
            }
            p.fv_ac_inc[j] += sign * bc.cap_a * self.bundle.a_proc.cell_ac_mass(j);
            p.fv_sing_inc[j] += sign * bc.cap_a * self.bundle.a_proc.sing_inc[j];
            let mut mart = 0.0;
            for c in 0..self.model.driver.dim {
                mart += bc.cap_b[c] * self.bundle.driver.xc_inc[j][c];
                p.fv_ac_inc[j] += sign
                    * bc.cap_b[c]
                    * (self.bundle.driver.fv[c].cell_ac_mass(j)
                        + self.bundle.driver.xd_drift[c] * dt);
                p.fv_sing_inc[j] += sign * bc.cap_b[c] * self.bundle.driver.fv[c].sing_inc[j];
            }
            p.mart_inc[j] = sign * mart;
            p.bracket_ac[j] = self.bundle.driver.bracket.ac_mass[j].quad_form(&bc.cap_b, &bc.cap_b);
            p.bracket_sing[j] = self.bundle.driver.bracket.sing[j].quad_form(&bc.cap_b, &bc.cap_b);
            loadings.push(bc.cap_b.iter().map(|x| sign * x).collect());

            // diffuse revelations of the ac mu component over this cell
            if let Some(ac) = &self.bundle.risky.ac {
                let ds = grid.cell_dt(j);
                let mut reveal = 0.0;
                for k in (j + 1)..cap_idx.min(n) {
                    let dens = ac.density[j][k];
                    if dens != 0.0 {
                        reveal += self.g_value(grid.time(j + 1), grid.time(k), false)
                            * dens
                            * grid.cell_dt(k);
                    }
                }
                p.fv_ac_inc[j] += sign * reveal * ds;
            }
            if !yt {
                // + int g(s,s) d(mu_bar): diffuse parts
                if j < cap_idx {
                    let gd = self.g_diag_at(j);
                    let m_mass = self.bundle.risky.mu_bar_ac_density(j) * dt;
                    if m_mass != 0.0 {
                        p.fv_ac_inc[j] += gd * m_mass;
                    }
                    let s_inc = self.bundle.risky.mu_bar_sing_inc(j);
                    if s_inc != 0.0 {
                        p.fv_sing_inc[j] += gd * s_inc;
                    }
                }
            }
        }
        p.loadings = Some(loadings);
        for e in &self.bundle.events {
            let size = self.event_jump(e, cap_idx, yt);
            if size != 0.0 {
                p.atoms.push(Atom {
                    time: e.time,
                    size,
                });
            }
        }
        p.atoms
            .sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        p
    }

    /// X^(T): the log of the default-free price factor.
    pub fn build_xt(&self, cap_idx: usize) -> SemimartingalePath {
        self.assemble(cap_idx, false)
    }

    /// Y^(T) = int int g dmu + int Abar dA + int Bbar dX.
    pub fn build_yt(&self, cap_idx: usize) -> SemimartingalePath {
        self.assemble(cap_idx, true)
    }

    /// xi_t exp(X_t^(T)) at every grid point.
    pub fn exp_xt_representation(&self, cap_idx: usize) -> Vec<f64> {
        let xt = self.build_xt(cap_idx);
        let values = xt.values();
        (0..self.grid().len())
            .map(|i| self.bundle.credit.xi(i) * values[i].exp())
            .collect()
    }

    /// Recovery jumps as a pure-jump semimartingale path (R or -H).
    pub fn credit_jump_path(&self) -> SemimartingalePath {
        let mut r = SemimartingalePath::zero(Arc::clone(self.grid()));
        match &self.bundle.credit {
            CreditPath::Zero(dp, _) => {
                if let Some(tau) = dp.tau {
                    if tau <= self.grid().horizon() + LOOKUP_TOL {
                        r.atoms.push(Atom {
                            time: tau,
                            size: -1.0,
                        });
                    }
                }
            }
            CreditPath::General(rp) => {
                r.atoms = rp.r_atoms.clone();
                for j in 0..self.grid().n_cells() {
                    r.fv_ac_inc[j] = -rp.spec.drawdown.at_cell(j) * self.grid().cell_dt(j);
                    r.fv_sing_inc[j] = -rp
                        .spec
                        .singular
                        .as_ref()
                        .map_or(0.0, |s| {
                            s.increment(self.grid().time(j), self.grid().time(j + 1))
                        });
                }
            }
        }
        r
    }

    /// The stochastic-exponential argument Z with P(t,T) = E(Z)_t:
    /// Z = X~ + R + [X~, R] (with R = -H under zero recovery).
    pub fn stoch_exp_argument(&self, cap_idx: usize) -> Result<SemimartingalePath> {
        let xt = self.build_xt(cap_idx);
        let xtilde = exp_to_stoch_log(&xt);
        let r = self.credit_jump_path();
        yor_combine(&xtilde, &r)
    }

    /// The stochastic-exponential price representation at every grid point.
    pub fn stoch_exp_representation(&self, cap_idx: usize) -> Result<Vec<f64>> {
        Ok(stochastic_exponential(&self.stoch_exp_argument(cap_idx)?).values)
    }

    /// Discounted argument: Z - int r ds, so that P/B = E(.).
    pub fn discounted_argument(&self, cap_idx: usize) -> Result<SemimartingalePath> {
        let mut z = self.stoch_exp_argument(cap_idx)?;
        for j in 0..self.grid().n_cells() {
            z.fv_ac_inc[j] -= self.bank_cell_mass(j);
        }
        Ok(z)
    }
}

// ---------------------------------------------------------------------------
// Jump functionals and exact compensators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct JumpFunctionalSet {
    /// Raw integrals W * mu as jump-only paths.
    pub raw_w1: FvPath,
    pub raw_w2: FvPath,
    pub raw_w3: FvPath,
    /// Compensators: ac density from Poisson-driven jumps, jump atoms at
    /// predictable times (exact finite sums over the joint law).
    pub comp_w1: FvPath,
    pub comp_w2: FvPath,
    pub comp_w3: FvPath,
    /// Compensator of sum Bbar dX^d.
    pub comp_bxd: FvPath,
}

/// One outcome of the joint mark law at a predictable time.
#[derive(Debug, Clone)]
pub struct JointOutcome {
    pub prob: f64,
    pub da: f64,
    pub dx: Vec<f64>,
    pub dxd: Vec<f64>,
    pub revealed: Vec<(f64, f64)>,
}

/// Enumerate the product of the declared laws at a predictable time
/// (independent components). Deterministic jumps contribute constants.
pub fn joint_law_at(model: &BondModel, t: f64) -> Vec<JointOutcome> {
    let d = model.driver.dim;
    let mut outcomes = vec![JointOutcome {
        prob: 1.0,
        da: 0.0,
        dx: vec![0.0; d],
        dxd: vec![0.0; d],
        revealed: Vec::new(),
    }];
    // deterministic FV jumps
    let det_da: f64 = model
        .a_integrator
        .fv
        .jumps
        .iter()
        .filter(|a| (a.time - t).abs() <= LOOKUP_TOL)
        .map(|a| a.size)
        .sum();
    let mut det_dx = vec![0.0; d];
    for (c, f) in model.driver.fv.iter().enumerate() {
        det_dx[c] += f
            .jumps
            .iter()
            .filter(|a| (a.time - t).abs() <= LOOKUP_TOL)
            .map(|a| a.size)
            .sum::<f64>();
    }
    for o in &mut outcomes {
        o.da = det_da;
        o.dx = det_dx.clone();
    }
    // scheduled driver laws
    if let Some(s) = model
        .driver
        .scheduled
        .iter()
        .find(|s| (s.time - t).abs() <= LOOKUP_TOL)
    {
        for (c, law) in s.laws.iter().enumerate() {
            let mean = law.mean();
            let mut next = Vec::with_capacity(outcomes.len() * law.outcomes().len());
            for o in &outcomes {
                for &(v, p) in law.outcomes() {
                    if p == 0.0 {
                        continue;
                    }
                    let mut o2 = o.clone();
                    o2.prob *= p;
                    o2.dx[c] += v;
                    o2.dxd[c] += v - mean;
                    next.push(o2);
                }
            }
            outcomes = next;
        }
    }
    // scheduled A law
    if let Some(law) = model.a_integrator.law_at(t) {
        let mut next = Vec::new();
        for o in &outcomes {
            for &(v, p) in law.outcomes() {
                if p == 0.0 {
                    continue;
                }
                let mut o2 = o.clone();
                o2.prob *= p;
                o2.da += v;
                next.push(o2);
            }
        }
        outcomes = next;
    }
    // risky atoms revealed here
    for spec in model
        .risky
        .atoms
        .iter()
        .filter(|a| (a.reveal - t).abs() <= LOOKUP_TOL)
    {
        let mut next = Vec::new();
        for o in &outcomes {
            for &(w, p) in spec.law.outcomes() {
                if p == 0.0 {
                    continue;
                }
                let mut o2 = o.clone();
                o2.prob *= p;
                if w != 0.0 && (spec.maturity - spec.reveal).abs() > LOOKUP_TOL {
                    o2.revealed.push((spec.maturity, w));
                }
                next.push(o2);
            }
        }
        outcomes = next;
    }
    outcomes
}

impl<'a> PathEngine<'a> {
    /// Previsible jump of mu_bar^{(T)} at time t.
    pub fn dmu_bar(&self, t: f64, cap_idx: usize) -> f64 {
        self.bundle
            .risky
            .mu_bar_jump_at(t, self.grid().time(cap_idx))
    }

    /// W1(t, y) = exp(g(t-,t) dmu_bar) (e^{-y} - 1).
    pub fn w1(&self, t: f64, cap_idx: usize, y: f64) -> f64 {
        let pf = (self.g_value(t, t, true) * self.dmu_bar(t, cap_idx)).exp();
        pf * ((-y).exp() - 1.0)
    }

    /// Jump of Y^(T) for a joint outcome at a predictable time (previsible
    /// bars; g jumps assembled from the outcome's own marks).
    pub fn y_jump_for_outcome(&self, t: f64, cap_idx: usize, o: &JointOutcome) -> f64 {
        let grid = self.grid();
        let cap = grid.time(cap_idx);
        let bc = self.bars_previsible(t, cap);
        let mut y = bc.cap_a * o.da;
        for c in 0..o.dx.len() {
            y += bc.cap_b[c] * o.dx[c];
        }
        for &(u, w) in &o.revealed {
            if u > t + LOOKUP_TOL && u <= cap + LOOKUP_TOL {
                let mut g_post = self.g_value(t, u, true)
                    + self.model.coefs.alpha.value(grid, t, u) * o.da;
                for (c, f) in self.model.coefs.beta.iter().enumerate() {
                    g_post += f.value(grid, t, u) * o.dx[c];
                }
                y += g_post * w;
            }
        }
        y
    }

    /// Exact compensator jumps at a predictable time:
    /// (d(W1*mu^p), d(W2*mu^p) or d(W3*mu^p), d(sum Bbar dX^d)^p).
    pub fn compensator_jumps_at(&self, t: f64, cap_idx: usize) -> (f64, f64, f64) {
        let outcomes = joint_law_at(self.model, t);
        let mut w1 = 0.0;
        let mut bxd = 0.0;
        let bc = self.bars_previsible(t, self.grid().time(cap_idx));
        for o in &outcomes {
            let y = self.y_jump_for_outcome(t, cap_idx, o);
            w1 += o.prob * self.w1(t, cap_idx, y);
            let mut b = 0.0;
            for c in 0..o.dxd.len() {
                b += bc.cap_b[c] * o.dxd[c];
            }
            bxd += o.prob * b;
        }
        let wh = match self.model.mode {
            RecoveryMode::Zero => self.model.default_spec.dhp_at(t) * w1,
            RecoveryMode::General => {
                let mean_dr = self
                    .model
                    .recovery_spec
                    .scheduled_law_at(t)
                    .map_or(0.0, |l| l.mean());
                mean_dr * w1
            }
        };
        (w1, wh, bxd)
    }

    /// Pointwise ac densities of the compensators at cell j:
    /// (W1 part, W2-or-W3 part, sum Bbar dX^d part).
    pub fn compensator_ac(&self, j: usize, cap_idx: usize) -> (f64, f64, f64) {
        let bc = self.bars_cell(j, self.grid().time(cap_idx));
        let mut w1 = 0.0;
        let mut wr = 0.0;
        let mut bxd = 0.0;
        for (c, p) in self.model.driver.poisson.iter().enumerate() {
            if p.intensity <= 0.0 {
                continue;
            }
            let e_jump = p.marks.expect(|v| (-bc.cap_b[c] * v).exp() - 1.0);
            w1 += p.intensity * e_jump;
            bxd += p.intensity * bc.cap_b[c] * p.marks.mean();
            if self.model.mode == RecoveryMode::General {
                if let Some(law) = self.model.recovery_spec.poisson_law_for(c) {
                    // independent recovery mark drawn at the event
                    wr += p.intensity * e_jump * law.mean();
                }
            }
        }
        (w1, wr, bxd)
    }

    pub fn jump_functionals(&self, cap_idx: usize) -> Result<JumpFunctionalSet> {
        for p in &self.model.driver.poisson {
            if p.intensity > 0.0 && p.marks.outcomes().is_empty() {
                return Err(TsError::Untractable("poisson marks must be finite".into()));
            }
        }
        let grid = self.grid();
        let mut raw_w1 = FvPath::zero(Arc::clone(grid));
        let mut raw_w2 = FvPath::zero(Arc::clone(grid));
        let mut raw_w3 = FvPath::zero(Arc::clone(grid));
        for e in &self.bundle.events {
            // realized jump of Y at this event
            let mut y = 0.0;
            {
                let bc = self.bars_previsible(e.time, grid.time(cap_idx));
                y += bc.cap_a * e.da;
                for c in 0..e.dx.len() {
                    y += bc.cap_b[c] * e.dx[c];
                }
                for &(u, w) in &e.revealed {
                    if u > e.time + LOOKUP_TOL && u <= grid.time(cap_idx) + LOOKUP_TOL {
                        y += self.g_value(e.time, u, false) * w;
                    }
                }
            }
            if y != 0.0 {
                let w1 = self.w1(e.time, cap_idx, y);
                raw_w1.jumps.push(Atom {
                    time: e.time,
                    size: w1,
                });
                if e.dh != 0.0 {
                    raw_w2.jumps.push(Atom {
                        time: e.time,
                        size: w1 * e.dh,
                    });
                }
                if e.dr != 0.0 {
                    raw_w3.jumps.push(Atom {
                        time: e.time,
                        size: w1 * e.dr,
                    });
                }
            }
        }
        let mut comp_w1 = FvPath::zero(Arc::clone(grid));
        let mut comp_w2 = FvPath::zero(Arc::clone(grid));
        let mut comp_w3 = FvPath::zero(Arc::clone(grid));
        let mut comp_bxd = FvPath::zero(Arc::clone(grid));
        for j in 0..grid.n_cells() {
            let (w1, wr, bxd) = self.compensator_ac(j, cap_idx);
            comp_w1.ac_density[j] = w1;
            match self.model.mode {
                RecoveryMode::Zero => comp_w2.ac_density[j] = 0.0,
                RecoveryMode::General => comp_w3.ac_density[j] = wr,
            }
            comp_bxd.ac_density[j] = bxd;
        }
        for t in self.model.predictable_event_times() {
            let (w1, wh, bxd) = self.compensator_jumps_at(t, cap_idx);
            if w1 != 0.0 {
                comp_w1.jumps.push(Atom { time: t, size: w1 });
            }
            if wh != 0.0 {
                match self.model.mode {
                    RecoveryMode::Zero => comp_w2.jumps.push(Atom { time: t, size: wh }),
                    RecoveryMode::General => comp_w3.jumps.push(Atom { time: t, size: wh }),
                }
            }
            if bxd != 0.0 {
                comp_bxd.jumps.push(Atom { time: t, size: bxd });
            }
        }
        Ok(JumpFunctionalSet {
            raw_w1,
            raw_w2,
            raw_w3,
            comp_w1,
            comp_w2,
            comp_w3,
            comp_bxd,
        })
    }
}

// ---------------------------------------------------------------------------
// Condition terms and the discounted decomposition
// ---------------------------------------------------------------------------

impl<'a> PathEngine<'a> {
    /// Right-hand side of the absolutely continuous drift condition at grid
    /// index j for maturity cap T: the short rate a consistent model must
    /// carry.
    pub fn ac_condition_rhs(&self, j: usize, cap_idx: usize) -> f64 {
        let grid = self.grid();
        let t = grid.time(j);
        let bc = self.bars_cell(j, grid.time(cap_idx));
        let f_tt = self.f_value(t, t, false);
        let g_tt = self.g_value(t, t, false);
        let m = self.bundle.risky.mu_bar_ac_density(j);
        let a_ac = self.bundle.a_proc.ac_density[j];
        // revelation rate of the diffuse mu component
        let gmu_ac = if let Some(ac) = &self.bundle.risky.ac {
            let mut rate = 0.0;
            for k in (j + 1)..cap_idx.min(grid.n_cells()) {
                if ac.density[j][k] != 0.0 {
                    rate += self.g_value(grid.time(j + 1), grid.time(k), false)
                        * ac.density[j][k]
                        * grid.cell_dt(k);
                }
            }
            rate
        } else {
            0.0
        };
        let mut xfv = 0.0;
        for c in 0..self.model.driver.dim {
            xfv += bc.cap_b[c] * self.bundle.driver.fv[c].ac_density[j];
        }
        let conv = 0.5
            * self
                .bundle
                .driver
                .bracket
                .psi[j]
                .quad_form(&bc.cap_b, &bc.cap_b);
        let (w1_ac, wr_ac, bxd_ac) = self.compensator_ac(j, cap_idx);
        let credit_ac = match &self.bundle.credit {
            CreditPath::Zero(dp, _) => dp.spec.hazard.at_cell(j),
            CreditPath::General(rp) => rp.c_ac_density(j),
        };
        let w_term = match self.model.mode {
            RecoveryMode::Zero => w1_ac, // W2 has no ac part (independent hazard)
            RecoveryMode::General => w1_ac + wr_ac,
        };
        f_tt - bc.cap_a * a_ac - gmu_ac + g_tt * m - credit_ac - xfv + conv + w_term + bxd_ac
    }

    /// Residual density of the absolutely continuous drift condition at grid
    /// index j for maturity cap T: zero when the condition holds. Stopped at
    /// absorption.
    pub fn ac_residual(&self, j: usize, cap_idx: usize) -> f64 {
        let grid = self.grid();
        let t = grid.time(j);
        if j >= cap_idx || !self.bundle.credit.alive_at(t + LOOKUP_TOL * 0.5) {
            return 0.0;
        }
        self.ac_condition_rhs(j, cap_idx) - self.short_rate(j)
    }

    /// Residual increment of the singular condition over cell j.
    pub fn sing_residual_inc(&self, j: usize, cap_idx: usize) -> f64 {
        let grid = self.grid();
        let t = grid.time(j);
        if j >= cap_idx || !self.bundle.credit.alive_at(t + LOOKUP_TOL * 0.5) {
            return 0.0;
        }
        let bc = self.bars_cell(j, grid.time(cap_idx));
        let gd = self.g_value(t, t, false);
        let mut inc = gd * self.bundle.risky.mu_bar_sing_inc(j);
        inc -= bc.cap_a * self.bundle.a_proc.sing_inc[j];
        for c in 0..self.model.driver.dim {
            inc -= bc.cap_b[c] * self.bundle.driver.fv[c].sing_inc[j];
        }
        inc += 0.5
            * self
                .bundle
                .driver
                .bracket
                .sing[j]
                .quad_form(&bc.cap_b, &bc.cap_b);
        let declared = match &self.bundle.credit {
            CreditPath::Zero(dp, _) => dp
                .spec
                .singular
                .as_ref()
                .map_or(0.0, |s| s.increment(grid.time(j), grid.time(j + 1))),
            CreditPath::General(rp) => rp.c_sing_inc(j),
        };
        inc - declared
    }

    /// Residual of the jump condition at a predictable time: zero when the
    /// declared compensator jump matches the required one.
    pub fn jump_residual(&self, t: f64, cap_idx: usize) -> f64 {
        if !prev_alive(self.bundle.credit.tau(), t) {
            return 0.0;
        }
        let (w1, wh, bxd) = self.compensator_jumps_at(t, cap_idx);
        let gamma = self.g_value(t, t, true) * self.dmu_bar(t, cap_idx);
        let e_gamma_m1 = gamma.exp_m1();
        match self.model.mode {
            RecoveryMode::Zero => {
                let dhp = self.model.default_spec.dhp_at(t);
                e_gamma_m1 * (1.0 - dhp) - dhp + w1 + bxd - wh
            }
            RecoveryMode::General => {
                let dc = self.model.recovery_spec.dc_at(t);
                e_gamma_m1 * (1.0 - dc) - dc + w1 + bxd + wh
            }
        }
    }
}

fn prev_alive(tau: Option<f64>, t: f64) -> bool {
    match tau {
        Some(tau) => tau >= t - LOOKUP_TOL,
        None => true,
    }
}

#[derive(Debug, Clone)]
pub struct DiscountedDecomposition {
    /// The stochastic logarithm of P(./B), stopped at absorption.
    pub stoch_log: Vec<f64>,
    /// Local-martingale part at grid points (M(0,T) = stoch_log(0)).
    pub mart: Vec<f64>,
    /// Pointwise density of the predictable ac part, per cell.
    pub fv_ac_density: Vec<f64>,
    /// Singular increments of the predictable part, per cell.
    pub fv_sing_inc: Vec<f64>,
    /// Jump atoms of the predictable part at predictable times.
    pub fv_jumps: Vec<Atom>,
}

impl DiscountedDecomposition {
    pub fn fv_ac_cum(&self, grid: &crate::time_paths::grid::TimeGrid, i: usize) -> f64 {
        (0..i)
            .map(|j| self.fv_ac_density[j] * grid.cell_dt(j))
            .sum()
    }

    pub fn fv_sing_cum(&self, i: usize) -> f64 {
        self.fv_sing_inc[..i].iter().sum()
    }

    pub fn fv_jump_cum(&self, grid: &crate::time_paths::grid::TimeGrid, i: usize) -> f64 {
        let t = grid.time(i);
        self.fv_jumps
            .iter()
            .filter(|a| a.time <= t + LOOKUP_TOL)
            .map(|a| a.size)
            .sum()
    }

    pub fn max_fv_ac(&self) -> f64 {
        self.fv_ac_density.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl<'a> PathEngine<'a> {
    /// Split the discounted stochastic logarithm into its local-martingale
    /// part and the predictable finite-variation parts (zero for an
    /// arbitrage-free model). Everything is stopped at absorption.
    pub fn decompose_discounted(&self, cap_idx: usize) -> Result<DiscountedDecomposition> {
        let grid = self.grid();
        let z = self.discounted_argument(cap_idx)?;
        let tau = self.bundle.credit.tau();
        // stop Z at absorption (freeze after the -1 atom)
        let mut stoch_log = Vec::with_capacity(grid.len());
        let raw = z.values();
        let mut frozen = None;
        for i in 0..grid.len() {
            let t = grid.time(i);
            if let Some(tau_t) = tau {
                if tau_t <= t + LOOKUP_TOL && frozen.is_none() {
                    // include increments up to and including tau
                    let mut v = z.v0;
                    for j in 0..grid.n_cells() {
                        let hi = grid.time(j + 1);
                        if hi <= tau_t + LOOKUP_TOL {
                            v += z.mart_inc[j] + z.fv_ac_inc[j] + z.fv_sing_inc[j];
                        } else {
                            let lo = grid.time(j);
                            if lo < tau_t {
                                let frac = (tau_t - lo) / grid.cell_dt(j);
                                v += (z.mart_inc[j] + z.fv_ac_inc[j] + z.fv_sing_inc[j]) * frac;
                            }
                        }
                    }
                    v += z
                        .atoms
                        .iter()
                        .filter(|a| a.time <= tau_t + LOOKUP_TOL)
                        .map(|a| a.size)
                        .sum::<f64>();
                    frozen = Some(v);
                }
            }
            stoch_log.push(match frozen {
                Some(v) => v,
                None => raw[i],
            });
        }

        let mut fv_ac_density = vec![0.0; grid.n_cells()];
        let mut fv_sing_inc = vec![0.0; grid.n_cells()];
        for j in 0..grid.n_cells() {
            fv_ac_density[j] = self.ac_residual(j, cap_idx);
            fv_sing_inc[j] = self.sing_residual_inc(j, cap_idx);
        }
        let mut fv_jumps = Vec::new();
        for t in self.model.predictable_event_times() {
            if t > grid.time(cap_idx) + LOOKUP_TOL {
                continue;
            }
            let r = self.jump_residual(t, cap_idx);
            if r != 0.0 {
                fv_jumps.push(Atom { time: t, size: r });
            }
        }
        let mut mart = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let fv = (0..i)
                .map(|j| {
                    let hi = grid.time(j + 1);
                    match tau {
                        Some(tau_t) if hi > tau_t + LOOKUP_TOL => {
                            let lo = grid.time(j);
                            if lo >= tau_t {
                                0.0
                            } else {
                                (fv_ac_density[j] * grid.cell_dt(j) + fv_sing_inc[j])
                                    * ((tau_t - lo) / grid.cell_dt(j))
                            }
                        }
                        _ => fv_ac_density[j] * grid.cell_dt(j) + fv_sing_inc[j],
                    }
                })
                .sum::<f64>();
            let jumps: f64 = fv_jumps
                .iter()
                .filter(|a| {
                    a.time <= grid.time(i) + LOOKUP_TOL
                        && prev_alive(tau, a.time)
                        && match tau {
                            Some(tau_t) => a.time <= tau_t + LOOKUP_TOL,
                            None => true,
                        }
                })
                .map(|a| a.size)
                .sum();
            mart.push(stoch_log[i] - fv - jumps);
        }
        Ok(DiscountedDecomposition {
            stoch_log,
            mart,
            fv_ac_density,
            fv_sing_inc,
            fv_jumps,
        })
    }
}

#[cfg(test)]
mod tests;
