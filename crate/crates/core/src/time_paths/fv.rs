//! Finite-variation paths stored as three explicit components.
//!
//! A finite-variation path is never inferred from samples: the absolutely
//! continuous density, the singular-continuous increments and the jump atoms
//! are carried separately, and `value` is always the sum of the three.
//! Densities have piecewise-constant-per-cell semantics (sampled at the cell
//! left point), which keeps every integral against them an exact finite sum.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TsError};
use crate::time_paths::grid::TimeGrid;

/// Standard Cantor function on [0,1], computed from the ternary expansion.
pub fn cantor(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut x = x;
    let mut y = 0.0_f64;
    let mut scale = 0.5_f64;
    for _ in 0..64 {
        x *= 3.0;
        if x >= 2.0 {
            y += scale;
            x -= 2.0;
        } else if x >= 1.0 {
            // landed in the removed middle third: value is constant there
            return y + scale;
        }
        scale *= 0.5;
        if scale == 0.0 {
            break;
        }
    }
    y
}

/// Deterministic singular-continuous nondecreasing function. The built-in is
/// a Cantor function supported on [lo, hi] scaled to total mass `mass`;
/// constructed compensators carry declared per-cell increments instead
/// (linear within a cell for off-grid evaluation, exact at grid points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularSpec {
    Cantor { lo: f64, hi: f64, mass: f64 },
    Increments { edges: Vec<f64>, inc: Vec<f64> },
}

impl SingularSpec {
    pub fn cantor(lo: f64, hi: f64, mass: f64) -> Self {
        SingularSpec::Cantor { lo, hi, mass }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SingularSpec::Cantor { lo, hi, mass } => {
                if !(lo.is_finite() && hi.is_finite() && mass.is_finite()) {
                    return Err(TsError::invalid("singular component must be finite"));
                }
                if hi <= lo {
                    return Err(TsError::invalid("singular support must have hi > lo"));
                }
                if *mass < 0.0 {
                    return Err(TsError::invalid("singular mass must be nonnegative"));
                }
            }
            SingularSpec::Increments { edges, inc } => {
                if edges.len() != inc.len() + 1 || inc.is_empty() {
                    return Err(TsError::invalid(
                        "singular increments need edges of length inc + 1",
                    ));
                }
                if edges.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(TsError::invalid("singular edges must increase"));
                }
                if inc.iter().any(|x| !x.is_finite() || *x < -1e-12) {
                    return Err(TsError::invalid("singular increments must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Value at `t` of the cumulative singular function.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            SingularSpec::Cantor { lo, hi, mass } => mass * cantor((t - lo) / (hi - lo)),
            SingularSpec::Increments { edges, inc } => {
                if t <= edges[0] {
                    return 0.0;
                }
                let mut acc = 0.0;
                for j in 0..inc.len() {
                    if t >= edges[j + 1] {
                        acc += inc[j];
                    } else {
                        acc += inc[j] * (t - edges[j]) / (edges[j + 1] - edges[j]);
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Increment over (a, b].
    pub fn increment(&self, a: f64, b: f64) -> f64 {
        self.value(b) - self.value(a)
    }
}

/// Absolutely continuous density, piecewise constant per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySpec {
    Const(f64),
    /// One value per grid cell.
    Cells(Vec<f64>),
}

impl DensitySpec {
    pub fn zero() -> Self {
        DensitySpec::Const(0.0)
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        match self {
            DensitySpec::Const(c) => {
                if !c.is_finite() {
                    return Err(TsError::invalid("density must be finite"));
                }
            }
            DensitySpec::Cells(v) => {
                if v.len() != grid.n_cells() {
                    return Err(TsError::invalid(format!(
                        "density needs one value per cell ({} cells, got {})",
                        grid.n_cells(),
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(TsError::invalid("density must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn at_cell(&self, j: usize) -> f64 {
        match self {
            DensitySpec::Const(c) => *c,
            DensitySpec::Cells(v) => v[j],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DensitySpec::Const(c) => *c == 0.0,
            DensitySpec::Cells(v) => v.iter().all(|x| *x == 0.0),
        }
    }
}

/// A jump atom: exact time and size. Scheduled atoms sit on grid points;
/// Poisson atoms carry exact event times inside cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub time: f64,
    pub size: f64,
}

/// Deterministic finite-variation specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvSpec {
    pub ac: DensitySpec,
    pub singular: Option<SingularSpec>,
    pub jumps: Vec<Atom>,
    /// Declares the assembled path nondecreasing; violated specs are rejected.
    pub increasing: bool,
}

impl FvSpec {
    pub fn zero() -> Self {
        FvSpec {
            ac: DensitySpec::zero(),
            singular: None,
            jumps: Vec::new(),
            increasing: false,
        }
    }
}

/// A finite-variation path with its three components stored explicitly.
#[derive(Debug, Clone)]
pub struct FvPath {
    pub grid: Arc<TimeGrid>,
    /// Density per cell (rate/year), piecewise constant.
    pub ac_density: Vec<f64>,
    /// Singular-continuous increment per cell.
    pub sing_inc: Vec<f64>,
    /// Jump atoms, sorted by time.
    pub jumps: Vec<Atom>,
}

impl FvPath {
    pub fn zero(grid: Arc<TimeGrid>) -> Self {
        let n = grid.n_cells();
        FvPath {
            grid,
            ac_density: vec![0.0; n],
            sing_inc: vec![0.0; n],
            jumps: Vec::new(),
        }
    }

    /// Populate the three components from a deterministic spec.
    pub fn sample(spec: &FvSpec, grid: &Arc<TimeGrid>) -> Result<Self> {
        spec.ac.validate(grid)?;
        if let Some(s) = &spec.singular {
            s.validate()?;
        }
        let n = grid.n_cells();
        let ac_density: Vec<f64> = (0..n).map(|j| spec.ac.at_cell(j)).collect();
        let sing_inc: Vec<f64> = match &spec.singular {
            Some(s) => (0..n)
                .map(|j| s.increment(grid.time(j), grid.time(j + 1)))
                .collect(),
            None => vec![0.0; n],
        };
        let mut jumps = spec.jumps.clone();
        for a in &jumps {
            if !a.time.is_finite() || !a.size.is_finite() {
                return Err(TsError::invalid("jump atoms must be finite"));
            }
            if grid.idx(a.time).is_err() {
                return Err(TsError::OffGrid(a.time));
            }
            if spec.increasing && a.size < 0.0 {
                return Err(TsError::invalid(format!(
                    "negative jump {} at {} on a path declared increasing",
                    a.size, a.time
                )));
            }
        }
        if spec.increasing && ac_density.iter().any(|d| *d < 0.0) {
            return Err(TsError::invalid(
                "negative density on a path declared increasing",
            ));
        }
        jumps.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        Ok(FvPath {
            grid: Arc::clone(grid),
            ac_density,
            sing_inc,
            jumps,
        })
    }

    pub fn cell_ac_mass(&self, j: usize) -> f64 {
        self.ac_density[j] * self.grid.cell_dt(j)
    }

    /// Value at grid point `i`: the sum of the three stored components.
    pub fn value(&self, i: usize) -> f64 {
        let mut v = 0.0;
        for j in 0..i {
            v += self.cell_ac_mass(j) + self.sing_inc[j];
        }
        let t = self.grid.time(i);
        v + self
            .jumps
            .iter()
            .take_while(|a| a.time <= t + crate::time_paths::grid::LOOKUP_TOL)
            .map(|a| a.size)
            .sum::<f64>()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.value(i)).collect()
    }

    /// Sum of jump sizes at exactly time `t`.
    pub fn jump_at(&self, t: f64) -> f64 {
        self.jumps
            .iter()
            .filter(|a| (a.time - t).abs() <= crate::time_paths::grid::LOOKUP_TOL)
            .map(|a| a.size)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: f64, s: f64) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::build(h, s, &[]).unwrap())
    }

    #[test]
    fn cantor_basics() {
        assert_eq!(cantor(0.0), 0.0);
        assert_eq!(cantor(1.0), 1.0);
        assert!((cantor(1.0 / 3.0) - 0.5).abs() < 1e-12);
        assert!((cantor(0.5) - 0.5).abs() < 1e-12);
        assert!((cantor(2.0 / 3.0) - 0.5).abs() < 1e-12);
        assert!((cantor(1.0 / 9.0) - 0.25).abs() < 1e-12);
        // monotone
        let mut prev = 0.0;
        for k in 0..=1000 {
            let v = cantor(k as f64 / 1000.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn lebesgue_case() {
        let g = grid(1.0, 0.25);
        let spec = FvSpec {
            ac: DensitySpec::Const(1.0),
            singular: None,
            jumps: vec![],
            increasing: true,
        };
        let p = FvPath::sample(&spec, &g).unwrap();
        assert!((p.value(g.len() - 1) - 1.0).abs() < 1e-15);
        assert!((p.value(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_only_case() {
        let g = grid(1.0, 0.125);
        let spec = FvSpec {
            ac: DensitySpec::zero(),
            singular: Some(SingularSpec::cantor(0.0, 1.0, 1.0)),
            jumps: vec![],
            increasing: true,
        };
        let p = FvPath::sample(&spec, &g).unwrap();
        assert!((p.value(g.len() - 1) - 1.0).abs() < 1e-12);
        assert!(p.ac_density.iter().all(|d| *d == 0.0));
        assert!(p.sing_inc.iter().all(|d| *d >= 0.0));
    }

    #[test]
    fn jump_plus_ac_additivity() {
        let g = grid(1.0, 0.25);
        let spec = FvSpec {
            ac: DensitySpec::Const(1.0),
            singular: None,
            jumps: vec![Atom {
                time: 0.5,
                size: 0.5,
            }],
            increasing: true,
        };
        let p = FvPath::sample(&spec, &g).unwrap();
        assert!((p.value(g.len() - 1) - 1.5).abs() < 1e-15);
        // reconstruction is the sum of the stored components, exactly
        let manual = p.cell_ac_mass(0) + p.cell_ac_mass(1) + p.sing_inc[0] + p.sing_inc[1] + 0.5;
        assert_eq!(p.value(2), manual);
    }

    #[test]
    fn rejects_negative_jump_on_increasing_path() {
        let g = grid(1.0, 0.25);
        let spec = FvSpec {
            ac: DensitySpec::Const(1.0),
            singular: None,
            jumps: vec![Atom {
                time: 0.5,
                size: -0.1,
            }],
            increasing: true,
        };
        assert!(FvPath::sample(&spec, &g).is_err());
    }

    #[test]
    fn rejects_off_grid_jump() {
        let g = grid(1.0, 0.25);
        let spec = FvSpec {
            ac: DensitySpec::zero(),
            singular: None,
            jumps: vec![Atom {
                time: 0.3,
                size: 0.1,
            }],
            increasing: false,
        };
        assert!(FvPath::sample(&spec, &g).is_err());
    }
}
