//! Discrete time grids.
//!
//! Every scheduled jump time of any model component must be a grid point;
//! identities are certified at grid points only.

use crate::error::{Result, TsError};
use serde::{Deserialize, Serialize};

/// Tolerance used to deduplicate grid points on construction.
pub const DEDUP_TOL: f64 = 1e-12;
/// Tolerance used to look up a time on the grid.
pub const LOOKUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFlags {
    pub scheduled_jump: bool,
    pub risky_date: bool,
}

impl EventFlags {
    pub fn is_plain(&self) -> bool {
        !self.scheduled_jump && !self.risky_date
    }
}

/// Strictly increasing times starting at 0, ending at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    flags: Vec<EventFlags>,
}

impl TimeGrid {
    /// Union of the uniform mesh of width `step` with `forced_times`,
    /// sorted and deduplicated within 1e-12.
    pub fn build(horizon: f64, step: f64, forced_times: &[f64]) -> Result<Self> {
        if !horizon.is_finite() || !step.is_finite() {
            return Err(TsError::invalid("horizon and step must be finite"));
        }
        if horizon <= 0.0 {
            return Err(TsError::invalid("horizon must be positive"));
        }
        if step <= 0.0 || step > horizon {
            return Err(TsError::invalid("step must satisfy 0 < step <= horizon"));
        }
        let mut times = Vec::new();
        let n = (horizon / step).round().max(1.0) as usize;
        // Uniform mesh; force the last point onto the horizon exactly.
        let n = if (n as f64) * step > horizon + DEDUP_TOL { n - 1 } else { n };
        for k in 0..=n {
            times.push((k as f64) * step);
        }
        if (times.last().copied().unwrap() - horizon).abs() > DEDUP_TOL {
            times.push(horizon);
        } else {
            *times.last_mut().unwrap() = horizon;
        }
        for &t in forced_times {
            if !t.is_finite() {
                return Err(TsError::invalid("forced time must be finite"));
            }
            if t < -DEDUP_TOL || t > horizon + DEDUP_TOL {
                return Err(TsError::invalid(format!(
                    "forced time {t} outside [0, {horizon}]"
                )));
            }
            times.push(t.clamp(0.0, horizon));
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_TOL);
        let flags = vec![EventFlags::default(); times.len()];
        Ok(TimeGrid { times, flags })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of cells (intervals between consecutive grid points).
    pub fn n_cells(&self) -> usize {
        self.times.len() - 1
    }

    pub fn cell_dt(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    /// Index of a grid point, within lookup tolerance.
    pub fn idx(&self, t: f64) -> Result<usize> {
        match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => Ok(i),
            Err(i) => {
                if i < self.times.len() && (self.times[i] - t).abs() <= LOOKUP_TOL {
                    Ok(i)
                } else if i > 0 && (self.times[i - 1] - t).abs() <= LOOKUP_TOL {
                    Ok(i - 1)
                } else {
                    Err(TsError::OffGrid(t))
                }
            }
        }
    }

    pub fn is_grid_time(&self, t: f64) -> bool {
        self.idx(t).is_ok()
    }

    /// Index j of the cell (t_j, t_{j+1}] containing `t` (t > 0).
    pub fn cell_containing(&self, t: f64) -> usize {
        debug_assert!(t > 0.0 && t <= self.horizon() + LOOKUP_TOL);
        let i = self
            .times
            .partition_point(|&x| x < t - LOOKUP_TOL);
        i.saturating_sub(1).min(self.n_cells() - 1)
    }

    pub fn flags(&self, i: usize) -> EventFlags {
        self.flags[i]
    }

    pub fn mark_scheduled(&mut self, t: f64) -> Result<()> {
        let i = self.idx(t)?;
        self.flags[i].scheduled_jump = true;
        Ok(())
    }

    pub fn mark_risky(&mut self, t: f64) -> Result<()> {
        let i = self.idx(t)?;
        self.flags[i].risky_date = true;
        Ok(())
    }
}
