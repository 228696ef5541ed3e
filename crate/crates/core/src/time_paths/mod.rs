//! Time grids, finite-variation decompositions and the driving processes.

pub mod driver;
pub mod fv;
pub mod grid;

pub use driver::{
    sample_driver, DriverBracket, DriverJump, DriverPath, DriverSampler, DriverSpec, JumpKind,
    MarkLaw, PoissonComp, ScheduledJumpSpec, SingularBracket, StepMatrix, SymMat,
};
pub use fv::{cantor, Atom, DensitySpec, FvPath, FvSpec, SingularSpec};
pub use grid::{EventFlags, TimeGrid};

/// Union of the uniform mesh and forced times; see [`TimeGrid::build`].
pub fn build_grid(
    horizon: f64,
    step: f64,
    forced_times: &[f64],
) -> crate::error::Result<TimeGrid> {
    TimeGrid::build(horizon, step, forced_times)
}

/// Populate a finite-variation path from its spec; see [`FvPath::sample`].
pub fn sample_fv_process(
    spec: &FvSpec,
    grid: &std::sync::Arc<TimeGrid>,
) -> crate::error::Result<FvPath> {
    FvPath::sample(spec, grid)
}
