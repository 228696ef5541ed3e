//! Canonical scenario builders used by the CLI examples and the acceptance
//! suite.

use crate::credit_events::{
    DefaultSpec, PoissonRecovery, RecoveryHazard, RecoverySpec, ScheduledRecovery,
};
use crate::forward_fields::{CoefField, CurveSpec};
use crate::model::ShortRateSpec;
use crate::risky_measure::{RiskyAtomSpec, RiskySpec};
use crate::sim_lab::scenario::{
    ForwardSection, GridSection, McSection, OutputsSection, ScenarioFile, SCHEMA_VERSION,
};
use crate::time_paths::driver::{
    DriverSpec, MarkLaw, PoissonComp, ScheduledJumpSpec, SingularBracket, StepMatrix, SymMat,
};
use crate::time_paths::fv::{Atom, DensitySpec, SingularSpec};

fn base(horizon: f64, step: f64, maturities: Vec<f64>) -> ScenarioFile {
    ScenarioFile {
        version: SCHEMA_VERSION,
        grid: GridSection {
            horizon,
            step,
            forced_times: vec![],
        },
        driver: DriverSpec::zero(1),
        forward_model: ForwardSection {
            f0: CurveSpec::Const(0.02),
            g0: CurveSpec::Const(0.0),
            ..Default::default()
        },
        risky_measure: RiskySpec::empty(),
        default: None,
        recovery: None,
        short_rate: ShortRateSpec::Diagonal,
        maturities,
        construct_drift: false,
        mc: McSection::default(),
        outputs: OutputsSection::default(),
    }
}

/// Deterministic flat-curve scenario with a closed-form price.
pub fn minimal_deterministic() -> ScenarioFile {
    let mut s = base(5.0, 0.25, vec![5.0]);
    s.short_rate = ShortRateSpec::Const(0.02);
    s.mc.paths = 16;
    s
}

/// Classical reduction: 1-d Brownian with constant volatility, no credit
/// machinery; the constructed drift is sigma^2 (T - t).
pub fn classical_hjm(sigma: f64, horizon: f64, step: f64) -> ScenarioFile {
    let mut s = base(horizon, step, vec![horizon]);
    s.driver = DriverSpec::zero(1);
    s.driver.brownian_cov = StepMatrix::Const(SymMat::identity(1));
    s.forward_model.b = vec![CoefField::Const(sigma)];
    s.construct_drift = true;
    s
}

/// Constructed zero-recovery market: Brownian and Poisson driver components,
/// two risky dates revealed at time zero, and a base hazard.
pub fn zero_recovery_mc() -> ScenarioFile {
    let mut s = base(2.0, 0.02, vec![0.5, 1.0, 2.0]);
    s.driver = DriverSpec::zero(2);
    s.driver.brownian_cov =
        StepMatrix::Const(SymMat::from_rows(&[vec![1.0, 0.25], vec![0.25, 0.5]]).unwrap());
    s.driver.poisson[0] = PoissonComp {
        intensity: 0.5,
        marks: MarkLaw(vec![(0.05, 0.5), (-0.04, 0.5)]),
    };
    s.forward_model.f0 = CurveSpec::Linear {
        intercept: 0.02,
        slope: 0.002,
    };
    s.forward_model.g0 = CurveSpec::Const(0.05);
    s.forward_model.b = vec![
        CoefField::Const(0.01),
        CoefField::ExpDecay {
            scale: 0.008,
            rate: 0.5,
        },
    ];
    s.forward_model.alpha = CoefField::Const(0.02);
    s.forward_model.beta = vec![CoefField::Zero, CoefField::Zero];
    s.risky_measure.atoms = vec![
        RiskyAtomSpec {
            reveal: 0.0,
            maturity: 0.75,
            law: MarkLaw::degenerate(1.2),
        },
        RiskyAtomSpec {
            reveal: 0.0,
            maturity: 1.5,
            law: MarkLaw::degenerate(0.8),
        },
    ];
    s.default = Some(DefaultSpec {
        hazard: DensitySpec::Const(0.02),
        singular: None,
        discrete: vec![],
    });
    s.construct_drift = true;
    s.mc.paths = 100_000;
    s.mc.checkpoints = vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
    s
}

/// Deterministic-weight two-period tree; constructible, so the oracle's
/// exact tree expectation reproduces P(0,T).
pub fn two_period_constructed() -> ScenarioFile {
    let mut s = base(1.0, 0.5, vec![0.5, 1.0]);
    s.forward_model.f0 = CurveSpec::Const(0.03);
    s.forward_model.g0 = CurveSpec::Const(0.05);
    s.forward_model.alpha = CoefField::Const(0.02);
    s.risky_measure.atoms = vec![
        RiskyAtomSpec {
            reveal: 0.0,
            maturity: 0.5,
            law: MarkLaw::degenerate(0.9),
        },
        RiskyAtomSpec {
            reveal: 0.0,
            maturity: 1.0,
            law: MarkLaw::degenerate(1.4),
        },
    ];
    s.default = Some(DefaultSpec::none());
    s.construct_drift = true;
    s.mc.paths = 4096;
    s
}

/// Single risky date with gamma w = 0.1 (g0 = 0.05, weight 2).
pub fn single_risky_date() -> ScenarioFile {
    let mut s = base(2.0, 0.025, vec![2.0]);
    s.forward_model.g0 = CurveSpec::Const(0.05);
    s.risky_measure.atoms = vec![RiskyAtomSpec {
        reveal: 0.0,
        maturity: 1.0,
        law: MarkLaw::degenerate(2.0),
    }];
    s.default = Some(DefaultSpec::none());
    s.construct_drift = true;
    s.mc.paths = 100_000;
    s.mc.checkpoints = vec![0.5, 1.0, 1.5, 2.0];
    s
}

/// General recovery with a fractional loss of 0.4 at hazard-driven credit
/// events plus Poisson-attached partial losses.
pub fn general_recovery_mc() -> ScenarioFile {
    let mut s = base(2.0, 0.02, vec![0.5, 1.0, 2.0]);
    s.driver = DriverSpec::zero(1);
    s.driver.brownian_cov = StepMatrix::Const(SymMat::identity(1));
    s.driver.poisson[0] = PoissonComp {
        intensity: 0.4,
        marks: MarkLaw(vec![(0.04, 0.5), (-0.03, 0.5)]),
    };
    s.forward_model.f0 = CurveSpec::Const(0.025);
    s.forward_model.g0 = CurveSpec::Const(0.05);
    s.forward_model.b = vec![CoefField::Const(0.01)];
    s.forward_model.alpha = CoefField::Const(0.02);
    s.forward_model.beta = vec![CoefField::Zero];
    s.risky_measure.atoms = vec![RiskyAtomSpec {
        reveal: 0.0,
        maturity: 1.0,
        law: MarkLaw::degenerate(1.0),
    }];
    s.recovery = Some(RecoverySpec {
        drawdown: DensitySpec::zero(),
        singular: None,
        scheduled: vec![ScheduledRecovery {
            time: 1.0,
            law: MarkLaw(vec![(-0.5, 0.1), (0.0, 0.9)]),
        }],
        poisson: vec![PoissonRecovery {
            component: 0,
            law: MarkLaw(vec![(-0.2, 0.25), (0.0, 0.75)]),
        }],
        hazard_jump: Some(RecoveryHazard {
            hazard: DensitySpec::Const(0.15),
            singular: None,
            law: MarkLaw::degenerate(-0.4),
        }),
    });
    s.construct_drift = true;
    s.mc.paths = 100_000;
    s.mc.checkpoints = vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
    s
}

/// Representation-equivalence workhorse: Brownian + Poisson + two scheduled
/// jump times + two risky dates + recovery jumps.
pub fn jump_rich() -> ScenarioFile {
    let mut s = base(2.0, 0.125, vec![1.0, 2.0]);
    s.driver = DriverSpec::zero(2);
    s.driver.brownian_cov =
        StepMatrix::Const(SymMat::from_rows(&[vec![1.0e-2, 2.0e-3], vec![2.0e-3, 5.0e-3]]).unwrap());
    s.driver.bracket_sing = Some(SingularBracket {
        clock: SingularSpec::cantor(0.0, 2.0, 4.0e-3),
        direction: SymMat::identity(2),
    });
    s.driver.poisson[0] = PoissonComp {
        intensity: 1.0,
        marks: MarkLaw(vec![(-0.05, 0.5), (0.08, 0.5)]),
    };
    s.driver.scheduled = vec![
        ScheduledJumpSpec {
            time: 0.5,
            laws: vec![
                MarkLaw(vec![(0.1, 0.5), (-0.1, 0.5)]),
                MarkLaw::degenerate(0.05),
            ],
        },
        ScheduledJumpSpec {
            time: 1.25,
            laws: vec![
                MarkLaw(vec![(0.06, 0.25), (-0.02, 0.75)]),
                MarkLaw(vec![(0.0, 0.5), (0.04, 0.5)]),
            ],
        },
    ];
    s.driver.fv[0].ac = DensitySpec::Const(0.02);
    s.driver.fv[1].singular = Some(SingularSpec::cantor(0.25, 1.75, 0.1));
    s.driver.fv[1].jumps.push(Atom {
        time: 0.75,
        size: 0.05,
    });
    s.forward_model.f0 = CurveSpec::Linear {
        intercept: 0.02,
        slope: 0.005,
    };
    s.forward_model.g0 = CurveSpec::Const(0.05);
    s.forward_model.a = CoefField::LinearTenor { scale: 1.0e-4 };
    s.forward_model.b = vec![
        CoefField::Const(0.01),
        CoefField::LinearTenor { scale: 5.0e-3 },
    ];
    s.forward_model.alpha = CoefField::Const(0.3);
    s.forward_model.beta = vec![CoefField::Const(0.2), CoefField::Zero];
    s.forward_model.a_integrator.scheduled = vec![(0.75, MarkLaw(vec![(0.2, 0.5), (0.0, 0.5)]))];
    s.risky_measure = RiskySpec {
        atoms: vec![
            RiskyAtomSpec {
                reveal: 0.0,
                maturity: 1.0,
                law: MarkLaw::degenerate(0.6),
            },
            RiskyAtomSpec {
                reveal: 0.25,
                maturity: 1.25,
                law: MarkLaw(vec![(0.4, 0.5), (0.0, 0.5)]),
            },
        ],
        ac: None,
        singular: Some(SingularSpec::cantor(0.25, 1.75, 0.4)),
    };
    s.recovery = Some(RecoverySpec {
        drawdown: DensitySpec::Const(0.05),
        singular: None,
        scheduled: vec![ScheduledRecovery {
            time: 1.0,
            law: MarkLaw(vec![(-0.25, 0.3), (0.0, 0.7)]),
        }],
        poisson: vec![PoissonRecovery {
            component: 0,
            law: MarkLaw(vec![(-0.4, 0.5), (0.0, 0.5)]),
        }],
        hazard_jump: Some(RecoveryHazard {
            hazard: DensitySpec::Const(0.2),
            singular: None,
            law: MarkLaw(vec![(-0.3, 0.5), (0.0, 0.5)]),
        }),
    });
    s.short_rate = ShortRateSpec::Const(0.02);
    s.mc.paths = 1000;
    s
}

/// Cantor-type singular components in the risky measure and the bracket;
/// the constructed singular compensator matches them.
pub fn singular_conditions() -> ScenarioFile {
    let mut s = base(1.0, 0.025, vec![1.0]);
    s.driver.brownian_cov = StepMatrix::Const(SymMat::identity(1));
    s.driver.bracket_sing = Some(SingularBracket {
        clock: SingularSpec::cantor(0.0, 1.0, 0.05),
        direction: SymMat::identity(1),
    });
    s.forward_model.g0 = CurveSpec::Const(0.05);
    s.forward_model.b = vec![CoefField::Const(0.01)];
    s.risky_measure.singular = Some(SingularSpec::cantor(0.1, 0.9, 0.5));
    s.default = Some(DefaultSpec {
        hazard: DensitySpec::Const(0.05),
        singular: None,
        discrete: vec![],
    });
    s.construct_drift = true;
    s.mc.paths = 100;
    s
}

/// Two-period binomial spec for the brute-force oracle, randomized by seed.
pub fn two_period_tree(seed: u64) -> ScenarioFile {
    use rand::Rng;
    let mut rng = crate::rng::path_rng(seed, 0);
    let mut r = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let mut s = base(1.0, 0.5, vec![0.5, 1.0]);
    s.forward_model.f0 = CurveSpec::Const(r(0.0, 0.05));
    s.forward_model.g0 = CurveSpec::Const(r(0.01, 0.1));
    s.forward_model.a = CoefField::Const(r(-0.01, 0.01));
    s.forward_model.b = vec![CoefField::Const(r(0.0, 0.3))];
    s.forward_model.alpha = CoefField::Const(r(-0.1, 0.1));
    s.forward_model.beta = vec![CoefField::Zero];
    s.driver.scheduled = vec![ScheduledJumpSpec {
        time: 0.5,
        laws: vec![{
            let p = r(0.2, 0.8);
            MarkLaw(vec![(r(-0.3, 0.0), p), (r(0.0, 0.3), 1.0 - p)])
        }],
    }];
    s.forward_model.a_integrator.scheduled = vec![(1.0, {
        let p = r(0.3, 0.7);
        MarkLaw(vec![(r(0.0, 0.4), p), (0.0, 1.0 - p)])
    })];
    s.risky_measure.atoms = vec![
        RiskyAtomSpec {
            reveal: 0.0,
            maturity: 0.5,
            law: MarkLaw::degenerate(r(0.1, 1.0)),
        },
        RiskyAtomSpec {
            reveal: 0.5,
            maturity: 1.0,
            law: {
                let p = r(0.2, 0.8);
                MarkLaw(vec![(r(0.1, 0.8), p), (0.0, 1.0 - p)])
            },
        },
    ];
    if seed.is_multiple_of(2) {
        s.default = Some(DefaultSpec {
            hazard: DensitySpec::zero(),
            singular: None,
            discrete: vec![
                crate::credit_events::DiscreteHazard {
                    time: 0.5,
                    dhp: r(0.0, 0.3),
                },
                crate::credit_events::DiscreteHazard {
                    time: 1.0,
                    dhp: r(0.0, 0.3),
                },
            ],
        });
    } else {
        s.recovery = Some(RecoverySpec {
            drawdown: DensitySpec::zero(),
            singular: None,
            scheduled: vec![
                ScheduledRecovery {
                    time: 0.5,
                    law: {
                        let p = r(0.1, 0.5);
                        MarkLaw(vec![(-r(0.2, 0.9), p), (0.0, 1.0 - p)])
                    },
                },
                ScheduledRecovery {
                    time: 1.0,
                    law: {
                        let p = r(0.1, 0.5);
                        MarkLaw(vec![(-1.0, p), (0.0, 1.0 - p)])
                    },
                },
            ],
            poisson: vec![],
            hazard_jump: None,
        });
    }
    s.short_rate = ShortRateSpec::Const(r(0.0, 0.04));
    s
}
