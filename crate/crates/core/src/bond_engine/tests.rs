use std::sync::Arc;

use super::*;
use crate::credit_events::{DefaultSpec, DiscreteHazard, RecoverySpec, ScheduledRecovery};
use crate::forward_fields::{CoefField, CoefficientSpec, CurveSpec, InitialCurves};
use crate::model::{
    AIntegratorSpec, BondModel, ModelSampler, RecoveryMode, ShortRateSpec,
};
use crate::risky_measure::{MuAcSpec, RiskyAtomSpec, RiskySpec};
use crate::time_paths::driver::{
    DriverSpec, MarkLaw, PoissonComp, ScheduledJumpSpec, SingularBracket, StepMatrix, SymMat,
};
use crate::time_paths::fv::{DensitySpec, SingularSpec};
use crate::time_paths::grid::TimeGrid;

fn flat_model(horizon: f64, step: f64, f0: f64) -> BondModel {
    let grid = Arc::new(TimeGrid::build(horizon, step, &[]).unwrap());
    BondModel {
        grid,
        curves: InitialCurves {
            f0: CurveSpec::Const(f0),
            g0: CurveSpec::Const(0.0),
        },
        coefs: CoefficientSpec::zero(1),
        driver: DriverSpec::zero(1),
        a_integrator: AIntegratorSpec::lebesgue(),
        risky: RiskySpec::empty(),
        mode: RecoveryMode::Zero,
        default_spec: DefaultSpec::none(),
        recovery_spec: RecoverySpec::none(),
        short_rate: ShortRateSpec::Const(0.0),
    }
}

fn sample(model: &BondModel, seed: u64, path: u64) -> PathBundle {
    let sampler = ModelSampler::new(Arc::new(model.clone())).unwrap();
    let mut rng = crate::rng::path_rng(seed, path);
    sampler.sample(&mut rng).unwrap()
}

/// A model exercising every jump channel at once.
fn jump_rich_model(mode: RecoveryMode) -> BondModel {
    let grid = Arc::new(TimeGrid::build(2.0, 0.125, &[]).unwrap());
    let mut driver = DriverSpec::zero(2);
    driver.brownian_cov = StepMatrix::Const(
        SymMat::from_rows(&[vec![1.0e-2, 2.0e-3], vec![2.0e-3, 5.0e-3]]).unwrap(),
    );
    driver.bracket_sing = Some(SingularBracket {
        clock: SingularSpec::cantor(0.0, 2.0, 4.0e-3),
        direction: SymMat::identity(2),
    });
    driver.poisson[0] = PoissonComp {
        intensity: 1.0,
        marks: MarkLaw(vec![(-0.05, 0.5), (0.08, 0.5)]),
    };
    driver.scheduled.push(ScheduledJumpSpec {
        time: 0.5,
        laws: vec![
            MarkLaw(vec![(0.1, 0.5), (-0.1, 0.5)]),
            MarkLaw::degenerate(0.05),
        ],
    });
    driver.fv[0].ac = DensitySpec::Const(0.02);
    driver.fv[1].singular = Some(SingularSpec::cantor(0.25, 1.75, 0.1));
    driver.fv[1].jumps.push(crate::time_paths::fv::Atom {
        time: 0.75,
        size: 0.05,
    });

    let mut density = vec![vec![0.0; grid.n_cells()]; grid.n_cells()];
    density[1][6] = 0.3;
    density[2][9] = 0.2;
    let risky = RiskySpec {
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
        ac: Some(MuAcSpec { density }),
        singular: Some(SingularSpec::cantor(0.25, 1.75, 0.4)),
    };

    let (default_spec, recovery_spec) = match mode {
        RecoveryMode::Zero => (
            DefaultSpec {
                hazard: DensitySpec::Const(0.3),
                singular: Some(SingularSpec::cantor(0.5, 1.5, 0.05)),
                discrete: vec![DiscreteHazard {
                    time: 0.5,
                    dhp: 0.15,
                }],
            },
            RecoverySpec::none(),
        ),
        RecoveryMode::General => (
            DefaultSpec::none(),
            RecoverySpec {
                drawdown: DensitySpec::Const(0.05),
                singular: None,
                scheduled: vec![ScheduledRecovery {
                    time: 1.0,
                    law: MarkLaw(vec![(-0.25, 0.3), (0.0, 0.7)]),
                }],
                poisson: vec![crate::credit_events::PoissonRecovery {
                    component: 0,
                    law: MarkLaw(vec![(-0.4, 0.5), (0.0, 0.5)]),
                }],
                hazard_jump: Some(crate::credit_events::RecoveryHazard {
                    hazard: DensitySpec::Const(0.2),
                    singular: None,
                    law: MarkLaw(vec![(-0.3, 0.5), (0.0, 0.5)]),
                }),
            },
        ),
    };

    BondModel {
        grid: Arc::clone(&grid),
        curves: InitialCurves {
            f0: CurveSpec::Linear {
                intercept: 0.02,
                slope: 0.005,
            },
            g0: CurveSpec::Const(0.05),
        },
        coefs: CoefficientSpec {
            a: CoefField::LinearTenor { scale: 1.0e-4 },
            b: vec![CoefField::Const(0.01), CoefField::LinearTenor { scale: 5.0e-3 }],
            alpha: CoefField::Const(0.3),
            beta: vec![CoefField::Const(0.2), CoefField::Zero],
        },
        driver,
        a_integrator: {
            let mut a = AIntegratorSpec::lebesgue();
            a.scheduled
                .push((0.75, MarkLaw(vec![(0.2, 0.5), (0.0, 0.5)])));
            a
        },
        risky,
        mode,
        default_spec,
        recovery_spec,
        short_rate: ShortRateSpec::Const(0.02),
    }
}

#[test]
fn deterministic_price_closed_forms() {
    // flat f0 = 0.02, g = 0, no default: P(0,5) = e^{-0.1}
    let m = flat_model(5.0, 0.25, 0.02);
    let b = sample(&m, 0, 0);
    let eng = PathEngine::new(&m, &b);
    let p = eng.price_direct(0, m.grid.idx(5.0).unwrap()).unwrap();
    assert!((p - (-0.1_f64).exp()).abs() < 1e-14);
    assert!((p - 0.9048374180359595).abs() < 1e-9);

    // atom (0, u=1, w=1), g0 = 0.05, flat f0 = 0.02: P(0,2) = e^{-0.09}
    let mut m = flat_model(2.0, 0.25, 0.02);
    m.curves.g0 = CurveSpec::Const(0.05);
    m.risky.atoms.push(RiskyAtomSpec {
        reveal: 0.0,
        maturity: 1.0,
        law: MarkLaw::degenerate(1.0),
    });
    let b = sample(&m, 0, 0);
    let eng = PathEngine::new(&m, &b);
    let p = eng.price_direct(0, m.grid.idx(2.0).unwrap()).unwrap();
    assert!((p - (-0.09_f64).exp()).abs() < 1e-14);
    assert!((p - 0.9139311852712282).abs() < 1e-9);
}

#[test]
fn price_at_maturity_is_xi() {
    for mode in [RecoveryMode::Zero, RecoveryMode::General] {
        let m = jump_rich_model(mode);
        for seed in 0..20 {
            let b = sample(&m, 3, seed);
            let eng = PathEngine::new(&m, &b);
            for t_idx in [0, 4, 8, m.grid.len() - 1] {
                let p = eng.price_direct(t_idx, t_idx).unwrap();
                assert!(
                    (p - b.credit.xi(t_idx)).abs() < 1e-14,
                    "P(T,T) != xi at {t_idx}"
                );
            }
        }
    }
}

#[test]
fn static_curve_reduction_of_xt() {
    // all dynamics zero, mu empty: X_t^(T) = int_0^t f0 - int_0^T f0
    let m = flat_model(1.0, 0.25, 0.03);
    let b = sample(&m, 0, 0);
    let eng = PathEngine::new(&m, &b);
    let cap = m.grid.idx(1.0).unwrap();
    let xt = eng.build_xt(cap);
    for i in 0..m.grid.len() {
        let expect = 0.03 * m.grid.time(i) - 0.03;
        assert!((xt.value(i) - expect).abs() < 1e-15);
    }
}

#[test]
fn lemma_identity_exp_xt_vs_direct() {
    // (1 - H_t) exp(X^(T)) (resp. xi exp X) equals the direct price,
    // pathwise, on a jump-rich model
    for mode in [RecoveryMode::Zero, RecoveryMode::General] {
        let m = jump_rich_model(mode);
        let caps = [m.grid.idx(1.0).unwrap(), m.grid.idx(2.0).unwrap()];
        let mut worst = 0.0_f64;
        for seed in 0..100 {
            let b = sample(&m, 17, seed);
            let eng = PathEngine::new(&m, &b);
            for &cap in &caps {
                let rep = eng.exp_xt_representation(cap);
                for t_idx in 0..=cap {
                    let direct = eng.price_direct(t_idx, cap).unwrap();
                    worst = worst.max((rep[t_idx] - direct).abs());
                }
            }
        }
        assert!(
            worst <= 1e-10,
            "exp(X^(T)) identity broke: max discrepancy {worst} ({mode:?})"
        );
    }
}

#[test]
fn stoch_exp_representation_matches_direct() {
    for mode in [RecoveryMode::Zero, RecoveryMode::General] {
        let m = jump_rich_model(mode);
        let caps = [m.grid.idx(1.0).unwrap(), m.grid.idx(2.0).unwrap()];
        let mut worst = 0.0_f64;
        for seed in 0..100 {
            let b = sample(&m, 23, seed);
            let eng = PathEngine::new(&m, &b);
            for &cap in &caps {
                let rep = eng.stoch_exp_representation(cap).unwrap();
                for t_idx in 0..=cap {
                    let direct = eng.price_direct(t_idx, cap).unwrap();
                    worst = worst.max((rep[t_idx] - direct).abs());
                }
            }
        }
        assert!(
            worst <= 1e-9,
            "stochastic exponential representation broke: {worst} ({mode:?})"
        );
    }
}

#[test]
fn post_default_price_is_zero() {
    let mut m = jump_rich_model(RecoveryMode::Zero);
    m.default_spec.hazard = DensitySpec::Const(3.0);
    let cap = m.grid.idx(2.0).unwrap();
    let mut saw_default = false;
    for seed in 0..50 {
        let b = sample(&m, 29, seed);
        if let Some(tau) = b.credit.tau() {
            saw_default = true;
            let eng = PathEngine::new(&m, &b);
            let rep = eng.stoch_exp_representation(cap).unwrap();
            for i in 0..m.grid.len() {
                if m.grid.time(i) >= tau {
                    assert_eq!(eng.price_direct(i.min(cap), cap).unwrap(), 0.0);
                    if i <= cap {
                        assert_eq!(rep[i], 0.0);
                    }
                }
            }
        }
    }
    assert!(saw_default);
}

#[test]
fn mu_bar_term_adds_gamma_w_at_maturity() {
    // single deterministic risky atom: the mu_bar term contributes
    // +g(u-,u) w to the jump of X^(T) at u
    let mut m = flat_model(2.0, 0.25, 0.02);
    m.curves.g0 = CurveSpec::Const(0.05);
    let w = 0.8;
    m.risky.atoms.push(RiskyAtomSpec {
        reveal: 0.0,
        maturity: 1.0,
        law: MarkLaw::degenerate(w),
    });
    let b = sample(&m, 0, 0);
    let eng = PathEngine::new(&m, &b);
    let cap = m.grid.idx(2.0).unwrap();
    let xt = eng.build_xt(cap);
    let jump = xt.jump_at(1.0);
    assert!((jump - 0.05 * w).abs() < 1e-14);
}

#[test]
fn yt_single_scheduled_jump() {
    // single scheduled X-jump y at t*, Bbar(t*,T) = c: dY_{t*} = c y
    let mut m = flat_model(2.0, 0.25, 0.0);
    let sigma = 0.4;
    m.coefs.b = vec![CoefField::Const(sigma)];
    let y = 0.3;
    m.driver.scheduled.push(ScheduledJumpSpec {
        time: 0.5,
        laws: vec![MarkLaw::degenerate(y)],
    });
    let b = sample(&m, 0, 0);
    let eng = PathEngine::new(&m, &b);
    let cap = m.grid.idx(2.0).unwrap();
    let yt = eng.build_yt(cap);
    let c = sigma * (2.0 - 0.5);
    assert!((yt.jump_at(0.5) - c * y).abs() < 1e-14);
    // and no other jumps
    assert_eq!(yt.atoms.len(), 1);
}

#[test]
fn w1_closed_form_arithmetic() {
    // W1(s, 0) = 0 for any prefactor; the spec's worked case:
    // g(s-,s) = 0.05, dmu_bar = 2, y = 0.1 -> e^{0.1}(e^{-0.1}-1)
    let mut m = flat_model(2.0, 0.25, 0.02);
    m.curves.g0 = CurveSpec::Const(0.05);
    m.risky.atoms.push(RiskyAtomSpec {
        reveal: 0.0,
        maturity: 1.0,
        law: MarkLaw::degenerate(2.0),
    });
    let b = sample(&m, 0, 0);
    let eng = PathEngine::new(&m, &b);
    let cap = m.grid.idx(2.0).unwrap();
    assert_eq!(eng.w1(1.0, cap, 0.0), 0.0);
    let w1 = eng.w1(1.0, cap, 0.1);
    let expect = 0.1_f64.exp() * ((-0.1_f64).exp() - 1.0);
    assert!((w1 - expect).abs() < 1e-15);
    assert!((w1 + 0.10517091808564626).abs() < 1e-9);
}

#[test]
fn w_factor_identities() {
    // W2 = W1 * dH and W3 = W1 * dR by construction, raw integrals
    let m = jump_rich_model(RecoveryMode::General);
    let cap = m.grid.idx(2.0).unwrap();
    for seed in 0..30 {
        let b = sample(&m, 31, seed);
        let eng = PathEngine::new(&m, &b);
        let jf = eng.jump_functionals(cap).unwrap();
        for a in &jf.raw_w3.jumps {
            let w1 = jf.raw_w1.jump_at(a.time);
            let e = b
                .events
                .iter()
                .find(|e| (e.time - a.time).abs() < 1e-12)
                .unwrap();
            assert!((a.size - w1 * e.dr).abs() < 1e-14);
        }
    }
}

#[test]
fn classical_reduction_no_w_terms() {
    // g = 0 and no default: all W and mu_bar terms vanish identically
    let mut m = jump_rich_model(RecoveryMode::Zero);
    m.curves.g0 = CurveSpec::Const(0.0);
    m.coefs.alpha = CoefField::Zero;
    m.coefs.beta = vec![CoefField::Zero, CoefField::Zero];
    m.risky = RiskySpec::empty();
    m.default_spec = DefaultSpec::none();
    let cap = m.grid.idx(2.0).unwrap();
    for seed in 0..10 {
        let b = sample(&m, 37, seed);
        let eng = PathEngine::new(&m, &b);
        let jf = eng.jump_functionals(cap).unwrap();
        assert!(jf.raw_w2.jumps.is_empty());
        assert!(jf.raw_w3.jumps.is_empty());
        assert!(jf.comp_w2.jumps.is_empty());
        for a in &jf.raw_w1.jumps {
            // W1 = e^0 (e^{-y} - 1) with y = Bbar dX: no mu_bar prefactor
            let e = b
                .events
                .iter()
                .find(|e| (e.time - a.time).abs() < 1e-12)
                .unwrap();
            assert_eq!(e.maturing_weight, 0.0);
        }
        for i in 0..m.grid.len() {
            assert_eq!(eng.dmu_bar(m.grid.time(i), cap), 0.0);
        }
    }
}

#[test]
fn left_price_and_jump_at_risky_date() {
    let mut m = flat_model(2.0, 0.25, 0.02);
    m.curves.g0 = CurveSpec::Const(0.05);
    let w = 1.0;
    m.risky.atoms.push(RiskyAtomSpec {
        reveal: 0.0,
        maturity: 1.0,
        law: MarkLaw::degenerate(w),
    });
    let b = sample(&m, 0, 0);
    let eng = PathEngine::new(&m, &b);
    let cap = m.grid.idx(2.0).unwrap();
    let i = m.grid.idx(1.0).unwrap();
    let before = eng.price_left(i, cap).unwrap();
    let after = eng.price_direct(i, cap).unwrap();
    // the mu mass at u = 1 leaves the exponent at t = 1: upward jump e^{gw}
    assert!(((after / before) - (0.05_f64 * w).exp()).abs() < 1e-12);
}
