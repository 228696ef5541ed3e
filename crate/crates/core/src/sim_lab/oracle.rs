//! Brute-force oracle for small instances: full enumeration of the
//! probability tree of a two-period spec, exact expectations and exact
//! compensators, used to validate the analytic compensator code.

use std::sync::Arc;

use serde::Serialize;

use crate::bond_engine::PathEngine;
use crate::credit_events::{embed_zero_recovery, DefaultKind, DefaultPath, RAtomKind, RecoveryPath};
use crate::error::{Result, TsError};
use crate::model::{merge_events, BondModel, CreditPath, PathBundle, RecoveryMode};
use crate::risky_measure::{RiskyAtom, RiskyMeasurePath};
use crate::stoch_calc::stochastic_exponential;
use crate::time_paths::driver::{DriverJump, DriverSampler, JumpKind};
use crate::time_paths::fv::{Atom, FvPath};
use crate::time_paths::grid::LOOKUP_TOL;

const MAX_STATES: usize = 1 << 20;

/// One random element of the tree with its finite outcome list.
struct Element {
    time: f64,
    outcomes: Vec<(f64, Assignment)>,
}

#[derive(Debug, Clone, Default)]
struct Assignment {
    dx: Vec<(usize, f64, f64)>, // (component, raw, centered)
    da: f64,
    revealed: Vec<(f64, f64)>,
    default_here: bool,
    dr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompensatorCheck {
    pub time: f64,
    /// Index of the pre-time history class.
    pub class_id: usize,
    pub class_prob: f64,
    pub w1_oracle: f64,
    pub w1_analytic: f64,
    pub wh_oracle: f64,
    pub wh_analytic: f64,
    pub bxd_oracle: f64,
    pub bxd_analytic: f64,
    pub credit_jump_oracle: f64,
    pub credit_jump_analytic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleTables {
    pub n_outcomes: usize,
    /// Exact E[P(t,T)/B_t] per (grid time, maturity).
    pub expected_discounted: Vec<Vec<f64>>,
    /// P(0,T) per maturity.
    pub initial_prices: Vec<f64>,
    pub compensator_checks: Vec<CompensatorCheck>,
    /// Max |analytic - oracle| over every compensator comparison.
    pub max_compensator_mismatch: f64,
    /// Max |E[P(t,T)/B_t] - P(0,T)| over checked cells.
    pub max_martingale_gap: f64,
}

fn two_outcome(law: &crate::time_paths::driver::MarkLaw) -> Result<Vec<(f64, f64)>> {
    let active: Vec<(f64, f64)> = law
        .outcomes()
        .iter()
        .cloned()
        .filter(|&(_, p)| p > 0.0)
        .collect();
    if active.len() > 2 {
        return Err(TsError::invalid(
            "oracle requires every random element to have at most two outcomes",
        ));
    }
    Ok(active)
}

fn collect_elements(model: &BondModel) -> Result<Vec<Element>> {
    let mut elements = Vec::new();
    for s in &model.driver.scheduled {
        for (c, law) in s.laws.iter().enumerate() {
            let mean = law.mean();
            let outs = two_outcome(law)?;
            if outs.len() == 1 && outs[0].0 == 0.0 {
                continue;
            }
            elements.push(Element {
                time: s.time,
                outcomes: outs
                    .iter()
                    .map(|&(v, p)| {
                        (
                            p,
                            Assignment {
                                dx: vec![(c, v, v - mean)],
                                ..Default::default()
                            },
                        )
                    })
                    .collect(),
            });
        }
    }
    for (t, law) in &model.a_integrator.scheduled {
        let outs = two_outcome(law)?;
        elements.push(Element {
            time: *t,
            outcomes: outs
                .iter()
                .map(|&(v, p)| {
                    (
                        p,
                        Assignment {
                            da: v,
                            ..Default::default()
                        },
                    )
                })
                .collect(),
        });
    }
    for a in &model.risky.atoms {
        let outs = two_outcome(&a.law)?;
        if outs.len() == 1 && outs[0].0 == 0.0 {
            continue;
        }
        elements.push(Element {
            time: a.reveal,
            outcomes: outs
                .iter()
                .map(|&(w, p)| {
                    (
                        p,
                        Assignment {
                            revealed: if w != 0.0 {
                                vec![(a.maturity, w)]
                            } else {
                                vec![]
                            },
                            ..Default::default()
                        },
                    )
                })
                .collect(),
        });
    }
    match model.mode {
        RecoveryMode::Zero => {
            if !model.default_spec.hazard.is_zero() || model.default_spec.singular.is_some() {
                return Err(TsError::invalid(
                    "oracle requires purely discrete default hazards",
                ));
            }
            for d in &model.default_spec.discrete {
                elements.push(Element {
                    time: d.time,
                    outcomes: vec![
                        (
                            d.dhp,
                            Assignment {
                                default_here: true,
                                ..Default::default()
                            },
                        ),
                        (1.0 - d.dhp, Assignment::default()),
                    ],
                });
            }
        }
        RecoveryMode::General => {
            if model.recovery_spec.hazard_jump.is_some() {
                return Err(TsError::invalid(
                    "oracle does not enumerate hazard-driven recovery events",
                ));
            }
            for s in &model.recovery_spec.scheduled {
                let outs = two_outcome(&s.law)?;
                elements.push(Element {
                    time: s.time,
                    outcomes: outs
                        .iter()
                        .map(|&(v, p)| {
                            (
                                p,
                                Assignment {
                                    dr: v,
                                    ..Default::default()
                                },
                            )
                        })
                        .collect(),
                });
            }
        }
    }
    Ok(elements)
}

fn build_bundle(
    model: &BondModel,
    sampler: &DriverSampler,
    elements: &[Element],
    picks: &[usize],
) -> Result<(f64, PathBundle)> {
    let grid = &model.grid;
    let mut prob = 1.0;
    let mut driver = sampler.zero_path()?;
    let mut a_proc = FvPath::sample(&model.a_integrator.fv, grid)?;
    let mut risky = RiskyMeasurePath::empty(Arc::clone(grid));
    risky.ac = model.risky.ac.clone();
    risky.singular = model.risky.singular.clone();
    let d = model.driver.dim;
    let mut default_time: Option<f64> = None;
    let mut r_jumps: Vec<Atom> = Vec::new();
    for (e, &pick) in elements.iter().zip(picks.iter()) {
        let (p, a) = &e.outcomes[pick];
        prob *= p;
        for &(c, raw, centered) in &a.dx {
            if raw != 0.0 || centered != 0.0 {
                let mut dx = vec![0.0; d];
                let mut dxd = vec![0.0; d];
                dx[c] = raw;
                dxd[c] = centered;
                driver.jumps.push(DriverJump {
                    time: e.time,
                    kind: JumpKind::Scheduled,
                    dx,
                    dxd,
                });
            }
        }
        if a.da != 0.0 {
            a_proc.jumps.push(Atom {
                time: e.time,
                size: a.da,
            });
        }
        for &(u, w) in &a.revealed {
            risky.atoms.push(RiskyAtom {
                reveal: e.time,
                maturity: u,
                weight: w,
            });
        }
        if a.default_here && default_time.is_none_or(|t| e.time < t) {
            default_time = Some(e.time);
        }
        if a.dr != 0.0 {
            r_jumps.push(Atom {
                time: e.time,
                size: a.dr,
            });
        }
    }
    driver
        .jumps
        .sort_by(|x, y| x.time.partial_cmp(&y.time).unwrap());
    a_proc
        .jumps
        .sort_by(|x, y| x.time.partial_cmp(&y.time).unwrap());
    risky
        .atoms
        .sort_by(|x, y| x.reveal.partial_cmp(&y.reveal).unwrap());
    r_jumps.sort_by(|x, y| x.time.partial_cmp(&y.time).unwrap());

    let credit = match model.mode {
        RecoveryMode::Zero => {
            let dp = DefaultPath {
                grid: Arc::clone(grid),
                spec: model.default_spec.clone(),
                tau: default_time,
                kind: default_time.map(|_| DefaultKind::DiscreteHazard),
            };
            let rp = embed_zero_recovery(&dp);
            CreditPath::Zero(dp, rp)
        }
        RecoveryMode::General => {
            let kinds = vec![RAtomKind::Scheduled; r_jumps.len()];
            let mut rp = RecoveryPath {
                grid: Arc::clone(grid),
                spec: model.recovery_spec.clone(),
                r_atoms: r_jumps,
                r_atom_kinds: kinds,
                xi: Vec::new(),
                tau: None,
                c_poisson_density: 0.0,
            };
            let mut r = crate::stoch_calc::SemimartingalePath::zero(Arc::clone(grid));
            for j in 0..grid.n_cells() {
                r.fv_ac_inc[j] = -rp.spec.drawdown.at_cell(j) * grid.cell_dt(j);
                r.fv_sing_inc[j] = -rp
                    .spec
                    .singular
                    .as_ref()
                    .map_or(0.0, |s| s.increment(grid.time(j), grid.time(j + 1)));
            }
            r.atoms = rp.r_atoms.clone();
            let exp = stochastic_exponential(&r);
            rp.xi = exp.values;
            rp.tau = exp.absorbed_at;
            CreditPath::General(rp)
        }
    };
    let events = merge_events(grid, &driver, &a_proc, &risky, &credit);
    Ok((
        prob,
        PathBundle {
            grid: Arc::clone(grid),
            driver,
            a_proc,
            risky,
            credit,
            events,
        },
    ))
}

/// Enumerate the full probability tree of a small spec and compare exact
/// conditional expectations against the analytic compensators.
pub fn binomial_oracle(model: &BondModel, maturities: &[f64]) -> Result<OracleTables> {
    let grid = &model.grid;
    if !model
        .driver
        .poisson
        .iter()
        .all(|p| p.intensity == 0.0)
    {
        return Err(TsError::invalid(
            "oracle requires zero Poisson intensities (finite tree)",
        ));
    }
    match &model.driver.brownian_cov {
        crate::time_paths::driver::StepMatrix::Const(m) if m.data.iter().all(|x| *x == 0.0) => {}
        _ => {
            return Err(TsError::invalid(
                "oracle requires a zero Brownian covariance (finite tree)",
            ))
        }
    }
    let elements = collect_elements(model)?;
    let n_states: usize = elements
        .iter()
        .map(|e| e.outcomes.len())
        .product::<usize>();
    if n_states > MAX_STATES {
        return Err(TsError::invalid(format!(
            "oracle state space {n_states} exceeds {MAX_STATES}"
        )));
    }
    let sampler = DriverSampler::prepare(&model.driver, grid)?;
    let cap_idx: Vec<usize> = maturities
        .iter()
        .map(|m| grid.idx(*m))
        .collect::<Result<_>>()?;

    // enumerate
    let mut picks = vec![0usize; elements.len()];
    let mut outcomes: Vec<(f64, PathBundle)> = Vec::with_capacity(n_states);
    loop {
        outcomes.push(build_bundle(model, &sampler, &elements, &picks)?);
        let mut i = 0;
        loop {
            if i == elements.len() {
                break;
            }
            picks[i] += 1;
            if picks[i] < elements[i].outcomes.len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
        if i == elements.len() {
            break;
        }
    }

    // exact discounted expectations
    let mut expected = vec![vec![0.0; cap_idx.len()]; grid.len()];
    let mut initial = vec![0.0; cap_idx.len()];
    for (prob, bundle) in &outcomes {
        let eng = PathEngine::new(model, bundle);
        let numeraire = eng.numeraire();
        for (mi, &cap) in cap_idx.iter().enumerate() {
            initial[mi] = eng.price_direct(0, cap)?;
            for t in 0..=cap {
                expected[t][mi] += prob * eng.price_direct(t, cap)? / numeraire[t];
            }
        }
    }
    let mut max_gap = 0.0_f64;
    for (mi, &cap) in cap_idx.iter().enumerate() {
        for t in 0..=cap {
            max_gap = max_gap.max((expected[t][mi] - initial[mi]).abs());
        }
    }

    // exact compensators per predictable time and pre-time history class
    let mut checks = Vec::new();
    let mut max_mismatch = 0.0_f64;
    let times = model.predictable_event_times();
    for &t_star in &times {
        for &cap in &cap_idx {
            if t_star > grid.time(cap) + LOOKUP_TOL {
                continue;
            }
            // class key: picks of all elements strictly before t_star
            let pre: Vec<usize> = (0..elements.len())
                .filter(|&i| elements[i].time < t_star - LOOKUP_TOL)
                .collect();
            let mut classes: Vec<(Vec<usize>, Vec<usize>)> = Vec::new(); // (key, outcome indices)
            let mut all_picks = vec![0usize; elements.len()];
            for (oi, _) in outcomes.iter().enumerate() {
                // reconstruct picks of outcome oi
                let mut rem = oi;
                for (i, e) in elements.iter().enumerate() {
                    all_picks[i] = rem % e.outcomes.len();
                    rem /= e.outcomes.len();
                }
                let key: Vec<usize> = pre.iter().map(|&i| all_picks[i]).collect();
                match classes.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, v)) => v.push(oi),
                    None => classes.push((key, vec![oi])),
                }
            }
            for (class_id, (_, members)) in classes.iter().enumerate() {
                let class_prob: f64 = members.iter().map(|&oi| outcomes[oi].0).sum();
                if class_prob <= 0.0 {
                    continue;
                }
                // previsible survival: skip classes already absorbed before t_star
                let rep = &outcomes[members[0]].1;
                if !crate::sim_lab::oracle::prev_alive(rep.credit.tau(), t_star) {
                    continue;
                }
                let mut w1_o = 0.0;
                let mut wh_o = 0.0;
                let mut bxd_o = 0.0;
                let mut h_or_c_o = 0.0;
                for &oi in members {
                    let (p, bundle) = &outcomes[oi];
                    let eng = PathEngine::new(model, bundle);
                    let jf = eng.jump_functionals(cap)?;
                    let w1 = jf.raw_w1.jump_at(t_star);
                    let e = bundle
                        .events
                        .iter()
                        .find(|e| (e.time - t_star).abs() <= LOOKUP_TOL);
                    let (dh, dr, dxd) = match e {
                        Some(e) => (e.dh, e.dr, e.dxd.clone()),
                        None => (0.0, 0.0, vec![0.0; model.driver.dim]),
                    };
                    let bc = crate::forward_fields::bar_coefficients_at(
                        &model.coefs,
                        &bundle.risky,
                        grid,
                        t_star,
                        grid.time(cap),
                        crate::forward_fields::MuRule::ATOM,
                    );
                    let mut bxd = 0.0;
                    for c in 0..model.driver.dim {
                        bxd += bc.cap_b[c] * dxd[c];
                    }
                    let w = p / class_prob;
                    w1_o += w * w1;
                    bxd_o += w * bxd;
                    match model.mode {
                        RecoveryMode::Zero => {
                            wh_o += w * w1 * dh;
                            h_or_c_o += w * dh;
                        }
                        RecoveryMode::General => {
                            wh_o += w * w1 * dr;
                            h_or_c_o += w * (-dr);
                        }
                    }
                }
                let eng = PathEngine::new(model, &outcomes[members[0]].1);
                let (w1_a, wh_a, bxd_a) = eng.compensator_jumps_at(t_star, cap);
                let declared = match model.mode {
                    RecoveryMode::Zero => model.default_spec.dhp_at(t_star),
                    RecoveryMode::General => model.recovery_spec.dc_at(t_star),
                };
                for (a, o) in [
                    (w1_a, w1_o),
                    (wh_a, wh_o),
                    (bxd_a, bxd_o),
                    (declared, h_or_c_o),
                ] {
                    max_mismatch = max_mismatch.max((a - o).abs());
                }
                checks.push(CompensatorCheck {
                    time: t_star,
                    class_id,
                    class_prob,
                    w1_oracle: w1_o,
                    w1_analytic: w1_a,
                    wh_oracle: wh_o,
                    wh_analytic: wh_a,
                    bxd_oracle: bxd_o,
                    bxd_analytic: bxd_a,
                    credit_jump_oracle: h_or_c_o,
                    credit_jump_analytic: declared,
                });
            }
        }
    }

    Ok(OracleTables {
        n_outcomes: outcomes.len(),
        expected_discounted: expected,
        initial_prices: initial,
        compensator_checks: checks,
        max_compensator_mismatch: max_mismatch,
        max_martingale_gap: max_gap,
    })
}

pub(crate) fn prev_alive(tau: Option<f64>, t: f64) -> bool {
    match tau {
        Some(tau) => tau >= t - LOOKUP_TOL,
        None => true,
    }
}
