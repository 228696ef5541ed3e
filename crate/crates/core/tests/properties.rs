//! Property tests for the structural invariants.

use std::sync::Arc;

use proptest::prelude::*;

use termstruct::forward_fields::CoefField;
use termstruct::stoch_calc::{
    exp_to_stoch_log, stochastic_exponential, yor_combine, SemimartingalePath,
};
use termstruct::time_paths::fv::{Atom, DensitySpec, FvPath, FvSpec, SingularSpec};
use termstruct::time_paths::grid::TimeGrid;

fn grid(n_cells: usize) -> Arc<TimeGrid> {
    Arc::new(TimeGrid::build(1.0, 1.0 / n_cells as f64, &[]).unwrap())
}

prop_compose! {
    fn fv_spec(n_cells: usize)(
        densities in prop::collection::vec(-2.0..2.0f64, n_cells),
        sing_mass in 0.0..1.0f64,
        jumps in prop::collection::vec((1..8usize, -0.5..0.5f64), 0..4),
    ) -> (FvSpec, usize) {
        let g = 1.0 / n_cells as f64;
        let spec = FvSpec {
            ac: DensitySpec::Cells(densities),
            singular: Some(SingularSpec::cantor(0.1, 0.9, sing_mass)),
            jumps: jumps
                .into_iter()
                .map(|(i, s)| Atom { time: (i.min(n_cells)) as f64 * g, size: s })
                .collect(),
            increasing: false,
        };
        (spec, n_cells)
    }
}

proptest! {
    /// Reconstruction: the value at every grid point is exactly the sum of
    /// the three stored components (same arithmetic path).
    #[test]
    fn fv_reconstruction_is_exact((spec, n_cells) in fv_spec(8)) {
        let g = grid(n_cells);
        let p = FvPath::sample(&spec, &g).unwrap();
        for i in 0..g.len() {
            let mut manual = 0.0;
            for j in 0..i {
                manual += p.ac_density[j] * g.cell_dt(j) + p.sing_inc[j];
            }
            manual += p
                .jumps
                .iter()
                .filter(|a| a.time <= g.time(i) + 1e-9)
                .map(|a| a.size)
                .sum::<f64>();
            prop_assert_eq!(p.value(i), manual);
        }
    }

    /// Positivity of the stochastic exponential at all grid points is
    /// equivalent to every jump being > -1.
    #[test]
    fn exponential_positive_iff_jumps_above_minus_one(
        cont in prop::collection::vec(-0.3..0.3f64, 8),
        jumps in prop::collection::vec((1..8usize, -1.5..1.0f64), 0..5),
    ) {
        let g = grid(8);
        let mut z = SemimartingalePath::zero(Arc::clone(&g));
        for (j, c) in cont.iter().enumerate() {
            z.fv_ac_inc[j] = *c;
        }
        for (i, s) in jumps {
            z.atoms.push(Atom { time: i as f64 * 0.125, size: s });
        }
        z.atoms.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        let e = stochastic_exponential(&z);
        let all_above = z.atoms.iter().all(|a| a.size > -1.0);
        let all_positive = e.values.iter().all(|v| *v > 0.0);
        prop_assert_eq!(all_above, all_positive);
    }

    /// Logarithm round trip: exp(X_t) = E(X~)_t within 1e-12 pathwise.
    #[test]
    fn stoch_log_round_trip(
        cont in prop::collection::vec(-0.2..0.2f64, 8),
        bracket in prop::collection::vec(0.0..0.05f64, 8),
        jumps in prop::collection::vec((1..8usize, -0.4..0.4f64), 0..5),
    ) {
        let g = grid(8);
        let mut x = SemimartingalePath::zero(Arc::clone(&g));
        for j in 0..8 {
            x.fv_ac_inc[j] = cont[j];
            // book the bracket against a matching martingale increment of zero
            // mean; the identity is pathwise, so any consistent pair works
            x.mart_inc[j] = 0.5 * bracket[j];
            x.bracket_ac[j] = bracket[j];
        }
        for (i, s) in jumps {
            x.atoms.push(Atom { time: i as f64 * 0.125, size: s });
        }
        x.atoms.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        let e = stochastic_exponential(&exp_to_stoch_log(&x));
        for i in 0..g.len() {
            let expect = x.value(i).exp();
            prop_assert!((e.values[i] - expect).abs() <= 1e-12 * expect.max(1.0));
        }
    }

    /// Yor: E(U) E(V) = E(U + V + [U,V]) for finite-variation paths with
    /// arbitrary jump overlap.
    #[test]
    fn yor_product_formula_fv(
        cu in prop::collection::vec(-0.2..0.2f64, 8),
        cv in prop::collection::vec(-0.2..0.2f64, 8),
        ju in prop::collection::vec((1..8usize, -0.6..0.6f64), 0..4),
        jv in prop::collection::vec((1..8usize, -0.6..0.6f64), 0..4),
    ) {
        let g = grid(8);
        let mut u = SemimartingalePath::zero(Arc::clone(&g));
        let mut v = SemimartingalePath::zero(Arc::clone(&g));
        for j in 0..8 {
            u.fv_ac_inc[j] = cu[j];
            v.fv_ac_inc[j] = cv[j];
        }
        for (i, s) in ju {
            u.atoms.push(Atom { time: i as f64 * 0.125, size: s });
        }
        for (i, s) in jv {
            v.atoms.push(Atom { time: i as f64 * 0.125, size: s });
        }
        u.atoms.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        v.atoms.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        let prod = yor_combine(&u, &v).unwrap();
        let (eu, ev, ep) = (
            stochastic_exponential(&u),
            stochastic_exponential(&v),
            stochastic_exponential(&prod),
        );
        for i in 0..g.len() {
            let lhs = eu.values[i] * ev.values[i];
            prop_assert!((lhs - ep.values[i]).abs() <= 1e-11 * lhs.abs().max(1.0));
        }
    }

    /// Support condition: coefficient fields vanish for maturities before
    /// the evaluation time, on random (s, T) pairs.
    #[test]
    fn coefficient_support_condition(
        s in 0.0..1.0f64,
        u in 0.0..1.0f64,
        scale in -1.0..1.0f64,
        rate in 0.0..3.0f64,
    ) {
        let g = grid(8);
        for field in [
            CoefField::Const(scale),
            CoefField::LinearTenor { scale },
            CoefField::ExpDecay { scale, rate },
        ] {
            if u < s - 1e-9 {
                prop_assert_eq!(field.value(&g, s, u), 0.0);
            }
            prop_assert_eq!(field.mass(&g, s, 0.0, s.min(u)), 0.0);
        }
    }

    /// mu_bar is nondecreasing in t and in the maturity cap.
    #[test]
    fn mu_bar_monotonicity(
        atoms in prop::collection::vec((0..8usize, 1..9usize, 0.0..1.0f64), 0..6),
    ) {
        let g = grid(8);
        let spec = termstruct::risky_measure::RiskySpec {
            atoms: atoms
                .into_iter()
                .filter(|(s, u, _)| s < u)
                .map(|(s, u, w)| termstruct::risky_measure::RiskyAtomSpec {
                    reveal: s as f64 * 0.125,
                    maturity: u as f64 * 0.125,
                    law: termstruct::time_paths::driver::MarkLaw::degenerate(w),
                })
                .collect(),
            ac: None,
            singular: None,
        };
        let p = termstruct::risky_measure::sample_risky_measure(&spec, &g, 0).unwrap();
        let mut prev_by_t = vec![0.0; g.len()];
        for cap in 0..g.len() {
            let mb = p.mu_bar(cap);
            let mut prev = 0.0;
            for i in 0..g.len() {
                let v = mb.value(i.min(cap));
                prop_assert!(v >= prev - 1e-15);
                prop_assert!(v >= prev_by_t[i.min(cap)] - 1e-15);
                prev = v;
                prev_by_t[i.min(cap)] = v;
            }
        }
    }
}
