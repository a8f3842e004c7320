mod common;

use common::*;
use proptest::prelude::*;
use wavefront_core::*;

fn builtins() -> Vec<PotentialSpec> {
    vec![PotentialSpec::scalar_cubic(0.6).unwrap(), PotentialSpec::decoupled_quartic(0.6, 1.2).unwrap()]
}

/// Monotone transition from `a` to `b` through a logistic of width `w` centred at `s`, with a bump.
fn transition(spec: &PotentialSpec, consts: &PotentialConstants, grid: &Grid, s: f64, w: f64, bump: f64) -> Profile {
    let a = consts.point_a.clone();
    let b = spec.well_b().to_vec();
    anchored(grid, b.clone(), |x| {
        let t = 1.0 / (1.0 + (-(x - s) / w).exp());
        let g = bump * (-(x - s) * (x - s)).exp();
        a.iter().zip(&b).map(|(p, q)| p + t * (q - p) + g).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn projection_lands_on_the_zero_set(k in 0usize..2, p in prop::collection::vec(-0.9f64..0.9, 2)) {
        let spec = &builtins()[k];
        let point = &p[..spec.dim()];
        if let Ok(q) = project_to_gamma(spec, point) {
            prop_assert!(spec.value(&q).abs() <= 1e-10);
        }
    }

    #[test]
    fn translation_is_idempotent(k in 0usize..2, s in -3.0f64..3.0, w in 0.4f64..2.0, bump in -0.2f64..0.2) {
        let spec = &builtins()[k];
        let consts = compute_constants(spec).unwrap();
        let grid = uniform(-30.0, 15.0, 0.05);
        let p = transition(spec, &consts, &grid, s, w, bump);
        let once = translate_to_gamma(spec, &p).unwrap();
        let twice = translate_to_gamma(spec, &once).unwrap();
        let z = grid.zero_index();
        prop_assert!(spec.value(once.at(z)).abs() <= 1e-10);
        prop_assert!(sup_gap(&once, &twice) <= 1e-8);
    }

    #[test]
    fn admissible_energy_respects_the_lower_bound(
        k in 0usize..2, c in 0.2f64..2.0, s in -3.0f64..3.0, w in 0.4f64..2.0, bump in -0.2f64..0.2,
    ) {
        let spec = &builtins()[k];
        let consts = compute_constants(spec).unwrap();
        let grid = uniform(-30.0, 15.0, 0.05);
        let p = translate_to_gamma(spec, &transition(spec, &consts, &grid, s, w, bump)).unwrap();
        let params = FunctionalParams::new(c).unwrap();
        prop_assume!(p.feasibility_violation(spec) == 0.0);
        let j = eval_j(spec, &params, &p).unwrap();
        prop_assert!(j >= compute_bounds(spec, &consts, c).lower - 1e-3);
    }

    #[test]
    fn residuals_vanish_at_rest(k in 0usize..2, c in 0.1f64..3.0) {
        let spec = &builtins()[k];
        let grid = uniform(-10.0, 10.0, 0.1);
        let b = spec.well_b().to_vec();
        let p = Profile::constant(grid, &b, b.clone()).unwrap();
        prop_assert!(el_residual(spec, c, &p) <= 1e-12);
        let (l, r) = first_integral_residual(spec, c, &p);
        prop_assert!(l <= 1e-12 && r <= 1e-12);
        prop_assert!(jump_identity_gap(c, 0.0, &p) <= 1e-12);
        let h = halfline_identities(spec, c, &p).unwrap();
        prop_assert!(h.right.max(h.left).max(h.equipartition) <= 1e-12);
        prop_assert_eq!(eval_j(spec, &FunctionalParams::new(c).unwrap(), &p).unwrap(), 0.0);
    }

    #[test]
    fn bounds_are_ordered(k in 0usize..2, c in 0.05f64..5.0) {
        let spec = &builtins()[k];
        let consts = compute_constants(spec).unwrap();
        let b = compute_bounds(spec, &consts, c);
        prop_assert!(b.lower < b.upper);
        prop_assert!(b.bracket_lo < b.bracket_hi);
    }
}
