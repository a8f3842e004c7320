mod common;

use common::*;
use wavefront_core::*;

fn minimize_at(spec: &PotentialSpec, consts: &PotentialConstants, grid: &Grid, c: f64) -> GammaResult {
    let opts = MinimizeOptions::default();
    let init = initial_profile(spec, consts, grid).unwrap();
    let params = FunctionalParams::with_penalty(c, opts.penalty_kappa).unwrap();
    minimize_profile(spec, consts, &params, grid, &init, &opts).unwrap()
}

fn assert_well_formed(spec: &PotentialSpec, r: &GammaResult) {
    let opts = MinimizeOptions::default();
    assert!(r.converged, "c = {} did not converge", r.c);
    assert!(r.grad_norm <= opts.opt_tol);
    assert!(r.feasibility_violation <= opts.feas_tol);
    let z = r.profile.grid().zero_index();
    assert!(spec.value(r.profile.at(z)).abs() <= 1e-10, "node 0 off the zero set");
    assert!(r.bounds.lower - 1e-3 <= r.gamma && r.gamma <= r.bounds.upper + 1e-3);
    assert!(r.profile.is_anchored());
}

/// The minimum of `W` over `x <= 0` is reached in the left fifth of the grid, close to the left-end
/// value, and the profile is at rest there.
fn assert_left_tail_settles(spec: &PotentialSpec, r: &GammaResult) {
    let p = &r.profile;
    let x = p.grid().nodes();
    let z = p.grid().zero_index();
    let ws: Vec<f64> = (0..=z).map(|i| spec.value(p.at(i))).collect();
    let wmin = ws.iter().cloned().fold(f64::INFINITY, f64::min);
    let left_fifth = x[0] + 0.2 * (x[x.len() - 1] - x[0]);
    let wmin_left = (0..=z).filter(|&i| x[i] <= left_fifth).map(|i| ws[i]).fold(f64::INFINITY, f64::min);
    assert!(wmin_left - wmin <= 1e-2);
    assert!((ws[0] - wmin).abs() <= 1e-2);
    let tail = left_tail_report(spec, p, &find_equilibria(spec));
    assert!(tail.grad_norm <= 1e-2, "left-end |DW| + |u'| = {}", tail.grad_norm);
}

#[test]
fn scalar_energy_signs_around_the_exact_speed() {
    let (spec, consts, grid) = scalar(0.6, 0.02);
    let below = minimize_at(&spec, &consts, &grid, 0.3);
    let above = minimize_at(&spec, &consts, &grid, 1.0);
    assert!(below.gamma < 0.0, "gamma(0.3) = {}", below.gamma);
    assert!(above.gamma > 0.0, "gamma(1.0) = {}", above.gamma);
    for r in [&below, &above] {
        assert_well_formed(&spec, r);
        assert_left_tail_settles(&spec, r);
    }
}

#[test]
fn scalar_minimizer_at_the_exact_speed_is_the_tanh_wave() {
    let alpha = 0.6;
    let (spec, consts, grid) = scalar(alpha, 0.02);
    let r = minimize_at(&spec, &consts, &grid, alpha);
    assert_well_formed(&spec, &r);
    assert!(r.gamma.abs() <= 2e-3, "gamma = {}", r.gamma);
    let gap = sup_gap(&r.profile, &tanh_profile(alpha, &grid));
    assert!(gap <= 1e-2, "sup |u - tanh| = {gap}");
}

#[test]
fn warm_and_cold_starts_agree() {
    let (spec, consts, grid) = scalar(0.6, 0.02);
    let opts = MinimizeOptions::default();
    let from = minimize_at(&spec, &consts, &grid, 0.45);
    let params = FunctionalParams::new(0.6).unwrap();
    let warm = minimize_profile(&spec, &consts, &params, &grid, &from.profile, &opts).unwrap();
    let cold = minimize_at(&spec, &consts, &grid, 0.6);
    assert!((warm.gamma - cold.gamma).abs() <= 5e-3);
}

#[test]
fn vector_minimizer_is_feasible_below_the_speed() {
    let (spec, consts, grid) = vector(0.04);
    let r = minimize_at(&spec, &consts, &grid, 0.5);
    assert_well_formed(&spec, &r);
    assert!(r.gamma < 0.0);
    assert_left_tail_settles(&spec, &r);
}

/// `(gamma(a) - gamma(c)) / (a - c)` may not exceed `(gamma(c) + m/c) / (2c - a) + m / (a c)` for `c < a < 2c`.
fn lipschitz_bound(m: f64, c: f64, gamma_c: f64, a: f64) -> f64 {
    (gamma_c + m / c) / (2.0 * c - a) + m / (a * c)
}

fn check_curve(consts: &PotentialConstants, c_list: &[f64], results: &[GammaResult]) {
    let g: Vec<f64> = results.iter().map(|r| r.gamma).collect();
    assert!(g.windows(2).all(|w| w[0] < w[1]), "not increasing: {g:?}");
    let changes: Vec<usize> = (0..g.len() - 1).filter(|&i| (g[i] < 0.0) != (g[i + 1] < 0.0)).collect();
    assert_eq!(changes.len(), 1, "{g:?}");
    let i = changes[0];
    assert!(c_list[i] >= 0.45 && c_list[i + 1] <= 0.8);
    for k in 0..g.len() - 1 {
        let (c, a) = (c_list[k], c_list[k + 1]);
        let quotient = (g[k + 1] - g[k]) / (a - c);
        let bound = lipschitz_bound(consts.m, c, g[k], a);
        assert!(quotient <= 1.1 * bound, "pair ({c}, {a}): {quotient} > {bound}");
    }
}

#[test]
fn gamma_curve_is_increasing_with_one_sign_change() {
    let (spec, consts, grid) = scalar(0.6, 0.02);
    let c_list = [0.3, 0.45, 0.6, 0.8, 1.0];
    let opts = MinimizeOptions::default();
    for warm in [true, false] {
        let results: Vec<GammaResult> = gamma_curve(&spec, &consts, &grid, &c_list, &opts, warm)
            .unwrap()
            .into_iter()
            .map(|r| r.unwrap())
            .collect();
        for (r, c) in results.iter().zip(c_list) {
            assert_eq!(r.c, c);
            assert_well_formed(&spec, r);
        }
        check_curve(&consts, &c_list, &results);
    }
}

#[test]
fn gamma_curve_rejects_bad_speed_lists() {
    let (spec, consts, grid) = scalar(0.6, 0.1);
    let opts = MinimizeOptions::default();
    for bad in [&[][..], &[0.5, 0.4][..], &[0.0, 0.4][..], &[0.4, 0.4][..]] {
        assert!(matches!(gamma_curve(&spec, &consts, &grid, bad, &opts, true), Err(WaveError::Contract(_))));
    }
}

#[test]
fn invalid_options_are_rejected() {
    let (spec, consts, grid) = scalar(0.6, 0.1);
    let init = initial_profile(&spec, &consts, &grid).unwrap();
    let params = FunctionalParams::new(0.6).unwrap();
    let mut variants = Vec::new();
    for f in [
        (|o: &mut MinimizeOptions| o.opt_tol = 0.0) as fn(&mut MinimizeOptions),
        |o| o.max_iters = 0,
        |o| o.armijo_c1 = 1.0,
        |o| o.shrink = 1.5,
    ] {
        let mut o = MinimizeOptions::default();
        f(&mut o);
        variants.push(o);
    }
    for o in variants {
        assert!(o.validate().is_err());
        assert!(minimize_profile(&spec, &consts, &params, &grid, &init, &o).is_err());
    }
}

#[test]
fn iteration_cap_reports_nonconvergence() {
    let (spec, consts, grid) = scalar(0.6, 0.02);
    let init = initial_profile(&spec, &consts, &grid).unwrap();
    let params = FunctionalParams::new(0.6).unwrap();
    let opts = MinimizeOptions { max_iters: 2, restarts: 0, ..MinimizeOptions::default() };
    match minimize_profile(&spec, &consts, &params, &grid, &init, &opts) {
        Ok(r) => assert!(!r.converged),
        Err(e) => assert!(matches!(e, WaveError::NonConvergence { .. } | WaveError::InfeasibleMinimizer { .. })),
    }
}

#[test]
fn same_seed_gives_identical_results() {
    let (spec, consts, grid) = scalar(0.6, 0.04);
    let a = minimize_at(&spec, &consts, &grid, 0.7);
    let b = minimize_at(&spec, &consts, &grid, 0.7);
    assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
    assert_eq!(a.profile, b.profile);
}
