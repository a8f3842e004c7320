//! A-posteriori checks of a candidate `(c, profile)` pair.
//!
//! Every check is computed from the profile alone with finite differences and the same
//! cellwise quadrature as the functional, so none of them reuse optimizer state. The
//! shooting check integrates the wave ODE independently with a Runge-Kutta scheme.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Result, WaveError};
use crate::functional::{cell_weights, FunctionalParams};
use crate::numeric::{dist, dot, golden_min, norm};
use crate::potential::{find_equilibria, PotentialConstants, PotentialSpec};
use crate::profile::{backward_weights, centered_weights, derivative, forward_weights, second_weights, Derivatives, Profile};

/// One verified quantity with its pass threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(value: f64, threshold: f64) -> Self {
        Check { value, threshold, pass: value <= threshold }
    }

    pub fn at_least(value: f64, threshold: f64) -> Self {
        Check { value, threshold, pass: value >= threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub el_tol: f64,
    pub first_integral_tol: f64,
    pub halfline_tol: f64,
    pub jump_tol: f64,
    /// Allowed `|lambda_fit - Lambda|`.
    pub decay_tol: f64,
    /// `lambda_fit` must exceed `c - decay_floor_slack`.
    pub decay_floor_slack: f64,
    pub left_tail_tol: f64,
    pub shooting_tol: f64,
    /// Nodes at `x > 0` with `|W| <=` this and a nondegenerate gradient count as lying on the zero set.
    pub contact_tol: f64,
    /// `|gamma| <= gamma_zero_scale (1 + m / c)` marks a full-line wave.
    pub gamma_zero_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            el_tol: 1e-2,
            first_integral_tol: 2e-2,
            halfline_tol: 5e-3,
            jump_tol: 1e-2,
            decay_tol: 0.1,
            decay_floor_slack: 0.05,
            left_tail_tol: 1e-2,
            shooting_tol: 2e-2,
            contact_tol: 1e-8,
            gamma_zero_scale: 5e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalflineResiduals {
    /// `|int_0^inf e^{cx}(|u'|^2/2 + W) - |u'(0+)|^2 / (2c)|`.
    pub right: f64,
    /// `|int_-inf^0 e^{cx}(|u'|^2/2 + W) + |u'(0-)|^2 / (2c)|`.
    pub left: f64,
    /// `| |u'(0+)|^2 / 2 - c int_0^inf |u'|^2 |`.
    pub equipartition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeftTail {
    /// `|DW(u)| + |u'|` at the left end.
    pub grad_norm: f64,
    /// `W(u(x_left))`.
    pub w_limit: f64,
    /// `W(u(x_left)) - min_{x <= 0} W(u(x))`.
    pub w_undershoot: f64,
    /// Distance from `u(x_left)` to the nearest equilibrium with negative potential; infinite if none was found.
    pub dist_to_equilibria: f64,
    pub nearest_equilibrium: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub c: f64,
    pub gamma_hat: f64,
    /// The profile counts as a full-line wave (`|gamma_hat|` below the zero tolerance).
    pub is_wave: bool,
    pub el_residual: Check,
    pub first_integral_left: Check,
    pub first_integral_right: Check,
    pub halfline_right: Check,
    pub halfline_left: Check,
    pub equipartition: Check,
    pub jump_gap: Check,
    /// `|u'(0+)|^2 - |u'(0-)|^2`.
    pub derivative_jump: f64,
    /// The jump has the sign of `gamma_hat` (vacuous when `|gamma_hat| <= jump_tol`).
    pub jump_sign_consistent: bool,
    pub decay_lambda_fit: f64,
    pub decay_lambda_theory: f64,
    pub decay_vs_theory: Check,
    pub decay_above_speed: Check,
    pub left_tail: LeftTail,
    pub left_tail_grad: Check,
    pub left_tail_w_floor: Check,
    /// Only run for waves.
    pub shooting: Option<Check>,
    pub shooting_note: Option<String>,
    pub pass: bool,
}

/// Nodes at `x > 0` where the profile sits on the zero set.
fn on_zero_set(spec: &PotentialSpec, u: &[f64], tol: f64) -> bool {
    spec.value(u).abs() <= tol && norm(&spec.gradient(u)) >= 1e-3
}

/// `max |c u' + u'' - DW(u)|` over interior nodes, skipping nodes at `x > 0` on the zero set.
pub fn el_residual(spec: &PotentialSpec, c: f64, profile: &Profile) -> f64 {
    el_residual_with(spec, c, profile, false, VerifyOptions::default().contact_tol)
}

/// As [`el_residual`]; with `skip_origin` the three nodes whose stencils touch `x = 0` are left out.
pub fn el_residual_with(spec: &PotentialSpec, c: f64, profile: &Profile, skip_origin: bool, contact_tol: f64) -> f64 {
    let x = profile.grid().nodes();
    let n = x.len();
    let dim = profile.dim();
    let z = profile.grid().zero_index();
    let d = derivative(profile);
    let mut dw = vec![0.0; dim];
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        if skip_origin && i + 1 >= z && i <= z + 1 {
            continue;
        }
        let u = profile.at(i);
        if i > z && on_zero_set(spec, u, contact_tol) {
            continue;
        }
        spec.gradient_into(u, &mut dw);
        let w2 = second_weights(x, i);
        for k in 0..dim {
            let upp = w2[0] * profile.at(i - 1)[k] + w2[1] * u[k] + w2[2] * profile.at(i + 1)[k];
            let r = c * d.at(i, dim)[k] + upp - dw[k];
            worst = worst.max(r.abs());
        }
    }
    worst
}

fn xi(spec: &PotentialSpec, u: &[f64], du: &[f64]) -> f64 {
    0.5 * dot(du, du) - spec.value(u)
}

/// Residual of `(|u'|^2 / 2 - W)' + c |u'|^2 = 0`, max-norm on each side of 0: `(left, right)`.
pub fn first_integral_residual(spec: &PotentialSpec, c: f64, profile: &Profile) -> (f64, f64) {
    let x = profile.grid().nodes();
    let n = x.len();
    let dim = profile.dim();
    let z = profile.grid().zero_index();
    let d = derivative(profile);
    let du = |i: usize, side_left: bool| -> &[f64] {
        if i == z {
            if side_left {
                &d.left_of_zero
            } else {
                &d.right_of_zero
            }
        } else {
            d.at(i, dim)
        }
    };
    let xi_at = |i: usize, left: bool| xi(spec, profile.at(i), du(i, left));
    // Next to 0 the stencil stays inside the half-line: xi(0) carries the one-sided derivative,
    // whose error differs from the centered one and would cost an order.
    let side = |range: std::ops::Range<usize>, left: bool| -> f64 {
        let mut worst: f64 = 0.0;
        for i in range {
            let dxi = if left && i + 1 == z && i >= 2 {
                let w = backward_weights(x, i);
                w[0] * xi_at(i, left) + w[1] * xi_at(i - 1, left) + w[2] * xi_at(i - 2, left)
            } else if !left && i == z + 1 && i + 2 < n {
                let w = forward_weights(x, i);
                w[0] * xi_at(i, left) + w[1] * xi_at(i + 1, left) + w[2] * xi_at(i + 2, left)
            } else {
                let w = centered_weights(x, i);
                w[0] * xi_at(i - 1, left) + w[1] * xi_at(i, left) + w[2] * xi_at(i + 1, left)
            };
            let g = du(i, left);
            worst = worst.max((dxi + c * dot(g, g)).abs());
        }
        worst
    };
    let left = if z >= 2 { side(1..z, true) } else { 0.0 };
    let right = if z + 2 < n { side(z + 1..n - 1, false) } else { 0.0 };
    (left, right)
}

fn cell_densities(spec: &PotentialSpec, profile: &Profile, i: usize) -> (f64, f64) {
    let x = profile.grid().nodes();
    let h = x[i + 1] - x[i];
    let a = profile.at(i);
    let b = profile.at(i + 1);
    let du2: f64 = a.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>() / (h * h);
    (du2, 0.5 * (spec.value(a) + spec.value(b)))
}

/// Residuals of the half-line energy identities.
pub fn halfline_identities(spec: &PotentialSpec, c: f64, profile: &Profile) -> Result<HalflineResiduals> {
    let params = FunctionalParams::with_penalty(c, 0.0)?;
    let weights = cell_weights(&params, profile.grid())?;
    let x = profile.grid().nodes();
    let z = profile.grid().zero_index();
    let d = derivative(profile);
    let mut right = 0.0;
    let mut left = 0.0;
    let mut plain_right = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let (du2, wu) = cell_densities(spec, profile, i);
        let e = w * (0.5 * du2 + wu);
        if i >= z {
            right += e;
            plain_right += du2 * (x[i + 1] - x[i]);
        } else {
            left += e;
        }
    }
    let dp = dot(&d.right_of_zero, &d.right_of_zero);
    let dm = dot(&d.left_of_zero, &d.left_of_zero);
    Ok(HalflineResiduals {
        right: (right - dp / (2.0 * c)).abs(),
        left: (left + dm / (2.0 * c)).abs(),
        equipartition: (0.5 * dp - c * plain_right).abs(),
    })
}

/// `|u'(0+)|^2 - |u'(0-)|^2` from one-sided differences.
fn derivative_jump(d: &Derivatives) -> f64 {
    dot(&d.right_of_zero, &d.right_of_zero) - dot(&d.left_of_zero, &d.left_of_zero)
}

/// `|(|u'(0+)|^2 - |u'(0-)|^2) / (2c) - gamma_hat|`.
pub fn jump_identity_gap(c: f64, gamma_hat: f64, profile: &Profile) -> f64 {
    (derivative_jump(&derivative(profile)) / (2.0 * c) - gamma_hat).abs()
}

/// Least-squares decay rate of `|u - b|` on the right tail, and the theoretical rate `Lambda`.
pub fn fit_decay_rate(consts: &PotentialConstants, c: f64, profile: &Profile) -> Result<(f64, f64)> {
    const NEEDED: usize = 20;
    let x = profile.grid().nodes();
    let z = profile.grid().zero_index();
    let b = profile.well_b();
    let pts: Vec<(f64, f64)> = (z + 1..x.len())
        .filter_map(|i| {
            let r = dist(profile.at(i), b);
            (r > 1e-12 && r < 1e-2).then(|| (x[i], r.ln()))
        })
        .collect();
    if pts.len() < NEEDED {
        return Err(WaveError::Tail { found: pts.len(), needed: NEEDED });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok((-sxy / sxx, consts.decay_rate(c)))
}

/// Left-end diagnostics of the profile against the equilibria in `equilibria`.
pub fn left_tail_report(spec: &PotentialSpec, profile: &Profile, equilibria: &[Vec<f64>]) -> LeftTail {
    let d = derivative(profile);
    let dim = profile.dim();
    let u0 = profile.at(0);
    let grad_norm = norm(&spec.gradient(u0)) + norm(d.at(0, dim));
    let w_limit = spec.value(u0);
    let z = profile.grid().zero_index();
    let w_min = (0..=z).map(|i| spec.value(profile.at(i))).fold(f64::INFINITY, f64::min);
    let nearest = equilibria.iter().min_by(|a, b| dist(a, u0).total_cmp(&dist(b, u0))).cloned();
    LeftTail {
        grad_norm,
        w_limit,
        w_undershoot: w_limit - w_min,
        dist_to_equilibria: nearest.as_ref().map(|e| dist(e, u0)).unwrap_or(f64::INFINITY),
        nearest_equilibrium: nearest,
    }
}

fn interpolate_descending(xs: &[f64], ys: &[Vec<f64>], x: f64) -> Option<Vec<f64>> {
    // xs is strictly decreasing
    if xs.is_empty() || x > xs[0] || x < xs[xs.len() - 1] {
        return None;
    }
    let j = xs.partition_point(|&v| v > x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let t = if x0 == x1 { 0.0 } else { (x0 - x) / (x0 - x1) };
    Some(ys[j - 1].iter().zip(&ys[j]).map(|(a, b)| a + t * (b - a)).collect())
}

/// Max-norm gap between the profile and an RK4 trajectory of `u'' + c u' = DW(u)` shot backward
/// from the linearized stable manifold of `b`, compared over the middle 60% of the transition
/// (by arc length) after the best translation.
pub fn shooting_check(spec: &PotentialSpec, c: f64, profile: &Profile) -> Result<f64> {
    let x = profile.grid().nodes();
    let n = x.len();
    let dim = profile.dim();
    let b = profile.well_b().to_vec();

    // transition window by cumulative arc length
    let mut arc = vec![0.0; n];
    for i in 1..n {
        arc[i] = arc[i - 1] + dist(profile.at(i), profile.at(i - 1));
    }
    let total = arc[n - 1];
    if total == 0.0 {
        return Ok(0.0);
    }
    let window: Vec<usize> = (0..n).filter(|&i| arc[i] >= 0.2 * total && arc[i] <= 0.8 * total).collect();
    if window.is_empty() {
        return Ok(0.0);
    }
    let x_window_lo = x[window[0]];

    let start = (0..n).rev().find(|&i| dist(profile.at(i), &b) >= 1e-5).ok_or(WaveError::Tail { found: 0, needed: 1 })?;
    let x_start = x[start];

    let eig = SymmetricEigen::new(spec.hessian(&b));
    let offset: Vec<f64> = profile.at(start).iter().zip(&b).map(|(p, q)| p - q).collect();
    let mut u = b.clone();
    let mut p = vec![0.0; dim];
    for k in 0..dim {
        let v = eig.eigenvectors.column(k);
        let mu = eig.eigenvalues[k].max(0.0);
        let lam = 0.5 * (c + (c * c + 4.0 * mu).sqrt());
        let s: f64 = (0..dim).map(|r| v[r] * offset[r]).sum();
        for r in 0..dim {
            u[r] += s * v[r];
            p[r] -= lam * s * v[r];
        }
    }

    let step = -profile.grid().max_spacing() / 4.0;
    let bx = spec.bounding_box().inflated(2.0);
    let rhs = |u: &[f64], p: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let g = spec.gradient(u);
        (p.to_vec(), g.iter().zip(p).map(|(gk, pk)| gk - c * pk).collect())
    };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    let mut xs = vec![x_start];
    let mut traj = vec![u.clone()];
    let mut xc = x_start;
    let x_stop = (x_window_lo - 1.5).max(x[0]);
    while xc > x_stop {
        let (k1u, k1p) = rhs(&u, &p);
        let (k2u, k2p) = rhs(&axpy(&u, 0.5 * step, &k1u), &axpy(&p, 0.5 * step, &k1p));
        let (k3u, k3p) = rhs(&axpy(&u, 0.5 * step, &k2u), &axpy(&p, 0.5 * step, &k2p));
        let (k4u, k4p) = rhs(&axpy(&u, step, &k3u), &axpy(&p, step, &k3p));
        for r in 0..dim {
            u[r] += step / 6.0 * (k1u[r] + 2.0 * k2u[r] + 2.0 * k3u[r] + k4u[r]);
            p[r] += step / 6.0 * (k1p[r] + 2.0 * k2p[r] + 2.0 * k3p[r] + k4p[r]);
        }
        xc += step;
        if !u.iter().all(|v| v.is_finite()) || !bx.contains(&u) {
            return Err(WaveError::ShootingDivergence { x: xc });
        }
        xs.push(xc);
        traj.push(u.clone());
    }

    let gap = |shift: f64| -> f64 {
        window
            .iter()
            .map(|&i| match interpolate_descending(&xs, &traj, x[i] + shift) {
                Some(v) => dist(&v, profile.at(i)),
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    };
    let at_zero = gap(0.0);
    let (_, best) = golden_min(gap, -1.0, 1.0, 1e-7);
    Ok(at_zero.min(best))
}

/// Run every check on `(c, profile)` with `gamma_hat` the converged energy at `c`.
pub fn verify_all(
    spec: &PotentialSpec,
    consts: &PotentialConstants,
    c: f64,
    gamma_hat: f64,
    profile: &Profile,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    if profile.dim() != spec.dim() {
        return Err(WaveError::Contract("profile dimension does not match the potential".into()));
    }
    if profile.len() < 5 {
        return Err(WaveError::Contract("verification needs at least 5 grid nodes".into()));
    }
    if !(c > 0.0) {
        return Err(WaveError::Contract(format!("speed c must be positive, got {c}")));
    }
    let is_wave = gamma_hat.abs() <= opts.gamma_zero_scale * (1.0 + consts.m / c);
    let el = el_residual_with(spec, c, profile, gamma_hat != 0.0, opts.contact_tol);
    let (fi_left, fi_right) = first_integral_residual(spec, c, profile);
    let half = halfline_identities(spec, c, profile)?;
    let d = derivative(profile);
    let jump = derivative_jump(&d);
    let jump_gap = (jump / (2.0 * c) - gamma_hat).abs();
    let jump_sign_consistent = gamma_hat.abs() <= opts.jump_tol || jump.signum() == gamma_hat.signum();
    let (lambda_fit, lambda_theory) = fit_decay_rate(consts, c, profile)?;
    let equilibria = find_equilibria(spec);
    let left_tail = left_tail_report(spec, profile, &equilibria);

    let (shooting, shooting_note) = if is_wave {
        match shooting_check(spec, c, profile) {
            Ok(g) => (Some(Check::at_most(g, opts.shooting_tol)), None),
            Err(e @ WaveError::ShootingDivergence { .. }) => {
                (Some(Check::at_most(f64::INFINITY, opts.shooting_tol)), Some(e.to_string()))
            }
            Err(e) => return Err(e),
        }
    } else {
        (None, Some("skipped: |gamma_hat| above the wave tolerance".to_string()))
    };

    let mut report = VerifyReport {
        c,
        gamma_hat,
        is_wave,
        el_residual: Check::at_most(el, opts.el_tol),
        first_integral_left: Check::at_most(fi_left, opts.first_integral_tol),
        first_integral_right: Check::at_most(fi_right, opts.first_integral_tol),
        halfline_right: Check::at_most(half.right, opts.halfline_tol),
        halfline_left: Check::at_most(half.left, opts.halfline_tol),
        equipartition: Check::at_most(half.equipartition, opts.halfline_tol),
        jump_gap: Check::at_most(jump_gap, opts.jump_tol),
        derivative_jump: jump,
        jump_sign_consistent,
        decay_lambda_fit: lambda_fit,
        decay_lambda_theory: lambda_theory,
        decay_vs_theory: Check::at_most((lambda_fit - lambda_theory).abs(), opts.decay_tol),
        decay_above_speed: Check::at_least(lambda_fit, c - opts.decay_floor_slack),
        left_tail_grad: Check::at_most(left_tail.grad_norm, opts.left_tail_tol),
        left_tail_w_floor: Check::at_most(left_tail.w_undershoot, opts.left_tail_tol),
        left_tail,
        shooting,
        shooting_note,
        pass: false,
    };
    report.pass = report.checks().iter().all(|(_, ch)| ch.pass) && report.jump_sign_consistent;
    Ok(report)
}

impl VerifyReport {
    /// Every check that was run, by name.
    pub fn checks(&self) -> Vec<(&'static str, Check)> {
        let mut v = vec![
            ("el_residual", self.el_residual),
            ("first_integral_left", self.first_integral_left),
            ("first_integral_right", self.first_integral_right),
            ("halfline_right", self.halfline_right),
            ("halfline_left", self.halfline_left),
            ("equipartition", self.equipartition),
            ("jump_gap", self.jump_gap),
            ("decay_vs_theory", self.decay_vs_theory),
            ("decay_above_speed", self.decay_above_speed),
            ("left_tail_grad", self.left_tail_grad),
            ("left_tail_w_floor", self.left_tail_w_floor),
        ];
        if let Some(s) = self.shooting {
            v.push(("shooting", s));
        }
        v
    }

    /// Names of the failed checks.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut f: Vec<&'static str> = self.checks().into_iter().filter(|(_, c)| !c.pass).map(|(n, _)| n).collect();
        if !self.jump_sign_consistent {
            f.push("jump_sign");
        }
        f
    }
}
