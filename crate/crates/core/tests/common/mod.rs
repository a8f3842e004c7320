//! Closed-form oracles shared by the integration tests. None of them call into the solver.
#![allow(dead_code)]

use wavefront_core::*;

/// `W(u) = u^4/2 - a u^3/3 - u^2 + a u + 1/2 - 2a/3`, the antiderivative of `(s^2-1)(2s-a)` from 1.
pub fn w_scalar(alpha: f64, u: f64) -> f64 {
    u.powi(4) / 2.0 - alpha * u.powi(3) / 3.0 - u * u + alpha * u + 0.5 - 2.0 * alpha / 3.0
}

/// The zero of `W` in `(-1, 1)` by plain bisection on the closed form.
pub fn crossing(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0 + 1e-12, 1.0 - 1e-12);
    let f_lo = w_scalar(alpha, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (w_scalar(alpha, mid) < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Offset `x0` with `W(tanh(x0)) = 0`.
pub fn tanh_shift(alpha: f64) -> f64 {
    crossing(alpha).atanh()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

pub fn uniform(x_left: f64, x_right: f64, h: f64) -> Grid {
    Grid::uniform(x_left, x_right, h).unwrap()
}

/// Samples `f` on `grid`, pinning the last node to `b`.
pub fn anchored<F: Fn(f64) -> Vec<f64>>(grid: &Grid, b: Vec<f64>, f: F) -> Profile {
    let dim = b.len();
    let mut values: Vec<f64> = grid.nodes().iter().flat_map(|&x| f(x)).collect();
    let n = values.len();
    values[n - dim..].copy_from_slice(&b);
    Profile::new(grid.clone(), dim, values, b).unwrap()
}

/// Exact scalar wave `tanh(x + x0)` sampled on `grid`.
pub fn tanh_profile(alpha: f64, grid: &Grid) -> Profile {
    let x0 = tanh_shift(alpha);
    anchored(grid, vec![1.0], |x| vec![(x + x0).tanh()])
}

/// The vector wave `(1, tanh(x + x0))` for `decoupled_quartic(alpha, beta)` at `c = beta`.
pub fn vector_tanh_profile(beta: f64, grid: &Grid) -> Profile {
    let x0 = tanh_shift(beta);
    anchored(grid, vec![1.0, 1.0], |x| vec![1.0, (x + x0).tanh()])
}

/// Potential, constants and the default grid at spacing `h`.
pub fn setup(spec: PotentialSpec, h: f64) -> (PotentialSpec, PotentialConstants, Grid) {
    let consts = compute_constants(&spec).unwrap();
    let b = compute_bounds(&spec, &consts, 1.0);
    let (xl, xr) = default_extent(&consts, b.bracket_lo);
    let grid = Grid::uniform(xl, xr, h).unwrap();
    (spec, consts, grid)
}

pub fn scalar(alpha: f64, h: f64) -> (PotentialSpec, PotentialConstants, Grid) {
    setup(PotentialSpec::scalar_cubic(alpha).unwrap(), h)
}

pub fn vector(h: f64) -> (PotentialSpec, PotentialConstants, Grid) {
    setup(PotentialSpec::decoupled_quartic(0.6, 1.2).unwrap(), h)
}

/// `max_i |u_i - v_i|` over all nodes and components.
pub fn sup_gap(a: &Profile, b: &Profile) -> f64 {
    a.values().iter().zip(b.values()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}
