//! Minimum energy `gamma(c)` by projected gradient descent.
//!
//! Search directions are gradients in the weighted `H^1` metric
//! `<v, w> = int e^{c x} (v' w' + sigma v w) dx`, which removes the `1 / h^2` stiffness
//! and the `e^{c x}` scaling from the raw nodal gradient. The node at `x = 0` moves only
//! tangentially to the zero set and is projected back onto it after every step; the
//! right boundary node stays at `b`. Steps follow Armijo backtracking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::functional::{compute_bounds, BoundsReport, DiscreteObjective, FunctionalParams};
use crate::constrained::{Freedom, TangentMetric};
use crate::numeric::norm;
use crate::potential::{project_to_gamma, PotentialConstants, PotentialSpec};
use crate::profile::{initial_profile, translate_to_gamma, Grid, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Stop when the sup-norm of the preconditioned projected gradient falls below this.
    pub opt_tol: f64,
    /// Largest accepted `max(0, -W(u))` on `x > 0` at convergence.
    pub feas_tol: f64,
    pub max_iters: usize,
    pub armijo_c1: f64,
    pub shrink: f64,
    /// Number of randomized restarts in addition to the supplied initial profile.
    pub restarts: usize,
    pub seed: u64,
    /// Zeroth-order weight `sigma` of the metric.
    pub metric_shift: f64,
    /// Violation of `W >= 0` on `x > 0` above which the profile is re-translated.
    pub translate_trigger: f64,
    /// Weight of the quadratic penalty on `W < 0` for `x > 0`.
    pub penalty_kappa: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            opt_tol: 1e-8,
            feas_tol: 1e-8,
            max_iters: 200_000,
            armijo_c1: 1e-4,
            shrink: 0.5,
            restarts: 3,
            seed: 0,
            metric_shift: 4.0,
            translate_trigger: 1e-3,
            penalty_kappa: FunctionalParams::DEFAULT_KAPPA,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.opt_tol > 0.0
            && self.feas_tol > 0.0
            && self.max_iters > 0
            && self.armijo_c1 > 0.0
            && self.armijo_c1 < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.metric_shift > 0.0
            && self.translate_trigger > 0.0
            && self.penalty_kappa >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(WaveError::Contract(format!("invalid minimizer options: {self:?}")))
        }
    }
}

/// Result of minimizing `J(c, .)`.
#[derive(Debug, Clone, Serialize)]
pub struct GammaResult {
    pub c: f64,
    /// Converged energy, penalty excluded.
    pub gamma: f64,
    /// Penalty value at the minimizer.
    pub penalty: f64,
    #[serde(skip)]
    pub profile: Profile,
    pub grad_norm: f64,
    pub feasibility_violation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The penalty term is nonzero at the returned minimizer.
    pub penalty_active: bool,
    /// Largest minus smallest `gamma` over the converged starts.
    pub multistart_spread: f64,
    /// Multi-start runs disagree by more than `1e-4`.
    pub multistart_disagreement: bool,
    pub bounds: BoundsReport,
}

struct RunOutcome {
    values: Vec<f64>,
    energy: f64,
    penalty: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn project_zero_node(spec: &PotentialSpec, values: &mut [f64], zero: usize) -> Result<()> {
    let dim = spec.dim();
    let p = project_to_gamma(spec, &values[zero * dim..(zero + 1) * dim])?;
    values[zero * dim..(zero + 1) * dim].copy_from_slice(&p);
    Ok(())
}

/// Nodes at `x > 0` with `W` below this are held on their level set unless they pull away.
const ACTIVE_TOL: f64 = 1e-9;
/// Smallest `|DW|` for a small-`W` node to count as lying on the zero set rather than near `b`.
const GAMMA_GRADIENT_FLOOR: f64 = 1e-3;

/// Choose the constrained nodes and compute the descent direction. Returns `g . d`.
fn constrained_direction(
    spec: &PotentialSpec,
    metric: &mut TangentMetric,
    zero: usize,
    values: &[f64],
    grad: &[f64],
    dir: &mut [f64],
) -> f64 {
    let dim = spec.dim();
    metric.release_all();
    metric.constrain(spec, zero, &values[zero * dim..(zero + 1) * dim]);
    for i in zero + 1..metric.free_nodes() {
        let u = &values[i * dim..(i + 1) * dim];
        if spec.value(u) <= ACTIVE_TOL && norm(&spec.gradient(u)) >= GAMMA_GRADIENT_FLOOR {
            metric.constrain(spec, i, u);
        }
    }
    let mut gd = metric.solve(grad, dir);
    for _ in 0..4 {
        let pulling: Vec<usize> = (zero + 1..metric.free_nodes())
            .filter(|&i| metric.freedom(i) != Freedom::Free && metric.multiplier(i, grad, dir) < 0.0)
            .collect();
        if pulling.is_empty() {
            break;
        }
        for i in pulling {
            metric.release(i);
        }
        gd = metric.solve(grad, dir);
    }
    gd
}

fn max_violation(spec: &PotentialSpec, zero: usize, values: &[f64]) -> f64 {
    let dim = spec.dim();
    let n = values.len() / dim;
    (zero + 1..n).map(|i| (-spec.value(&values[i * dim..(i + 1) * dim])).max(0.0)).fold(0.0, f64::max)
}

/// Pull every node at `x > 0` with `W < 0` back onto the zero set.
fn project_violators(spec: &PotentialSpec, zero: usize, values: &mut [f64]) -> Result<()> {
    let dim = spec.dim();
    let n = values.len() / dim;
    for i in zero + 1..n {
        let u = &mut values[i * dim..(i + 1) * dim];
        if spec.value(u) < 0.0 {
            let p = project_to_gamma(spec, u)?;
            u.copy_from_slice(&p);
        }
    }
    Ok(())
}

fn descend(
    spec: &PotentialSpec,
    params: &FunctionalParams,
    grid: &Grid,
    init: &Profile,
    opts: &MinimizeOptions,
) -> Result<RunOutcome> {
    let obj = DiscreteObjective::new(spec, *params, grid)?;
    let mut metric = TangentMetric::new(grid.nodes(), obj.weights(), opts.metric_shift, spec.dim());
    let dim = spec.dim();
    let zero = grid.zero_index();
    let well_b = spec.well_b().to_vec();

    let mut values = init.values().to_vec();
    let mut parts = obj.eval(&values)?;
    let mut grad = vec![0.0; values.len()];
    obj.gradient(&values, &mut grad)?;
    let mut dir = vec![0.0; values.len()];
    let mut trial = vec![0.0; values.len()];
    let mut step: f64 = 1.0;
    let mut translations = 0;
    let mut grad_norm = f64::INFINITY;

    let n = grid.len();
    for iter in 0..opts.max_iters {
        let gd = constrained_direction(spec, &mut metric, zero, &values, &grad, &mut dir);
        grad_norm = sup_norm(&dir);
        if grad_norm <= opts.opt_tol {
            return Ok(RunOutcome {
                values,
                energy: parts.energy,
                penalty: parts.penalty,
                grad_norm,
                iterations: iter,
                converged: true,
            });
        }
        let f0 = parts.total();
        let noise = 1e-13 * (parts.magnitude + parts.penalty.abs());
        let mut t = (2.0 * step).min(1.0);
        let mut accepted = None;
        while t > 1e-14 {
            for (tr, (v, d)) in trial.iter_mut().zip(values.iter().zip(&dir)) {
                *tr = v + t * d;
            }
            let raw_violation = max_violation(spec, zero, &trial);
            if dim > 1 && project_zero_node(spec, &mut trial, zero).is_err() {
                t *= opts.shrink;
                continue;
            }
            if raw_violation > 0.0 && project_violators(spec, zero, &mut trial).is_err() {
                t *= opts.shrink;
                continue;
            }
            match obj.eval(&trial) {
                Ok(p) if p.total().is_finite() && p.total() <= f0 + opts.armijo_c1 * t * gd + noise => {
                    accepted = Some((p, raw_violation));
                    break;
                }
                _ => t *= opts.shrink,
            }
        }
        let Some((new_parts, raw_violation)) = accepted else {
            // no decrease representable in floating point: report the stall
            return Ok(RunOutcome {
                values,
                energy: parts.energy,
                penalty: parts.penalty,
                grad_norm,
                iterations: iter,
                converged: false,
            });
        };
        step = t;
        if raw_violation > opts.translate_trigger && translations < 50 {
            // the front wants to move right of the origin: shift the last zero-set crossing back to 0
            for (tr, (v, d)) in trial.iter_mut().zip(values.iter().zip(&dir)) {
                *tr = v + t * d;
            }
            trial[(n - 1) * dim..].copy_from_slice(&well_b);
            let p = Profile::new(grid.clone(), dim, trial.clone(), well_b.clone())?;
            if let Ok(shifted) = translate_to_gamma(spec, &p) {
                if max_violation(spec, zero, shifted.values()) <= opts.feas_tol {
                    values.copy_from_slice(shifted.values());
                    parts = obj.eval(&values)?;
                    translations += 1;
                    obj.gradient(&values, &mut grad)?;
                    continue;
                }
            }
            std::mem::swap(&mut values, &mut trial);
            parts = obj.eval(&values)?;
        } else {
            std::mem::swap(&mut values, &mut trial);
            parts = new_parts;
        }
        obj.gradient(&values, &mut grad)?;
    }
    Ok(RunOutcome {
        values,
        energy: parts.energy,
        penalty: parts.penalty,
        grad_norm,
        iterations: opts.max_iters,
        converged: false,
    })
}

/// Smooth random bumps added to `base`, then re-pinned to the zero set.
fn perturbed_start(spec: &PotentialSpec, base: &Profile, rng: &mut ChaCha8Rng) -> Result<Profile> {
    let dim = spec.dim();
    let bx = spec.bounding_box().clone();
    let bumps: Vec<(f64, f64, Vec<f64>)> = (0..3)
        .map(|_| {
            let center = rng.gen_range(-3.0..3.0);
            let width = rng.gen_range(0.5..2.0);
            let amp: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.2..0.2)).collect();
            (center, width, amp)
        })
        .collect();
    let mut values = base.values().to_vec();
    for (i, &x) in base.grid().nodes().iter().enumerate() {
        let u = &mut values[i * dim..(i + 1) * dim];
        for (center, width, amp) in &bumps {
            let s = (-(x - center).powi(2) / (2.0 * width * width)).exp();
            for k in 0..dim {
                u[k] += amp[k] * s;
            }
        }
        bx.clamp(u);
    }
    let n = base.len();
    values[(n - 1) * dim..].copy_from_slice(spec.well_b());
    let p = Profile::new(base.grid().clone(), dim, values, spec.well_b().to_vec())?;
    translate_to_gamma(spec, &p)
}

/// Minimize `J(c, .) + penalty` from `init` plus `opts.restarts` randomized starts.
pub fn minimize_profile(
    spec: &PotentialSpec,
    consts: &PotentialConstants,
    params: &FunctionalParams,
    grid: &Grid,
    init: &Profile,
    opts: &MinimizeOptions,
) -> Result<GammaResult> {
    opts.validate()?;
    if init.grid() != grid || init.dim() != spec.dim() {
        return Err(WaveError::Contract("initial profile does not live on the given grid".into()));
    }
    init.require_anchored()?;
    let start = translate_to_gamma(spec, init)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ params.c.to_bits());
    let mut starts = vec![start.clone()];
    for _ in 0..opts.restarts {
        if let Ok(p) = perturbed_start(spec, &start, &mut rng) {
            starts.push(p);
        }
    }
    let outcomes: Vec<Result<RunOutcome>> = starts.iter().map(|s| descend(spec, params, grid, s, opts)).collect();

    let mut runs = Vec::new();
    let mut first_err = None;
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if runs.is_empty() {
        return Err(first_err.unwrap_or(WaveError::Contract("no minimization run completed".into())));
    }

    let violation_of = |r: &RunOutcome| -> f64 {
        let n = grid.len();
        let dim = spec.dim();
        (grid.zero_index() + 1..n).map(|i| (-spec.value(&r.values[i * dim..(i + 1) * dim])).max(0.0)).fold(0.0, f64::max)
    };
    let converged: Vec<&RunOutcome> = runs.iter().filter(|r| r.converged).collect();
    let spread = if converged.len() > 1 {
        let lo = converged.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
        let hi = converged.iter().map(|r| r.energy).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    } else {
        0.0
    };
    // prefer converged feasible runs, then the lowest energy
    let best = runs
        .iter()
        .min_by(|a, b| {
            let ka = (!a.converged, violation_of(a) > opts.feas_tol);
            let kb = (!b.converged, violation_of(b) > opts.feas_tol);
            ka.cmp(&kb).then(a.energy.total_cmp(&b.energy))
        })
        .unwrap();

    let violation = violation_of(best);
    if best.converged && violation > opts.feas_tol {
        return Err(WaveError::InfeasibleMinimizer { violation, tolerance: opts.feas_tol });
    }
    let profile = Profile::new(grid.clone(), spec.dim(), best.values.clone(), spec.well_b().to_vec())?;
    Ok(GammaResult {
        c: params.c,
        gamma: best.energy,
        penalty: best.penalty,
        profile,
        grad_norm: best.grad_norm,
        feasibility_violation: violation,
        iterations: best.iterations,
        converged: best.converged,
        penalty_active: best.penalty > 0.0,
        multistart_spread: spread,
        multistart_disagreement: spread > 1e-4,
        bounds: compute_bounds(spec, consts, params.c),
    })
}

/// `gamma` at every speed in `c_list` (strictly increasing).
///
/// With `warm_start`, each run starts from the previous minimizer and runs sequentially;
/// otherwise every speed starts from the piecewise-linear profile and runs in parallel.
/// Per-speed errors are kept in place so partial results survive.
pub fn gamma_curve(
    spec: &PotentialSpec,
    consts: &PotentialConstants,
    grid: &Grid,
    c_list: &[f64],
    opts: &MinimizeOptions,
    warm_start: bool,
) -> Result<Vec<Result<GammaResult>>> {
    if c_list.is_empty() {
        return Err(WaveError::Contract("c_list is empty".into()));
    }
    if c_list.iter().any(|c| !(*c > 0.0)) || c_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(WaveError::Contract("c_list must be positive and strictly increasing".into()));
    }
    let cold = initial_profile(spec, consts, grid)?;
    if warm_start {
        let mut out = Vec::with_capacity(c_list.len());
        let mut prev: Option<Profile> = None;
        for &c in c_list {
            let params = FunctionalParams::with_penalty(c, opts.penalty_kappa)?;
            let init = prev.as_ref().unwrap_or(&cold);
            let r = minimize_profile(spec, consts, &params, grid, init, opts);
            if let Ok(g) = &r {
                prev = Some(g.profile.clone());
            }
            out.push(r);
        }
        Ok(out)
    } else {
        Ok(c_list
            .par_iter()
            .map(|&c| {
                let params = FunctionalParams::with_penalty(c, opts.penalty_kappa)?;
                minimize_profile(spec, consts, &params, grid, &cold, opts)
            })
            .collect())
    }
}
