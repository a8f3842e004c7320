//! The wave speed `c*`, the unique zero of the increasing function `gamma`.

use serde::Serialize;

use crate::error::{Result, WaveError};
use crate::functional::{compute_bounds, FunctionalParams};
use crate::minimize::{minimize_profile, GammaResult, MinimizeOptions};
use crate::potential::{PotentialConstants, PotentialSpec};
use crate::profile::{initial_profile, Grid, Profile};
use crate::verify::{verify_all, VerifyOptions, VerifyReport};

/// One bisection bracket with the energies at its ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketStep {
    pub c_lo: f64,
    pub c_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedOptions {
    pub c_tol: f64,
    /// Factor applied to a bracket end whose energy has the wrong sign.
    pub expansion: f64,
    pub max_expansions: usize,
    /// Run the verify suite on the final wave.
    pub verify: bool,
}

impl SpeedOptions {
    pub fn new(c_tol: f64) -> Self {
        SpeedOptions { c_tol, expansion: 1.5, max_expansions: 6, verify: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeedResult {
    pub c_star: f64,
    pub gamma_at_c_star: f64,
    pub history: Vec<BracketStep>,
    /// Energies at every probed speed, in evaluation order.
    pub probes: Vec<(f64, f64)>,
    /// Every minimization along the way met the stopping tolerance.
    pub all_converged: bool,
    /// Final cold-start minimizer at `c_star`.
    pub result: GammaResult,
    #[serde(skip)]
    pub profile: Profile,
    pub verify: Option<VerifyReport>,
    pub wave_ok: bool,
}

/// Tolerance on `|gamma|` for treating a minimizer as a full-line wave: `5e-3 (1 + m / c)`.
pub fn gamma_zero_tol(consts: &PotentialConstants, c: f64) -> f64 {
    5e-3 * (1.0 + consts.m / c)
}

fn gamma_at(
    spec: &PotentialSpec,
    consts: &PotentialConstants,
    grid: &Grid,
    c: f64,
    init: &Profile,
    opts: &MinimizeOptions,
) -> Result<GammaResult> {
    let params = FunctionalParams::with_penalty(c, opts.penalty_kappa)?;
    minimize_profile(spec, consts, &params, grid, init, opts)
}

/// Bisection on the sign of `gamma` inside the analytic bracket; see [`find_speed_with`].
pub fn find_speed(
    spec: &PotentialSpec,
    consts: &PotentialConstants,
    grid: &Grid,
    opts: &MinimizeOptions,
    c_tol: f64,
) -> Result<SpeedResult> {
    find_speed_with(spec, consts, grid, opts, &SpeedOptions::new(c_tol))
}

/// Locate `c*` by bisection.
///
/// The starting bracket is the analytic one from [`compute_bounds`]; an end whose energy has
/// the wrong sign is pushed outward by `speed.expansion`, at most `speed.max_expansions`
/// times in total. Interior evaluations start from the minimizer at the nearer bracket end.
pub fn find_speed_with(
    spec: &PotentialSpec,
    consts: &PotentialConstants,
    grid: &Grid,
    opts: &MinimizeOptions,
    speed: &SpeedOptions,
) -> Result<SpeedResult> {
    if !(speed.c_tol > 0.0) {
        return Err(WaveError::Contract(format!("c_tol must be positive, got {}", speed.c_tol)));
    }
    if !(speed.expansion > 1.0) {
        return Err(WaveError::Contract("bracket expansion factor must exceed 1".into()));
    }
    let bounds = compute_bounds(spec, consts, 1.0);
    let cold = initial_profile(spec, consts, grid)?;
    let mut probes = Vec::new();
    let mut all_converged = true;
    let mut record = |r: &GammaResult, probes: &mut Vec<(f64, f64)>| {
        probes.push((r.c, r.gamma));
        all_converged &= r.converged;
    };

    let (mut c_lo, mut c_hi) = (bounds.bracket_lo, bounds.bracket_hi);
    let (lo_res, hi_res) = rayon::join(
        || gamma_at(spec, consts, grid, c_lo, &cold, opts),
        || gamma_at(spec, consts, grid, c_hi, &cold, opts),
    );
    let mut lo = lo_res?;
    let mut hi = hi_res?;
    record(&lo, &mut probes);
    record(&hi, &mut probes);
    let mut expansions = 0;
    while !(lo.gamma < 0.0 && hi.gamma > 0.0) {
        if expansions >= speed.max_expansions {
            return Err(WaveError::BracketFailure { probes });
        }
        expansions += 1;
        if lo.gamma >= 0.0 {
            c_lo /= speed.expansion;
            lo = gamma_at(spec, consts, grid, c_lo, &lo.profile, opts)?;
            record(&lo, &mut probes);
        }
        if hi.gamma <= 0.0 {
            c_hi *= speed.expansion;
            hi = gamma_at(spec, consts, grid, c_hi, &hi.profile, opts)?;
            record(&hi, &mut probes);
        }
    }

    let mut history = vec![BracketStep { c_lo, c_hi, gamma_lo: lo.gamma, gamma_hi: hi.gamma }];
    while c_hi - c_lo > speed.c_tol {
        let mid = 0.5 * (c_lo + c_hi);
        // warm start from the end whose energy is closer to zero
        let init = if lo.gamma.abs() <= hi.gamma.abs() { &lo.profile } else { &hi.profile };
        let r = gamma_at(spec, consts, grid, mid, init, opts)?;
        record(&r, &mut probes);
        if r.gamma < 0.0 {
            c_lo = mid;
            lo = r;
        } else {
            c_hi = mid;
            hi = r;
        }
        history.push(BracketStep { c_lo, c_hi, gamma_lo: lo.gamma, gamma_hi: hi.gamma });
    }

    let c_star = 0.5 * (c_lo + c_hi);
    let result = gamma_at(spec, consts, grid, c_star, &cold, opts)?;
    record(&result, &mut probes);
    let verify = if speed.verify {
        Some(verify_all(spec, consts, c_star, result.gamma, &result.profile, &VerifyOptions::default())?)
    } else {
        None
    };
    let wave_ok = verify.as_ref().map(|v| v.pass).unwrap_or(false);
    Ok(SpeedResult {
        c_star,
        gamma_at_c_star: result.gamma,
        history,
        probes,
        all_converged,
        profile: result.profile.clone(),
        result,
        verify,
        wave_ok,
    })
}

/// The minimizer at `c`, provided `|gamma(c)|` is small enough for it to be a full-line wave.
pub fn wave_at_speed(
    spec: &PotentialSpec,
    consts: &PotentialConstants,
    grid: &Grid,
    c: f64,
    opts: &MinimizeOptions,
) -> Result<Profile> {
    let cold = initial_profile(spec, consts, grid)?;
    let r = gamma_at(spec, consts, grid, c, &cold, opts)?;
    let tolerance = gamma_zero_tol(consts, c);
    if r.gamma.abs() > tolerance {
        return Err(WaveError::NotAWave { c, gamma: r.gamma, tolerance });
    }
    Ok(r.profile)
}
