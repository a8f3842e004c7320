//! The exponentially weighted energy
//!
//! ```text
//! J(c, u) = int e^{c x} ( |u'|^2 / 2 + W(u) ) dx
//! ```
//!
//! discretized on a truncated grid, its exact discrete gradient, the soft penalty for
//! `W(u) >= 0` on `x > 0`, and the analytic a-priori bounds on the minimum energy.
//!
//! Quadrature: on each cell the profile is linear, so `|u'|^2` is constant; `W(u)` is
//! replaced by the average of its two endpoint values; the weight `e^{c x}` is integrated
//! in closed form over the cell.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::potential::{PotentialConstants, PotentialSpec};
use crate::profile::{Grid, Profile};

/// Optional rescaling of the weight to `e^{c (x - x_ref)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WeightNormalization {
    #[default]
    None,
    ShiftByX0 { x_ref: f64 },
}

impl WeightNormalization {
    pub fn x_ref(&self) -> f64 {
        match self {
            WeightNormalization::None => 0.0,
            WeightNormalization::ShiftByX0 { x_ref } => *x_ref,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParams {
    pub c: f64,
    pub penalty_kappa: f64,
    pub weight_normalization: WeightNormalization,
}

impl FunctionalParams {
    pub const DEFAULT_KAPPA: f64 = 1e3;

    pub fn new(c: f64) -> Result<Self> {
        Self::with_penalty(c, Self::DEFAULT_KAPPA)
    }

    pub fn with_penalty(c: f64, penalty_kappa: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(WaveError::Contract(format!("speed c must be positive, got {c}")));
        }
        if !(penalty_kappa >= 0.0) {
            return Err(WaveError::Contract(format!("penalty_kappa must be nonnegative, got {penalty_kappa}")));
        }
        Ok(FunctionalParams { c, penalty_kappa, weight_normalization: WeightNormalization::None })
    }

    pub fn normalized(mut self, normalization: WeightNormalization) -> Self {
        self.weight_normalization = normalization;
        self
    }
}

/// Closed-form `int_{cell} e^{c (x - x_ref)} dx` for every cell.
pub fn cell_weights(params: &FunctionalParams, grid: &Grid) -> Result<Vec<f64>> {
    let c = params.c;
    let x_ref = params.weight_normalization.x_ref();
    let top = c * (grid.x_right() - x_ref);
    if top > 600.0 {
        return Err(WaveError::WeightOverflow(top));
    }
    Ok(grid
        .nodes()
        .windows(2)
        .map(|w| (c * (w[0] - x_ref)).exp() * (c * (w[1] - w[0])).exp_m1() / c)
        .collect())
}

/// Discrete objective with the cell weights cached, shared by evaluation and the optimizer.
pub struct DiscreteObjective<'a> {
    spec: &'a PotentialSpec,
    params: FunctionalParams,
    nodes: &'a [f64],
    zero: usize,
    weights: Vec<f64>,
}

/// Energy split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub energy: f64,
    pub penalty: f64,
    /// Sum of the absolute cell contributions; sets the rounding floor of `energy`.
    pub magnitude: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.energy + self.penalty
    }
}

impl<'a> DiscreteObjective<'a> {
    pub fn new(spec: &'a PotentialSpec, params: FunctionalParams, grid: &'a Grid) -> Result<Self> {
        let weights = cell_weights(&params, grid)?;
        Ok(DiscreteObjective { spec, params, nodes: grid.nodes(), zero: grid.zero_index(), weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn params(&self) -> &FunctionalParams {
        &self.params
    }

    fn check(&self, values: &[f64]) -> Result<()> {
        let dim = self.spec.dim();
        if values.len() != dim * self.nodes.len() {
            return Err(WaveError::Contract("profile does not match the objective's grid or dimension".into()));
        }
        Ok(())
    }

    /// Energy and penalty at the flat node values.
    pub fn eval(&self, values: &[f64]) -> Result<EnergyParts> {
        self.check(values)?;
        let dim = self.spec.dim();
        let n = self.nodes.len();
        let w: Vec<f64> = (0..n).map(|i| self.spec.value(&values[i * dim..(i + 1) * dim])).collect();
        let mut energy = 0.0;
        let mut magnitude = 0.0;
        let mut penalty = 0.0;
        for i in 0..n - 1 {
            let h = self.nodes[i + 1] - self.nodes[i];
            let mut du2 = 0.0;
            for k in 0..dim {
                let d = values[(i + 1) * dim + k] - values[i * dim + k];
                du2 += d * d;
            }
            let kinetic = self.weights[i] * 0.5 * du2 / (h * h);
            let potential = self.weights[i] * 0.5 * (w[i] + w[i + 1]);
            energy += kinetic + potential;
            magnitude += kinetic + potential.abs();
            if i >= self.zero && self.params.penalty_kappa > 0.0 {
                let p0 = (-w[i]).max(0.0);
                let p1 = (-w[i + 1]).max(0.0);
                penalty += self.weights[i] * 0.5 * (p0 * p0 + p1 * p1);
            }
        }
        Ok(EnergyParts { energy, penalty: self.params.penalty_kappa * penalty, magnitude })
    }

    /// Gradient of energy + penalty with respect to every node value; the last node
    /// (held at `b`) gets a zero row.
    pub fn gradient(&self, values: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(values)?;
        let dim = self.spec.dim();
        let n = self.nodes.len();
        out.iter_mut().for_each(|g| *g = 0.0);
        let mut dw = vec![0.0; dim];
        for i in 0..n {
            let u = &values[i * dim..(i + 1) * dim];
            self.spec.gradient_into(u, &mut dw);
            let left = if i > 0 { self.weights[i - 1] } else { 0.0 };
            let right = if i + 1 < n { self.weights[i] } else { 0.0 };
            let mass = 0.5 * (left + right);
            let mut coef = mass;
            if self.params.penalty_kappa > 0.0 && i >= self.zero {
                let viol = (-self.spec.value(u)).max(0.0);
                if viol > 0.0 {
                    // d/du of kappa * viol^2 over the cells to the right of 0 touching node i
                    let pen_mass = 0.5 * (if i > self.zero { left } else { 0.0 } + right);
                    coef -= 2.0 * self.params.penalty_kappa * viol * pen_mass;
                }
            }
            for k in 0..dim {
                out[i * dim + k] = coef * dw[k];
            }
        }
        for i in 0..n - 1 {
            let h = self.nodes[i + 1] - self.nodes[i];
            let s = self.weights[i] / (h * h);
            for k in 0..dim {
                let d = s * (values[(i + 1) * dim + k] - values[i * dim + k]);
                out[i * dim + k] -= d;
                out[(i + 1) * dim + k] += d;
            }
        }
        out[(n - 1) * dim..].iter_mut().for_each(|g| *g = 0.0);
        Ok(())
    }
}

/// Weighted energy of `profile` (penalty excluded).
pub fn eval_j(spec: &PotentialSpec, params: &FunctionalParams, profile: &Profile) -> Result<f64> {
    profile.require_anchored()?;
    let obj = DiscreteObjective::new(spec, *params, profile.grid())?;
    Ok(obj.eval(profile.values())?.energy)
}

/// `kappa * int_0^{x_right} e^{c x} max(0, -W(u))^2 dx` with the same quadrature.
pub fn eval_penalty(spec: &PotentialSpec, params: &FunctionalParams, profile: &Profile) -> Result<f64> {
    let obj = DiscreteObjective::new(spec, *params, profile.grid())?;
    Ok(obj.eval(profile.values())?.penalty)
}

/// Gradient of `eval_j + eval_penalty` with respect to the node values (flat, `dim` per node).
pub fn grad_j(spec: &PotentialSpec, params: &FunctionalParams, profile: &Profile) -> Result<Vec<f64>> {
    profile.require_anchored()?;
    let obj = DiscreteObjective::new(spec, *params, profile.grid())?;
    let mut g = vec![0.0; profile.values().len()];
    obj.gradient(profile.values(), &mut g)?;
    Ok(g)
}

/// A-priori bounds on the minimum energy at speed `c` and the bracket on the root speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub c: f64,
    /// `c d^2 / 2 - m / c`.
    pub lower: f64,
    /// `((|b - a|^2 / 2 + M)(e^c - 1) - m e^{-c}) / c`.
    pub upper: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
}

pub fn compute_bounds(spec: &PotentialSpec, consts: &PotentialConstants, c: f64) -> BoundsReport {
    let m = consts.m;
    let span2 = consts.span_sq(spec);
    let lower = 0.5 * c * consts.d * consts.d - m / c;
    let upper = ((0.5 * span2 + consts.big_m) * c.exp_m1() - m * (-c).exp()) / c;
    let bracket_lo = ((1.0 + (1.0 + 8.0 * m / (span2 + 2.0 * consts.big_m)).sqrt()) / 2.0).ln();
    let bracket_hi = (2.0 * m).sqrt() / consts.d;
    BoundsReport { c, lower, upper, bracket_lo, bracket_hi }
}
