//! Multi-well potentials `W: R^n -> R`, their derivatives, and the scalar constants
//! (depth `m`, segment maximum `M`, gap `d`, curvature `mu`) that feed the energy
//! bounds, the speed bracket and the decay estimates.
//!
//! A potential is admissible when it has a reference well `b` with `W(b) = 0`,
//! `DW(b) = 0`, `D^2W(b) > 0`, and a non-empty bounded negative set `{W < 0}`
//! contained in a known bounding box.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::numeric::{bisect, dist, dot, golden_min, norm};

/// Evaluation callbacks for a potential.
///
/// Implementors must be pure; the solver calls them from several threads.
pub trait PotentialModel: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, u: &[f64]) -> f64;

    fn gradient(&self, u: &[f64], out: &mut [f64]);

    /// Hessian; the default uses centered differences of [`PotentialModel::gradient`].
    fn hessian(&self, u: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let h = 1e-5;
        let mut hess = DMatrix::zeros(n, n);
        let mut up = u.to_vec();
        let mut gp = vec![0.0; n];
        let mut gm = vec![0.0; n];
        for j in 0..n {
            up[j] = u[j] + h;
            self.gradient(&up, &mut gp);
            up[j] = u[j] - h;
            self.gradient(&up, &mut gm);
            up[j] = u[j];
            for i in 0..n {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        0.5 * (&hess + hess.transpose())
    }
}

/// One term `coef * prod_k u_k^powers[k]` of a user polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// The built-in potential families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum BuiltinPotential {
    /// `W(u) = int_1^u (s^2 - 1)(2s - alpha) ds`, wells at -1 and b = 1.
    ScalarCubic { alpha: f64 },
    /// `W(u, v) = w_alpha(u) + w_beta(v)` with `w` as in `ScalarCubic`; b = (1, 1).
    DecoupledQuartic { alpha: f64, beta: f64 },
    /// Sum of monomials in `n` variables.
    UserPolynomial { terms: Vec<Monomial> },
}

/// Antiderivative `int_1^s (t^2 - 1)(2t - c) dt`, evaluated as
/// `t^2 (t^2 / 2 + (6 - c) t / 3 + 2 - c)` with `t = s - 1` so that it vanishes exactly at `s = 1`.
pub fn quartic_well(s: f64, c: f64) -> f64 {
    let t = s - 1.0;
    t * t * (0.5 * t * t + (6.0 - c) * t / 3.0 + 2.0 - c)
}

/// `f(s, c) = (s^2 - 1)(2s - c)`.
pub fn quartic_well_d1(s: f64, c: f64) -> f64 {
    (s * s - 1.0) * (2.0 * s - c)
}

pub fn quartic_well_d2(s: f64, c: f64) -> f64 {
    6.0 * s * s - 2.0 * c * s - 2.0
}

impl BuiltinPotential {
    fn check(&self) -> Result<usize> {
        match self {
            BuiltinPotential::ScalarCubic { alpha } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(WaveError::Assumption(format!("scalar_cubic needs 0 < alpha < 2, got {alpha}")));
                }
                Ok(1)
            }
            BuiltinPotential::DecoupledQuartic { alpha, beta } => {
                if !(*alpha > 0.0 && alpha <= beta && *beta < 2.0) {
                    return Err(WaveError::Assumption(format!(
                        "decoupled_quartic needs 0 < alpha <= beta < 2, got alpha={alpha}, beta={beta}"
                    )));
                }
                Ok(2)
            }
            BuiltinPotential::UserPolynomial { terms } => {
                let n = terms.first().map(|t| t.powers.len()).unwrap_or(0);
                if n == 0 {
                    return Err(WaveError::Contract("user_polynomial needs at least one term with a non-empty power list".into()));
                }
                if terms.iter().any(|t| t.powers.len() != n) {
                    return Err(WaveError::Contract("user_polynomial terms disagree on the number of variables".into()));
                }
                Ok(n)
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Builtin {
    kind: BuiltinPotential,
    dim: usize,
}

fn monomial_partial(powers: &[u32], u: &[f64], k: usize) -> f64 {
    if powers[k] == 0 {
        return 0.0;
    }
    let mut p = powers[k] as f64;
    for (j, (&e, &x)) in powers.iter().zip(u).enumerate() {
        let e = if j == k { e - 1 } else { e };
        p *= x.powi(e as i32);
    }
    p
}

impl PotentialModel for Builtin {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, u: &[f64]) -> f64 {
        match &self.kind {
            BuiltinPotential::ScalarCubic { alpha } => quartic_well(u[0], *alpha),
            BuiltinPotential::DecoupledQuartic { alpha, beta } => quartic_well(u[0], *alpha) + quartic_well(u[1], *beta),
            BuiltinPotential::UserPolynomial { terms } => terms
                .iter()
                .map(|t| t.coef * t.powers.iter().zip(u).map(|(&e, &x)| x.powi(e as i32)).product::<f64>())
                .sum(),
        }
    }

    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        match &self.kind {
            BuiltinPotential::ScalarCubic { alpha } => out[0] = quartic_well_d1(u[0], *alpha),
            BuiltinPotential::DecoupledQuartic { alpha, beta } => {
                out[0] = quartic_well_d1(u[0], *alpha);
                out[1] = quartic_well_d1(u[1], *beta);
            }
            BuiltinPotential::UserPolynomial { terms } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for t in terms {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += t.coef * monomial_partial(&t.powers, u, k);
                    }
                }
            }
        }
    }

    fn hessian(&self, u: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            BuiltinPotential::ScalarCubic { alpha } => DMatrix::from_element(1, 1, quartic_well_d2(u[0], *alpha)),
            BuiltinPotential::DecoupledQuartic { alpha, beta } => DMatrix::from_diagonal(&DVector::from_vec(vec![
                quartic_well_d2(u[0], *alpha),
                quartic_well_d2(u[1], *beta),
            ])),
            BuiltinPotential::UserPolynomial { terms } => {
                let n = self.dim;
                let mut h = DMatrix::zeros(n, n);
                for t in terms {
                    for i in 0..n {
                        for j in 0..n {
                            let mut powers = t.powers.clone();
                            if powers[i] == 0 {
                                continue;
                            }
                            let mut c = powers[i] as f64;
                            powers[i] -= 1;
                            if powers[j] == 0 {
                                continue;
                            }
                            c *= powers[j] as f64;
                            powers[j] -= 1;
                            let v: f64 = powers.iter().zip(u).map(|(&e, &x)| x.powi(e as i32)).product();
                            h[(i, j)] += t.coef * c * v;
                        }
                    }
                }
                h
            }
        }
    }
}

/// Axis-aligned box assumed to contain the negative set of the potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        BoundingBox { lo: vec![-half_width; dim], hi: vec![half_width; dim] }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    /// The box scaled about its center by `factor`.
    pub fn inflated(&self, factor: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                let c = 0.5 * (l + h);
                let r = 0.5 * (h - l) * factor;
                (c - r, c + r)
            })
            .unzip();
        BoundingBox { lo, hi }
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for (x, (l, h)) in p.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = x.clamp(*l, *h);
        }
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }
}

/// A potential together with its reference well and bounding box.
#[derive(Clone)]
pub struct PotentialSpec {
    model: Arc<dyn PotentialModel>,
    well_b: Vec<f64>,
    bounding_box: BoundingBox,
    builtin: Option<BuiltinPotential>,
    /// Rounding residue of the model at `b`, subtracted from every evaluation.
    offset: f64,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("model", &self.model)
            .field("well_b", &self.well_b)
            .field("bounding_box", &self.bounding_box)
            .finish()
    }
}

impl PotentialSpec {
    /// Built-in potential on the box `[-2, 2]^n` with `b = (1, ..., 1)`.
    ///
    /// `UserPolynomial` needs an explicit well and box; use [`PotentialSpec::user_polynomial`].
    pub fn builtin(kind: BuiltinPotential) -> Result<Self> {
        if let BuiltinPotential::UserPolynomial { .. } = kind {
            return Err(WaveError::Contract("user_polynomial needs an explicit well and bounding box".into()));
        }
        let dim = kind.check()?;
        let model = Arc::new(Builtin { kind: kind.clone(), dim });
        Self::from_parts(model, vec![1.0; dim], BoundingBox::cube(dim, 2.0), Some(kind))
    }

    pub fn scalar_cubic(alpha: f64) -> Result<Self> {
        Self::builtin(BuiltinPotential::ScalarCubic { alpha })
    }

    pub fn decoupled_quartic(alpha: f64, beta: f64) -> Result<Self> {
        Self::builtin(BuiltinPotential::DecoupledQuartic { alpha, beta })
    }

    pub fn user_polynomial(terms: Vec<Monomial>, well_b: Vec<f64>, bounding_box: BoundingBox) -> Result<Self> {
        let kind = BuiltinPotential::UserPolynomial { terms };
        let dim = kind.check()?;
        let model = Arc::new(Builtin { kind: kind.clone(), dim });
        Self::from_parts(model, well_b, bounding_box, Some(kind))
    }

    /// Wrap arbitrary callbacks.
    pub fn custom(model: Arc<dyn PotentialModel>, well_b: Vec<f64>, bounding_box: BoundingBox) -> Result<Self> {
        Self::from_parts(model, well_b, bounding_box, None)
    }

    fn from_parts(
        model: Arc<dyn PotentialModel>,
        well_b: Vec<f64>,
        bounding_box: BoundingBox,
        builtin: Option<BuiltinPotential>,
    ) -> Result<Self> {
        let n = model.dim();
        if well_b.len() != n || bounding_box.lo.len() != n || bounding_box.hi.len() != n {
            return Err(WaveError::Contract(format!("well and box must have dimension {n}")));
        }
        if bounding_box.lo.iter().zip(&bounding_box.hi).any(|(l, h)| !(l < h)) {
            return Err(WaveError::Contract("bounding box needs lo < hi on every axis".into()));
        }
        let offset = model.value(&well_b);
        if !(offset.abs() <= 1e-10) {
            return Err(WaveError::Assumption(format!("W(b) = {offset:.3e}, expected 0")));
        }
        let spec = PotentialSpec { model, well_b, bounding_box, builtin, offset };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let b = &self.well_b;
        let gb = norm(&self.gradient(b));
        if gb > 1e-8 {
            return Err(WaveError::Assumption(format!("|DW(b)| = {gb:.3e}, expected 0")));
        }
        if !self.bounding_box.contains(b) {
            return Err(WaveError::Assumption("reference well lies outside the bounding box".into()));
        }
        if let Some(p) = self.boundary_negative_point() {
            return Err(WaveError::Assumption(format!(
                "W < 0 on the bounding-box boundary at {p:?}; the negative set is not contained in the box"
            )));
        }
        Ok(())
    }

    /// Sample the box faces; returns a point with `W < 0` if one is found.
    fn boundary_negative_point(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        let per_axis = if n == 1 { 1 } else { ((20_000f64).powf(1.0 / (n - 1) as f64) as usize).clamp(3, 101) };
        let bx = &self.bounding_box;
        for axis in 0..n {
            for side in [bx.lo[axis], bx.hi[axis]] {
                let others: Vec<usize> = (0..n).filter(|&k| k != axis).collect();
                let total = per_axis.pow(others.len() as u32);
                let mut p = vec![0.0; n];
                for idx in 0..total {
                    p[axis] = side;
                    let mut r = idx;
                    for &k in &others {
                        let i = r % per_axis;
                        r /= per_axis;
                        p[k] = bx.lo[k] + (bx.hi[k] - bx.lo[k]) * i as f64 / (per_axis - 1).max(1) as f64;
                    }
                    if self.value(&p) < 0.0 {
                        return Some(p);
                    }
                }
            }
        }
        None
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn well_b(&self) -> &[f64] {
        &self.well_b
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bounding_box
    }

    pub fn builtin_kind(&self) -> Option<&BuiltinPotential> {
        self.builtin.as_ref()
    }

    #[inline]
    pub fn value(&self, u: &[f64]) -> f64 {
        self.model.value(u) - self.offset
    }

    #[inline]
    pub fn gradient_into(&self, u: &[f64], out: &mut [f64]) {
        self.model.gradient(u, out)
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.model.gradient(u, &mut g);
        g
    }

    pub fn hessian(&self, u: &[f64]) -> DMatrix<f64> {
        self.model.hessian(u)
    }
}

/// `W(point)` with a dimension check.
pub fn eval_potential(spec: &PotentialSpec, point: &[f64]) -> Result<f64> {
    if point.len() != spec.dim() {
        return Err(WaveError::Contract(format!(
            "point has dimension {}, potential has dimension {}",
            point.len(),
            spec.dim()
        )));
    }
    Ok(spec.value(point))
}

/// Constants derived from the potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialConstants {
    /// Depth of the deepest well, `-min W`.
    pub m: f64,
    /// A global minimizer of `W`.
    pub point_a: Vec<f64>,
    /// Maximum of `W` on the segment from `point_a` to `b`.
    #[serde(rename = "M")]
    pub big_m: f64,
    /// Distance from `b` to the negative set.
    pub d: f64,
    /// Smallest eigenvalue of `D^2W(b)`.
    pub mu: f64,
}

impl PotentialConstants {
    /// `|b - a|^2`.
    pub fn span_sq(&self, spec: &PotentialSpec) -> f64 {
        let r = dist(spec.well_b(), &self.point_a);
        r * r
    }

    /// Decay rate `Lambda = (c + sqrt(c^2 + 4 mu)) / 2` of the right tail at speed `c`.
    pub fn decay_rate(&self, c: f64) -> f64 {
        0.5 * (c + (c * c + 4.0 * self.mu).sqrt())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantsOptions {
    /// Grid points per axis for the scans (capped in high dimension).
    pub grid_points: usize,
}

impl Default for ConstantsOptions {
    fn default() -> Self {
        ConstantsOptions { grid_points: 401 }
    }
}

/// Uniform grid over the box; calls `visit` with every grid point.
fn scan_box<F: FnMut(&[f64])>(bx: &BoundingBox, per_axis: usize, mut visit: F) {
    let n = bx.lo.len();
    let total = per_axis.pow(n as u32);
    let mut p = vec![0.0; n];
    for idx in 0..total {
        let mut r = idx;
        for k in 0..n {
            let i = r % per_axis;
            r /= per_axis;
            p[k] = bx.lo[k] + (bx.hi[k] - bx.lo[k]) * i as f64 / (per_axis - 1) as f64;
        }
        visit(&p);
    }
}

fn points_per_axis(requested: usize, dim: usize) -> usize {
    let cap = (2.0e6f64).powf(1.0 / dim as f64).floor() as usize;
    requested.min(cap).max(3)
}

/// Local minimization of `W` from `start`: damped Newton with a gradient-step fallback, kept inside the box.
fn local_min(spec: &PotentialSpec, start: &[f64]) -> Vec<f64> {
    let n = spec.dim();
    let bx = spec.bounding_box();
    let mut x = start.to_vec();
    let mut fx = spec.value(&x);
    for _ in 0..200 {
        let g = spec.gradient(&x);
        let gn = norm(&g);
        if gn < 1e-14 {
            break;
        }
        let h = spec.hessian(&x);
        let gv = DVector::from_column_slice(&g);
        let newton = SymmetricEigen::new(h.clone())
            .eigenvalues
            .iter()
            .all(|&e| e > 1e-12)
            .then(|| h.lu().solve(&gv))
            .flatten();
        let is_newton = newton.is_some();
        let dir: Vec<f64> = match newton {
            Some(s) => s.iter().map(|v| -v).collect(),
            None => g.iter().map(|v| -v).collect(),
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            bx.clamp(&mut trial);
            let ft = spec.value(&trial);
            // close to the minimum W stalls at rounding level while Newton still shrinks |DW|
            let polishes = is_newton && t == 1.0 && ft <= fx + 1e-12 * fx.abs().max(1.0) && norm(&spec.gradient(&trial)) < gn;
            if ft < fx || polishes {
                let step = dist(&trial, &x);
                x = trial;
                fx = ft;
                improved = step > 1e-15;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    debug_assert_eq!(x.len(), n);
    x
}

/// Compute `m`, `a`, `M`, `d`, `mu` with default scan resolution.
pub fn compute_constants(spec: &PotentialSpec) -> Result<PotentialConstants> {
    compute_constants_with(spec, ConstantsOptions::default())
}

pub fn compute_constants_with(spec: &PotentialSpec, opts: ConstantsOptions) -> Result<PotentialConstants> {
    let n = spec.dim();
    let bx = spec.bounding_box().clone();
    let b = spec.well_b().to_vec();
    let per_axis = points_per_axis(opts.grid_points, n);

    // Scan: keep the lowest few samples as seeds, and the negative sample closest to b.
    const SEEDS: usize = 8;
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::with_capacity(SEEDS + 1);
    let mut nearest_negative: Option<(f64, Vec<f64>)> = None;
    let cell = bx.lo.iter().zip(&bx.hi).map(|(l, h)| (h - l) / (per_axis - 1) as f64).fold(0.0, f64::max);
    scan_box(&bx, per_axis, |p| {
        let w = spec.value(p);
        if w < 0.0 {
            let r = dist(p, &b);
            if nearest_negative.as_ref().is_none_or(|(best, _)| r < *best) {
                nearest_negative = Some((r, p.to_vec()));
            }
        }
        if seeds.len() < SEEDS || w < seeds.last().unwrap().0 {
            if seeds.iter().any(|(_, q)| dist(q, p) < 2.5 * cell) {
                // keep the lower of the two nearby seeds
                if let Some(slot) = seeds.iter_mut().find(|(_, q)| dist(q, p) < 2.5 * cell) {
                    if w < slot.0 {
                        *slot = (w, p.to_vec());
                    }
                }
            } else {
                seeds.push((w, p.to_vec()));
            }
            seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
            seeds.truncate(SEEDS);
        }
    });

    let (d_grid, neg_point) = nearest_negative
        .ok_or_else(|| WaveError::Assumption("no point with W < 0 found in the bounding box".into()))?;

    let mut point_a = seeds[0].1.clone();
    let mut w_a = spec.value(&point_a);
    for (_, s) in &seeds {
        let refined = local_min(spec, s);
        let w = spec.value(&refined);
        if w < w_a {
            w_a = w;
            point_a = refined;
        }
    }
    if w_a >= 0.0 {
        return Err(WaveError::Assumption("minimum of W is not negative".into()));
    }
    let m = -w_a;

    // M: maximum along the segment a -> b.
    let seg = |t: f64| -> f64 {
        let p: Vec<f64> = point_a.iter().zip(&b).map(|(a, bb)| a + t * (bb - a)).collect();
        spec.value(&p)
    };
    let samples = opts.grid_points.max(3);
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..samples {
        let v = seg(i as f64 / (samples - 1) as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    let step = 1.0 / (samples - 1) as f64;
    let lo = (best.0 as f64 - 1.0).max(0.0) * step;
    let hi = ((best.0 as f64 + 1.0) * step).min(1.0);
    let (_, refined) = golden_min(|t| -seg(t), lo, hi, 1e-12);
    let big_m = best.1.max(-refined).max(0.0);

    // d: start from the nearest negative sample, locate the first crossing along the ray
    // from b, then slide along the zero set towards b.
    let d = refine_gap(spec, &b, &neg_point).unwrap_or(d_grid).min(d_grid);

    let hb = spec.hessian(&b);
    let mu = SymmetricEigen::new(hb).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(mu > 0.0) {
        return Err(WaveError::Assumption(format!("Hessian at b is not positive definite (smallest eigenvalue {mu:.3e})")));
    }

    Ok(PotentialConstants { m, point_a, big_m, d, mu })
}

/// First point on the segment `b -> p` where `W` turns negative.
fn first_crossing(spec: &PotentialSpec, b: &[f64], p: &[f64]) -> Option<Vec<f64>> {
    let at = |t: f64| -> Vec<f64> { b.iter().zip(p).map(|(bb, pp)| bb + t * (pp - bb)).collect() };
    let steps = 400;
    let mut prev = 0.0;
    for i in 1..=steps {
        let t = i as f64 / steps as f64;
        if spec.value(&at(t)) < 0.0 {
            let root = bisect(|s| spec.value(&at(s)), prev, t, 1e-15)?;
            return Some(at(root));
        }
        prev = t;
    }
    None
}

fn refine_gap(spec: &PotentialSpec, b: &[f64], neg_point: &[f64]) -> Option<f64> {
    let mut q = first_crossing(spec, b, neg_point)?;
    let mut best = dist(&q, b);
    let popts = ProjectionOptions::default();
    for _ in 0..200 {
        let g = spec.gradient(&q);
        let gn = norm(&g);
        if gn < popts.gradient_floor {
            break;
        }
        let r: Vec<f64> = q.iter().zip(b).map(|(x, y)| x - y).collect();
        let rn = dot(&r, &g) / (gn * gn);
        let tangent: Vec<f64> = r.iter().zip(&g).map(|(ri, gi)| ri - rn * gi).collect();
        if norm(&tangent) < 1e-13 {
            break;
        }
        let mut t = 0.5;
        let mut moved = false;
        while t > 1e-6 {
            let trial: Vec<f64> = q.iter().zip(&tangent).map(|(x, s)| x - t * s).collect();
            if let Ok(p) = project_to_gamma_with(spec, &trial, popts) {
                let r = dist(&p, b);
                if r < best - 1e-15 {
                    best = r;
                    q = p;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Some(best)
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    pub tol: f64,
    pub gradient_floor: f64,
    pub max_iter: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions { tol: 1e-10, gradient_floor: 1e-8, max_iter: 100 }
    }
}

/// Move `point` onto the zero set `{W = 0}` by damped Newton steps along `DW`.
pub fn project_to_gamma(spec: &PotentialSpec, point: &[f64]) -> Result<Vec<f64>> {
    project_to_gamma_with(spec, point, ProjectionOptions::default())
}

pub fn project_to_gamma_with(spec: &PotentialSpec, point: &[f64], opts: ProjectionOptions) -> Result<Vec<f64>> {
    if point.len() != spec.dim() {
        return Err(WaveError::Contract("projection point has the wrong dimension".into()));
    }
    let mut q = point.to_vec();
    let mut w = spec.value(&q);
    if w == 0.0 || w.abs() <= opts.tol {
        return Ok(q);
    }
    let mut g = vec![0.0; q.len()];
    for _ in 0..opts.max_iter {
        spec.gradient_into(&q, &mut g);
        let g2 = dot(&g, &g);
        if g2.sqrt() < opts.gradient_floor {
            return Err(WaveError::DegenerateProjection { point: q, grad_norm: g2.sqrt() });
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = q.iter().zip(&g).map(|(x, gi)| x - t * w * gi / g2).collect();
            let wt = spec.value(&trial);
            if wt.abs() < w.abs() {
                q = trial;
                w = wt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if w.abs() <= opts.tol {
            return Ok(q);
        }
    }
    Err(WaveError::NonConvergence { what: "zero-set projection", iterations: opts.max_iter, residual: w.abs() })
}

/// Equilibria with negative potential (`DW = 0`, `W < 0`) inside the box, found by
/// multi-start Newton iteration on `DW`.
pub fn find_equilibria(spec: &PotentialSpec) -> Vec<Vec<f64>> {
    let n = spec.dim();
    let per_axis = ((20_000f64).powf(1.0 / n as f64) as usize).clamp(3, 21);
    let bx = spec.bounding_box().clone();
    let mut found: Vec<Vec<f64>> = Vec::new();
    scan_box(&bx, per_axis, |start| {
        if let Some(p) = newton_critical_point(spec, start) {
            if spec.value(&p) < 0.0 && bx.contains(&p) && !found.iter().any(|q| dist(q, &p) < 1e-6) {
                found.push(p);
            }
        }
    });
    found.sort_by(|a, b| spec.value(a).total_cmp(&spec.value(b)));
    found
}

fn newton_critical_point(spec: &PotentialSpec, start: &[f64]) -> Option<Vec<f64>> {
    let mut x = start.to_vec();
    let mut g = spec.gradient(&x);
    let mut gn = norm(&g);
    for _ in 0..100 {
        if gn < 1e-12 {
            return Some(x);
        }
        let h = spec.hessian(&x);
        let step = h.lu().solve(&DVector::from_column_slice(&g))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let gt = spec.gradient(&trial);
            let gtn = norm(&gt);
            if gtn < gn {
                x = trial;
                g = gt;
                gn = gtn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (gn < 1e-10).then_some(x)
}
