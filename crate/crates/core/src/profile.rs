//! Truncated grids and discrete, piecewise-linear wave profiles.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::numeric::{bisect, norm};
use crate::potential::{project_to_gamma, PotentialConstants, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingPolicy {
    Uniform,
    GeometricRefinedNearZero,
}

/// Strictly increasing nodes on `[x_left, x_right]` with `0` as an exact node.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    zero: usize,
    policy: SpacingPolicy,
}

impl Grid {
    /// Uniform spacing `h`; the ends are rounded outward to multiples of `h`.
    pub fn uniform(x_left: f64, x_right: f64, h: f64) -> Result<Self> {
        if !(x_left < 0.0 && x_right > 0.0 && h > 0.0) {
            return Err(WaveError::Contract(format!(
                "grid needs x_left < 0 < x_right and h > 0 (got {x_left}, {x_right}, {h})"
            )));
        }
        let nl = (-x_left / h - 1e-9).ceil() as i64;
        let nr = (x_right / h - 1e-9).ceil() as i64;
        let nodes: Vec<f64> = (-nl..=nr).map(|i| i as f64 * h).collect();
        Self::from_nodes(nodes, SpacingPolicy::Uniform)
    }

    /// Spacing `h_min` at the origin growing geometrically by `ratio` until it reaches `h_max`.
    pub fn geometric(x_left: f64, x_right: f64, h_max: f64, h_min: f64, ratio: f64) -> Result<Self> {
        if !(x_left < 0.0 && x_right > 0.0 && h_min > 0.0 && h_max >= h_min && ratio >= 1.0) {
            return Err(WaveError::Contract("invalid geometric grid parameters".into()));
        }
        let side = |extent: f64| -> Vec<f64> {
            let mut pts = Vec::new();
            let mut x = 0.0;
            let mut h = h_min;
            while x < extent {
                x += h;
                pts.push(x);
                h = (h * ratio).min(h_max);
            }
            pts
        };
        let mut nodes: Vec<f64> = side(-x_left).into_iter().rev().map(|x| -x).collect();
        nodes.push(0.0);
        nodes.extend(side(x_right));
        Self::from_nodes(nodes, SpacingPolicy::GeometricRefinedNearZero)
    }

    pub fn from_nodes(nodes: Vec<f64>, policy: SpacingPolicy) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(WaveError::Contract("grid needs at least 3 nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WaveError::Contract("grid nodes must be strictly increasing".into()));
        }
        let zero = nodes
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| WaveError::Contract("grid must contain 0 as an exact node".into()))?;
        if zero == 0 || zero == nodes.len() - 1 {
            return Err(WaveError::Contract("0 must be an interior node".into()));
        }
        Ok(Grid { nodes, zero, policy })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node at `x = 0`.
    pub fn zero_index(&self) -> usize {
        self.zero
    }

    pub fn x_left(&self) -> f64 {
        self.nodes[0]
    }

    pub fn x_right(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn policy(&self) -> SpacingPolicy {
        self.policy
    }

    /// Largest cell width.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index `i` with `nodes[i] <= x < nodes[i + 1]`, clamped to valid cells.
    pub fn cell_of(&self, x: f64) -> usize {
        match self.nodes.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.nodes.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.nodes.len() - 2),
        }
    }
}

/// Default truncation for a run near speed `c_ref`: left tail `40 / c_ref`, right tail `40 / Lambda`.
pub fn default_extent(consts: &PotentialConstants, c_ref: f64) -> (f64, f64) {
    (-40.0 / c_ref, 40.0 / consts.decay_rate(c_ref))
}

/// A vector-valued profile sampled at the grid nodes (row-major, `dim` values per node).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
    well_b: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>, well_b: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != dim * grid.len() || well_b.len() != dim {
            return Err(WaveError::Contract(format!(
                "profile of dimension {dim} needs {} values, got {}",
                dim * grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WaveError::Contract("profile contains non-finite values".into()));
        }
        Ok(Profile { grid, dim, values, well_b })
    }

    /// Sample `f` at every node.
    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(grid: Grid, well_b: Vec<f64>, f: F) -> Result<Self> {
        let dim = well_b.len();
        let mut values = Vec::with_capacity(dim * grid.len());
        for &x in grid.nodes() {
            let v = f(x);
            if v.len() != dim {
                return Err(WaveError::Contract("sampled value has the wrong dimension".into()));
            }
            values.extend(v);
        }
        Self::new(grid, dim, values, well_b)
    }

    pub fn constant(grid: Grid, value: &[f64], well_b: Vec<f64>) -> Result<Self> {
        let v = value.to_vec();
        Self::from_fn(grid, well_b, move |_| v.clone())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn well_b(&self) -> &[f64] {
        &self.well_b
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// The last node holds `b` exactly.
    pub fn is_anchored(&self) -> bool {
        self.at(self.len() - 1) == self.well_b.as_slice()
    }

    pub fn require_anchored(&self) -> Result<()> {
        if self.is_anchored() {
            Ok(())
        } else {
            Err(WaveError::Contract("profile's right boundary value is not the well b".into()))
        }
    }

    /// Piecewise-linear value at `x`; constant extension beyond the grid ends.
    pub fn interpolate(&self, x: f64) -> Vec<f64> {
        let nodes = self.grid.nodes();
        if x <= nodes[0] {
            return self.at(0).to_vec();
        }
        if x >= *nodes.last().unwrap() {
            return self.at(self.len() - 1).to_vec();
        }
        let i = self.grid.cell_of(x);
        let t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.at(i).iter().zip(self.at(i + 1)).map(|(a, b)| a + t * (b - a)).collect()
    }

    /// Re-sample `x -> u(x + shift)` onto `grid`.
    pub fn resample(&self, grid: &Grid, shift: f64) -> Profile {
        let mut values = Vec::with_capacity(self.dim * grid.len());
        for &x in grid.nodes() {
            values.extend(self.interpolate(x + shift));
        }
        let n = grid.len();
        values[(n - 1) * self.dim..].copy_from_slice(&self.well_b);
        Profile { grid: grid.clone(), dim: self.dim, values, well_b: self.well_b.clone() }
    }

    /// Pointwise potential values.
    pub fn potential_values(&self, spec: &PotentialSpec) -> Vec<f64> {
        (0..self.len()).map(|i| spec.value(self.at(i))).collect()
    }

    /// Largest violation `max(0, -W(u))` over nodes with `x > 0`.
    pub fn feasibility_violation(&self, spec: &PotentialSpec) -> f64 {
        (self.grid.zero_index() + 1..self.len()).map(|i| (-spec.value(self.at(i))).max(0.0)).fold(0.0, f64::max)
    }
}

/// Nodal first derivatives plus the one-sided derivatives at `x = 0`.
#[derive(Debug, Clone)]
pub struct Derivatives {
    /// Row-major, `dim` per node. Centered in the interior, second-order one-sided at the ends.
    pub nodal: Vec<f64>,
    /// `u'(0-)`, second-order backward difference.
    pub left_of_zero: Vec<f64>,
    /// `u'(0+)`, second-order forward difference.
    pub right_of_zero: Vec<f64>,
}

impl Derivatives {
    pub fn at(&self, i: usize, dim: usize) -> &[f64] {
        &self.nodal[i * dim..(i + 1) * dim]
    }
}

/// Weights of the three-point first derivative at `x[i]` using nodes `i - 1, i, i + 1`.
pub(crate) fn centered_weights(x: &[f64], i: usize) -> [f64; 3] {
    let h1 = x[i] - x[i - 1];
    let h2 = x[i + 1] - x[i];
    [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))]
}

/// Weights of the forward three-point derivative at `x[i]` using `i, i + 1, i + 2`.
pub(crate) fn forward_weights(x: &[f64], i: usize) -> [f64; 3] {
    let h1 = x[i + 1] - x[i];
    let h2 = x[i + 2] - x[i + 1];
    [-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))]
}

/// Weights of the backward three-point derivative at `x[i]` using `i, i - 1, i - 2`.
pub(crate) fn backward_weights(x: &[f64], i: usize) -> [f64; 3] {
    let h1 = x[i] - x[i - 1];
    let h2 = x[i - 1] - x[i - 2];
    [(2.0 * h1 + h2) / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), h1 / (h2 * (h1 + h2))]
}

/// Second derivative weights at `x[i]` using `i - 1, i, i + 1`.
pub(crate) fn second_weights(x: &[f64], i: usize) -> [f64; 3] {
    let h1 = x[i] - x[i - 1];
    let h2 = x[i + 1] - x[i];
    [2.0 / (h1 * (h1 + h2)), -2.0 / (h1 * h2), 2.0 / (h2 * (h1 + h2))]
}

/// Discrete first derivative of a profile.
pub fn derivative(profile: &Profile) -> Derivatives {
    let x = profile.grid().nodes();
    let n = x.len();
    let dim = profile.dim();
    let mut nodal = vec![0.0; n * dim];
    let combine = |out: &mut [f64], idx: [usize; 3], w: [f64; 3]| {
        for k in 0..dim {
            out[k] = w[0] * profile.at(idx[0])[k] + w[1] * profile.at(idx[1])[k] + w[2] * profile.at(idx[2])[k];
        }
    };
    combine(&mut nodal[0..dim], [0, 1, 2], forward_weights(x, 0));
    for i in 1..n - 1 {
        combine(&mut nodal[i * dim..(i + 1) * dim], [i - 1, i, i + 1], centered_weights(x, i));
    }
    combine(&mut nodal[(n - 1) * dim..], [n - 1, n - 2, n - 3], backward_weights(x, n - 1));

    let z = profile.grid().zero_index();
    let mut left_of_zero = vec![0.0; dim];
    let mut right_of_zero = vec![0.0; dim];
    if z >= 2 {
        combine(&mut left_of_zero, [z, z - 1, z - 2], backward_weights(x, z));
    } else {
        for k in 0..dim {
            left_of_zero[k] = (profile.at(z)[k] - profile.at(z - 1)[k]) / (x[z] - x[z - 1]);
        }
    }
    if z + 2 < n {
        combine(&mut right_of_zero, [z, z + 1, z + 2], forward_weights(x, z));
    } else {
        for k in 0..dim {
            right_of_zero[k] = (profile.at(z + 1)[k] - profile.at(z)[k]) / (x[z + 1] - x[z]);
        }
    }
    Derivatives { nodal, left_of_zero, right_of_zero }
}

/// Largest `theta` in `(0, 1)` with `W(a + theta (b - a)) = 0` and `W >= 0` on `[theta, 1]`.
fn segment_crossing(spec: &PotentialSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    let at = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect() };
    let steps = 4000;
    let mut upper = 1.0;
    for i in (0..steps).rev() {
        let t = i as f64 / steps as f64;
        if spec.value(&at(t)) < 0.0 {
            return bisect(|s| spec.value(&at(s)), t, upper, 1e-15).ok_or_else(|| {
                WaveError::Assumption("segment from a to b does not cross the zero set".into())
            });
        }
        upper = t;
    }
    Err(WaveError::Assumption("W stays nonnegative on the segment from a to b".into()))
}

/// The piecewise-linear starting profile: `a` on the left, linear ramp to `b`, `b` on the right,
/// translated so that its last crossing of the zero set sits at node 0.
pub fn initial_profile(spec: &PotentialSpec, consts: &PotentialConstants, grid: &Grid) -> Result<Profile> {
    let a = consts.point_a.clone();
    let b = spec.well_b().to_vec();
    let x0 = segment_crossing(spec, &a, &b)?;
    let ramp = {
        let (a, b) = (a.clone(), b.clone());
        move |x: f64| -> Vec<f64> {
            let s = (x + x0).clamp(0.0, 1.0);
            a.iter().zip(&b).map(|(ai, bi)| ai + s * (bi - ai)).collect()
        }
    };
    let mut profile = Profile::from_fn(grid.clone(), b.clone(), ramp)?;
    let z = grid.zero_index();
    let dim = profile.dim();
    let on_gamma = project_to_gamma(spec, profile.at(z))?;
    profile.values_mut()[z * dim..(z + 1) * dim].copy_from_slice(&on_gamma);
    let n = profile.len();
    profile.values_mut()[(n - 1) * dim..].copy_from_slice(&b);
    Ok(profile)
}

/// Shift the profile so its last crossing of the zero set lands at `x = 0`, then project node 0.
pub fn translate_to_gamma(spec: &PotentialSpec, profile: &Profile) -> Result<Profile> {
    let tol = 1e-10;
    let z = profile.grid().zero_index();
    let w = profile.potential_values(spec);
    if w[z].abs() <= tol && w[z + 1..].iter().all(|&v| v >= -tol) && w[..z].iter().any(|&v| v < 0.0) {
        return Ok(profile.clone());
    }
    let last_negative = w.iter().rposition(|&v| v < -tol).ok_or(WaveError::NoCrossing)?;
    if last_negative + 1 >= w.len() || !w[last_negative + 1..].iter().any(|&v| v >= 0.0) {
        return Err(WaveError::NoCrossing);
    }
    let x = profile.grid().nodes();
    let (xl, xr) = (x[last_negative], x[last_negative + 1]);
    // the right node may sit in [-tol, 0): then it is the crossing itself
    let shift = bisect(|s| spec.value(&profile.interpolate(s)), xl, xr, 1e-15).unwrap_or(xr);
    let mut out = profile.resample(profile.grid(), shift);
    let dim = out.dim();
    let on_gamma = project_to_gamma(spec, out.at(z))?;
    out.values_mut()[z * dim..(z + 1) * dim].copy_from_slice(&on_gamma);
    Ok(out)
}

/// Write `x,u1..un,W,du_norm`; values use shortest round-trip decimal formatting.
pub fn write_profile_csv<W: Write>(spec: &PotentialSpec, profile: &Profile, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let dim = profile.dim();
    let mut header = vec!["x".to_string()];
    header.extend((1..=dim).map(|k| format!("u{k}")));
    header.push("W".into());
    header.push("du_norm".into());
    wtr.write_record(&header).map_err(io_err)?;
    let der = derivative(profile);
    for (i, &x) in profile.grid().nodes().iter().enumerate() {
        let mut rec = vec![x.to_string()];
        rec.extend(profile.at(i).iter().map(|v| v.to_string()));
        rec.push(spec.value(profile.at(i)).to_string());
        rec.push(norm(der.at(i, dim)).to_string());
        wtr.write_record(&rec).map_err(io_err)?;
    }
    wtr.flush().map_err(|e| WaveError::Io(e.to_string()))?;
    Ok(())
}

/// Read a profile CSV written by [`write_profile_csv`]; `W` and `du_norm` are ignored.
pub fn read_profile_csv<R: Read>(input: R, dim: usize, well_b: Vec<f64>) -> Result<Profile> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(io_err)?.clone();
    let mut expected = vec!["x".to_string()];
    expected.extend((1..=dim).map(|k| format!("u{k}")));
    expected.push("W".into());
    expected.push("du_norm".into());
    for (i, name) in expected.iter().enumerate() {
        match headers.get(i) {
            Some(h) if h == name => {}
            Some(h) => return Err(WaveError::Io(format!("column {} is '{h}', expected '{name}'", i + 1))),
            None => return Err(WaveError::Io(format!("missing column '{name}'"))),
        }
    }
    if headers.len() != expected.len() {
        return Err(WaveError::Io(format!("expected {} columns, found {}", expected.len(), headers.len())));
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let parse = |col: usize| -> Result<f64> {
            rec.get(col)
                .ok_or_else(|| WaveError::Io(format!("row {}: missing column '{}'", row + 2, expected[col])))?
                .trim()
                .parse::<f64>()
                .map_err(|e| WaveError::Io(format!("row {}: column '{}': {e}", row + 2, expected[col])))
        };
        nodes.push(parse(0)?);
        for k in 0..dim {
            values.push(parse(1 + k)?);
        }
    }
    let grid = Grid::from_nodes(nodes, SpacingPolicy::Uniform)?;
    let policy = {
        let x = grid.nodes();
        let h0 = x[1] - x[0];
        if x.windows(2).all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-9 * h0.max(1.0)) {
            SpacingPolicy::Uniform
        } else {
            SpacingPolicy::GeometricRefinedNearZero
        }
    };
    let grid = Grid { policy, ..grid };
    Profile::new(grid, dim, values, well_b)
}

fn io_err(e: csv::Error) -> WaveError {
    WaveError::Io(e.to_string())
}
