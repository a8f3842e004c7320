//! Fixtures shared by the benchmarks.

use wavefront_core::{compute_bounds, compute_constants, default_extent, Grid, PotentialConstants, PotentialSpec, Profile};

pub struct Fixture {
    pub spec: PotentialSpec,
    pub consts: PotentialConstants,
    pub grid: Grid,
}

impl Fixture {
    /// A builtin potential on its default truncation with uniform spacing `h`.
    pub fn new(spec: PotentialSpec, h: f64) -> Self {
        let consts = compute_constants(&spec).expect("builtin constants");
        let c_ref = compute_bounds(&spec, &consts, 1.0).bracket_lo;
        let (xl, xr) = default_extent(&consts, c_ref);
        let grid = Grid::uniform(xl, xr, h).expect("valid grid");
        Fixture { spec, consts, grid }
    }

    /// `tanh(x + x0)` in every component, pinned to the well at the right end.
    pub fn tanh_profile(&self, x0: f64) -> Profile {
        let dim = self.spec.dim();
        let b = self.spec.well_b().to_vec();
        let mut values: Vec<f64> = self.grid.nodes().iter().flat_map(|x| vec![(x + x0).tanh(); dim]).collect();
        let n = values.len();
        values[n - dim..].copy_from_slice(&b);
        Profile::new(self.grid.clone(), dim, values, b).expect("profile matches grid")
    }
}
