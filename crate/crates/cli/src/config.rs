//! TOML run configuration.
//!
//! ```toml
//! [potential]
//! variant = "decoupled_quartic"
//! alpha = 0.6
//! beta = 1.2
//!
//! [grid]
//! h = 0.02
//!
//! [mode]
//! c_tol = 1e-3
//! ```
//!
//! Every section except `potential` may be omitted; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavefront_core::{
    compute_bounds, default_extent, BoundingBox, Grid, MinimizeOptions, Monomial, PotentialConstants, PotentialSpec,
};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub mode: ModeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    ScalarCubic {
        alpha: f64,
    },
    DecoupledQuartic {
        alpha: f64,
        beta: f64,
    },
    UserPolynomial {
        terms: Vec<Monomial>,
        well_b: Vec<f64>,
        box_lo: Vec<f64>,
        box_hi: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    #[default]
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Defaults to `-40 / c_ref` with `c_ref` the lower end of the analytic speed bracket.
    pub x_left: Option<f64>,
    /// Defaults to `40 / Lambda(c_ref)`.
    pub x_right: Option<f64>,
    /// Uniform spacing, or the largest spacing of a geometric grid.
    #[serde(default = "GridConfig::default_h")]
    pub h: f64,
    #[serde(default)]
    pub refinement: Refinement,
    /// Smallest spacing next to 0 for `refinement = "geometric"`.
    pub h_min: Option<f64>,
    /// Growth factor of consecutive spacings for `refinement = "geometric"`.
    pub ratio: Option<f64>,
}

impl GridConfig {
    fn default_h() -> f64 {
        0.01
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { x_left: None, x_right: None, h: Self::default_h(), refinement: Refinement::Uniform, h_min: None, ratio: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub opt_tol: f64,
    pub feas_tol: f64,
    pub penalty_kappa: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = MinimizeOptions::default();
        SolverConfig {
            opt_tol: o.opt_tol,
            feas_tol: o.feas_tol,
            penalty_kappa: o.penalty_kappa,
            max_iters: o.max_iters,
            restarts: o.restarts,
            seed: o.seed,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> MinimizeOptions {
        MinimizeOptions {
            opt_tol: self.opt_tol,
            feas_tol: self.feas_tol,
            penalty_kappa: self.penalty_kappa,
            max_iters: self.max_iters,
            restarts: self.restarts,
            seed: self.seed,
            ..MinimizeOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeConfig {
    /// Single speed for `gamma`, `verify` and (optionally) `bounds`.
    pub c: Option<f64>,
    /// Increasing speeds for `gamma`.
    pub c_list: Option<Vec<f64>>,
    /// Bisection width for `speed`.
    pub c_tol: f64,
    /// `gamma` over a list warm-starts each speed from the previous minimizer.
    pub warm_start: bool,
    /// Profile CSV checked by `verify`; relative paths resolve against the config file.
    pub profile: Option<PathBuf>,
}

impl Default for ModeConfig {
    fn default() -> Self {
        ModeConfig { c: None, c_list: None, c_tol: 1e-3, warm_start: true, profile: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub report: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("out"), report: "report.json".into() }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.into(), message: message.into() }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be a positive finite number, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(p), Some(dir)) = (cfg.mode.profile.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Range checks that do not need the potential's constants.
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.potential {
            PotentialConfig::ScalarCubic { alpha } => positive("potential.alpha", *alpha)?,
            PotentialConfig::DecoupledQuartic { alpha, beta } => {
                positive("potential.alpha", *alpha)?;
                positive("potential.beta", *beta)?;
            }
            PotentialConfig::UserPolynomial { terms, well_b, box_lo, box_hi } => {
                if terms.is_empty() {
                    return Err(invalid("potential.terms", "needs at least one term"));
                }
                if box_lo.len() != well_b.len() || box_hi.len() != well_b.len() {
                    return Err(invalid("potential.box_lo", "box corners must have the dimension of well_b"));
                }
            }
        }
        let g = &self.grid;
        positive("grid.h", g.h)?;
        if let Some(x) = g.x_left {
            if !(x < 0.0 && x.is_finite()) {
                return Err(invalid("grid.x_left", format!("must be negative, got {x}")));
            }
        }
        if let Some(x) = g.x_right {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid("grid.x_right", format!("must be positive, got {x}")));
            }
        }
        if g.refinement == Refinement::Geometric {
            let h_min = g.h_min.ok_or_else(|| invalid("grid.h_min", "required for geometric refinement"))?;
            positive("grid.h_min", h_min)?;
            if h_min > g.h {
                return Err(invalid("grid.h_min", "must not exceed grid.h"));
            }
            let ratio = g.ratio.ok_or_else(|| invalid("grid.ratio", "required for geometric refinement"))?;
            if !(ratio > 1.0 && ratio.is_finite()) {
                return Err(invalid("grid.ratio", format!("must exceed 1, got {ratio}")));
            }
        }
        let s = &self.solver;
        positive("solver.opt_tol", s.opt_tol)?;
        positive("solver.feas_tol", s.feas_tol)?;
        if !(s.penalty_kappa >= 0.0 && s.penalty_kappa.is_finite()) {
            return Err(invalid("solver.penalty_kappa", format!("must be nonnegative, got {}", s.penalty_kappa)));
        }
        if s.max_iters == 0 {
            return Err(invalid("solver.max_iters", "must be positive"));
        }
        let m = &self.mode;
        if let Some(c) = m.c {
            positive("mode.c", c)?;
        }
        if let Some(list) = &m.c_list {
            if list.is_empty() {
                return Err(invalid("mode.c_list", "must not be empty"));
            }
            for (i, c) in list.iter().enumerate() {
                positive(&format!("mode.c_list[{i}]"), *c)?;
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("mode.c_list", "must be strictly increasing"));
            }
        }
        positive("mode.c_tol", m.c_tol)?;
        if self.output.report.is_empty() {
            return Err(invalid("output.report", "must not be empty"));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<PotentialSpec, CliError> {
        let spec = match &self.potential {
            PotentialConfig::ScalarCubic { alpha } => PotentialSpec::scalar_cubic(*alpha),
            PotentialConfig::DecoupledQuartic { alpha, beta } => PotentialSpec::decoupled_quartic(*alpha, *beta),
            PotentialConfig::UserPolynomial { terms, well_b, box_lo, box_hi } => PotentialSpec::user_polynomial(
                terms.clone(),
                well_b.clone(),
                BoundingBox { lo: box_lo.clone(), hi: box_hi.clone() },
            ),
        };
        spec.map_err(CliError::Solver)
    }

    /// The grid, filling unset ends from the default truncation.
    pub fn grid(&self, spec: &PotentialSpec, consts: &PotentialConstants) -> Result<Grid, CliError> {
        let c_ref = compute_bounds(spec, consts, 1.0).bracket_lo;
        let (dl, dr) = default_extent(consts, c_ref);
        let g = &self.grid;
        let (xl, xr) = (g.x_left.unwrap_or(dl), g.x_right.unwrap_or(dr));
        let grid = match g.refinement {
            Refinement::Uniform => Grid::uniform(xl, xr, g.h),
            Refinement::Geometric => Grid::geometric(xl, xr, g.h, g.h_min.unwrap_or(g.h), g.ratio.unwrap_or(1.1)),
        };
        grid.map_err(|e| invalid("grid", e.to_string()))
    }
}
