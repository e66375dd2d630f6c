//! Run configuration.
//!
//! Settings come from an optional flat TOML file whose keys match the field
//! names of [`Settings`]. Command-line flags override file values, which
//! override the built-in defaults (`alpha = 0.05`, `seed = 0`,
//! `replicates = 1000`, uniform weights).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use rsm_core::model::{build_design, ccd_design, n_terms, CoefficientMatrix, Design};
use rsm_core::montecarlo::SimulationConfig;
use rsm_core::scalarize::WeightVector;
use rsm_core::solver::SphereRegion;
use rsm_core::Matrix;

use crate::error::{CliError, CliResult, Context};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPLICATES: usize = 1000;

/// Every recognised setting; everything is optional until a command asks for it.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub weights: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    /// Number of factors of the simulated central composite design.
    pub factors: Option<usize>,
    pub axial: Option<f64>,
    pub centers: Option<usize>,
    /// Vertical copies of the base design; the sample size is `copies × runs`.
    pub design_copies: Option<usize>,
    /// True coefficients, column-stacked `vec(B)`.
    pub truth: Option<Vec<f64>>,
    /// Error covariance, row-major `r × r`.
    pub sigma: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($field:ident),*) => {
        Settings { $($field: $hi.$field.or($lo.$field)),* }
    };
}

impl Settings {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    /// `self` wins wherever it has a value.
    pub fn over(self, base: Settings) -> Settings {
        overlay!(
            self,
            base,
            weights,
            radius,
            alpha,
            seed,
            replicates,
            input_path,
            output_path,
            factors,
            axial,
            centers,
            design_copies,
            truth,
            sigma
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(DEFAULT_ALPHA)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn replicates(&self) -> usize {
        self.replicates.unwrap_or(DEFAULT_REPLICATES)
    }

    pub fn check_alpha(&self) -> CliResult<f64> {
        let a = self.alpha();
        if !(a > 0.0 && a < 1.0) {
            return Err(CliError::input(format!(
                "alpha must lie in (0, 1), got {a}"
            )));
        }
        Ok(a)
    }

    /// Explicit weights, or equal weights over `responses`.
    pub fn weight_vector(&self, responses: usize) -> CliResult<WeightVector> {
        match &self.weights {
            Some(w) => {
                if w.len() != responses {
                    return Err(CliError::input(format!(
                        "{} weights given for {responses} responses",
                        w.len()
                    )));
                }
                WeightVector::from_slice(w).context("weights")
            }
            None => WeightVector::uniform(responses).context("weights"),
        }
    }

    pub fn region(&self) -> CliResult<SphereRegion> {
        let c = self.radius.ok_or_else(|| {
            CliError::input("a radius is required (--radius or `radius` in the config file)")
        })?;
        SphereRegion::new(c).context("radius")
    }

    pub fn input(&self) -> CliResult<&Path> {
        self.input_path
            .as_deref()
            .ok_or_else(|| CliError::input("an input CSV is required (--input or `input_path`)"))
    }

    fn require<T: Copy>(value: Option<T>, key: &str) -> CliResult<T> {
        value.ok_or_else(|| CliError::input(format!("simulation config needs `{key}`")))
    }

    /// The central composite design replicated `design_copies` times.
    pub fn simulation_design(&self) -> CliResult<Design> {
        let n = Self::require(self.factors, "factors")?;
        let axial = self.axial.unwrap_or((n as f64).sqrt());
        let centers = self.centers.unwrap_or(1);
        let copies = self.design_copies.unwrap_or(1);
        let base =
            build_design(&ccd_design(n, axial, centers).context("design")?).context("design")?;
        base.replicate(copies).context("design")
    }

    pub fn simulation_config(&self) -> CliResult<SimulationConfig> {
        let design = self.simulation_design()?;
        let p = n_terms(design.factors());
        let truth = self
            .truth
            .as_ref()
            .ok_or_else(|| CliError::input("simulation config needs `truth`"))?;
        if truth.is_empty() || truth.len() % p != 0 {
            return Err(CliError::input(format!(
                "`truth` must hold p·r values with p = {p}, found {}",
                truth.len()
            )));
        }
        let r = truth.len() / p;
        let truth =
            CoefficientMatrix::new(Matrix::from_column_slice(p, r, truth)).context("truth")?;
        let sigma = self
            .sigma
            .as_ref()
            .ok_or_else(|| CliError::input("simulation config needs `sigma`"))?;
        if sigma.len() != r * r {
            return Err(CliError::input(format!(
                "`sigma` must hold r·r = {} values, found {}",
                r * r,
                sigma.len()
            )));
        }
        let replicates = self.replicates();
        if replicates == 0 {
            return Err(CliError::input("replicates must be at least 1"));
        }
        Ok(SimulationConfig {
            truth,
            sigma: Matrix::from_row_slice(r, r, sigma),
            design,
            weights: self.weight_vector(r)?,
            region: self.region()?,
            replicates,
            seed: self.seed(),
            alpha: self.check_alpha()?,
        })
    }
}

/// Parses `w1,…,wr`.
pub fn parse_weights(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid weight '{t}'"))
        })
        .collect()
}
