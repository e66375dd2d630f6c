//! Simulated experiments from a known truth, used to check the asymptotic law
//! of the optimum.
//!
//! Each replicate draws `Y = XB + E` with rows of `E` distributed `𝒩ᵣ(0, Σ)`,
//! refits, re-scalarizes and re-solves. Replicate `i` owns its own random
//! stream (ChaCha8 keyed by the root seed, stream number `i`), so results do
//! not depend on how replicates are scheduled. Standard normals come from the
//! ziggurat sampler of `rand_distr::StandardNormal`; they are drawn row by row,
//! `r` per run, and mapped through the lower Cholesky factor of `Σ`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::asymptotics::{
    coefficient_covariance, critical_point_covariance, CoefficientCovariance,
};
use crate::linalg::{all_finite, asymmetry, symmetrize};
use crate::model::{fit, CoefficientMatrix, Design};
use crate::scalarize::WeightVector;
use crate::sensitivity::optimum_jacobian;
use crate::solver::{KktPoint, SphereRegion};
use crate::special::{chi_squared_quantile, normal_quantile};
// Unused whenever std is linked; its inherent float methods take precedence.
use crate::{Error, Matrix, Result, Vector};
#[allow(unused_imports)]
use num_traits::Float;

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.01;
/// Replicates needed before [`empirical_vs_asymptotic`] reports anything.
pub const MIN_COMPARISON_REPLICATES: usize = 100;

/// Everything that defines a simulation study.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub truth: CoefficientMatrix,
    pub sigma: Matrix,
    pub design: Design,
    pub weights: WeightVector,
    pub region: SphereRegion,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
}

fn lower_cholesky(sigma: &Matrix) -> Result<Matrix> {
    if !sigma.is_square() || sigma.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "error covariance must be square and non-empty",
        ));
    }
    if !all_finite(sigma.iter()) {
        return Err(Error::NonFinite("error covariance"));
    }
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    if asymmetry(sigma) > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite(
            "error covariance is not symmetric",
        ));
    }
    sigma
        .clone()
        .cholesky()
        .map(|c| c.unpack())
        .ok_or(Error::NotPositiveDefinite("error covariance"))
}

/// `runs × r` matrix whose rows are independent `𝒩ᵣ(0, Σ)` draws.
pub fn sample_errors<R: RngCore + ?Sized>(
    sigma: &Matrix,
    runs: usize,
    rng: &mut R,
) -> Result<Matrix> {
    let lower = lower_cholesky(sigma)?;
    Ok(sample_with_factor(&lower, runs, rng))
}

fn sample_with_factor<R: RngCore + ?Sized>(lower: &Matrix, runs: usize, rng: &mut R) -> Matrix {
    let r = lower.nrows();
    let mut z = Matrix::zeros(runs, r);
    for i in 0..runs {
        for k in 0..r {
            z[(i, k)] = StandardNormal.sample(rng);
        }
    }
    z * lower.transpose()
}

/// The random stream owned by replicate `index`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Why a replicate produced no usable optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub index: usize,
    pub error: Error,
}

/// Result of one simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateOutcome {
    Success {
        x_star: Vector,
        /// `√(Ξ̂ᵢᵢ/N)` from the replicate's own `B̂` and `Σ̂`.
        plugin_sd: Vector,
    },
    Failure(Error),
}

/// A validated configuration plus everything computed once at the truth.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub config: SimulationConfig,
    pub truth_point: KktPoint,
    /// `Ξ` at the true `B` and `Σ`.
    pub xi_reference: Matrix,
    lower: Matrix,
    mean_response: Matrix,
}

impl SimulationPlan {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        if config.replicates == 0 {
            return Err(Error::InvalidArgument("at least one replicate is required"));
        }
        if !(config.alpha > 0.0 && config.alpha < 1.0) {
            return Err(Error::InvalidAlpha(config.alpha));
        }
        let r = config.truth.responses();
        if config.sigma.shape() != (r, r) {
            return Err(Error::DimensionMismatch {
                what: "error covariance",
                expected: r,
                found: config.sigma.nrows(),
            });
        }
        if config.weights.len() != r {
            return Err(Error::DimensionMismatch {
                what: "weights",
                expected: r,
                found: config.weights.len(),
            });
        }
        if config.design.factors() != config.truth.factors() {
            return Err(Error::DimensionMismatch {
                what: "design factors",
                expected: config.truth.factors(),
                found: config.design.factors(),
            });
        }
        let lower = lower_cholesky(&config.sigma)?;

        let (truth_point, jac) = optimum_jacobian(&config.truth, &config.weights, &config.region)
            .map_err(|e| Error::TruthDegenerate(Box::new(e)))?;
        let runs = config.design.runs();
        let theta =
            CoefficientCovariance::from_parts(&config.sigma, config.design.xtx_inv(), runs)?;
        let xi_reference = critical_point_covariance(&jac, &theta)?.xi;
        let mean_response = config.design.matrix() * config.truth.matrix();
        Ok(Self {
            config,
            truth_point,
            xi_reference,
            lower,
            mean_response,
        })
    }

    pub fn runs(&self) -> usize {
        self.config.design.runs()
    }

    /// Simulates replicate `index`. Pure in `(config, index)`.
    pub fn replicate(&self, index: usize) -> ReplicateOutcome {
        let mut rng = replicate_rng(self.config.seed, index as u64);
        let noise = sample_with_factor(&self.lower, self.runs(), &mut rng);
        let y = &self.mean_response + noise;
        match self.refit(&y) {
            Ok((x_star, plugin_sd)) => ReplicateOutcome::Success { x_star, plugin_sd },
            Err(e) => ReplicateOutcome::Failure(e),
        }
    }

    fn refit(&self, y: &Matrix) -> Result<(Vector, Vector)> {
        let c = &self.config;
        let fitted = fit(&c.design, y)?;
        let (point, jac) = optimum_jacobian(&fitted.coefficients, &c.weights, &c.region)?;
        let theta = coefficient_covariance(&fitted, fitted.runs)?;
        let report = critical_point_covariance(&jac, &theta)?;
        let sd = report.cov_xstar.diagonal().map(|v| v.max(0.0).sqrt());
        Ok((point.x_star, sd))
    }

    /// Aggregates outcomes listed in replicate order.
    pub fn summarize(&self, outcomes: Vec<ReplicateOutcome>) -> Result<SimulationResult> {
        if outcomes.len() != self.config.replicates {
            return Err(Error::DimensionMismatch {
                what: "replicate outcomes",
                expected: self.config.replicates,
                found: outcomes.len(),
            });
        }
        let n = self.truth_point.x_star.len();
        let mut rows: Vec<Vector> = Vec::new();
        let mut sds: Vec<Vector> = Vec::new();
        let mut failures = Vec::new();
        for (index, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                ReplicateOutcome::Success { x_star, plugin_sd } => {
                    rows.push(x_star);
                    sds.push(plugin_sd);
                }
                ReplicateOutcome::Failure(error) => {
                    failures.push(ReplicateFailure { index, error })
                }
            }
        }
        let samples = Matrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let plugin_sd = Matrix::from_fn(sds.len(), n, |i, j| sds[i][j]);
        let runs = self.runs();
        let x_true = &self.truth_point.x_star;

        let empirical_cov =
            (samples.nrows() >= 2).then(|| scaled_deviation_cov(&samples, x_true, runs));
        let z = normal_quantile(1.0 - 0.5 * self.config.alpha)?;
        let coverage = (samples.nrows() >= 1).then(|| {
            let half = self
                .xi_reference
                .diagonal()
                .map(|v| z * (v.max(0.0) / runs as f64).sqrt());
            coverage_rate(&samples, x_true, |_, j| half[j])
        });
        let plugin_coverage = (samples.nrows() >= 1)
            .then(|| coverage_rate(&samples, x_true, |i, j| z * plugin_sd[(i, j)]));
        let mardia = mardia(&samples);

        Ok(SimulationResult {
            samples,
            plugin_sd,
            failures,
            replicates: self.config.replicates,
            runs,
            alpha: self.config.alpha,
            x_star_truth: x_true.clone(),
            lambda_truth: self.truth_point.lambda_star,
            active_truth: self.truth_point.active,
            xi_reference: self.xi_reference.clone(),
            empirical_cov,
            coverage,
            plugin_coverage,
            mardia,
        })
    }
}

/// Runs every replicate in order on the current thread.
pub fn run_simulation(config: SimulationConfig) -> Result<SimulationResult> {
    let plan = SimulationPlan::new(config)?;
    let outcomes = (0..plan.config.replicates)
        .map(|i| plan.replicate(i))
        .collect();
    plan.summarize(outcomes)
}

/// `N/m Σ (x̂ − x*)(x̂ − x*)'` over the `m` sample rows.
fn scaled_deviation_cov(samples: &Matrix, center: &Vector, runs: usize) -> Matrix {
    let n = samples.ncols();
    let m = samples.nrows();
    let mut acc = Matrix::zeros(n, n);
    for i in 0..m {
        let d = samples.row(i).transpose() - center;
        acc += &d * d.transpose();
    }
    symmetrize(&(acc * (runs as f64 / m as f64)))
}

fn coverage_rate(
    samples: &Matrix,
    center: &Vector,
    half_width: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let m = samples.nrows();
    (0..samples.ncols())
        .map(|j| {
            let hits = (0..m)
                .filter(|&i| (samples[(i, j)] - center[j]).abs() <= half_width(i, j))
                .count();
            hits as f64 / m as f64
        })
        .collect()
}

/// Output of a simulation study.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// One row per successful replicate, in replicate order.
    pub samples: Matrix,
    /// Plug-in standard errors, aligned with `samples`.
    pub plugin_sd: Matrix,
    pub failures: Vec<ReplicateFailure>,
    pub replicates: usize,
    pub runs: usize,
    pub alpha: f64,
    pub x_star_truth: Vector,
    pub lambda_truth: f64,
    pub active_truth: bool,
    pub xi_reference: Matrix,
    /// Covariance of `√N(x̂* − x*(B))`; needs two successes.
    pub empirical_cov: Option<Matrix>,
    /// Fraction of intervals `x̂*ᵢ ± z√(Ξᵢᵢ/N)`, with `Ξ` at the truth, that
    /// contain `x*ᵢ(B)`.
    pub coverage: Option<Vec<f64>>,
    /// Same with each replicate's own plug-in standard errors.
    pub plugin_coverage: Option<Vec<f64>>,
    pub mardia: Option<Mardia>,
}

impl SimulationResult {
    pub fn successes(&self) -> usize {
        self.samples.nrows()
    }

    pub fn failure_rate(&self) -> f64 {
        self.failures.len() as f64 / self.replicates as f64
    }

    /// Fails when more than 1% of replicates failed.
    pub fn check_failure_rate(&self) -> Result<()> {
        if self.failure_rate() > MAX_FAILURE_RATE {
            return Err(Error::ExcessiveFailures {
                failures: self.failures.len(),
                replicates: self.replicates,
            });
        }
        Ok(())
    }
}

/// Mardia's multivariate skewness and kurtosis of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mardia {
    pub dimension: usize,
    pub samples: usize,
    /// `b₁,ₙ`.
    pub skewness: f64,
    /// `b₂,ₙ`.
    pub kurtosis: f64,
}

impl Mardia {
    /// `m·b₁/6`, asymptotically `χ²` with [`Mardia::skewness_dof`] degrees of freedom.
    pub fn skewness_statistic(&self) -> f64 {
        self.samples as f64 * self.skewness / 6.0
    }

    pub fn skewness_dof(&self) -> usize {
        let n = self.dimension;
        n * (n + 1) * (n + 2) / 6
    }

    /// Asymptotic mean `n(n+2)` of `b₂` under normality.
    pub fn kurtosis_reference(&self) -> f64 {
        let n = self.dimension as f64;
        n * (n + 2.0)
    }

    /// `(b₂ − n(n+2)) / √(8n(n+2)/m)`, asymptotically standard normal.
    pub fn kurtosis_statistic(&self) -> f64 {
        let reference = self.kurtosis_reference();
        (self.kurtosis - reference) / (8.0 * reference / self.samples as f64).sqrt()
    }

    /// Whether both statistics fall inside their two-sided `level` acceptance
    /// bands (upper tail for skewness).
    pub fn within_bands(&self, level: f64) -> Result<bool> {
        let skew_limit = chi_squared_quantile(level, self.skewness_dof())?;
        let kurt_limit = normal_quantile(0.5 + 0.5 * level)?;
        Ok(
            self.skewness_statistic() <= skew_limit
                && self.kurtosis_statistic().abs() <= kurt_limit,
        )
    }
}

/// Mardia statistics, or `None` when the sample covariance is singular.
pub fn mardia(samples: &Matrix) -> Option<Mardia> {
    let (m, n) = samples.shape();
    if m <= n || n == 0 {
        return None;
    }
    let mean = samples.row_mean().transpose();
    let centered = Matrix::from_fn(m, n, |i, j| samples[(i, j)] - mean[j]);
    let cov = centered.tr_mul(&centered) / m as f64;
    let chol = cov.cholesky()?;
    // Rows of W = C L⁻ᵀ are whitened, so dᵢ'S⁻¹dⱼ = wᵢ·wⱼ.
    let whitened = chol
        .l()
        .solve_lower_triangular(&centered.transpose())?
        .transpose();
    // Σᵢⱼ(wᵢ·wⱼ)³ equals the squared Frobenius norm of Σᵢ wᵢ⊗wᵢ⊗wᵢ.
    let mut third = alloc::vec![0.0; n * n * n];
    let mut kurt = 0.0;
    for i in 0..m {
        let w = whitened.row(i);
        let norm2 = w.norm_squared();
        kurt += norm2 * norm2;
        for a in 0..n {
            for b in 0..n {
                let wab = w[a] * w[b];
                for c in 0..n {
                    third[(a * n + b) * n + c] += wab * w[c];
                }
            }
        }
    }
    let skew: f64 = third.iter().map(|t| t * t).sum();
    let mf = m as f64;
    Some(Mardia {
        dimension: n,
        samples: m,
        skewness: skew / (mf * mf),
        kurtosis: kurt / mf,
    })
}

/// Correlation between the sorted sample and standard normal quantiles at
/// plotting positions `(i − ½)/m`.
pub fn qq_correlation(values: &[f64]) -> Result<f64> {
    let m = values.len();
    if m < 3 {
        return Err(Error::TooFewReplicates { have: m, need: 3 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let theory: Vec<f64> = (0..m)
        .map(|i| normal_quantile((i as f64 + 0.5) / m as f64))
        .collect::<Result<_>>()?;
    Ok(pearson(&sorted, &theory))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Empirical versus asymptotic behaviour of the simulated optima.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `‖Ŝ − Ξ‖_F / ‖Ξ‖_F`; `None` when `Ξ = 0`.
    pub frobenius_error: Option<f64>,
    pub coverage: Vec<f64>,
    pub plugin_coverage: Vec<f64>,
    pub mardia: Option<Mardia>,
    /// Per-coordinate normal QQ correlation; `None` for a constant coordinate.
    pub qq_correlation: Vec<Option<f64>>,
}

pub fn empirical_vs_asymptotic(result: &SimulationResult) -> Result<Comparison> {
    let m = result.successes();
    if m < MIN_COMPARISON_REPLICATES {
        return Err(Error::TooFewReplicates {
            have: m,
            need: MIN_COMPARISON_REPLICATES,
        });
    }
    let empirical = result.empirical_cov.clone().unwrap_or_else(|| {
        scaled_deviation_cov(&result.samples, &result.x_star_truth, result.runs)
    });
    let xi_norm = result.xi_reference.norm();
    let frobenius_error =
        (xi_norm > 0.0).then(|| (&empirical - &result.xi_reference).norm() / xi_norm);
    let qq = (0..result.samples.ncols())
        .map(|j| {
            let col: Vec<f64> = result.samples.column(j).iter().copied().collect();
            let spread = col
                .iter()
                .fold(0.0_f64, |acc, v| acc.max((v - col[0]).abs()));
            if spread > 0.0 {
                qq_correlation(&col).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        frobenius_error,
        coverage: result.coverage.clone().unwrap_or_default(),
        plugin_coverage: result.plugin_coverage.clone().unwrap_or_default(),
        mardia: result.mardia,
        qq_correlation: qq,
    })
}
