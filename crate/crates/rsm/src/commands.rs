//! The subcommands, each turning settings into a report.

use rsm_core::asymptotics::{
    coefficient_covariance, confidence_ellipsoid, confidence_intervals, critical_point_covariance,
};
use rsm_core::model::{build_design, ccd_design, fit, predict, Design, FitResult, RANK_TOLERANCE};
use rsm_core::montecarlo::{
    empirical_vs_asymptotic, SimulationResult, MAX_FAILURE_RATE, MIN_COMPARISON_REPLICATES,
};
use rsm_core::scalarize::{evaluate_functional, weighted_objective, WeightVector};
use rsm_core::sensitivity::{lagrangian_blocks, solution_jacobian};
use rsm_core::solver::{solve_sphere, KktPoint, SphereRegion};
use rsm_core::special::{chi_squared_quantile, normal_quantile};
use rsm_core::Error as CoreError;

use crate::config::Settings;
use crate::data::{read_dataset, Dataset};
use crate::error::{CliError, CliResult, Context};
use crate::parallel::run_parallel;
use crate::report::*;

/// Level of the Mardia acceptance bands.
pub const MARDIA_LEVEL: f64 = 0.99;

pub fn fit_dataset(data: &Dataset) -> CliResult<(Design, FitResult)> {
    let design = build_design(&data.points).context("design")?;
    let fitted = fit(&design, &data.responses).context("fit")?;
    Ok((design, fitted))
}

fn load_and_fit(settings: &Settings) -> CliResult<(Design, FitResult)> {
    let data = read_dataset(settings.input()?)?;
    log::info!("read {} runs with {} factors", data.runs(), data.factors());
    fit_dataset(&data)
}

pub fn fit_report(design: &Design, fitted: &FitResult) -> CliResult<FitReport> {
    let b = &fitted.coefficients;
    let responses = (0..b.responses())
        .map(|k| {
            let parts = b.response(k).context("coefficients")?;
            Ok(ResponseJson {
                intercept: parts.intercept,
                linear: values(&parts.linear),
                quadratic: rows(&parts.quadratic),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(FitReport {
        meta: Meta::new(FIT_SCHEMA),
        factors: b.factors(),
        responses: b.responses(),
        runs: fitted.runs,
        terms: b.terms(),
        dof: fitted.dof,
        coefficients: CoefficientsJson {
            shape: [b.terms(), b.responses()],
            column_major: values(&b.vec()),
            term_labels: term_labels(b.factors()),
            responses,
        },
        sigma_hat: fitted.sigma_hat.as_ref().map(rows),
        rank: RankJson {
            rank: b.terms(),
            singular_value_ratio: design.rank_ratio(),
            tolerance: RANK_TOLERANCE,
        },
    })
}

pub fn cmd_fit(settings: &Settings) -> CliResult<FitReport> {
    let (design, fitted) = load_and_fit(settings)?;
    fit_report(&design, &fitted)
}

fn optimum_json(
    fitted: &FitResult,
    w: &WeightVector,
    region: &SphereRegion,
) -> CliResult<(OptimumJson, KktPoint)> {
    let obj = weighted_objective(w, &fitted.coefficients).context("scalarization")?;
    let point = solve_sphere(&obj, region).context("optimization")?;
    let x = point.x_star.as_slice();
    let json = OptimumJson {
        weights: values(w.as_vector()),
        radius: region.radius(),
        x_star: values(&point.x_star),
        lambda_star: point.lambda_star,
        active: point.active,
        objective: evaluate_functional(&obj, x).context("objective")?,
        predicted: values(&predict(&fitted.coefficients, x).context("prediction")?),
        kkt: KktJson {
            stationarity: point.residuals.stationarity,
            feasibility: point.residuals.feasibility,
            complementarity: point.residuals.complementarity,
            strict_margin: point.residuals.strict_margin,
        },
    };
    Ok((json, point))
}

pub fn cmd_optimize(settings: &Settings) -> CliResult<OptimizeReport> {
    let (_, fitted) = load_and_fit(settings)?;
    let w = settings.weight_vector(fitted.coefficients.responses())?;
    let (optimum, _) = optimum_json(&fitted, &w, &settings.region()?)?;
    Ok(OptimizeReport {
        meta: Meta::new(OPTIMIZE_SCHEMA),
        optimum,
    })
}

pub fn analyze_fit(fitted: &FitResult, settings: &Settings) -> CliResult<AnalyzeReport> {
    let alpha = settings.check_alpha()?;
    let w = settings.weight_vector(fitted.coefficients.responses())?;
    let region = settings.region()?;
    let (optimum, point) = optimum_json(fitted, &w, &region)?;
    let obj = weighted_objective(&w, &fitted.coefficients).context("scalarization")?;
    let blocks = lagrangian_blocks(&obj, &w, &point, &region).context("sensitivity")?;
    let jac = solution_jacobian(&blocks).context("sensitivity")?;
    let theta = coefficient_covariance(fitted, fitted.runs).context("coefficient covariance")?;
    let asym = critical_point_covariance(&jac, &theta).context("asymptotic covariance")?;
    let intervals = confidence_intervals(&point.x_star, &asym, alpha)
        .context("confidence intervals")?
        .into_iter()
        .zip(point.x_star.iter())
        .map(|((lower, upper), &x)| IntervalJson {
            lower,
            upper,
            half_width: upper - x,
        })
        .collect();
    let ellipsoid = match confidence_ellipsoid(&point.x_star, &asym, alpha) {
        Ok(e) => {
            let (lengths, dirs) = e.axes();
            Some(EllipsoidJson {
                center: values(&e.center),
                precision: rows(&e.precision),
                threshold: e.threshold,
                semi_axes: values(&lengths),
                directions: rows(&dirs.transpose()),
            })
        }
        Err(CoreError::SingularCovariance) => None,
        Err(e) => return Err(e).context("confidence ellipsoid"),
    };
    let tangency = point.active.then(|| jac.tangency(&point.x_star).amax());
    Ok(AnalyzeReport {
        meta: Meta::new(ANALYZE_SCHEMA),
        optimum,
        alpha,
        runs: asym.runs,
        vec_ordering: "column_stacked",
        jacobian_x: rows(&jac.jx),
        jacobian_lambda: values(&jac.jlambda),
        xi: rows(&asym.xi),
        cov_x_star: rows(&asym.cov_xstar),
        intervals,
        ellipsoid,
        tangency,
    })
}

pub fn cmd_analyze(settings: &Settings) -> CliResult<AnalyzeReport> {
    let (_, fitted) = load_and_fit(settings)?;
    analyze_fit(&fitted, settings)
}

pub fn simulate_report(
    result: &SimulationResult,
    settings: &Settings,
) -> CliResult<SimulateReport> {
    let config = settings.simulation_config()?;
    let comparison = if result.successes() >= MIN_COMPARISON_REPLICATES {
        let cmp = empirical_vs_asymptotic(result).context("comparison")?;
        let mardia = match cmp.mardia {
            Some(m) => Some(MardiaJson {
                skewness: m.skewness,
                kurtosis: m.kurtosis,
                skewness_statistic: m.skewness_statistic(),
                skewness_dof: m.skewness_dof(),
                skewness_critical: chi_squared_quantile(MARDIA_LEVEL, m.skewness_dof())
                    .context("Mardia bands")?,
                kurtosis_statistic: m.kurtosis_statistic(),
                kurtosis_reference: m.kurtosis_reference(),
                kurtosis_critical: normal_quantile(0.5 + 0.5 * MARDIA_LEVEL)
                    .context("Mardia bands")?,
                level: MARDIA_LEVEL,
                within_bands: m.within_bands(MARDIA_LEVEL).context("Mardia bands")?,
            }),
            None => None,
        };
        ComparisonJson {
            available: true,
            frobenius_error: cmp.frobenius_error,
            empirical_cov: result.empirical_cov.as_ref().map(rows),
            coverage: Some(cmp.coverage),
            plugin_coverage: Some(cmp.plugin_coverage),
            mardia,
            qq_correlation: Some(cmp.qq_correlation),
        }
    } else {
        ComparisonJson {
            available: false,
            frobenius_error: None,
            empirical_cov: None,
            coverage: None,
            plugin_coverage: None,
            mardia: None,
            qq_correlation: None,
        }
    };
    Ok(SimulateReport {
        meta: Meta::new(SIMULATE_SCHEMA),
        settings: SimulationSettingsJson {
            replicates: result.replicates,
            seed: config.seed,
            alpha: result.alpha,
            radius: config.region.radius(),
            weights: values(config.weights.as_vector()),
            factors: config.truth.factors(),
            responses: config.truth.responses(),
            runs: result.runs,
        },
        truth: TruthJson {
            x_star: values(&result.x_star_truth),
            lambda_star: result.lambda_truth,
            active: result.active_truth,
            xi: rows(&result.xi_reference),
        },
        successes: result.successes(),
        failures: FailuresJson {
            count: result.failures.len(),
            rate: result.failure_rate(),
            limit: MAX_FAILURE_RATE,
            within_limit: result.check_failure_rate().is_ok(),
            reasons: result
                .failures
                .iter()
                .map(|f| FailureJson {
                    replicate: f.index,
                    error: f.error.to_string(),
                })
                .collect(),
        },
        comparison,
    })
}

/// Runs the study; the caller decides the exit status from `failures.within_limit`.
pub fn cmd_simulate(
    settings: &Settings,
    threads: Option<usize>,
) -> CliResult<(SimulateReport, SimulationResult)> {
    let config = settings.simulation_config()?;
    let result = run_parallel(config, threads)?;
    let report = simulate_report(&result, settings)?;
    Ok((report, result))
}

pub fn cmd_design(factors: usize, axial: f64, centers: usize) -> CliResult<Vec<Vec<f64>>> {
    ccd_design(factors, axial, centers).map_err(|e| CliError::input(format!("design: {e}")))
}
