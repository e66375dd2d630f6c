//! JSON report documents.
//!
//! Every report starts with a `meta` block naming its schema (shipped under
//! `schemas/`), the crate version and a generation timestamp. The timestamp is
//! the only field that varies between runs with identical inputs. Floats are
//! written in scientific notation with 17 significant digits so that they parse
//! back to the same `f64`.

use std::io::{self, Write};

use chrono::{SecondsFormat, Utc};
use serde::ser::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use rsm_core::model::cross_pairs;
use rsm_core::{Matrix, Vector};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const FIT_SCHEMA: &str = "rsm.fit/1";
pub const OPTIMIZE_SCHEMA: &str = "rsm.optimize/1";
pub const ANALYZE_SCHEMA: &str = "rsm.analyze/1";
pub const SIMULATE_SCHEMA: &str = "rsm.simulate/1";

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty-printed JSON with round-trip float formatting.
struct Exact(PrettyFormatter<'static>);

impl Formatter for Exact {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Exact(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("report types always serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Meta {
    pub schema: &'static str,
    pub version: &'static str,
    pub generated_at: String,
}

impl Meta {
    pub fn new(schema: &'static str) -> Self {
        Self {
            schema,
            version: VERSION,
            generated_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }
}

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn values(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Names of the basis terms in coefficient order.
pub fn term_labels(factors: usize) -> Vec<String> {
    let mut labels = vec!["1".to_string()];
    labels.extend((1..=factors).map(|i| format!("x{i}")));
    labels.extend((1..=factors).map(|i| format!("x{i}^2")));
    labels.extend(cross_pairs(factors).map(|(i, j)| format!("x{}*x{}", i + 1, j + 1)));
    labels
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ResponseJson {
    pub intercept: f64,
    pub linear: Vec<f64>,
    /// Symmetric matrix with half the cross coefficients off the diagonal.
    pub quadratic: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CoefficientsJson {
    /// `[p, r]`.
    pub shape: [usize; 2],
    /// `vec(B)`, one response column after another.
    pub column_major: Vec<f64>,
    pub term_labels: Vec<String>,
    pub responses: Vec<ResponseJson>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RankJson {
    pub rank: usize,
    pub singular_value_ratio: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FitReport {
    pub meta: Meta,
    pub factors: usize,
    pub responses: usize,
    pub runs: usize,
    pub terms: usize,
    pub dof: usize,
    pub coefficients: CoefficientsJson,
    /// `null` when the design is saturated.
    pub sigma_hat: Option<Vec<Vec<f64>>>,
    pub rank: RankJson,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct KktJson {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    pub strict_margin: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OptimumJson {
    pub weights: Vec<f64>,
    pub radius: f64,
    pub x_star: Vec<f64>,
    pub lambda_star: f64,
    pub active: bool,
    pub objective: f64,
    pub predicted: Vec<f64>,
    pub kkt: KktJson,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OptimizeReport {
    pub meta: Meta,
    pub optimum: OptimumJson,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct IntervalJson {
    pub lower: f64,
    pub upper: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EllipsoidJson {
    pub center: Vec<f64>,
    /// `N Ξ⁻¹`.
    pub precision: Vec<Vec<f64>>,
    pub threshold: f64,
    pub semi_axes: Vec<f64>,
    /// Unit axis directions, one per row, aligned with `semi_axes`.
    pub directions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AnalyzeReport {
    pub meta: Meta,
    pub optimum: OptimumJson,
    pub alpha: f64,
    pub runs: usize,
    pub vec_ordering: &'static str,
    pub jacobian_x: Vec<Vec<f64>>,
    pub jacobian_lambda: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub cov_x_star: Vec<Vec<f64>>,
    pub intervals: Vec<IntervalJson>,
    /// `null` when `Ξ` is singular.
    pub ellipsoid: Option<EllipsoidJson>,
    /// `max |x*'J_x|` on the sphere, `null` inside.
    pub tangency: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SimulationSettingsJson {
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub radius: f64,
    pub weights: Vec<f64>,
    pub factors: usize,
    pub responses: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TruthJson {
    pub x_star: Vec<f64>,
    pub lambda_star: f64,
    pub active: bool,
    pub xi: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FailureJson {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FailuresJson {
    pub count: usize,
    pub rate: f64,
    pub limit: f64,
    pub within_limit: bool,
    pub reasons: Vec<FailureJson>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MardiaJson {
    pub skewness: f64,
    pub kurtosis: f64,
    pub skewness_statistic: f64,
    pub skewness_dof: usize,
    pub skewness_critical: f64,
    pub kurtosis_statistic: f64,
    pub kurtosis_reference: f64,
    pub kurtosis_critical: f64,
    pub level: f64,
    pub within_bands: bool,
}

/// Empirical versus asymptotic comparison; fields are `null` when unavailable.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ComparisonJson {
    pub available: bool,
    pub frobenius_error: Option<f64>,
    pub empirical_cov: Option<Vec<Vec<f64>>>,
    /// Intervals `x̂*ᵢ ± z√(Ξᵢᵢ/N)` with `Ξ` at the truth.
    pub coverage: Option<Vec<f64>>,
    /// Intervals from each replicate's own plug-in `Ξ̂`.
    pub plugin_coverage: Option<Vec<f64>>,
    pub mardia: Option<MardiaJson>,
    pub qq_correlation: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SimulateReport {
    pub meta: Meta,
    pub settings: SimulationSettingsJson,
    pub truth: TruthJson,
    pub successes: usize,
    pub failures: FailuresJson,
    pub comparison: ComparisonJson,
}

/// Drops the `generated_at` line so two reports can be compared byte for byte.
pub fn canonical(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}
