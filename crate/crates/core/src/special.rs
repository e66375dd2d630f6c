//! Normal and chi-squared distribution functions.
//!
//! Both CDFs reduce to the regularized incomplete gamma function, evaluated by
//! its power series below `x < a + 1` and by a Lentz continued fraction above.
//! Quantiles invert the CDFs numerically: a rough closed-form starting guess,
//! then safeguarded Newton steps inside a shrinking bisection bracket.

// Unused whenever std is linked; its inherent float methods take precedence.
use crate::{Error, Result};
use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)]
use num_traits::Float;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITERATIONS: usize = 500;
// Relative Newton step at which a quantile is accepted.
const STEP_TOLERANCE: f64 = 1e-15;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, &coef) in LANCZOS.iter().enumerate().skip(1) {
        sum += coef / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut denom = a;
    for _ in 0..MAX_ITERATIONS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    sum * log_prefactor(a, x).exp()
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITERATIONS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h * log_prefactor(a, x).exp()
}

/// Standard normal CDF, through `erf(t) = P(½, t²)`.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let t = x * x * 0.5;
    if x < 0.0 {
        0.5 * gamma_q(0.5, t)
    } else {
        0.5 + 0.5 * gamma_p(0.5, t)
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn check_probability(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(
            "probability must lie strictly inside (0, 1)",
        ));
    }
    Ok(())
}

/// Inverts a continuous increasing CDF on `[lo, hi]`.
fn invert_cdf(
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    q: f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
) -> f64 {
    let mut x = start.clamp(lo, hi);
    for _ in 0..MAX_ITERATIONS {
        let err = cdf(x) - q;
        if err == 0.0 {
            return x;
        }
        if err > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let density = pdf(x);
        let newton = x - err / density;
        let next = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= STEP_TOLERANCE * x.abs().max(1.0) || hi - lo <= f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

/// Standard normal quantile `z_q`.
pub fn normal_quantile(q: f64) -> Result<f64> {
    check_probability(q)?;
    // Winitzki's approximation of erf⁻¹ as the starting point.
    let y = 2.0 * q - 1.0;
    let a = 0.147;
    let l = (1.0 - y * y).ln();
    let t = 2.0 / (PI * a) + 0.5 * l;
    let guess = SQRT_2 * y.signum() * ((t * t - l / a).sqrt() - t).sqrt();
    let guess = if guess.is_finite() { guess } else { 0.0 };
    Ok(invert_cdf(normal_cdf, normal_pdf, q, -40.0, 40.0, guess))
}

/// Chi-squared CDF with `dof` degrees of freedom.
pub fn chi_squared_cdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_p(0.5 * dof as f64, 0.5 * x)
}

pub fn chi_squared_pdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * dof as f64;
    ((k - 1.0) * x.ln() - 0.5 * x - k * 2f64.ln() - ln_gamma(k)).exp()
}

/// Chi-squared quantile `χ²_dof(q)`.
pub fn chi_squared_quantile(q: f64, dof: usize) -> Result<f64> {
    check_probability(q)?;
    if dof == 0 {
        return Err(Error::InvalidArgument(
            "chi-squared needs at least one degree of freedom",
        ));
    }
    let k = dof as f64;
    // Wilson–Hilferty start.
    let z = normal_quantile(q)?;
    let h = 2.0 / (9.0 * k);
    let guess = k * (1.0 - h + z * h.sqrt()).powi(3);
    let guess = if guess > 0.0 { guess } else { 0.5 * k * q };
    let mut hi = k.max(1.0);
    while chi_squared_cdf(hi, dof) < q {
        hi *= 2.0;
    }
    Ok(invert_cdf(
        |x| chi_squared_cdf(x, dof),
        |x| chi_squared_pdf(x, dof),
        q,
        0.0,
        hi,
        guess,
    ))
}
