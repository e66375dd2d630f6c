use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rsm_core::special::*;

const LEVELS: [f64; 5] = [0.5, 0.9, 0.95, 0.975, 0.99];

fn normal_cdf_oracle(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_quantile_oracle(q: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_oracle(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// Closed form for even dof, erf plus the downward recursion
// P(a + 1, x) = P(a, x) − xᵃe⁻ˣ/Γ(a + 1) for odd dof.
fn chi_squared_cdf_oracle(x: f64, dof: usize) -> f64 {
    let h = 0.5 * x;
    if dof.is_multiple_of(2) {
        let mut term = 1.0;
        let mut sum = 0.0;
        for j in 0..dof / 2 {
            if j > 0 {
                term *= h / j as f64;
            }
            sum += term;
        }
        1.0 - (-h).exp() * sum
    } else {
        let mut p = libm::erf(h.sqrt());
        let mut a = 0.5;
        let mut term = h.sqrt() * (-h).exp() / libm::tgamma(1.5);
        while a + 1.0 <= 0.5 * dof as f64 {
            p -= term;
            a += 1.0;
            term *= h / a;
        }
        p
    }
}

fn chi_squared_quantile_oracle(q: f64, dof: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_squared_cdf_oracle(mid, dof) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn normal_cdf_matches_erfc() {
    for i in -80..=80 {
        let x = i as f64 * 0.1;
        assert_abs_diff_eq!(normal_cdf(x), normal_cdf_oracle(x), epsilon = 1e-14);
    }
}

#[test]
fn normal_quantiles_match_bisection_oracle() {
    for &q in &LEVELS {
        assert_abs_diff_eq!(
            normal_quantile(q).unwrap(),
            normal_quantile_oracle(q),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            normal_quantile(1.0 - q).unwrap(),
            -normal_quantile_oracle(q),
            epsilon = 1e-9
        );
    }
    assert_abs_diff_eq!(
        normal_quantile(0.975).unwrap(),
        1.959963984540054,
        epsilon = 1e-12
    );
}

#[test]
fn chi_squared_cdf_matches_closed_forms() {
    for dof in 1..=10 {
        for i in 1..=60 {
            let x = i as f64 * 0.5;
            assert_abs_diff_eq!(
                chi_squared_cdf(x, dof),
                chi_squared_cdf_oracle(x, dof),
                epsilon = 1e-13
            );
        }
    }
}

#[test]
fn quantile_round_trips() {
    for &q in &LEVELS {
        let z = normal_quantile(q).unwrap();
        assert_abs_diff_eq!(normal_cdf(z), q, epsilon = 1e-9);
        for dof in 1..=10 {
            let x = chi_squared_quantile(q, dof).unwrap();
            assert_abs_diff_eq!(chi_squared_cdf(x, dof), q, epsilon = 1e-9);
            assert_abs_diff_eq!(x, chi_squared_quantile_oracle(q, dof), epsilon = 1e-8);
        }
    }
}

#[test]
fn two_dof_ninety_five_percent_point() {
    let x = chi_squared_quantile(0.95, 2).unwrap();
    assert_abs_diff_eq!(x, 5.991465, epsilon = 1e-5);
    assert_abs_diff_eq!(x, -2.0 * 0.05f64.ln(), epsilon = 1e-12);
}

#[test]
fn square_of_a_normal_is_one_dof_chi_squared() {
    for &q in &LEVELS {
        let z = normal_quantile(0.5 + 0.5 * q).unwrap();
        assert_abs_diff_eq!(chi_squared_quantile(q, 1).unwrap(), z * z, epsilon = 1e-10);
    }
}

proptest! {
    #[test]
    fn normal_round_trip_anywhere(q in 1e-10f64..(1.0 - 1e-10)) {
        let z = normal_quantile(q).unwrap();
        prop_assert!((normal_cdf(z) - q).abs() <= 1e-12 + 1e-9 * q.min(1.0 - q));
    }

    #[test]
    fn chi_squared_cdf_is_monotone(dof in 1usize..30, a in 0.0f64..50.0, d in 0.0f64..5.0) {
        prop_assert!(chi_squared_cdf(a, dof) <= chi_squared_cdf(a + d, dof) + 1e-15);
    }

    #[test]
    fn ln_gamma_recurrence(x in 0.1f64..50.0) {
        prop_assert!((ln_gamma(x + 1.0) - ln_gamma(x) - x.ln()).abs() < 1e-12 * (1.0 + ln_gamma(x + 1.0).abs()));
    }
}
