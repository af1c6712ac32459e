//! Reference distributions used for calibration and diagnostics.
//!
//! Central F, χ² and normal come from `statrs`. The noncentral χ² CDF is a
//! Poisson mixture of central χ² CDFs, summed outward from the Poisson mode
//! so large noncentralities do not underflow.

use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};
use statrs::function::gamma::{gamma_lr, ln_gamma};

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal").cdf(x)
}

pub fn normal_quantile(p: f64, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal").inverse_cdf(p)
}

pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    FisherSnedecor::new(d1, d2).expect("valid F").cdf(x)
}

/// Upper-α critical value of `F(d1, d2)`.
pub fn f_upper_quantile(alpha: f64, d1: f64, d2: f64) -> f64 {
    FisherSnedecor::new(d1, d2)
        .expect("valid F")
        .inverse_cdf(1.0 - alpha)
}

pub fn chi2_cdf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(k / 2.0, x / 2.0)
}

/// CDF of the noncentral χ² with `k` degrees of freedom and noncentrality `lambda`.
pub fn noncentral_chi2_cdf(x: f64, k: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return chi2_cdf(x, k);
    }
    let half = lambda / 2.0;
    let log_weight = |j: f64| -half + j * half.ln() - ln_gamma(j + 1.0);
    let term = |j: f64| log_weight(j).exp() * chi2_cdf(x, k + 2.0 * j);

    let mode = half.floor();
    let mut total = term(mode);
    let mut j = mode + 1.0;
    loop {
        let w = log_weight(j).exp();
        total += w * chi2_cdf(x, k + 2.0 * j);
        if w < 1e-17 && j > half {
            break;
        }
        j += 1.0;
    }
    let mut j = mode - 1.0;
    while j >= 0.0 {
        let w = log_weight(j).exp();
        total += w * chi2_cdf(x, k + 2.0 * j);
        if w < 1e-17 {
            break;
        }
        j -= 1.0;
    }
    total.clamp(0.0, 1.0)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "KS distance of an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of a two-sample KS statistic (Kolmogorov series).
pub fn ks_two_sample_pvalue(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * (-2.0 * kf * kf * lambda * lambda).exp();
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Composite Simpson on [a, b]; independent of every routine above.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, steps: usize) -> f64 {
        let steps = steps + steps % 2;
        let h = (b - a) / steps as f64;
        let mut s = f(a) + f(b);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn ln_gamma_half_int(k: f64) -> f64 {
        // Γ(k/2) for integer k by recursion from Γ(1/2) = √π, Γ(1) = 1
        let mut v: f64 = if (k as i64) % 2 == 1 {
            PI.sqrt().ln()
        } else {
            0.0
        };
        let mut a = if (k as i64) % 2 == 1 { 0.5 } else { 1.0 };
        while a < k / 2.0 - 1e-9 {
            v += a.ln();
            a += 1.0;
        }
        v
    }

    fn std_normal_cdf_by_quadrature(z: f64) -> f64 {
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        if z >= 0.0 {
            0.5 + simpson(pdf, 0.0, z, 20_000)
        } else {
            0.5 - simpson(pdf, 0.0, -z, 20_000)
        }
    }

    #[test]
    fn chi2_matches_quadrature() {
        for &k in &[2.0, 3.0, 5.0, 10.0] {
            let ln_norm = (k / 2.0) * 2f64.ln() + ln_gamma_half_int(k);
            let pdf = |t: f64| {
                if t <= 0.0 {
                    if k == 2.0 {
                        0.5
                    } else {
                        0.0
                    }
                } else {
                    ((k / 2.0 - 1.0) * t.ln() - t / 2.0 - ln_norm).exp()
                }
            };
            for &x in &[0.5f64, 1.0, 3.84, 9.0, 20.0] {
                // t = u² removes the √t endpoint behaviour for odd k
                let oracle = simpson(|u| pdf(u * u) * 2.0 * u, 0.0, x.sqrt(), 40_000);
                assert!((chi2_cdf(x, k) - oracle).abs() < 1e-8, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn chi2_one_dof_matches_normal_identity() {
        // P(χ²₁ ≤ x) = 2Φ(√x) − 1
        for &x in &[0.01f64, 0.5, 1.0, 3.841458820694124, 10.0] {
            let oracle = 2.0 * std_normal_cdf_by_quadrature(x.sqrt()) - 1.0;
            assert!((chi2_cdf(x, 1.0) - oracle).abs() < 1e-8);
        }
        assert!((chi2_cdf(3.841458820694124, 1.0) - 0.95).abs() < 1e-9);
    }

    #[test]
    fn noncentral_chi2_one_dof_closed_form() {
        // P(χ²₁(λ) ≤ x) = Φ(√x − √λ) − Φ(−√x − √λ)
        for &lambda in &[0.3, 2.0, 15.0, 400.0, 2500.0] {
            for &mult in &[0.2, 0.8, 1.0, 1.3, 2.0] {
                let x: f64 = mult * (lambda + 1.0);
                let (r, m) = (x.sqrt(), lambda.sqrt());
                let oracle = normal_cdf(r - m, 0.0, 1.0) - normal_cdf(-r - m, 0.0, 1.0);
                let got = noncentral_chi2_cdf(x, 1.0, lambda);
                assert!(
                    (got - oracle).abs() < 1e-8,
                    "λ={lambda} x={x}: {got} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn noncentral_reduces_to_central() {
        assert_eq!(noncentral_chi2_cdf(2.0, 3.0, 0.0), chi2_cdf(2.0, 3.0));
    }

    #[test]
    fn f_quantile_matches_t_density_quadrature() {
        // F(1, d) ≤ x  ⇔  |t_d| ≤ √x
        for &d in &[5.0, 98.0, 498.0] {
            let q = f_upper_quantile(0.05, 1.0, d);
            let ln_c = ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0) - 0.5 * (d * PI).ln();
            let pdf = |t: f64| (ln_c - (d + 1.0) / 2.0 * (1.0 + t * t / d).ln()).exp();
            let mass = 2.0 * simpson(pdf, 0.0, q.sqrt(), 40_000);
            assert!((mass - 0.95).abs() < 1e-8, "d={d}: {mass}");
            assert!((f_cdf(q, 1.0, d) - 0.95).abs() < 1e-9);
        }
    }

    #[test]
    fn normal_quantile_roundtrip() {
        let q = normal_quantile(0.975, 10.0, 2.0);
        assert!((q - (10.0 + 2.0 * 1.959963984540054)).abs() < 1e-9);
        assert!((std_normal_cdf_by_quadrature(1.959963984540054) - 0.975).abs() < 1e-8);
    }

    #[test]
    fn ks_distance_small_cases() {
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        assert!((ks_distance(&[0.5], uniform) - 0.5).abs() < 1e-15);
        let d = ks_distance(&[0.1, 0.2, 0.9], uniform);
        assert!((d - (2.0 / 3.0 - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn ks_two_sample_cases() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!(ks_two_sample_pvalue(0.0, 100, 100) > 0.99);
        assert!(ks_two_sample_pvalue(0.5, 100, 100) < 1e-8);
    }
}
