//! Small statistics toolkit for the Monte Carlo checks: Kolmogorov–Smirnov
//! tests, moments, lag correlation and binomial intervals.

use statrs::distribution::{Beta, ContinuousCDF, Normal};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // small-x form converges faster
        let s = (2.0 * std::f64::consts::PI).sqrt() / x;
        let q = (-std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        let mut sum = 0.0;
        for k in 0..50 {
            let e = (2 * k + 1) as f64;
            sum += q.powf(e * e);
        }
        return (1.0 - s * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if (k as i64) % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value with the Stephens small-sample correction.
fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS test of `data` against a continuous CDF.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut x: Vec<f64> = data.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    }
}

pub fn ks_normal(data: &[f64], mean: f64, sd: f64) -> KsResult {
    let nd = Normal::new(mean, sd).expect("positive standard deviation");
    ks_one_sample(data, |x| nd.cdf(x))
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p(d, n_eff),
    }
}

/// Critical value of the two-sample KS statistic at level 0.05.
pub fn ks_two_sample_critical(n: usize, m: usize) -> f64 {
    1.36 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let m = mean(x);
    let den: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    if den == 0.0 {
        return 0.0;
    }
    let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / den
}

/// Clopper–Pearson interval for `k` successes out of `n`.
pub fn binomial_ci(k: usize, n: usize, level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64)
            .unwrap()
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64)
            .unwrap()
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_reference_values() {
        // classical table: P(K > 1.36) ≈ 0.0494, P(K > 1.63) ≈ 0.0098
        assert!((kolmogorov_sf(1.36) - 0.04939).abs() < 2e-4);
        assert!((kolmogorov_sf(1.63) - 0.00981).abs() < 2e-4);
        assert!((kolmogorov_sf(0.5) - 0.96394).abs() < 2e-4);
        // the two series agree where they switch
        let a = kolmogorov_sf(1.17999);
        let b = kolmogorov_sf(1.18001);
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn ks_accepts_uniform_grid() {
        let data: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let r = ks_one_sample(&data, |x| x.clamp(0.0, 1.0));
        assert!(r.statistic <= 0.0005 + 1e-12);
        assert!(r.p_value > 0.99);
        let shifted: Vec<f64> = data.iter().map(|x| x * 0.5).collect();
        assert!(ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
    }

    #[test]
    fn two_sample_ks() {
        let a: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..500).map(|i| i as f64 + 0.5).collect();
        assert!(ks_two_sample(&a, &b).statistic <= 0.0021);
        let c: Vec<f64> = (0..500).map(|i| i as f64 + 250.0).collect();
        assert!((ks_two_sample(&a, &c).statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn binomial_interval_brackets_estimate() {
        let (lo, hi) = binomial_ci(30, 100, 0.95);
        assert!(lo < 0.3 && hi > 0.3);
        assert!((lo - 0.2124).abs() < 1e-3 && (hi - 0.3998).abs() < 1e-3);
        assert_eq!(binomial_ci(0, 10, 0.95).0, 0.0);
    }

    #[test]
    fn moments() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&x), 2.5);
        assert!((variance(&x) - 5.0 / 3.0).abs() < 1e-15);
        assert!(lag1_autocorrelation(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]) < -0.8);
    }
}
