//! Small numerical helpers for the diagnostics: the standard normal CDF and
//! the Kolmogorov–Smirnov distance of a sample to it.

/// Abramowitz–Stegun 7.1.26 rational approximation of erf, |error| < 1.5e-7.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// KS distance between the empirical distribution of `sample` and N(0,1).
pub fn ks_to_standard_normal(sample: &mut [f64]) -> f64 {
    assert!(!sample.is_empty());
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut worst = 0.0_f64;
    for (i, x) in sample.iter().enumerate() {
        let cdf = normal_cdf(*x);
        let above = (i as f64 + 1.0) / n - cdf;
        let below = cdf - i as f64 / n;
        worst = worst.max(above.abs()).max(below.abs());
    }
    worst
}

/// Mean and variance (population) in one pass.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}
