//! Small descriptive-statistics helpers with a fixed summation order.

/// Sample mean.
pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Mean and its standard error.
pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    (mean(x), (variance(x) / x.len() as f64).sqrt())
}

/// Sample central moment of order `k`.
pub fn central_moment(x: &[f64], k: i32) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / x.len() as f64
}

/// Sample skewness `m3 / m2^{3/2}`.
pub fn skewness(x: &[f64]) -> f64 {
    let m2 = central_moment(x, 2);
    central_moment(x, 3) / m2.powf(1.5)
}

/// Sample kurtosis `m4 / m2^2` (3 for a Gaussian).
pub fn kurtosis(x: &[f64]) -> f64 {
    let m2 = central_moment(x, 2);
    central_moment(x, 4) / (m2 * m2)
}
