//! Log-log regret exponent fits.

use crate::error::{Error, Result};

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<f64> {
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "log-log fit needs positive values, got ({x}, {y})"
        )));
    }
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "log-log fit needs at least two points".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "log-log fit needs distinct abscissae".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Slope of `log R_t` against `log t` for `t` in the inclusive 1-based
/// `window`, where `series[t - 1] = R_t`.
pub fn fit_regret_exponent(series: &[f64], window: (usize, usize)) -> Result<f64> {
    let (lo, hi) = window;
    if lo < 1 || hi > series.len() || lo >= hi {
        return Err(Error::InvalidParameter(format!(
            "window [{lo}, {hi}] does not fit a series of length {}",
            series.len()
        )));
    }
    let points: Vec<(f64, f64)> = (lo..=hi).map(|t| (t as f64, series[t - 1])).collect();
    fit_loglog(&points)
}

/// `[n/2, n]`.
pub fn default_window(n: usize) -> (usize, usize) {
    ((n / 2).max(1), n)
}
