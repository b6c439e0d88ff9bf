use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit `log s(t) ≈ c − ηt` on the tail window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub eta: f64,
    pub intercept: f64,
    pub window_start: f64,
    pub samples: usize,
    /// Set when the series does not decay (η ≤ 0).
    pub flagged: bool,
}

/// Fraction of samples at the end used for the fit.
pub const TAIL_FRACTION: f64 = 0.6;

pub fn fit_decay_rate(times: &[f64], series: &[f64]) -> Result<DecayFit> {
    if times.len() != series.len() {
        return Err(Error::Input("times and series differ in length".into()));
    }
    if let Some(v) = series.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Input(format!("decay series must be positive, found {v}")));
    }
    let n = times.len();
    let take = ((n as f64) * TAIL_FRACTION).round() as usize;
    if take < 10 {
        return Err(Error::Input(format!("decay fit needs at least 10 tail samples, have {take}")));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = times[n - take..].iter().zip(&series[n - take..]).map(|(t, s)| (*t, s.ln())).unzip();
    let k = take as f64;
    let (mt, my) = (t.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxy: f64 = t.iter().zip(&y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let eta = -slope;
    Ok(DecayFit {
        eta: if eta.abs() < 1e-12 { 0.0 } else { eta },
        intercept: my - slope * mt,
        window_start: t[0],
        samples: take,
        flagged: eta <= 1e-12,
    })
}
