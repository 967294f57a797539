//! Log-log least squares and the two-parameter critical-law fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::lambert_w0;

/// Fits with `r²` below this are flagged as rejected.
pub const MIN_R_SQUARED: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

impl ExponentFit {
    pub fn accepted(&self) -> bool {
        self.r_squared >= MIN_R_SQUARED
    }

    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, r²)`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::FitPoints { needed: 2, got: n.min(y.len()) });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok((slope, intercept, r2))
}

/// Fit `log y = a + b log x` over positive samples.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<ExponentFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (slope, intercept, r_squared) = linear_regression(&lx, &ly)?;
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        window: (lo, hi),
    })
}

/// `T ε^{2/3} = A e^{2 W(B ε^{-1/2}) / 3}` fitted in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambertFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

impl LambertFit {
    pub fn predict(&self, eps: f64) -> f64 {
        let w = lambert_w0(self.b / eps.sqrt()).unwrap_or(f64::NAN);
        self.a * eps.powf(-2.0 / 3.0) * (2.0 * w / 3.0).exp()
    }
}

/// For fixed `B` the best `log A` is a mean, so only `log B` is searched:
/// a coarse scan over `[1e-6, 1e6]` then golden-section refinement.
pub fn fit_lambert_critical(eps: &[f64], times: &[f64]) -> Result<LambertFit> {
    let n = eps.len();
    if n < 3 || times.len() != n {
        return Err(Error::FitPoints { needed: 3, got: n.min(times.len()) });
    }
    if eps.iter().chain(times).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("lambert fit needs positive finite data".into()));
    }
    let target: Vec<f64> = eps
        .iter()
        .zip(times)
        .map(|(e, t)| (t * e.powf(2.0 / 3.0)).ln())
        .collect();
    let model = |log_b: f64| -> Vec<f64> {
        let b = log_b.exp();
        eps.iter()
            .map(|e| 2.0 * lambert_w0(b / e.sqrt()).unwrap_or(f64::NAN) / 3.0)
            .collect()
    };
    let sse = |log_b: f64| -> (f64, f64) {
        let m = model(log_b);
        let log_a = target.iter().zip(&m).map(|(y, f)| y - f).sum::<f64>() / n as f64;
        let s = target
            .iter()
            .zip(&m)
            .map(|(y, f)| (y - log_a - f).powi(2))
            .sum::<f64>();
        (s, log_a)
    };
    let (lo, hi) = (-6.0 * std::f64::consts::LN_10, 6.0 * std::f64::consts::LN_10);
    let steps = 240;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let lb = lo + (hi - lo) * i as f64 / steps as f64;
        let (s, _) = sse(lb);
        if s < best.0 {
            best = (s, lb);
        }
    }
    let d = (hi - lo) / steps as f64;
    let (mut a, mut b) = (best.1 - d, best.1 + d);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let dd = a + phi * (b - a);
        if sse(c).0 < sse(dd).0 {
            b = dd;
        } else {
            a = c;
        }
    }
    let log_b = 0.5 * (a + b);
    let (s, log_a) = sse(log_b);
    let mean = target.iter().sum::<f64>() / n as f64;
    let tss: f64 = target.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if tss == 0.0 { 1.0 } else { (1.0 - s / tss).clamp(0.0, 1.0) };
    Ok(LambertFit {
        a: log_a.exp(),
        b: log_b.exp(),
        r_squared,
    })
}
