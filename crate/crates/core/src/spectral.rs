//! FFT plumbing on the periodic truncation of the line.
//!
//! Forward transforms are unnormalized; [`Spectral::inverse`] divides by `N`.
//! Plans come from one process-wide planner, so every worker gets the same
//! algorithm for a given length and results are bit-identical across threads.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// Forward and inverse plans for one transform length, plus the angular
/// frequencies of a periodic interval of length `2L`.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    freq: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize, half_width: f64) -> Self {
        let (forward, inverse) = {
            let mut p = planner().lock().expect("fft planner poisoned");
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        };
        Self {
            n,
            forward,
            inverse,
            freq: frequencies(n, half_width),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Signed angular frequencies `xi_k = pi k / L`, FFT ordering. The Nyquist
    /// entry carries the positive value.
    pub fn freq(&self) -> &[f64] {
        &self.freq
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Normalized inverse transform, in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Apply a real multiplier `m(xi)` to real samples.
    pub fn apply_multiplier(&self, values: &[f64], multiplier: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut spec = self.forward_real(values);
        for (c, &xi) in spec.iter_mut().zip(&self.freq) {
            *c *= multiplier(xi);
        }
        self.inverse_real(&spec)
    }

    /// Spectral first derivative; the Nyquist mode is dropped.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let mut spec = self.forward_real(values);
        let nyq = self.n / 2;
        for (k, (c, &xi)) in spec.iter_mut().zip(&self.freq).enumerate() {
            *c = if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                *c * Complex64::new(0.0, xi)
            };
        }
        self.inverse_real(&spec)
    }

    /// Samples of `f(x - delta)` by trigonometric interpolation.
    pub fn shift(&self, values: &[f64], delta: f64) -> Vec<f64> {
        let nyq = self.n / 2;
        let mut spec = self.forward_real(values);
        for (k, (c, &xi)) in spec.iter_mut().zip(&self.freq).enumerate() {
            let phase = -xi * delta;
            *c *= if k == nyq {
                Complex64::new(phase.cos(), 0.0)
            } else {
                Complex64::new(phase.cos(), phase.sin())
            };
        }
        self.inverse_real(&spec)
    }
}

pub fn frequencies(n: usize, half_width: f64) -> Vec<f64> {
    let dk = PI / half_width;
    (0..n)
        .map(|k| {
            let signed = if k <= n / 2 {
                k as i64
            } else {
                k as i64 - n as i64
            };
            signed as f64 * dk
        })
        .collect()
}

/// Zero-pad an `N`-mode spectrum onto a `2N`-mode one with the same physical
/// values on the shared nodes. Nyquist is dropped.
pub fn pad_double(spec: &[Complex64], out: &mut [Complex64]) {
    let n = spec.len();
    debug_assert_eq!(out.len(), 2 * n);
    out.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    let half = n / 2;
    // coarse inverse divides by N, fine inverse by 2N
    out[..half].copy_from_slice(&spec[..half]);
    out[n + half + 1..].copy_from_slice(&spec[half + 1..]);
    for c in out.iter_mut() {
        *c *= 2.0;
    }
}

/// Inverse of [`pad_double`]: keep the `|k| < N/2` modes of a `2N` spectrum.
pub fn restrict_half(fine: &[Complex64], out: &mut [Complex64]) {
    let n = out.len();
    let half = n / 2;
    out[..half].copy_from_slice(&fine[..half]);
    out[half] = Complex64::new(0.0, 0.0);
    out[half + 1..].copy_from_slice(&fine[n + half + 1..]);
    for c in out.iter_mut() {
        *c *= 0.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_padding_preserve_samples() {
        let n = 128;
        let l = 16.0;
        let sp = Spectral::new(n, l);
        let h = 2.0 * l / n as f64;
        let vals: Vec<f64> = (0..n)
            .map(|j| {
                let x = -l + j as f64 * h;
                (-x * x / 4.0).exp()
            })
            .collect();
        let spec = sp.forward_real(&vals);
        let back = sp.inverse_real(&spec);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }

        let fine_sp = Spectral::new(2 * n, l);
        let mut fine = vec![Complex64::new(0.0, 0.0); 2 * n];
        pad_double(&spec, &mut fine);
        let mut fine_vals = fine.clone();
        fine_sp.inverse(&mut fine_vals);
        for j in 0..n {
            assert!((fine_vals[2 * j].re - vals[j]).abs() < 1e-13);
        }
        fine_sp.forward_in_place(&mut fine_vals);
        let mut coarse = vec![Complex64::new(0.0, 0.0); n];
        restrict_half(&fine_vals, &mut coarse);
        let again = sp.inverse_real(&coarse);
        for (a, b) in vals.iter().zip(&again) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn shift_matches_translated_gaussian() {
        let n = 256;
        let l = 20.0;
        let sp = Spectral::new(n, l);
        let h = 2.0 * l / n as f64;
        let g = |x: f64| (-x * x / 4.0).exp();
        let vals: Vec<f64> = (0..n).map(|j| g(-l + j as f64 * h)).collect();
        let shifted = sp.shift(&vals, 0.3);
        for (j, v) in shifted.iter().enumerate() {
            let x = -l + j as f64 * h;
            assert!((v - g(x - 0.3)).abs() < 1e-12);
        }
    }
}
