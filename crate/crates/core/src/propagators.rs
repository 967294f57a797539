//! Linear solution operators of `∂t²u + ∂t u - ∂x²u = 0`.
//!
//! `S(t)` is the solution with `u(0) = 0`, `∂t u(0) = f`. On the Fourier side
//! it is the multiplier `σ(t, ξ)` solving `σ'' + σ' + ξ² σ = 0`, `σ(0) = 0`,
//! `σ'(0) = 1`:
//!
//! ```text
//! σ = e^{-t/2} sinh(tμ)/μ,  μ = √(1/4 - ξ²)   (|ξ| < 1/2)
//! σ = e^{-t/2} sin(tν)/ν,   ν = √(ξ² - 1/4)   (|ξ| > 1/2)
//! ```
//!
//! In physical space the same operator is the convolution with
//! `e^{-t/2} ½ I₀(√(t² - y²)/2) 1_{|y| < t}`; both routes are implemented so
//! they can check each other.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, ExponentFit, MIN_R_SQUARED};
use crate::grid::{lp_norm, GridFunction, GridSpec, MomentVector};
use crate::special::i0_unchecked;

/// Data must be this small at the boundary, relative to its maximum.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// Largest time accepted by [`apply_s_kernel`].
pub const KERNEL_MAX_TIME: f64 = 50.0;

/// `(σ(t, ξ), ∂t σ(t, ξ))` at a single frequency.
pub fn symbol_at(t: f64, xi: f64) -> (f64, f64) {
    let xi = xi.abs();
    let s = (0.5 - xi) * (0.5 + xi);
    let damp = (-0.5 * t).exp();
    if s.abs() < 1e-4 && t * t * s.abs() <= 1.0 {
        // sinh(tμ)/μ = Σ t^{2k+1} s^k/(2k+1)!, cosh(tμ) = Σ t^{2k} s^k/(2k)!
        let q = t * t * s;
        let mut sh = t;
        let mut ch = 1.0;
        let (mut ts, mut tc) = (t, 1.0);
        for k in 1..6 {
            let k = k as f64;
            tc *= q / ((2.0 * k - 1.0) * (2.0 * k));
            ts *= q / ((2.0 * k) * (2.0 * k + 1.0));
            ch += tc;
            sh += ts;
        }
        return (damp * sh, damp * (ch - 0.5 * sh));
    }
    if s > 0.0 {
        let mu = s.sqrt();
        // e^{-t/2} e^{±tμ} without overflow; μ - 1/2 = -ξ²/(μ + 1/2)
        let grow = (-t * xi * xi / (mu + 0.5)).exp();
        let decay = (-t * (mu + 0.5)).exp();
        let sh = 0.5 * (grow - decay);
        let ch = 0.5 * (grow + decay);
        (sh / mu, ch - sh / (2.0 * mu))
    } else {
        let nu = (-s).sqrt();
        let (sn, cs) = (t * nu).sin_cos();
        (damp * sn / nu, damp * (cs - sn / (2.0 * nu)))
    }
}

/// `σ` and `∂t σ` sampled on the frequency grid of `spec`.
#[derive(Debug, Clone)]
pub struct PropagatorSymbol {
    pub t: f64,
    pub freq: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_t: Vec<f64>,
}

pub fn damped_symbol(t: f64, spec: &GridSpec) -> Result<PropagatorSymbol> {
    check_time(t)?;
    let freq = crate::spectral::frequencies(spec.points(), spec.half_width());
    let (sigma, sigma_t) = freq.iter().map(|&xi| symbol_at(t, xi)).unzip();
    Ok(PropagatorSymbol {
        t,
        freq,
        sigma,
        sigma_t,
    })
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 || t.is_infinite() {
        Err(Error::Domain(format!("time must be finite and >= 0, got {t}")))
    } else {
        Ok(())
    }
}

fn check_edges(f: &GridFunction) -> Result<()> {
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(());
    }
    let ratio = f.edge_max() / m;
    if ratio > EDGE_TOLERANCE {
        Err(Error::Truncation(ratio))
    } else {
        Ok(())
    }
}

pub(crate) fn apply_s_unchecked(t: f64, f: &GridFunction) -> GridFunction {
    let sp = f.spec().spectral();
    let vals = sp.apply_multiplier(f.values(), |xi| symbol_at(t, xi).0);
    GridFunction::from_raw(*f.spec(), vals)
}

/// `S(t) f` through the Fourier multiplier.
pub fn apply_s(t: f64, f: &GridFunction) -> Result<GridFunction> {
    check_time(t)?;
    check_edges(f)?;
    Ok(apply_s_unchecked(t, f))
}

/// `∂t S(t) f` through the Fourier multiplier.
pub fn apply_dts(t: f64, f: &GridFunction) -> Result<GridFunction> {
    check_time(t)?;
    check_edges(f)?;
    let sp = f.spec().spectral();
    let vals = sp.apply_multiplier(f.values(), |xi| symbol_at(t, xi).1);
    Ok(GridFunction::from_raw(*f.spec(), vals))
}

/// Free solution `S(t)(u₀ + u₁) + ∂t S(t) u₀`.
pub fn linear_solution(t: f64, u0: &GridFunction, u1: &GridFunction) -> Result<GridFunction> {
    let sum = u0.combine(1.0, u1, 1.0)?;
    apply_s(t, &sum)?.combine(1.0, &apply_dts(t, u0)?, 1.0)
}

/// The first-order system `(u, ∂t u) ↦` its free evolution over a time `t`,
/// diagonal in Fourier space.
#[derive(Debug, Clone)]
pub struct LinearFlow {
    pub t: f64,
    uu: Vec<f64>,
    uv: Vec<f64>,
    vu: Vec<f64>,
    vv: Vec<f64>,
}

impl LinearFlow {
    pub fn new(t: f64, freq: &[f64]) -> Self {
        let n = freq.len();
        let mut flow = Self {
            t,
            uu: Vec::with_capacity(n),
            uv: Vec::with_capacity(n),
            vu: Vec::with_capacity(n),
            vv: Vec::with_capacity(n),
        };
        for &xi in freq {
            let (s, st) = symbol_at(t, xi);
            flow.uu.push(s + st);
            flow.uv.push(s);
            flow.vu.push(-xi * xi * s);
            flow.vv.push(st);
        }
        flow
    }

    /// In-place evolution of a spectral pair.
    pub fn apply(&self, u: &mut [Complex64], v: &mut [Complex64]) {
        for k in 0..u.len() {
            let (a, b) = (u[k], v[k]);
            u[k] = a * self.uu[k] + b * self.uv[k];
            v[k] = a * self.vu[k] + b * self.vv[k];
        }
    }

    /// Evolution of a pair whose `u`-component is zero: `(0, b) ↦ (σ b, σ_t b)`.
    pub fn apply_forcing(&self, b: &[Complex64], u: &mut [Complex64], v: &mut [Complex64]) {
        for k in 0..b.len() {
            u[k] = b[k] * self.uv[k];
            v[k] = b[k] * self.vv[k];
        }
    }

    pub fn apply_to(&self, u: &GridFunction, v: &GridFunction) -> (GridFunction, GridFunction) {
        let sp = u.spec().spectral();
        let mut uh = sp.forward_real(u.values());
        let mut vh = sp.forward_real(v.values());
        self.apply(&mut uh, &mut vh);
        (
            GridFunction::from_raw(*u.spec(), sp.inverse_real(&uh)),
            GridFunction::from_raw(*u.spec(), sp.inverse_real(&vh)),
        )
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, 8 points.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Quadrature nodes `(cell, offset, weight)` for `∫_{-t}^{t} · dy` on a grid of
/// spacing `h`: one 8-point Gauss-Legendre rule per grid cell, the two end
/// cells clipped at `±t`. A node sits at `y = cell·h + offset`.
fn kernel_nodes(t: f64, h: f64) -> Vec<(i64, f64, f64)> {
    let mut panels: Vec<(f64, f64)> = Vec::new();
    let m = (t / h).floor() as i64;
    for k in -m..m {
        panels.push((k as f64 * h, (k + 1) as f64 * h));
    }
    let edge = m as f64 * h;
    if t - edge > 1e-14 * t.max(1.0) {
        panels.push((edge, t));
        panels.push((-t, -edge));
    }
    let mut nodes = Vec::with_capacity(panels.len() * 8);
    for (a, b) in panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (z, w) in GL8 {
            let y = mid + half * z;
            let cell = (y / h).floor() as i64;
            let off = y - cell as f64 * h;
            nodes.push((cell, off, w * half));
        }
    }
    nodes
}

/// `e^{-t/2} ½ I₀(√((t-y)(t+y))/2)`.
fn kernel_weight(t: f64, y: f64) -> f64 {
    let arg = ((t - y) * (t + y)).max(0.0).sqrt() * 0.5;
    0.5 * (-0.5 * t).exp() * i0_unchecked(arg)
}

/// `e^{-t/2} ½ ∫_{-t}^{t} I₀(√(t²-y²)/2) dy` by the quadrature of
/// [`apply_s_kernel`]; analytically `1 - e^{-t}`.
pub fn kernel_mass(t: f64, h: f64) -> f64 {
    kernel_nodes(t, h)
        .into_iter()
        .map(|(cell, off, w)| w * kernel_weight(t, cell as f64 * h + off))
        .sum()
}

/// `S(t) f` as a physical-space convolution with the Bessel kernel. Off-grid
/// samples of `f` come from trigonometric interpolation, one shifted copy per
/// distinct node offset.
pub fn apply_s_kernel(t: f64, f: &GridFunction) -> Result<GridFunction> {
    if !(t > 0.0 && t <= KERNEL_MAX_TIME) {
        return Err(Error::Domain(format!(
            "kernel evaluation needs t in (0, {KERNEL_MAX_TIME}], got {t}"
        )));
    }
    let spec = *f.spec();
    if t >= spec.half_width() {
        return Err(Error::Domain(format!(
            "kernel support {t} exceeds the half-width {}",
            spec.half_width()
        )));
    }
    let h = spec.spacing();
    let n = spec.points() as i64;
    let sp = spec.spectral();
    let nodes = kernel_nodes(t, h);

    // group nodes by offset; interior cells share the 8 Gauss offsets
    let mut offsets: Vec<f64> = Vec::new();
    let mut grouped: Vec<Vec<(i64, f64)>> = Vec::new();
    for (cell, off, w) in nodes {
        let coef = w * kernel_weight(t, cell as f64 * h + off);
        let idx = match offsets.iter().position(|o| (o - off).abs() <= 1e-12 * h) {
            Some(i) => i,
            None => {
                offsets.push(off);
                grouped.push(Vec::new());
                offsets.len() - 1
            }
        };
        grouped[idx].push((cell, coef));
    }

    let mut out = vec![0.0; spec.points()];
    for (off, group) in offsets.iter().zip(&grouped) {
        let shifted = sp.shift(f.values(), *off);
        for &(cell, coef) in group {
            // f(x_j - cell h - off) = shifted[j - cell]
            let shift = cell.rem_euclid(n) as usize;
            let nn = n as usize;
            let (head, tail) = out.split_at_mut(shift);
            for (o, s) in tail.iter_mut().zip(&shifted[..nn - shift]) {
                *o += coef * s;
            }
            for (o, s) in head.iter_mut().zip(&shifted[nn - shift..]) {
                *o += coef * s;
            }
        }
    }
    Ok(GridFunction::from_raw(spec, out))
}

/// `W(t) f(x) = ½ ∫_{x-t}^{x+t} f`, integrating the piecewise-linear
/// interpolant of the periodic samples. Exact for constants and linears.
pub fn apply_wave(t: f64, f: &GridFunction) -> Result<GridFunction> {
    check_time(t)?;
    let spec = *f.spec();
    let h = spec.spacing();
    let n = spec.points();
    let period = 2.0 * spec.half_width();
    let vals = f.values();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for j in 0..n {
        let next = vals[(j + 1) % n];
        cum.push(cum[j] + 0.5 * h * (vals[j] + next));
    }
    let total = cum[n];
    let x0 = spec.node(0);
    let antideriv = |x: f64| -> f64 {
        let rel = x - x0;
        let wraps = (rel / period).floor();
        let local = rel - wraps * period;
        let j = ((local / h).floor() as usize).min(n - 1);
        let s = local - j as f64 * h;
        let (a, b) = (vals[j], vals[(j + 1) % n]);
        wraps * total + cum[j] + s * a + s * s / (2.0 * h) * (b - a)
    };
    let out = spec
        .nodes()
        .map(|x| 0.5 * (antideriv(x + t) - antideriv(x - t)))
        .collect();
    Ok(GridFunction::from_raw(spec, out))
}

/// `e^{tΔ} f` through the multiplier `e^{-tξ²}`.
pub fn apply_heat(t: f64, f: &GridFunction) -> Result<GridFunction> {
    check_time(t)?;
    let sp = f.spec().spectral();
    let vals = sp.apply_multiplier(f.values(), |xi| (-t * xi * xi).exp());
    Ok(GridFunction::from_raw(*f.spec(), vals))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualVariant {
    /// `S(t) f - e^{tΔ} f`
    Heat,
    /// `S(t) f - e^{tΔ} f - e^{-t/2} W(t) f`
    HeatPlusWave,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub p: f64,
    pub fitted: ExponentFit,
    pub accepted: bool,
    /// Leading vanishing moments of the source.
    pub vanishing_moments: usize,
    /// Heat-expansion rate `-1/(2p') - k/2` (`-1` more for residuals).
    pub target_slope: f64,
    /// The same rate with `1/p'` in place of `1/(2p')`.
    pub printed_slope: f64,
}

impl DecayReport {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("t,norm\n");
        for (t, n) in self.times.iter().zip(&self.norms) {
            s.push_str(&format!("{t:.16e},{n:.16e}\n"));
        }
        s
    }

    pub fn fit_record(&self) -> FitRecord {
        FitRecord {
            p: self.p,
            slope: self.fitted.slope,
            intercept: self.fitted.intercept,
            r2: self.fitted.r_squared,
            window: self.fitted.window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub p: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: (f64, f64),
}

/// Decay rate predicted by the heat expansion for a source whose first `k`
/// moments vanish.
pub fn heat_decay_rate(p: f64, k: usize) -> f64 {
    -(1.0 - 1.0 / p) / 2.0 - k as f64 / 2.0
}

fn printed_decay_rate(p: f64, k: usize) -> f64 {
    -(1.0 - 1.0 / p) - k.min(2) as f64 / 2.0
}

fn vanishing_moments(f: &GridFunction) -> Result<usize> {
    let scale = lp_norm(f, 1.0)?;
    Ok(MomentVector::of(f, 2)?.vanishing_prefix(scale, 1e-8))
}

/// Least-squares fit restricted to `window`; defaults to the last decade.
fn windowed_fit(times: &[f64], norms: &[f64], window: Option<(f64, f64)>) -> Result<ExponentFit> {
    let t_max = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = window.unwrap_or((t_max / 10.0, t_max));
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(norms)
        .filter(|(t, _)| **t >= lo * (1.0 - 1e-12) && **t <= hi * (1.0 + 1e-12))
        .map(|(t, n)| (*t, *n))
        .unzip();
    if x.len() < 3 || hi / lo < 2.0 {
        return Err(Error::FitPoints { needed: 3, got: x.len() });
    }
    fit_power_law(&x, &y)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(Error::Domain("scan times must be increasing and >= 0".into()));
    }
    Ok(())
}

/// `‖S(t) f‖_{L^p}` at each time and the log-log fit over `window`.
pub fn decay_scan(
    f: &GridFunction,
    p: f64,
    times: &[f64],
    window: Option<(f64, f64)>,
) -> Result<DecayReport> {
    check_times(times)?;
    check_edges(f)?;
    let norms = times
        .iter()
        .map(|&t| lp_norm(&apply_s_unchecked(t, f), p))
        .collect::<Result<Vec<_>>>()?;
    let k = vanishing_moments(f)?;
    let fitted = windowed_fit(times, &norms, window)?;
    Ok(DecayReport {
        times: times.to_vec(),
        p,
        accepted: fitted.r_squared >= MIN_R_SQUARED,
        fitted,
        norms,
        vanishing_moments: k,
        target_slope: heat_decay_rate(p, k),
        printed_slope: printed_decay_rate(p, k),
    })
}

/// Residual of `S(t) f` against its heat (and optionally wave) approximation.
pub fn residual(t: f64, f: &GridFunction, variant: ResidualVariant) -> Result<GridFunction> {
    let s = apply_s(t, f)?;
    let mut r = s.combine(1.0, &apply_heat(t, f)?, -1.0)?;
    if variant == ResidualVariant::HeatPlusWave {
        r = r.combine(1.0, &apply_wave(t, f)?, -(-0.5 * t).exp())?;
    }
    Ok(r)
}

pub fn residual_scan(
    f: &GridFunction,
    p: f64,
    times: &[f64],
    variant: ResidualVariant,
    window: Option<(f64, f64)>,
) -> Result<DecayReport> {
    check_times(times)?;
    let norms = times
        .iter()
        .map(|&t| lp_norm(&residual(t, f, variant)?, p))
        .collect::<Result<Vec<_>>>()?;
    let fit_norms: Vec<f64> = norms.iter().map(|n| n.max(f64::MIN_POSITIVE)).collect();
    let fit_times: Vec<f64> = times.iter().map(|t| t.max(f64::MIN_POSITIVE)).collect();
    let fitted = windowed_fit(&fit_times, &fit_norms, window)?;
    let k = vanishing_moments(f)?;
    Ok(DecayReport {
        times: times.to_vec(),
        p,
        accepted: fitted.r_squared >= MIN_R_SQUARED,
        fitted,
        norms,
        vanishing_moments: k,
        target_slope: heat_decay_rate(p, k) - 1.0,
        printed_slope: printed_decay_rate(p, k) - 1.0,
    })
}

/// `n` log-spaced times in `[a, b]`.
pub fn log_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, moment};
    use crate::special::gaussian_derivative;

    fn spec() -> GridSpec {
        make_grid(100.0, 4096).unwrap()
    }

    #[test]
    fn symbol_anchors() {
        let (s, st) = symbol_at(1.0, 0.0);
        assert!((s - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((st - (-1f64).exp()).abs() < 1e-15);
        let (s, st) = symbol_at(0.0, 3.7);
        assert_eq!((s, st), (0.0, 1.0));
        // |ξ| = 1/2: sinh(tμ)/μ → t
        let (s, _) = symbol_at(2.0, 0.5);
        assert!((s - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert!((s - 0.73576).abs() < 1e-5);
    }

    #[test]
    fn symbol_is_continuous_across_the_taylor_switch() {
        for t in [0.5, 3.0, 40.0] {
            for xi in [0.5 - 2e-4, 0.5 - 1e-4, 0.5 + 1e-4, 0.5 + 2e-4] {
                let here = symbol_at(t, xi);
                let near = symbol_at(t, xi + 1e-9);
                assert!((here.0 - near.0).abs() < 1e-7);
                assert!((here.1 - near.1).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn damped_symbol_rejects_negative_time() {
        assert!(damped_symbol(-1.0, &spec()).is_err());
        let sym = damped_symbol(0.0, &spec()).unwrap();
        assert!(sym.sigma.iter().all(|&s| s == 0.0));
        assert!(sym.sigma_t.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn apply_at_time_zero() {
        let g = gaussian_derivative(0, spec()).unwrap();
        assert_eq!(apply_s(0.0, &g).unwrap().max_abs(), 0.0);
        let d = apply_dts(0.0, &g).unwrap();
        for (a, b) in d.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_relaxes_like_one_minus_exp() {
        let g = gaussian_derivative(0, spec()).unwrap();
        let m0 = moment(&g, 0).unwrap();
        for t in [0.5, 1.0, 5.0, 20.0] {
            let m = moment(&apply_s(t, &g).unwrap(), 0).unwrap();
            assert!((m - (1.0 - (-t).exp()) * m0).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_data_that_does_not_decay() {
        let s = make_grid(10.0, 64).unwrap();
        let one = GridFunction::from_fn(s, |_| 1.0);
        assert!(matches!(apply_s(1.0, &one), Err(Error::Truncation(_))));
    }

    #[test]
    fn kernel_mass_identity() {
        for t in [1.0, 5.0, 20.0, 50.0] {
            let m = kernel_mass(t, spec().spacing());
            assert!((m - (1.0 - (-t).exp())).abs() < 1e-8, "t={t} m={m}");
        }
    }

    #[test]
    fn kernel_matches_multiplier() {
        let g = gaussian_derivative(0, spec()).unwrap();
        for t in [1.0, 5.0] {
            let a = apply_s(t, &g).unwrap();
            let b = apply_s_kernel(t, &g).unwrap();
            let d = a.combine(1.0, &b, -1.0).unwrap().max_abs();
            assert!(d <= 1e-6 * g.max_abs(), "t={t} d={d}");
        }
        let tiny = apply_s_kernel(1e-9, &g).unwrap();
        assert!(tiny.max_abs() < 1e-8);
        assert!(apply_s_kernel(0.0, &g).is_err());
        assert!(apply_s_kernel(60.0, &g).is_err());
    }

    #[test]
    fn wave_operator_values() {
        let s = spec();
        let g = gaussian_derivative(0, s).unwrap();
        assert_eq!(apply_wave(0.0, &g).unwrap().max_abs(), 0.0);
        let hat = GridFunction::from_fn(s, |x| if x.abs() < 30.0 { 1.0 } else { 0.0 });
        let w = apply_wave(2.5, &hat).unwrap();
        assert!((w.values()[2048] - 2.5).abs() < 1e-12);
        // ½ ∫_{-1}^{1} e^{-y²/4} dy = √π erf(1/2) via Simpson with 2000 panels
        let n = 2000;
        let hh = 2.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let y = -1.0 + i as f64 * hh;
            let c = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += c * (-y * y / 4.0).exp();
        }
        let want = 0.5 * acc * hh / 3.0;
        let got = apply_wave(1.0, &g).unwrap().values()[2048];
        assert!((got - want).abs() < 5e-4, "{got} {want}");
    }

    #[test]
    fn heat_semigroup_on_gaussian() {
        let s = spec();
        let g = gaussian_derivative(0, s).unwrap();
        let same = apply_heat(0.0, &g).unwrap();
        assert!(same.combine(1.0, &g, -1.0).unwrap().max_abs() < 1e-14);
        for t in [0.5, 3.0, 10.0] {
            let h = apply_heat(t, &g).unwrap();
            assert!((moment(&h, 0).unwrap() - moment(&g, 0).unwrap()).abs() < 1e-10);
            let r = (1.0 + t).sqrt();
            for (x, v) in s.nodes().zip(h.values()) {
                assert!((v - (-(x / r).powi(2) / 4.0).exp() / r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_flow_is_a_semigroup() {
        let s = make_grid(60.0, 1024).unwrap();
        let u = gaussian_derivative(1, s).unwrap();
        let v = gaussian_derivative(0, s).unwrap().scale(0.5);
        let (t1, t2) = (1.3, 2.9);
        let sp = s.spectral();
        let whole = LinearFlow::new(t1 + t2, sp.freq()).apply_to(&u, &v);
        let a = LinearFlow::new(t1, sp.freq()).apply_to(&u, &v);
        let b = LinearFlow::new(t2, sp.freq()).apply_to(&a.0, &a.1);
        let e = lp_norm(&whole.0.combine(1.0, &b.0, -1.0).unwrap(), 2.0).unwrap();
        assert!(e <= 1e-10 * lp_norm(&whole.0, 2.0).unwrap());
    }

    #[test]
    fn log_times_endpoints() {
        let t = log_times(1e2, 1e4, 5);
        assert_eq!(t.len(), 5);
        assert!((t[0] - 1e2).abs() < 1e-9 && (t[4] - 1e4).abs() < 1e-7);
        assert!((t[2] - 1e3).abs() < 1e-8);
    }
}
