//! Uniform periodic grids on `[-L, L)`, grid functions, quadrature, norms and
//! moments, plus the weighted space-time norms used by the existence theory.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Spectral;

/// Truncation `[-L, L)` of the line sampled at `N` nodes `x_j = -L + j h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::HalfWidth(half_width));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::GridSize(points));
        }
        Ok(Self { half_width, points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |j| self.node(j))
    }

    /// Same interval, twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            points: self.points * 2,
        }
    }

    pub fn spectral(&self) -> Spectral {
        Spectral::new(self.points, self.half_width)
    }
}

/// Smallest half-width keeping a solution up to time `horizon` below `1e-12`
/// at `±L`, for data negligible beyond `radius`.
///
/// The heat-like bulk needs `10.5 √T` (`e^{-x²/4t}` at `1e-12`). The wave
/// fronts travel at speed 1 but carry `e^{-t/2}`, which is below `1e-12` after
/// `t ≈ 55`, so they only matter up to that distance.
pub fn min_half_width(horizon: f64, radius: f64) -> f64 {
    let front = horizon.min(2.0 * 1e12_f64.ln());
    (10.5 * horizon.max(0.0).sqrt()).max(front) + radius
}

/// `make_grid` under its operational name.
pub fn make_grid(half_width: f64, points: usize) -> Result<GridSpec> {
    GridSpec::new(half_width, points)
}

/// A finite real field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.points() {
            return Err(Error::Length {
                expected: spec.points(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.points()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = spec.nodes().map(f).collect();
        Self { spec, values }
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.points());
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(self.spec, self.values.iter().map(|v| c * v).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_raw(self.spec, values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|f|` over the outer 5% of the interval on each side.
    pub fn edge_max(&self) -> f64 {
        let l = self.spec.half_width();
        self.spec
            .nodes()
            .zip(&self.values)
            .filter(|(x, _)| x.abs() >= 0.95 * l)
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Spectral first derivative.
    pub fn derivative(&self) -> Self {
        Self::from_raw(self.spec, self.spec.spectral().derivative(&self.values))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,value")?;
        for (x, v) in self.spec.nodes().zip(&self.values) {
            writeln!(w, "{x:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("x,value\n");
        for (x, v) in self.spec.nodes().zip(&self.values) {
            let _ = writeln!(s, "{x:.16e},{v:.16e}");
        }
        s
    }

    /// Read back what [`GridFunction::write_csv`] produced. The grid is
    /// recovered from the first node and the row count.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .and_then(|l| l.ok())
            .ok_or_else(|| Error::Config("empty csv".into()))?;
        if header.trim() != "x,value" {
            return Err(Error::Config(format!("unexpected csv header {header:?}")));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::Config(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("bad csv row {line:?}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{s:?}: {e}")))
            };
            xs.push(parse(x)?);
            vs.push(parse(v)?);
        }
        let first = *xs.first().ok_or_else(|| Error::Config("csv has no rows".into()))?;
        let spec = GridSpec::new(-first, vs.len())?;
        GridFunction::new(spec, vs)
    }
}

/// Trapezoidal `(∫|f|^p)^{1/p}`; `p = ∞` is the sample max.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::LebesgueIndex(p));
    }
    Ok(lp_norm_raw(f.values(), f.spec().spacing(), p))
}

pub(crate) fn lp_norm_raw(values: &[f64], h: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return h * values.iter().map(|v| v.abs()).sum::<f64>();
    }
    if p == 2.0 {
        return (h * values.iter().map(|v| v * v).sum::<f64>()).sqrt();
    }
    // rescale by the max to keep |f|^p in range
    let m = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * (h * s).powf(1.0 / p)
}

/// `‖f‖_{L^p} + ‖f'‖_{L^p}` with the spectral derivative.
pub fn sobolev_norm(f: &GridFunction, p: f64) -> Result<f64> {
    let base = lp_norm(f, p)?;
    Ok(base + lp_norm(&f.derivative(), p)?)
}

/// Trapezoidal `∫ x^k f(x) dx` for `k <= 4`.
pub fn moment(f: &GridFunction, k: usize) -> Result<f64> {
    if k > 4 {
        return Err(Error::MomentOrder(k));
    }
    let spec = f.spec();
    Ok(spec.spacing()
        * spec
            .nodes()
            .zip(f.values())
            .map(|(x, v)| x.powi(k as i32) * v)
            .sum::<f64>())
}

/// `M_0 .. M_K` of a grid function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector(Vec<f64>);

impl MomentVector {
    pub fn of(f: &GridFunction, max_order: usize) -> Result<Self> {
        (0..=max_order)
            .map(|k| moment(f, k))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.0.get(k).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_order(&self) -> usize {
        self.0.len() - 1
    }

    /// Number of leading moments that vanish relative to `scale`.
    pub fn vanishing_prefix(&self, scale: f64, rel_tol: f64) -> usize {
        self.0
            .iter()
            .take_while(|m| m.abs() <= rel_tol * scale)
            .count()
    }
}

/// Samples `(u, ∂t u)` at increasing times starting from 0.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<(GridFunction, GridFunction)>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: f64, u: GridFunction, ut: GridFunction) -> Result<()> {
        let ok = match self.times.last() {
            None => t == 0.0,
            Some(&last) => t > last,
        };
        if !ok {
            return Err(Error::TrajectoryTimes);
        }
        if u.spec() != ut.spec() || self.states.first().is_some_and(|(u0, _)| u0.spec() != u.spec()) {
            return Err(Error::GridMismatch);
        }
        self.times.push(t);
        self.states.push((u, ut));
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[(GridFunction, GridFunction)] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Prefix up to and including time `t_max`.
    pub fn truncated(&self, t_max: f64) -> Self {
        let k = self.times.iter().take_while(|&&t| t <= t_max).count();
        Self {
            times: self.times[..k].to_vec(),
            states: self.states[..k].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    X,
    Y,
    Z,
}

/// Supremum-in-time weighted norm over the trajectory samples, with
/// `p' = p / (p - 1)` and `a = 1 / (2 p')`:
///
/// * `X`: `sup (‖u‖₁ + (1+t)^a ‖u‖_p) + sup (1+t)^{1/2} (‖u_x‖₁ + (1+t)^a ‖u_x‖_p)
///   + sup (1+t) (‖u_t‖₁ + (1+t)^a ‖u_t‖_p)`
/// * `Y`: `sup (1+t)^{1/2} (‖u‖_{W^{1,1}} + (1+t)^a ‖u‖_{W^{1,p}}) + sup (1+t) (‖u_t‖₁ + (1+t)^a ‖u_t‖_p)`
/// * `Z`: as `Y` with the first weight raised to `(1+t)`.
pub fn weighted_norm(traj: &Trajectory, kind: NormKind, p: f64) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(p > 1.0 && p <= 3.0) {
        return Err(Error::Exponent(p));
    }
    let a = (p - 1.0) / (2.0 * p);
    let mut sups = [0.0_f64; 3];
    for (&t, (u, ut)) in traj.times().iter().zip(traj.states()) {
        let w = 1.0 + t;
        let h = u.spec().spacing();
        let pair = |vals: &[f64]| lp_norm_raw(vals, h, 1.0) + w.powf(a) * lp_norm_raw(vals, h, p);
        let du = u.derivative();
        let n_u = pair(u.values());
        let n_ux = pair(du.values());
        let n_ut = pair(ut.values());
        let terms = match kind {
            NormKind::X => [n_u, w.sqrt() * n_ux, w * n_ut],
            NormKind::Y => [w.sqrt() * (n_u + n_ux), w * n_ut, 0.0],
            NormKind::Z => [w * (n_u + n_ux), w * n_ut, 0.0],
        };
        for (s, v) in sups.iter_mut().zip(terms) {
            *s = s.max(v);
        }
    }
    Ok(sups.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g(x: f64) -> f64 {
        (-x * x / 4.0).exp()
    }

    #[test]
    fn make_grid_spacing_and_rejections() {
        let s = make_grid(100.0, 4096).unwrap();
        assert_eq!(s.spacing(), 200.0 / 4096.0);
        assert_eq!(s.node(0), -100.0);
        assert_eq!(make_grid(1.0, 16).unwrap().spacing(), 0.125);
        assert_eq!(make_grid(100.0, 100), Err(Error::GridSize(100)));
        assert_eq!(make_grid(100.0, 8), Err(Error::GridSize(8)));
        assert!(matches!(make_grid(0.0, 64), Err(Error::HalfWidth(_))));
        assert!(matches!(make_grid(-3.0, 64), Err(Error::HalfWidth(_))));
    }

    #[test]
    fn grid_function_rejects_bad_samples() {
        let s = make_grid(1.0, 16).unwrap();
        assert!(matches!(
            GridFunction::new(s, vec![0.0; 15]),
            Err(Error::Length { .. })
        ));
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert_eq!(GridFunction::new(s, v), Err(Error::NonFinite(3)));
    }

    #[test]
    fn lp_norm_basic_values() {
        let s = make_grid(100.0, 4096).unwrap();
        assert_eq!(lp_norm(&GridFunction::zeros(s), 2.0).unwrap(), 0.0);
        assert_eq!(lp_norm(&GridFunction::zeros(s), 1.5).unwrap(), 0.0);
        let hat = GridFunction::from_fn(s, |x| if x.abs() <= 1.0 { 1.0 } else { 0.0 });
        let area = lp_norm(&hat, 1.0).unwrap();
        assert!((area - 2.0).abs() <= s.spacing());
        let gf = GridFunction::from_fn(s, g);
        let l2 = lp_norm(&gf, 2.0).unwrap();
        assert!((l2 - (2.0 * PI).sqrt().sqrt()).abs() < 1e-6, "{l2}");
        assert_eq!(lp_norm(&gf, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(lp_norm(&gf, 0.5), Err(Error::LebesgueIndex(0.5)));
    }

    #[test]
    fn sobolev_norm_of_sine_and_gaussian() {
        let l = 3.0;
        let s = make_grid(l, 64).unwrap();
        let f = GridFunction::from_fn(s, |x| (PI * x / l).sin());
        let df = GridFunction::from_fn(s, |x| PI / l * (PI * x / l).cos());
        let want = lp_norm(&f, 2.0).unwrap() + lp_norm(&df, 2.0).unwrap();
        assert!((sobolev_norm(&f, 2.0).unwrap() - want).abs() < 1e-8);

        let s = make_grid(100.0, 4096).unwrap();
        let gf = GridFunction::from_fn(s, g);
        // ‖g'‖² = ∫ x²/4 e^{-x²/2} dx = √(2π)/4 ; ‖g‖² = √(2π)
        let want = (2.0 * PI).sqrt().sqrt() + ((2.0 * PI).sqrt() / 4.0).sqrt();
        assert!((sobolev_norm(&gf, 2.0).unwrap() - want).abs() < 1e-8);
        assert_eq!(sobolev_norm(&GridFunction::zeros(s), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn moments_of_gaussian_family() {
        let s = make_grid(100.0, 4096).unwrap();
        let gf = GridFunction::from_fn(s, g);
        let dg = GridFunction::from_fn(s, |x| -x / 2.0 * g(x));
        assert!((moment(&gf, 0).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-8);
        assert!(moment(&dg, 0).unwrap().abs() < 1e-10);
        assert!((moment(&dg, 1).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-6);
        assert_eq!(moment(&gf, 5), Err(Error::MomentOrder(5)));
        let mv = MomentVector::of(&dg, 2).unwrap();
        assert_eq!(mv.max_order(), 2);
        assert_eq!(mv.vanishing_prefix(lp_norm(&dg, 1.0).unwrap(), 1e-8), 1);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = make_grid(7.5, 32).unwrap();
        let f = GridFunction::from_fn(s, |x| (x * 1.37).sin() / 3.0);
        let text = f.to_csv_string();
        assert!(text.starts_with("x,value\n"));
        let back = GridFunction::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn trajectory_time_rules() {
        let s = make_grid(1.0, 16).unwrap();
        let z = GridFunction::zeros(s);
        let mut tr = Trajectory::new();
        assert_eq!(tr.push(0.5, z.clone(), z.clone()), Err(Error::TrajectoryTimes));
        tr.push(0.0, z.clone(), z.clone()).unwrap();
        assert_eq!(tr.push(0.0, z.clone(), z.clone()), Err(Error::TrajectoryTimes));
        tr.push(1.0, z.clone(), z.clone()).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(
            weighted_norm(&Trajectory::new(), NormKind::X, 2.0),
            Err(Error::EmptyTrajectory)
        );
        for kind in [NormKind::X, NormKind::Y, NormKind::Z] {
            assert_eq!(weighted_norm(&tr, kind, 2.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn weighted_norm_single_time_matches_direct_evaluation() {
        let s = make_grid(100.0, 4096).unwrap();
        let gf = GridFunction::from_fn(s, g);
        let mut tr = Trajectory::new();
        tr.push(0.0, gf.clone(), GridFunction::zeros(s)).unwrap();
        // p = 2: p' = 2, weight (1+0)^{1/4} = 1
        let l1 = 2.0 * PI.sqrt();
        let l2 = (2.0 * PI).sqrt().sqrt();
        let dl1 = 2.0; // ∫|g'| = 2 g(0)
        let dl2 = ((2.0 * PI).sqrt() / 4.0).sqrt();
        let want = l1 + l2 + dl1 + dl2;
        let got = weighted_norm(&tr, NormKind::X, 2.0).unwrap();
        // |g'| has a kink at 0, so its trapezoid L1 is only second order
        let h2 = s.spacing().powi(2);
        assert!((got - want).abs() < h2, "{got} vs {want}");
    }
}
