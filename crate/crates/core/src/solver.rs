//! Pseudo-spectral march of `∂t²u + ∂t u - ∂x²u = κ|u|^p` to numerical blow-up.
//!
//! The first-order system `(u, v = ∂t u)` is advanced by integrating-factor
//! (Lawson) RK4: the free damped-wave flow is applied exactly through its
//! Fourier multipliers and only the source `κ|u|^p` goes through the Runge-Kutta
//! stages. The source is evaluated on a grid twice as fine and restricted back.
//!
//! Blow-up is detected on `‖u‖_∞`: once it passes the threshold, the last 20
//! samples of `‖u‖_∞^{-(p-1)/2}` (linear in `T - t` for the ODE rate
//! `u ~ (T - t)^{-2/(p-1)}`) are extrapolated to their zero. The march keeps
//! going until the last finite time and the extrapolated asymptote are within
//! the bracket tolerance.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_regression;
use crate::grid::{GridFunction, GridSpec, Trajectory};
use crate::propagators::{symbol_at, LinearFlow};
use crate::spectral::{pad_double, restrict_half, Spectral};
use crate::special::DataFamily;

/// Start of the corridor functionals `w_±`.
pub const CORRIDOR_T0: f64 = 4.0;

/// Samples used by the blow-up extrapolation.
const EXTRAPOLATION_SAMPLES: usize = 20;

/// `κ|u|^p`; `κ = 0` switches the nonlinearity off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    pub p: f64,
    pub coupling: f64,
}

impl Equation {
    pub fn new(p: f64) -> Self {
        Self { p, coupling: 1.0 }
    }

    pub fn linear() -> Self {
        Self { p: 2.0, coupling: 0.0 }
    }

    #[inline]
    fn source(&self, u: f64) -> f64 {
        self.coupling * u.abs().powf(self.p)
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub u: GridFunction,
    pub v: GridFunction,
    pub dt: f64,
    pub steps_taken: usize,
    pub max_abs_u: f64,
}

impl SolverState {
    pub fn initial(data: &DataFamily, dt: f64) -> Self {
        let u = data.u0();
        let max_abs_u = u.max_abs();
        Self {
            t: 0.0,
            u,
            v: data.u1(),
            dt,
            steps_taken: 0,
            max_abs_u,
        }
    }
}

/// Spectral state plus the cached machinery to advance it.
struct Stepper {
    spec: GridSpec,
    eq: Equation,
    coarse: Spectral,
    fine: Spectral,
    flows: HashMap<u64, Arc<LinearFlow>>,
    pad: Vec<Complex64>,
}

#[derive(Clone)]
struct Pair {
    u: Vec<Complex64>,
    v: Vec<Complex64>,
}

impl Stepper {
    fn new(spec: GridSpec, eq: Equation) -> Self {
        Self {
            spec,
            eq,
            coarse: spec.spectral(),
            fine: spec.refined().spectral(),
            flows: HashMap::new(),
            pad: vec![Complex64::new(0.0, 0.0); 2 * spec.points()],
        }
    }

    fn flow(&mut self, dt: f64) -> Arc<LinearFlow> {
        if self.flows.len() > 96 {
            self.flows.clear();
        }
        let freq = self.coarse.freq();
        self.flows
            .entry(dt.to_bits())
            .or_insert_with(|| Arc::new(LinearFlow::new(dt, freq)))
            .clone()
    }

    fn to_spectral(&self, u: &GridFunction, v: &GridFunction) -> Pair {
        let mut pair = Pair {
            u: self.coarse.forward_real(u.values()),
            v: self.coarse.forward_real(v.values()),
        };
        let nyq = self.spec.points() / 2;
        pair.u[nyq] = Complex64::new(0.0, 0.0);
        pair.v[nyq] = Complex64::new(0.0, 0.0);
        pair
    }

    fn to_physical(&self, spec: &[Complex64]) -> Vec<f64> {
        self.coarse.inverse_real(spec)
    }

    /// Spectrum of `κ|u|^p`, or `None` if it is not finite.
    fn source(&mut self, u_hat: &[Complex64]) -> Option<Vec<Complex64>> {
        let n = u_hat.len();
        if self.eq.coupling == 0.0 {
            return Some(vec![Complex64::new(0.0, 0.0); n]);
        }
        pad_double(u_hat, &mut self.pad);
        self.fine.inverse(&mut self.pad);
        let eq = self.eq;
        for c in self.pad.iter_mut() {
            let s = eq.source(c.re);
            if !s.is_finite() {
                return None;
            }
            *c = Complex64::new(s, 0.0);
        }
        self.fine.forward_in_place(&mut self.pad);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        restrict_half(&self.pad, &mut out);
        Some(out)
    }

    /// One Lawson RK4 step.
    fn step(&mut self, y: &Pair, dt: f64) -> Option<Pair> {
        let n = y.u.len();
        let full = self.flow(dt);
        let half = self.flow(0.5 * dt);
        let zero = || vec![Complex64::new(0.0, 0.0); n];

        let k1 = self.source(&y.u)?;
        // a = E_h y
        let mut a = y.clone();
        half.apply(&mut a.u, &mut a.v);
        // E_h (0, k1)
        let (mut b1u, mut b1v) = (zero(), zero());
        half.apply_forcing(&k1, &mut b1u, &mut b1v);

        let u2: Vec<Complex64> = a.u.iter().zip(&b1u).map(|(x, b)| x + 0.5 * dt * b).collect();
        let k2 = self.source(&u2)?;
        // y3 = a + dt/2 (0, k2): u-component unchanged
        let k3 = self.source(&a.u)?;
        let mut ey = y.clone();
        full.apply(&mut ey.u, &mut ey.v);
        let (mut b3u, mut b3v) = (zero(), zero());
        half.apply_forcing(&k3, &mut b3u, &mut b3v);
        let u4: Vec<Complex64> = ey.u.iter().zip(&b3u).map(|(x, b)| x + dt * b).collect();
        let k4 = self.source(&u4)?;

        let (mut e1u, mut e1v) = (zero(), zero());
        full.apply_forcing(&k1, &mut e1u, &mut e1v);
        let k23: Vec<Complex64> = k2.iter().zip(&k3).map(|(a, b)| a + b).collect();
        let (mut h23u, mut h23v) = (zero(), zero());
        half.apply_forcing(&k23, &mut h23u, &mut h23v);
        let c = dt / 6.0;
        let mut out = ey;
        for k in 0..n {
            out.u[k] += c * (e1u[k] + 2.0 * h23u[k]);
            out.v[k] += c * (e1v[k] + 2.0 * h23v[k] + k4[k]);
        }
        if out.u.iter().chain(&out.v).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return None;
        }
        Some(out)
    }
}

/// Result of a single step: either the advanced state or a non-finite value,
/// which near blow-up is expected rather than an error.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    Advanced(Box<SolverState>),
    BlowupProximate,
}

/// Advance `state` by one integrating-factor RK4 step of size `dt`.
pub fn step(state: &SolverState, eq: &Equation, dt: f64) -> Result<StepOutcome> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("step size must be positive, got {dt}")));
    }
    let spec = *state.u.spec();
    let mut stepper = Stepper::new(spec, *eq);
    let y = stepper.to_spectral(&state.u, &state.v);
    Ok(match stepper.step(&y, dt) {
        None => StepOutcome::BlowupProximate,
        Some(next) => {
            let u = stepper.to_physical(&next.u);
            let v = stepper.to_physical(&next.v);
            if u.iter().chain(&v).any(|x| !x.is_finite()) {
                StepOutcome::BlowupProximate
            } else {
                let u = GridFunction::from_raw(spec, u);
                StepOutcome::Advanced(Box::new(SolverState {
                    t: state.t + dt,
                    max_abs_u: u.max_abs(),
                    u,
                    v: GridFunction::from_raw(spec, v),
                    dt,
                    steps_taken: state.steps_taken + 1,
                }))
            }
        }
    })
}

/// Fixed-step march recording every `record_every`-th state.
pub fn march_fixed(
    data: &DataFamily,
    eq: &Equation,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || record_every == 0 {
        return Err(Error::Config("march_fixed needs dt > 0 and record_every >= 1".into()));
    }
    let spec = *data.spec();
    let mut stepper = Stepper::new(spec, *eq);
    let mut y = stepper.to_spectral(&data.u0(), &data.u1());
    let mut traj = Trajectory::new();
    traj.push(0.0, data.u0(), data.u1())?;
    for i in 1..=steps {
        y = stepper
            .step(&y, dt)
            .ok_or_else(|| Error::Domain(format!("non-finite state at step {i}")))?;
        if i % record_every == 0 {
            let u = GridFunction::from_raw(spec, stepper.to_physical(&y.u));
            let v = GridFunction::from_raw(spec, stepper.to_physical(&y.v));
            traj.push(i as f64 * dt, u, v)?;
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifespanStatus {
    BlownUp,
    SurvivedHorizon,
    TruncationAbort,
    /// Blow-up detected but the bracket could not be tightened.
    Unresolved,
}

impl LifespanStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BlownUp => "blown_up",
            Self::SurvivedHorizon => "survived_horizon",
            Self::TruncationAbort => "truncation_abort",
            Self::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifespanEstimate {
    pub status: LifespanStatus,
    pub t_low: f64,
    pub t_high: f64,
    pub threshold_used: f64,
    pub grid: GridSpec,
    pub steps: usize,
    pub dt_min_used: f64,
    pub max_abs_u: f64,
}

impl LifespanEstimate {
    pub fn bracket_ok(&self) -> bool {
        self.t_low <= self.t_high
            && (self.status != LifespanStatus::BlownUp
                || self.t_high - self.t_low <= 0.01 * self.t_high)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FunctionalTrace {
    pub times: Vec<f64>,
    pub u_inf: Vec<f64>,
    pub w_plus: Vec<f64>,
    pub w_minus: Vec<f64>,
}

impl FunctionalTrace {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("t,U,w_plus,w_minus\n");
        for i in 0..self.times.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.times[i], self.u_inf[i], self.w_plus[i], self.w_minus[i]
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverControl {
    pub horizon: f64,
    /// Relative local error per step (step doubling).
    pub tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Overrides `max(1e6 ε, 1e4)`.
    pub threshold: Option<f64>,
    /// Target `(T_high - T_low) / T_high`.
    pub bracket: f64,
    /// Store the state every this many time units (and at the end).
    pub record_interval: Option<f64>,
    pub trace_functionals: bool,
    pub max_steps: usize,
}

impl Default for SolverControl {
    fn default() -> Self {
        Self {
            horizon: 1e3,
            tol: 1e-7,
            dt_init: 1.0 / 16.0,
            dt_min: 1e-14,
            dt_max: 0.5,
            threshold: None,
            bracket: 0.004,
            record_interval: None,
            trace_functionals: false,
            max_steps: 2_000_000,
        }
    }
}

impl SolverControl {
    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }

    /// Same run at half the time resolution.
    pub fn refined(&self) -> Self {
        Self {
            tol: self.tol / 16.0,
            dt_init: self.dt_init / 2.0,
            dt_max: self.dt_max / 2.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct LifespanRun {
    pub estimate: LifespanEstimate,
    pub trace: FunctionalTrace,
    pub trajectory: Option<Trajectory>,
}

/// Threshold used when the control does not override it.
pub fn default_threshold(eps: f64) -> f64 {
    (1e6 * eps).max(1e4)
}

fn spectral_l1(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).sum::<f64>() / a.len() as f64
}

/// Zero of the line through the last samples of `‖u‖^{-(p-1)/2}` against `t`.
fn extrapolate_blowup(samples: &VecDeque<(f64, f64)>, p: f64) -> Option<f64> {
    if samples.len() < 4 {
        return None;
    }
    let e = -(p - 1.0) / 2.0;
    let t0 = samples.back()?.0;
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().map(|(t, m)| (t - t0, m.powf(e))).unzip();
    let (slope, intercept, _) = linear_regression(&x, &y).ok()?;
    if slope < 0.0 && intercept > 0.0 {
        Some(t0 - intercept / slope)
    } else {
        None
    }
}

/// Adaptive march until blow-up, the horizon, or a boundary violation.
pub fn solve_lifespan(data: &DataFamily, eq: &Equation, ctrl: &SolverControl) -> Result<LifespanRun> {
    if !(eq.p > 1.0 && eq.p <= 3.0) && eq.coupling != 0.0 {
        return Err(Error::Exponent(eq.p));
    }
    if !(ctrl.horizon > 0.0 && ctrl.dt_min > 0.0 && ctrl.dt_max >= ctrl.dt_min && ctrl.tol > 0.0) {
        return Err(Error::Config("invalid solver control".into()));
    }
    let spec = *data.spec();
    let threshold = ctrl.threshold.unwrap_or_else(|| default_threshold(data.eps));
    let mut estimate = LifespanEstimate {
        status: LifespanStatus::SurvivedHorizon,
        t_low: ctrl.horizon,
        t_high: ctrl.horizon,
        threshold_used: threshold,
        grid: spec,
        steps: 0,
        dt_min_used: ctrl.dt_init,
        max_abs_u: 0.0,
    };
    let mut trace = FunctionalTrace::default();
    let mut trajectory = ctrl.record_interval.map(|_| Trajectory::new());
    if let Some(tr) = trajectory.as_mut() {
        tr.push(0.0, data.u0(), data.u1())?;
    }
    if data.degenerate {
        if let Some(tr) = trajectory.as_mut() {
            let z = GridFunction::zeros(spec);
            tr.push(ctrl.horizon, z.clone(), z)?;
        }
        return Ok(LifespanRun {
            estimate,
            trace,
            trajectory,
        });
    }

    let mut stepper = Stepper::new(spec, *eq);
    let mut y = stepper.to_spectral(&data.u0(), &data.u1());
    let floor = 1e-3 * data.u0().max_abs().max(data.u1().max_abs()).max(f64::MIN_POSITIVE);
    let mut t = 0.0;
    let mut dt = ctrl.dt_init.min(ctrl.dt_max);
    let mut u_phys = data.u0().into_values();
    let mut u_max = u_phys.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut v_max = data.u1().max_abs();
    let mut samples: VecDeque<(f64, f64)> = VecDeque::with_capacity(EXTRAPOLATION_SAMPLES + 1);
    let mut detected: Option<f64> = None;
    let mut next_record = ctrl.record_interval.unwrap_or(f64::INFINITY);
    let mut steps = 0;

    loop {
        if t >= ctrl.horizon * (1.0 - 1e-14) {
            estimate.status = LifespanStatus::SurvivedHorizon;
            estimate.t_low = t;
            estimate.t_high = t;
            break;
        }
        if steps >= ctrl.max_steps {
            return Err(Error::Config(format!("step budget {} exhausted at t = {t}", ctrl.max_steps)));
        }
        let dt_try = dt.min(ctrl.horizon - t).min(next_record - t);
        let attempt = stepper.step(&y, dt_try).and_then(|full| {
            let mid = stepper.step(&y, 0.5 * dt_try)?;
            let fine = stepper.step(&mid, 0.5 * dt_try)?;
            Some((full, fine))
        });
        let Some((full, fine)) = attempt else {
            if dt_try * 0.5 >= ctrl.dt_min {
                dt = dt_try * 0.5;
                continue;
            }
            break;
        };
        let new_u = stepper.to_physical(&fine.u);
        let new_u_max = new_u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let new_v_max = stepper.to_physical(&fine.v).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err_u = spectral_l1(&full.u, &fine.u) / (new_u_max.max(u_max) + floor);
        let err_v = spectral_l1(&full.v, &fine.v) / (new_v_max.max(v_max) + new_u_max + floor);
        let err = err_u.max(err_v);
        let doubled = new_u_max > 2.0 * u_max && u_max > floor;
        if (err > ctrl.tol || doubled || !new_u_max.is_finite()) && dt_try * 0.5 >= ctrl.dt_min {
            dt = dt_try * 0.5;
            continue;
        }
        if !new_u_max.is_finite() {
            break;
        }

        // accept
        y = fine;
        t += dt_try;
        steps += 1;
        u_phys = new_u;
        u_max = new_u_max;
        v_max = new_v_max;
        estimate.dt_min_used = estimate.dt_min_used.min(dt_try);
        if err < ctrl.tol / 32.0 && dt_try == dt {
            dt = (2.0 * dt).min(ctrl.dt_max);
        }

        samples.push_back((t, u_max));
        if samples.len() > EXTRAPOLATION_SAMPLES {
            samples.pop_front();
        }
        if !data.periodic {
            let u = GridFunction::from_raw(spec, u_phys.clone());
            if u.edge_max() > 1e-8 * u_max {
                // A front cannot reach the boundary within the last percent of
                // the lifespan; boundary noise there is the unresolved spike.
                let tb = extrapolate_blowup(&samples, eq.p).filter(|&tb| tb >= t && tb - t <= 0.01 * tb);
                estimate.status = match tb {
                    Some(_) => LifespanStatus::BlownUp,
                    None => LifespanStatus::TruncationAbort,
                };
                estimate.t_low = t;
                estimate.t_high = tb.unwrap_or(t);
                break;
            }
        }
        if ctrl.trace_functionals && t >= CORRIDOR_T0 {
            let u = GridFunction::from_raw(spec, u_phys.clone());
            let (uv, wp, wm) = functionals_of(&u, t);
            trace.times.push(t);
            trace.u_inf.push(uv);
            trace.w_plus.push(wp);
            trace.w_minus.push(wm);
        }
        if let Some(tr) = trajectory.as_mut() {
            if t >= next_record * (1.0 - 1e-14) {
                let u = GridFunction::from_raw(spec, u_phys.clone());
                let v = GridFunction::from_raw(spec, stepper.to_physical(&y.v));
                tr.push(t, u, v)?;
                next_record += ctrl.record_interval.unwrap_or(f64::INFINITY);
            }
        }

        if u_max >= threshold {
            if let Some(tb) = extrapolate_blowup(&samples, eq.p) {
                detected = Some(tb);
                if tb - t <= ctrl.bracket * tb {
                    break;
                }
            }
        }
    }

    estimate.steps = steps;
    estimate.max_abs_u = u_max;
    if estimate.status == LifespanStatus::SurvivedHorizon && t < ctrl.horizon * (1.0 - 1e-14) {
        // the loop stopped early on a non-finite state or dt underflow
        let tb = detected.or_else(|| extrapolate_blowup(&samples, eq.p));
        match tb {
            Some(tb) if tb >= t => {
                estimate.t_low = t;
                estimate.t_high = tb;
                estimate.status = if tb - t <= 0.01 * tb {
                    LifespanStatus::BlownUp
                } else {
                    LifespanStatus::Unresolved
                };
            }
            _ => {
                estimate.t_low = t;
                estimate.t_high = t;
                estimate.status = LifespanStatus::Unresolved;
            }
        }
    } else if let (Some(tb), LifespanStatus::SurvivedHorizon) = (detected, estimate.status) {
        if tb - t <= ctrl.bracket * tb {
            estimate.status = LifespanStatus::BlownUp;
            estimate.t_low = t;
            estimate.t_high = tb.max(t);
        }
    }
    if let Some(tr) = trajectory.as_mut() {
        if tr.times().last().is_some_and(|&last| t > last) {
            let u = GridFunction::from_raw(spec, u_phys);
            let v = GridFunction::from_raw(spec, stepper.to_physical(&y.v));
            tr.push(t, u, v)?;
        }
    }
    Ok(LifespanRun {
        estimate,
        trace,
        trajectory,
    })
}

/// Relative change of `T_high` when the grid is doubled and the time
/// resolution halved. `make_data` builds the same data on a given grid.
pub fn refinement_change(
    make_data: impl Fn(GridSpec) -> Result<DataFamily>,
    spec: GridSpec,
    eq: &Equation,
    ctrl: &SolverControl,
) -> Result<(LifespanEstimate, LifespanEstimate, f64)> {
    let coarse = solve_lifespan(&make_data(spec)?, eq, ctrl)?.estimate;
    let fine = solve_lifespan(&make_data(spec.refined())?, eq, &ctrl.refined())?.estimate;
    let change = (fine.t_high - coarse.t_high).abs() / fine.t_high.abs().max(f64::MIN_POSITIVE);
    Ok((coarse, fine, change))
}

/// 4-point Lagrange interpolation of periodic samples at `x`.
fn cubic_at(u: &GridFunction, x: f64) -> f64 {
    let spec = u.spec();
    let h = spec.spacing();
    let n = spec.points() as i64;
    let s = (x - spec.node(0)) / h;
    let j = s.floor() as i64;
    let r = s - j as f64;
    let vals = u.values();
    let at = |k: i64| vals[k.rem_euclid(n) as usize];
    let (a, b, c, d) = (at(j - 1), at(j), at(j + 1), at(j + 2));
    // nodes at -1, 0, 1, 2
    a * (-r * (r - 1.0) * (r - 2.0) / 6.0)
        + b * ((r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0)
        + c * (-(r + 1.0) * r * (r - 2.0) / 2.0)
        + d * ((r + 1.0) * r * (r - 1.0) / 6.0)
}

/// Infimum of `u` over the interval `(a, b)` (closed if `closed`). With fewer
/// than 8 grid nodes inside, 8 interpolated points are added.
pub fn region_infimum(u: &GridFunction, a: f64, b: f64, closed: bool) -> f64 {
    let inside = |x: f64| if closed { x >= a && x <= b } else { x > a && x < b };
    let mut count = 0;
    let mut inf = f64::INFINITY;
    for (x, v) in u.spec().nodes().zip(u.values()) {
        if inside(x) {
            count += 1;
            inf = inf.min(*v);
        }
    }
    if count < 8 {
        for i in 0..8 {
            let x = a + (b - a) * (i as f64 + 0.5) / 8.0;
            inf = inf.min(cubic_at(u, x));
        }
    }
    inf
}

/// `(U, w_+, w_-)` with `U = √t inf_{|x| ≤ √t} u` and
/// `w_± = t inf_{√t/2 < ±x < √t} u`.
fn functionals_of(u: &GridFunction, t: f64) -> (f64, f64, f64) {
    let r = t.sqrt();
    let big_u = r * region_infimum(u, -r, r, true);
    let wp = t * region_infimum(u, 0.5 * r, r, false);
    let wm = t * region_infimum(u, -r, -0.5 * r, false);
    (big_u, wp, wm)
}

pub fn track_functionals(state: &SolverState) -> Result<(f64, f64, f64)> {
    if state.t < CORRIDOR_T0 {
        return Err(Error::Domain(format!(
            "corridor functionals need t >= {CORRIDOR_T0}, got {}",
            state.t
        )));
    }
    Ok(functionals_of(&state.u, state.t))
}

/// `U(t)` alone, defined for every `t > 0`.
pub fn parabolic_infimum(u: &GridFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain("U(t) needs t > 0".into()));
    }
    let r = t.sqrt();
    Ok(r * region_infimum(u, -r, r, true))
}

/// 4-point Gauss-Legendre on `[-1, 1]`.
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
];

/// Minimum number of τ-quadrature nodes before the first checkpoint.
pub const MIN_DUHAMEL_NODES: usize = 64;

/// Largest relative `L²` mismatch between the trajectory and the right-hand
/// side of the Duhamel formula
/// `u(t) = S(t)(u₀ + u₁) + ∂t S(t) u₀ + ∫₀ᵗ S(t - τ) κ|u(τ)|^p dτ`.
///
/// The τ-integral uses 4 Gauss-Legendre nodes per trajectory interval with
/// `u(τ)` from cubic Hermite interpolation of the stored `(u, ∂t u)`.
/// Checkpoints are up to 8 evenly spaced samples, always including the last.
pub fn duhamel_residual(traj: &Trajectory, eq: &Equation) -> Result<f64> {
    let times = traj.times();
    let states = traj.states();
    let m = times.len();
    let first_ok = MIN_DUHAMEL_NODES / GL4.len();
    if m <= first_ok {
        return Err(Error::Domain(format!(
            "duhamel check needs more than {first_ok} trajectory intervals, got {}",
            m.saturating_sub(1)
        )));
    }
    let spec = *states[0].0.spec();
    let sp = spec.spectral();
    let freq = sp.freq().to_vec();
    let n = spec.points();

    // source spectra at every quadrature node, dealiased like the stepper
    let mut stepper = Stepper::new(spec, *eq);
    let hats: Vec<Pair> = states.iter().map(|(u, v)| stepper.to_spectral(u, v)).collect();
    let mut node_t = Vec::new();
    let mut node_w = Vec::new();
    let mut node_f = Vec::new();
    let mut node_interval = Vec::new();
    for i in 0..m - 1 {
        let (ta, tb) = (times[i], times[i + 1]);
        let d = tb - ta;
        let (a, b) = (&hats[i], &hats[i + 1]);
        for (z, w) in GL4 {
            let s = 0.5 * (1.0 + z);
            let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
            let h10 = s * s * s - 2.0 * s * s + s;
            let h01 = -2.0 * s * s * s + 3.0 * s * s;
            let h11 = s * s * s - s * s;
            let u_hat: Vec<Complex64> = (0..n)
                .map(|k| h00 * a.u[k] + h10 * d * a.v[k] + h01 * b.u[k] + h11 * d * b.v[k])
                .collect();
            let src = stepper
                .source(&u_hat)
                .ok_or_else(|| Error::Domain(format!("non-finite source near t = {ta}")))?;
            node_t.push(ta + s * d);
            node_w.push(0.5 * w * d);
            node_f.push(src);
            node_interval.push(i);
        }
    }

    let stride = ((m - 1 - first_ok) / 7).max(1);
    let mut checkpoints: Vec<usize> = (first_ok..m).step_by(stride).collect();
    if checkpoints.last() != Some(&(m - 1)) {
        checkpoints.push(m - 1);
    }

    let (u0, v0) = (&states[0].0, &states[0].1);
    let Pair { u: u0h, v: v0h } = stepper.to_spectral(u0, v0);
    let mut worst: f64 = 0.0;
    for &c in &checkpoints {
        let tc = times[c];
        let mut rhs: Vec<Complex64> = (0..n)
            .map(|k| {
                let (s, st) = symbol_at(tc, freq[k]);
                (u0h[k] + v0h[k]) * s + u0h[k] * st
            })
            .collect();
        for q in 0..node_t.len() {
            if node_interval[q] >= c {
                break;
            }
            let lag = tc - node_t[q];
            let w = node_w[q];
            for k in 0..n {
                rhs[k] += node_f[q][k] * (w * symbol_at(lag, freq[k]).0);
            }
        }
        let rhs = sp.inverse_real(&rhs);
        let u = states[c].0.values();
        let diff: f64 = u.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = if norm > 0.0 { diff / norm } else { diff };
        worst = worst.max(rel);
    }
    Ok(worst)
}
