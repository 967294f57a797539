//! Memory-kernel integral inequalities run at equality:
//!
//! `v(t) = εm + c₁ t^γ ∫_{t-1}^t (t-τ) v^p τ^{-β} dτ + c₂ t^γ ∫_{t₀}^{t-1} v^p τ^{-β} dτ`
//!
//! on a uniform grid `t_n = t₀ + n dt` with trapezoidal quadrature. The window
//! weight `t - τ` vanishes at `τ = t`, so the scheme is explicit. The long
//! memory is a running trapezoid sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, ExponentFit};
use crate::special::{predict_lifespan, tilde_t2p, MomentClass};

/// Blow-up is declared once `v >= BLOWUP_FACTOR · ε m`.
pub const BLOWUP_FACTOR: f64 = 1e8;
/// ... or once one step multiplies `v` by more than this.
pub const MAX_STEP_GROWTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdiConfig {
    pub p: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t0: f64,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    /// `1/dt` must be an integer so the window covers whole steps.
    pub dt: f64,
    pub horizon: f64,
    /// Multiplies `ε` in the forcing (the `|M₁|` of the corridor inequality).
    pub m1: f64,
}

impl OdiConfig {
    pub fn new(p: f64, beta: f64, eps: f64) -> Self {
        Self {
            p,
            beta,
            gamma: 0.0,
            t0: 4.0,
            eps,
            c1: 1.0,
            c2: 1.0,
            dt: 0.05,
            horizon: 1e6,
            m1: 1.0,
        }
    }

    fn window_steps(&self) -> Result<usize> {
        let k = (1.0 / self.dt).round();
        if !(self.dt > 0.0) || k < 1.0 || ((1.0 / self.dt) - k).abs() > 1e-9 * k {
            return Err(Error::Config(format!("1/dt must be a positive integer, got dt = {}", self.dt)));
        }
        Ok(k as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Exponent(self.p));
        }
        // β = 1 only occurs with the √t prefactor of the corridor inequality at p = 3/2
        let beta_ok = self.beta >= 0.0 && (self.beta < 1.0 || (self.gamma > 0.0 && self.beta <= 1.0));
        if !beta_ok {
            return Err(Error::Config(format!("beta = {} outside [0, 1)", self.beta)));
        }
        if !(self.t0 >= 4.0) {
            return Err(Error::Config(format!("t0 = {} must be >= 4", self.t0)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite() && self.m1 >= 0.0) {
            return Err(Error::Domain("eps and m1 must be non-negative".into()));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::Config("couplings must be positive".into()));
        }
        if !(self.horizon > self.t0) {
            return Err(Error::Config("horizon must exceed t0".into()));
        }
        self.window_steps().map(|_| ())
    }

    /// Same run with `dt / factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            dt: self.dt / factor as f64,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OdiTrace {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    pub blowup_time: Option<f64>,
}

impl OdiTrace {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("t,v\n");
        for (t, v) in self.times.iter().zip(&self.v) {
            s.push_str(&format!("{t:.16e},{v:.16e}\n"));
        }
        s
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.times.last()?, *self.v.last()?))
    }
}

/// March `cfg` until blow-up or the horizon.
pub fn simulate_odi(cfg: &OdiConfig) -> Result<OdiTrace> {
    simulate_from(cfg, cfg.eps * cfg.m1)
}

/// Stored trace points before the trace is thinned by half.
const MAX_TRACE: usize = 1 << 16;

/// Trace that keeps every `stride`-th step, doubling the stride when full.
struct Recorder {
    trace: OdiTrace,
    stride: usize,
}

impl Recorder {
    fn push(&mut self, n: usize, t: f64, v: f64, force: bool) {
        if !n.is_multiple_of(self.stride) && !force {
            return;
        }
        self.trace.times.push(t);
        self.trace.v.push(v);
        if self.trace.times.len() > MAX_TRACE {
            self.stride *= 2;
            let keep = |xs: &mut Vec<f64>| {
                let mut i = 0;
                xs.retain(|_| {
                    i += 1;
                    (i - 1) % 2 == 0
                });
            };
            keep(&mut self.trace.times);
            keep(&mut self.trace.v);
        }
    }
}

/// March with forcing `seed` (normally `ε m`).
fn simulate_from(cfg: &OdiConfig, seed: f64) -> Result<OdiTrace> {
    cfg.validate()?;
    let k = cfg.window_steps()?;
    let dt = cfg.dt;
    let steps = ((cfg.horizon - cfg.t0) / dt).ceil() as usize;
    let mut rec = Recorder {
        trace: OdiTrace {
            times: vec![cfg.t0],
            v: vec![seed],
            blowup_time: None,
        },
        stride: 1,
    };
    if seed == 0.0 {
        rec.push(steps, cfg.t0 + steps as f64 * dt, 0.0, true);
        return Ok(rec.trace);
    }
    let time = |j: usize| cfg.t0 + j as f64 * dt;
    // f_j = v_j^p τ_j^{-β} for the last k + 1 steps, f[j % (k + 1)]
    let ring = k + 1;
    let mut f = vec![0.0; ring];
    f[0] = seed.powf(cfg.p) * time(0).powf(-cfg.beta);
    // trapezoid of f over [t₀, t_{n-k}]
    let mut memory = 0.0;
    let threshold = BLOWUP_FACTOR * seed;
    let mut prev = seed;
    for n in 1..=steps {
        let t = time(n);
        let lo = n.saturating_sub(k);
        if n > k {
            let m = n - k;
            memory += 0.5 * dt * (f[(m - 1) % ring] + f[m % ring]);
        }
        // window [t_lo, t_n]; the j = n weight (t - τ) is zero
        let mut window = 0.5 * (t - time(lo)) * f[lo % ring];
        for j in lo + 1..n {
            window += (t - time(j)) * f[j % ring];
        }
        window *= dt;
        let pre = t.powf(cfg.gamma);
        let v = seed + cfg.c1 * pre * window + cfg.c2 * pre * memory;
        let blown = !v.is_finite() || v >= threshold || v > MAX_STEP_GROWTH * prev;
        rec.push(n, t, v, blown || n == steps);
        if blown {
            rec.trace.blowup_time = Some(t);
            return Ok(rec.trace);
        }
        f[n % ring] = v.powf(cfg.p) * t.powf(-cfg.beta);
        prev = v;
    }
    Ok(rec.trace)
}

/// Blow-up time of `cfg`, or a horizon error.
pub fn odi_blowup_time(cfg: &OdiConfig) -> Result<f64> {
    simulate_odi(cfg)?
        .blowup_time
        .ok_or(Error::NoBlowup(cfg.horizon))
}

/// `-(p-1)/(1-β)`.
pub fn odi_target_slope(p: f64, beta: f64) -> f64 {
    -(p - 1.0) / (1.0 - beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdiFitRecord {
    pub p: f64,
    pub beta: f64,
    pub gamma: f64,
    pub slope: f64,
    pub target_slope: f64,
    pub r2: f64,
}

/// Log-log fit of blow-up time against `ε`, one run per entry of `eps_list`.
pub fn odi_scaling_fit(base: &OdiConfig, eps_list: &[f64]) -> Result<(ExponentFit, Vec<f64>)> {
    if !(base.beta < 1.0) {
        return Err(Error::Config("the scaling law needs beta < 1".into()));
    }
    let times = eps_list
        .iter()
        .map(|&eps| odi_blowup_time(&OdiConfig { eps, ..*base }))
        .collect::<Result<Vec<_>>>()?;
    Ok((fit_power_law(eps_list, &times)?, times))
}

impl OdiFitRecord {
    pub fn new(cfg: &OdiConfig, fit: &ExponentFit, target_slope: f64) -> Self {
        Self {
            p: cfg.p,
            beta: cfg.beta,
            gamma: cfg.gamma,
            slope: fit.slope,
            target_slope,
            r2: fit.r_squared,
        }
    }
}

/// One two-phase corridor run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoPhaseRun {
    pub eps: f64,
    /// `T̃₂,p`, the end of phase 1.
    pub switch_time: f64,
    /// `w(T̃) / (ε m)`.
    pub plateau_ratio: f64,
    pub plateau_ok: bool,
    /// Seed of phase 2, `T̃^{-1/2} w(T̃)`.
    pub restart_value: f64,
    pub total_time: f64,
}

/// Plateau violations: `w(T̃)` above this multiple of `ε m`.
pub const PLATEAU_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WFitReport {
    pub p: f64,
    pub runs: Vec<TwoPhaseRun>,
    pub fit: ExponentFit,
    pub target_slope: f64,
    pub plateau_violations: usize,
}

/// Corridor inequality (`β = p - 1/2`, `γ = 1/2`) up to `T̃₂,p(ε, c_tilde)`,
/// then the Lemma-type engine with `1 - β = (3-p)/2` seeded by
/// `T̃^{-1/2} w(T̃)`.
pub fn two_phase_run(p: f64, eps: f64, c_tilde: f64, base: &OdiConfig) -> Result<TwoPhaseRun> {
    if !(p > 1.0 && p <= 1.5) {
        return Err(Error::Exponent(p));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be positive".into()));
    }
    if eps >= 1.0 {
        return Err(Error::Domain(format!("eps = {eps} >= 1: phase 1 is degenerate")));
    }
    let switch = tilde_t2p(p, eps, c_tilde)?;
    if switch <= base.t0 + 1.0 {
        return Err(Error::Domain(format!(
            "switch time {switch} does not exceed t0 + 1; eps too large"
        )));
    }
    let seed = eps * base.m1;
    let phase1 = OdiConfig {
        p,
        beta: p - 0.5,
        gamma: 0.5,
        eps,
        horizon: switch,
        ..*base
    };
    let tr = simulate_odi(&phase1)?;
    if let Some(tb) = tr.blowup_time {
        return Ok(TwoPhaseRun {
            eps,
            switch_time: switch,
            plateau_ratio: f64::INFINITY,
            plateau_ok: false,
            restart_value: f64::INFINITY,
            total_time: tb,
        });
    }
    let (t_end, w_end) = tr.last().expect("non-empty");
    let ratio = w_end / seed;
    let restart = t_end.powf(-0.5) * w_end;
    let phase2 = OdiConfig {
        p,
        beta: (p - 1.0) / 2.0,
        gamma: 0.0,
        t0: t_end,
        eps: restart,
        m1: 1.0,
        horizon: base.horizon.max(t_end * 1e3),
        ..*base
    };
    let total = odi_blowup_time(&phase2)?;
    Ok(TwoPhaseRun {
        eps,
        switch_time: switch,
        plateau_ratio: ratio,
        plateau_ok: ratio <= PLATEAU_LIMIT,
        restart_value: restart,
        total_time: total,
    })
}

/// Two-phase runs over `eps_list` fitted against the case-(1)/(2) law.
pub fn w_inequality_fit(p: f64, eps_list: &[f64], c_tilde: f64, base: &OdiConfig) -> Result<WFitReport> {
    let runs = eps_list
        .iter()
        .map(|&e| two_phase_run(p, e, c_tilde, base))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = runs.iter().map(|r| r.total_time).collect();
    let fit = fit_power_law(eps_list, &times)?;
    let target = predict_lifespan(p, 0.5, MomentClass::M0ZeroM1Nonzero, (1.0, 1.0))?
        .regime
        .exponent(p);
    Ok(WFitReport {
        p,
        plateau_violations: runs.iter().filter(|r| !r.plateau_ok).count(),
        runs,
        fit,
        target_slope: target,
    })
}
