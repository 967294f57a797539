//! ε-scaling of the memory-kernel inequalities.

use dampwave::fit::fit_power_law;
use dampwave::odi::{
    odi_target_slope, simulate_odi, w_inequality_fit, OdiConfig, OdiFitRecord, OdiTrace,
};
use dampwave::ExponentFit;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OdiMode};
use crate::error::{LabError, Result};
use crate::report::{num, summary, ReportDir, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdiReport {
    pub record: OdiFitRecord,
    pub eps: Vec<f64>,
    pub blowup_times: Vec<f64>,
    pub plateau_violations: usize,
    pub verdict: Verdict,
}

pub fn base_config(cfg: &ExperimentConfig) -> OdiConfig {
    let o = &cfg.odi;
    OdiConfig {
        p: cfg.p,
        beta: o.beta,
        gamma: o.gamma,
        t0: o.t0,
        eps: 0.0,
        c1: o.c1,
        c2: o.c2,
        dt: o.dt,
        horizon: cfg.horizon,
        m1: o.m1,
    }
}

/// Pass when the slope is within `tol · |target|` and `r² >= r2_min`.
pub fn odi_verdict(fit: &ExponentFit, target: f64, tol: f64, r2_min: f64) -> Verdict {
    if (fit.slope - target).abs() <= tol * target.abs() && fit.r_squared >= r2_min {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn lemma_mode(cfg: &ExperimentConfig, out: &ReportDir) -> Result<OdiReport> {
    let base = base_config(cfg);
    if !(base.beta < 1.0) {
        return Err(LabError::Config("the scaling law needs beta < 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let traces: Vec<OdiTrace> = pool.install(|| {
        cfg.eps_list
            .par_iter()
            .map(|&eps| simulate_odi(&OdiConfig { eps, ..base }))
            .collect::<dampwave::Result<Vec<_>>>()
    })?;
    let mut times = Vec::new();
    for (i, (tr, eps)) in traces.iter().zip(&cfg.eps_list).enumerate() {
        out.text(&format!("odi_trace_{i:02}.csv"), &tr.to_csv_string())?;
        times.push(
            tr.blowup_time
                .ok_or(LabError::Core(dampwave::Error::NoBlowup(cfg.horizon)))
                .map_err(|e| LabError::Config(format!("eps = {eps}: {e}")))?,
        );
    }
    let fit = fit_power_law(&cfg.eps_list, &times)?;
    let target = odi_target_slope(cfg.p, base.beta);
    Ok(OdiReport {
        record: OdiFitRecord::new(&base, &fit, target),
        eps: cfg.eps_list.clone(),
        blowup_times: times,
        plateau_violations: 0,
        verdict: odi_verdict(&fit, target, cfg.tolerances.slope, cfg.tolerances.r2_min),
    })
}

fn corridor_mode(cfg: &ExperimentConfig) -> Result<OdiReport> {
    let base = base_config(cfg);
    let rep = w_inequality_fit(cfg.p, &cfg.eps_list, cfg.odi.c_tilde, &base)?;
    let record = OdiFitRecord {
        p: cfg.p,
        beta: cfg.p - 0.5,
        gamma: 0.5,
        slope: rep.fit.slope,
        target_slope: rep.target_slope,
        r2: rep.fit.r_squared,
    };
    Ok(OdiReport {
        verdict: odi_verdict(&rep.fit, rep.target_slope, cfg.tolerances.slope, cfg.tolerances.r2_min),
        record,
        eps: cfg.eps_list.clone(),
        blowup_times: rep.runs.iter().map(|r| r.total_time).collect(),
        plateau_violations: rep.plateau_violations,
    })
}

pub fn run_odi(cfg: &ExperimentConfig) -> Result<(OdiReport, String)> {
    let cfg = cfg.resolved()?;
    let out = ReportDir::create(&cfg.output_dir)?;
    out.config(&cfg)?;
    let report = match cfg.odi.mode {
        OdiMode::Lemma => lemma_mode(&cfg, &out)?,
        OdiMode::Corridor => corridor_mode(&cfg)?,
    };
    out.json("odi_fit.json", &report.record)?;
    let mut csv = String::from("eps,blowup_time\n");
    for (e, t) in report.eps.iter().zip(&report.blowup_times) {
        csv.push_str(&format!("{},{}\n", num(*e), num(*t)));
    }
    out.text("odi_runs.csv", &csv)?;
    let r = &report.record;
    let mut lines: Vec<String> = report
        .eps
        .iter()
        .zip(&report.blowup_times)
        .map(|(e, t)| format!("eps {e:>12.5e}  blow-up time {t:>14.4}"))
        .collect();
    lines.push(format!(
        "p {} beta {} gamma {}: slope {:.5} target {:.5} r2 {:.6}",
        r.p, r.beta, r.gamma, r.slope, r.target_slope, r.r2
    ));
    if report.plateau_violations > 0 {
        lines.push(format!("phase-1 plateau violations: {}", report.plateau_violations));
    }
    let text = summary(&format!("odi ({:?} mode)", cfg.odi.mode).to_lowercase(), &lines, report.verdict);
    out.text("summary.txt", &text)?;
    Ok((report, text))
}
