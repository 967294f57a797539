//! Lifespan runs over an ε-list and the exponent fit against the lifespan law.

use std::fmt;

use dampwave::fit::{fit_lambert_critical, fit_power_law};
use dampwave::solver::{solve_lifespan, Equation, FunctionalTrace, LifespanStatus};
use dampwave::special::{make_data_family, Regime};
use dampwave::{ExponentFit, LambertFit, MomentClass};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::report::{num, summary, ReportDir, Verdict};

/// Per-run status as persisted in sweep tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    BlownUp,
    SurvivedHorizon,
    TruncationAbort,
    Unresolved,
    /// Blown up, but `T_high` moved too much under refinement.
    Unconverged,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BlownUp => "blown_up",
            Self::SurvivedHorizon => "survived_horizon",
            Self::TruncationAbort => "truncation_abort",
            Self::Unresolved => "unresolved",
            Self::Unconverged => "unconverged",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "blown_up" => Self::BlownUp,
            "survived_horizon" => Self::SurvivedHorizon,
            "truncation_abort" => Self::TruncationAbort,
            "unresolved" => Self::Unresolved,
            "unconverged" => Self::Unconverged,
            _ => return Err(LabError::Config(format!("unknown row status {s:?}"))),
        })
    }
}

impl From<LifespanStatus> for RowStatus {
    fn from(s: LifespanStatus) -> Self {
        match s {
            LifespanStatus::BlownUp => Self::BlownUp,
            LifespanStatus::SurvivedHorizon => Self::SurvivedHorizon,
            LifespanStatus::TruncationAbort => Self::TruncationAbort,
            LifespanStatus::Unresolved => Self::Unresolved,
        }
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-run JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub p: f64,
    pub eps: f64,
    pub class: MomentClass,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub dt_min: f64,
    pub status: RowStatus,
    #[serde(rename = "T_low")]
    pub t_low: f64,
    #[serde(rename = "T_high")]
    pub t_high: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined_t_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub t_low: f64,
    pub t_high: f64,
    pub status: RowStatus,
}

impl From<&RunRecord> for SweepRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            eps: r.eps,
            t_low: r.t_low,
            t_high: r.t_high,
            status: r.status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub p: f64,
    pub class: MomentClass,
    pub rows: Vec<SweepRow>,
    pub fit: Option<ExponentFit>,
    /// Only at `p = 3/2`.
    pub lambert: Option<LambertFit>,
    pub predicted_slope: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl SweepReport {
    pub fn to_csv_string(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("eps,T_low,T_high,status\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", num(r.eps), num(r.t_low), num(r.t_high), r.status));
    }
    s
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let bad = |line: &str| LabError::Config(format!("malformed sweep row {line:?}"));
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(line));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(line));
            Ok(SweepRow {
                eps: parse(f[0])?,
                t_low: parse(f[1])?,
                t_high: parse(f[2])?,
                status: RowStatus::parse(f[3].trim())?,
            })
        })
        .collect()
}

fn is_critical(p: f64) -> bool {
    (p - 1.5).abs() < 1e-12
}

/// Fits and verdict from the rows alone.
///
/// Any run that did not blow up with a converged bracket makes the sweep
/// unconverged. Otherwise the sweep passes when the power-law slope lies
/// within `tolerance · |predicted|` of the predicted exponent, or at
/// `p = 3/2` when the Lambert-form fit reaches `lambert_r2`.
pub fn assess(
    p: f64,
    class: MomentClass,
    rows: &[SweepRow],
    tolerance: f64,
    lambert_r2: f64,
) -> (Option<ExponentFit>, Option<LambertFit>, f64, Verdict) {
    let predicted = Regime::of(p, class).exponent(p);
    let (eps, times): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.status == RowStatus::BlownUp)
        .map(|r| (r.eps, r.t_high))
        .unzip();
    let fit = fit_power_law(&eps, &times).ok();
    let lambert = if is_critical(p) && class == MomentClass::M0ZeroM1Nonzero {
        fit_lambert_critical(&eps, &times).ok()
    } else {
        None
    };
    let verdict = if rows.iter().any(|r| r.status != RowStatus::BlownUp) {
        Verdict::Unconverged
    } else if let Some(l) = lambert {
        if l.r_squared >= lambert_r2 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    } else {
        match fit {
            Some(f) if (f.slope - predicted).abs() <= tolerance * predicted.abs() => Verdict::Pass,
            _ => Verdict::Fail,
        }
    };
    (fit, lambert, predicted, verdict)
}

/// One lifespan run with optional refinement rerun.
pub fn lifespan_record(cfg: &ExperimentConfig, eps: f64, trace: bool) -> Result<(RunRecord, FunctionalTrace)> {
    let spec = cfg.grid_spec()?;
    let eq = Equation::new(cfg.p);
    let mut ctrl = cfg.solver_control();
    ctrl.trace_functionals = trace;
    let data = make_data_family(cfg.class, eps, spec)?;
    let run = solve_lifespan(&data, &eq, &ctrl)?;
    let est = run.estimate;
    let mut rec = RunRecord {
        p: cfg.p,
        eps,
        class: cfg.class,
        n: spec.points(),
        l: spec.half_width(),
        dt_min: est.dt_min_used,
        status: est.status.into(),
        t_low: est.t_low,
        t_high: est.t_high,
        steps: est.steps,
        refined_t_high: None,
        refinement_change: None,
    };
    if cfg.tolerances.refine && est.status == LifespanStatus::BlownUp {
        let fine = solve_lifespan(
            &make_data_family(cfg.class, eps, spec.refined())?,
            &eq,
            &ctrl.refined(),
        )?
        .estimate;
        let change = (fine.t_high - est.t_high).abs() / fine.t_high;
        rec.refined_t_high = Some(fine.t_high);
        rec.refinement_change = Some(change);
        if fine.status != LifespanStatus::BlownUp || change > cfg.tolerances.refinement {
            rec.status = RowStatus::Unconverged;
        }
    }
    Ok((rec, run.trace))
}

fn run_all(cfg: &ExperimentConfig, trace: bool) -> Result<Vec<(RunRecord, FunctionalTrace)>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    pool.install(|| {
        cfg.eps_list
            .par_iter()
            .map(|&eps| lifespan_record(cfg, eps, trace))
            .collect::<Result<Vec<_>>>()
    })
}

pub fn sweep_report(cfg: &ExperimentConfig, records: &[RunRecord]) -> SweepReport {
    let rows: Vec<SweepRow> = records.iter().map(SweepRow::from).collect();
    let (fit, lambert, predicted, verdict) =
        assess(cfg.p, cfg.class, &rows, cfg.tolerances.slope, cfg.tolerances.lambert_r2);
    SweepReport {
        p: cfg.p,
        class: cfg.class,
        rows,
        fit,
        lambert,
        predicted_slope: predicted,
        tolerance: cfg.tolerances.slope,
        verdict,
    }
}

fn record_lines(records: &[RunRecord]) -> Vec<String> {
    let mut lines = vec![format!(
        "{:>12} {:>14} {:>14} {:>18} {:>10}",
        "eps", "T_low", "T_high", "status", "refine"
    )];
    for r in records {
        lines.push(format!(
            "{:>12.5e} {:>14.6} {:>14.6} {:>18} {:>10}",
            r.eps,
            r.t_low,
            r.t_high,
            r.status,
            r.refinement_change.map_or("-".into(), |c| format!("{c:.2e}"))
        ));
    }
    lines
}

/// Lifespan sweep with fit; writes `run_XX.json`, `sweep.csv`, `fit.json`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(SweepReport, String)> {
    let cfg = cfg.resolved()?;
    let out = ReportDir::create(&cfg.output_dir)?;
    out.config(&cfg)?;
    let records: Vec<RunRecord> = run_all(&cfg, false)?.into_iter().map(|(r, _)| r).collect();
    for (i, r) in records.iter().enumerate() {
        out.json(&format!("run_{i:02}.json"), r)?;
    }
    let report = sweep_report(&cfg, &records);
    out.text("sweep.csv", &report.to_csv_string())?;
    out.json("fit.json", &report)?;
    let mut lines = record_lines(&records);
    lines.push(format!(
        "regime {} predicted slope {:.6} (tolerance {:.0}%)",
        Regime::of(cfg.p, cfg.class).as_str(),
        report.predicted_slope,
        100.0 * report.tolerance
    ));
    if let Some(f) = report.fit {
        lines.push(format!("fitted slope {:.6} r2 {:.6}", f.slope, f.r_squared));
    }
    if let Some(l) = report.lambert {
        lines.push(format!("lambert fit A {:.6} B {:.6} r2 {:.6}", l.a, l.b, l.r_squared));
    }
    let text = summary(
        &format!("sweep p = {} class {}", cfg.p, cfg.class),
        &lines,
        report.verdict,
    );
    out.text("summary.txt", &text)?;
    Ok((report, text))
}

/// Individual lifespan runs with functional traces.
pub fn run_lifespan(cfg: &ExperimentConfig) -> Result<(Vec<RunRecord>, Verdict, String)> {
    let cfg = cfg.resolved()?;
    let out = ReportDir::create(&cfg.output_dir)?;
    out.config(&cfg)?;
    let runs = run_all(&cfg, true)?;
    let mut verdict = Verdict::Pass;
    for (i, (r, trace)) in runs.iter().enumerate() {
        out.json(&format!("run_{i:02}.json"), r)?;
        out.text(&format!("trace_{i:02}.csv"), &trace.to_csv_string())?;
        if !matches!(r.status, RowStatus::BlownUp | RowStatus::SurvivedHorizon) {
            verdict = Verdict::Unconverged;
        }
    }
    let records: Vec<RunRecord> = runs.into_iter().map(|(r, _)| r).collect();
    let text = summary(
        &format!("lifespan p = {} class {}", cfg.p, cfg.class),
        &record_lines(&records),
        verdict,
    );
    out.text("summary.txt", &text)?;
    Ok((records, verdict, text))
}
