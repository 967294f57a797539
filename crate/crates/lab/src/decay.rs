//! Linear decay of `S(t) f` and its heat residual for `f = g, g', g''`.

use dampwave::propagators::{decay_scan, log_times, residual_scan, DecayReport, ResidualVariant};
use dampwave::special::gaussian_derivative;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::report::{summary, ReportDir, Verdict};

pub const FAMILIES: [&str; 3] = ["g", "g'", "g''"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub family: String,
    /// `decay` or `residual`.
    pub kind: String,
    pub norm_p: f64,
    pub slope: f64,
    pub r2: f64,
    pub target: f64,
    /// The alternative exponent convention, reported for comparison.
    pub printed_target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn row(family: &str, kind: &str, rep: &DecayReport, tol: f64) -> DecayRow {
    DecayRow {
        family: family.into(),
        kind: kind.into(),
        norm_p: rep.p,
        slope: rep.fitted.slope,
        r2: rep.fitted.r_squared,
        target: rep.target_slope,
        printed_target: rep.printed_slope,
        tolerance: tol,
        passed: (rep.fitted.slope - rep.target_slope).abs() <= tol,
    }
}

pub fn run_decay(cfg: &ExperimentConfig) -> Result<(Vec<DecayRow>, Verdict, String)> {
    if cfg.horizon < 10.0 {
        return Err(LabError::Config(format!(
            "horizon {} leaves no decade to fit",
            cfg.horizon
        )));
    }
    let cfg = cfg.resolved()?;
    let out = ReportDir::create(&cfg.output_dir)?;
    out.config(&cfg)?;
    let spec = cfg.grid_spec()?;
    let d = &cfg.decay;
    let times = log_times(d.t_min, cfg.horizon, d.samples);
    let window = Some((d.window.0, d.window.1.min(cfg.horizon)));
    let mut rows = Vec::new();
    for (j, name) in FAMILIES.iter().enumerate() {
        let f = gaussian_derivative(j, spec)?;
        let tag = ["", "1", "2"][j];
        let dec = decay_scan(&f, d.norm_p, &times, window)?;
        out.text(&format!("decay_g{tag}.csv"), &dec.to_csv_string())?;
        rows.push(row(name, "decay", &dec, cfg.tolerances.decay));
        let res = residual_scan(&f, d.norm_p, &times, ResidualVariant::Heat, window)?;
        out.text(&format!("residual_g{tag}.csv"), &res.to_csv_string())?;
        rows.push(row(name, "residual", &res, cfg.tolerances.residual));
    }
    out.json("decay_fits.json", &rows)?;
    let verdict = if rows.iter().all(|r| r.passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut lines = vec![format!(
        "{:>6} {:>9} {:>10} {:>10} {:>10} {:>9} {:>6}",
        "f", "kind", "slope", "target", "printed", "r2", "ok"
    )];
    for r in &rows {
        lines.push(format!(
            "{:>6} {:>9} {:>10.5} {:>10.5} {:>10.5} {:>9.6} {:>6}",
            r.family, r.kind, r.slope, r.target, r.printed_target, r.r2, r.passed
        ));
    }
    let text = summary(&format!("decay in L^{}", d.norm_p), &lines, verdict);
    out.text("summary.txt", &text)?;
    Ok((rows, verdict, text))
}
