//! Predicted lifespans for every moment class across the ε-list.

use dampwave::special::{predict_lifespan, tilde_t2p, LifespanPrediction};
use dampwave::MomentClass;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{num, summary, ReportDir, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRow {
    pub prediction: LifespanPrediction,
    /// Root `T̃₂,p(ε, c̃)`; absent when the defining equation has no root above 1.
    pub tilde_t2p: Option<f64>,
}

pub fn prediction_rows(cfg: &ExperimentConfig) -> Result<Vec<PredictRow>> {
    let pc = &cfg.predict;
    let mut rows = Vec::new();
    for &eps in &cfg.eps_list {
        let tilde = tilde_t2p(cfg.p, eps, pc.c_tilde).ok();
        for class in MomentClass::ALL {
            rows.push(PredictRow {
                prediction: predict_lifespan(cfg.p, eps, class, (pc.c, pc.big_c))?,
                tilde_t2p: tilde,
            });
        }
    }
    Ok(rows)
}

pub fn run_predict(cfg: &ExperimentConfig) -> Result<(Vec<PredictRow>, String)> {
    let cfg = cfg.resolved()?;
    let out = ReportDir::create(&cfg.output_dir)?;
    out.config(&cfg)?;
    let rows = prediction_rows(&cfg)?;
    let mut csv = String::from("p,eps,class,regime,value,upper,tilde_t2p,formula\n");
    let mut lines = vec![format!(
        "{:>10} {:>20} {:>16} {:>14} {:>14} {:>12}  formula",
        "eps", "class", "regime", "c-value", "C-value", "T~2p"
    )];
    for r in &rows {
        let q = &r.prediction;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},\"{}\"\n",
            num(q.p),
            num(q.eps),
            q.class,
            q.regime.as_str(),
            num(q.value),
            num(q.upper),
            r.tilde_t2p.map_or(String::new(), num),
            q.formula_text
        ));
        lines.push(format!(
            "{:>10.3e} {:>20} {:>16} {:>14.6e} {:>14.6e} {:>12}  {}",
            q.eps,
            q.class.as_str(),
            q.regime.as_str(),
            q.value,
            q.upper,
            r.tilde_t2p.map_or("-".into(), |t| format!("{t:.5e}")),
            q.formula_text
        ));
    }
    out.text("predict.csv", &csv)?;
    let text = summary(&format!("predicted lifespans, p = {}", cfg.p), &lines, Verdict::Pass);
    out.text("summary.txt", &text)?;
    Ok((rows, text))
}
