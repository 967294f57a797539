//! Experiment orchestration for the damped-wave laboratory: configuration,
//! ε-sweeps over the PDE solver and the integral-inequality engine, exponent
//! fits against the lifespan laws, and report files.

pub mod config;
pub mod decay;
pub mod error;
pub mod odi;
pub mod predict;
pub mod report;
pub mod sweep;
pub mod verify;

pub use config::{Command, ExperimentConfig};
pub use error::{LabError, Result};
pub use report::Verdict;

/// Verdict and printed summary of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Verdict,
    pub summary: String,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (verdict, summary) = match cfg.command {
        Command::Sweep => {
            let (rep, text) = sweep::run_sweep(cfg)?;
            (rep.verdict, text)
        }
        Command::Lifespan => {
            let (_, v, text) = sweep::run_lifespan(cfg)?;
            (v, text)
        }
        Command::Decay => {
            let (_, v, text) = decay::run_decay(cfg)?;
            (v, text)
        }
        Command::VerifyPropagators => {
            let (_, v, text) = verify::run_verify_propagators(cfg)?;
            (v, text)
        }
        Command::Odi => {
            let (rep, text) = odi::run_odi(cfg)?;
            (rep.verdict, text)
        }
        Command::Predict => {
            let (_, text) = predict::run_predict(cfg)?;
            (Verdict::Pass, text)
        }
    };
    Ok(Outcome { verdict, summary })
}
