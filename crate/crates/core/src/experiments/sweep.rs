use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{estimate_rmaj, DiagnosticsRecord, ExperimentConfig};
use crate::error::{Error, Result};
use crate::params::Family;
use crate::urn::{classify_regime, critical_q, Regime};

/// `start, start + step, …` up to `end` inclusive, rounded to 12 decimals.
pub fn q_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "q step must be positive, got {step}"
        )));
    }
    if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start > end {
        return Err(Error::InvalidArgument(format!(
            "q range [{start}, {end}] must lie in [0, 1] with start <= end"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as u64;
    Ok((0..=count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .map(|q| q.min(1.0))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: Family,
    pub alpha: f64,
    pub q: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub replicates: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub f_alpha: f64,
    pub regime: Regime,
}

/// R_maj estimates over the configured q grid.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let f_alpha = critical_q(&config.params);
    estimate_rmaj(config)?
        .into_iter()
        .map(|e| {
            Ok(SweepRow {
                family: config.params.family(),
                alpha: config.params.alpha(),
                q: e.q,
                n: e.n,
                replicates: e.replicates,
                estimate: e.estimate,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                f_alpha,
                regime: classify_regime(&config.params, e.q)?,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s =
        String::from("family,alpha,q,N,replicates,estimate,ci_low,ci_high,f_alpha,regime\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.family,
            r.alpha,
            r.q,
            r.n,
            r.replicates,
            r.estimate,
            r.ci_low,
            r.ci_high,
            r.f_alpha,
            r.regime
        ));
    }
    s
}

pub fn diagnostics_csv(rows: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(
        "family,alpha,q,N,gamma,c_tilde,A,B,p_high_leq_N,p_low_leq_N,p_escape,event_A_freq\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.family,
            r.alpha,
            r.q,
            r.n,
            r.gamma,
            r.c_tilde,
            r.a,
            r.b,
            r.p_high_leq_n,
            opt(r.p_low_leq_n),
            opt(r.p_escape),
            opt(r.event_a_freq)
        ));
    }
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_text(path, &sweep_csv(rows))
}

pub fn write_diagnostics_csv(path: &Path, rows: &[DiagnosticsRecord]) -> Result<()> {
    write_text(path, &diagnostics_csv(rows))
}
