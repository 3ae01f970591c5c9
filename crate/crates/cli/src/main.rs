mod args;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};
use treecast::broadcast::{simulate_broadcast, BroadcastMode};
use treecast::experiments::seed::replicate_rng;
use treecast::experiments::{
    estimate_rmaj, run_diagnostics, supermartingale_diagnostic, sweep, write_diagnostics_csv,
    write_sweep_csv, ExperimentConfig,
};
use treecast::oracle::{exact_delta_distribution_with_cap, ExactDistribution};
use treecast::tree::grow;
use treecast::urn::{
    classify_regime, critical_q, leading_eigenvalues, numerical_eigenvalues, right_eigenvector,
    simulate_urn, spectrum_report,
};
use treecast::walk::{
    run_walk, stopping_bounds, write_trajectory_csv, StoppingConfig, WalkOptions,
};
use treecast::{Error, ModelParams, Result};

use args::{
    BroadcastArgs, Cli, Command, DiagnosticsArgs, GrowArgs, ModeArg, OracleArgs, PointArgs,
    RmajArgs, StoppingArgs, UrnArgs, WalkArgs,
};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(value) => {
            if let Some(v) = value {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&v).expect("JSON values serialize")
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

/// Returns the JSON to print, or `None` when output went to a file.
fn run(command: Command) -> Result<Option<Value>> {
    match command {
        Command::Grow(a) => grow_cmd(a),
        Command::Broadcast(a) => broadcast_cmd(a),
        Command::Walk(a) => walk_cmd(a),
        Command::Urn(a) => urn_cmd(a),
        Command::Spectrum(a) => spectrum_cmd(a),
        Command::Regime(a) => regime_cmd(a),
        Command::Oracle(a) => oracle_cmd(a),
        Command::Rmaj(a) => rmaj_cmd(a, false),
        Command::Sweep(a) => rmaj_cmd(a, true),
        Command::Diagnostics(a) => diagnostics_cmd(a),
    }
}

fn announce(params: &ModelParams, seed: u64) {
    eprintln!("{params} seed={seed}");
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("record types serialize")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn grow_cmd(a: GrowArgs) -> Result<Option<Value>> {
    let params = a.model.params()?;
    announce(&params, a.seed);
    let n = usize::try_from(a.n)
        .map_err(|_| Error::InvalidArgument(format!("N = {} is too large", a.n)))?;
    let tree = grow(params, n, &mut replicate_rng(a.seed, 0, 0))?;
    if let Some(path) = a.out {
        let mut out = create(&path)?;
        out.write_all(tree.to_parent_text().as_bytes())?;
        out.flush()?;
        eprintln!("wrote {}", path.display());
        return Ok(None);
    }
    let max_outdegree = (1..=tree.len() as u32)
        .map(|v| tree.outdegree(v))
        .max()
        .unwrap_or(0);
    Ok(Some(json!({
        "family": params.family(),
        "alpha": params.alpha(),
        "N": tree.len(),
        "seed": a.seed,
        "root_outdegree": tree.outdegree(1),
        "max_outdegree": max_outdegree,
        "parents": &tree.parents()[2..],
    })))
}

fn broadcast_cmd(a: BroadcastArgs) -> Result<Option<Value>> {
    let params = a.model.params()?;
    announce(&params, a.seed);
    let mode = match a.mode {
        ModeArg::Fused => BroadcastMode::Fused,
        ModeArg::Explicit => BroadcastMode::Explicit,
    };
    let r = simulate_broadcast(
        &params,
        a.q,
        a.n,
        &mut replicate_rng(a.seed, 0, 0),
        mode,
        a.trajectory,
    )?;
    let mut v = r.to_json();
    v["seed"] = json!(a.seed);
    if let Some(t) = &r.trajectory {
        v["trajectory"] = t.iter().map(|s| json!([s.n, s.d1, s.d2])).collect();
    }
    Ok(Some(v))
}

fn stopping_config(params: &ModelParams, q: f64, s: &StoppingArgs) -> Result<StoppingConfig> {
    let c_tilde = s
        .c_tilde
        .unwrap_or_else(|| StoppingConfig::default_c_tilde(params));
    Ok(stopping_bounds(params, q, s.gamma, c_tilde)?.with_boundary(s.boundary.into()))
}

fn walk_cmd(a: WalkArgs) -> Result<Option<Value>> {
    let params = a.model.params()?;
    announce(&params, a.seed);
    let stopping = if a.stopping {
        Some(stopping_config(&params, a.q, &a.stopping_args)?)
    } else {
        None
    };
    let opts = WalkOptions {
        record_trajectory: a.trajectory || a.out.is_some(),
        stride: a.stride,
        track_y: a.track_y,
        stopping: stopping.clone(),
    };
    let r = run_walk(&params, a.q, a.n, &mut replicate_rng(a.seed, 0, 0), &opts)?;
    let mut v = json!({
        "family": params.family(),
        "alpha": params.alpha(),
        "q": a.q,
        "N": a.n,
        "seed": a.seed,
        "delta1": r.final_state.d1,
        "delta2": r.final_state.d2,
        "combined": r.final_state.combined(&params),
    });
    if let (Some(cfg), Some(t)) = (&stopping, &r.stopping) {
        v["stopping"] =
            json!({ "config": to_json(cfg), "tau_high": t.tau_high, "tau_low": t.tau_low });
    }
    if let Some(path) = a.out {
        write_trajectory_csv(create(&path)?, &r.trajectory)?;
        eprintln!("wrote {}", path.display());
    } else if a.trajectory {
        v["trajectory"] = to_json(&r.trajectory);
    }
    Ok(Some(v))
}

fn urn_cmd(a: UrnArgs) -> Result<Option<Value>> {
    let params = a.model.params()?;
    announce(&params, a.seed);
    let u = simulate_urn(&params, a.q, a.n, &mut replicate_rng(a.seed, 0, 0))?;
    let d = u.delta();
    Ok(Some(json!({
        "family": params.family(),
        "alpha": params.alpha(),
        "q": a.q,
        "N": a.n,
        "seed": a.seed,
        "state": to_json(&u),
        "x": u.x(&params),
        "delta1": d.d1,
        "delta2": d.d2,
    })))
}

fn spectrum_cmd(a: PointArgs) -> Result<Option<Value>> {
    let params = a.model.params()?;
    let report = spectrum_report(&params, a.q)?;
    let numerical = numerical_eigenvalues(&report.matrix)?;
    let v1 = right_eigenvector(&report.matrix, report.lambda1)?;
    let mut v = to_json(&report);
    v["numerical_eigenvalues"] = json!(numerical);
    v["eigenvector1"] = json!(v1);
    Ok(Some(v))
}

fn regime_cmd(a: PointArgs) -> Result<Option<Value>> {
    let params = a.model.params()?;
    let (lambda1, lambda2) = leading_eigenvalues(&params, a.q)?;
    Ok(Some(json!({
        "family": params.family(),
        "alpha": params.alpha(),
        "q": a.q,
        "f_alpha": critical_q(&params),
        "regime": classify_regime(&params, a.q)?,
        "lambda1": lambda1,
        "lambda2": lambda2,
    })))
}

fn distribution_json(d: &ExactDistribution) -> Value {
    d.entries
        .iter()
        .map(|&((d1, d2), p)| json!({ "d1": d1, "d2": d2, "prob": p }))
        .collect()
}

fn oracle_cmd(a: OracleArgs) -> Result<Option<Value>> {
    let params = a.model.params()?;
    let dist = exact_delta_distribution_with_cap(&params, a.q, a.n, a.cap)?;
    if let Some(path) = &a.out {
        let mut out = create(path)?;
        dist.write_csv(&mut out, &params, a.q)?;
        out.flush()?;
        eprintln!("wrote {}", path.display());
    }
    if a.rmaj {
        return Ok(Some(json!(dist.rmaj())));
    }
    if a.out.is_some() {
        return Ok(None);
    }
    Ok(Some(json!({
        "family": params.family(),
        "alpha": params.alpha(),
        "q": a.q,
        "N": a.n,
        "rmaj": dist.rmaj(),
        "distribution": distribution_json(&dist),
    })))
}

fn rmaj_cmd(a: RmajArgs, with_regime: bool) -> Result<Option<Value>> {
    let params = a.model.params()?;
    announce(&params, a.seed);
    let mut config = ExperimentConfig::new(params, a.grid.grid()?, a.n, a.reps, a.seed);
    config.workers = a.workers;
    if with_regime || a.out.is_some() {
        let rows = sweep(&config)?;
        return match a.out {
            Some(path) => {
                write_sweep_csv(&path, &rows)?;
                eprintln!("wrote {}", path.display());
                Ok(None)
            }
            None => Ok(Some(to_json(&rows))),
        };
    }
    Ok(Some(to_json(&estimate_rmaj(&config)?)))
}

fn diagnostics_cmd(a: DiagnosticsArgs) -> Result<Option<Value>> {
    let params = a.model.params()?;
    announce(&params, a.seed);
    let mut config = ExperimentConfig::new(params, a.grid.grid()?, a.n, a.reps, a.seed);
    config.workers = a.workers;
    config.gamma = a.stopping.gamma;
    config.c_tilde = a.stopping.c_tilde;
    config.boundary = a.stopping.boundary.into();
    config.bins = a.bins;
    let records = run_diagnostics(&config)?;
    if let Some(path) = a.out {
        write_diagnostics_csv(&path, &records)?;
        eprintln!("wrote {}", path.display());
        return Ok(None);
    }
    let martingale = supermartingale_diagnostic(&config)?;
    Ok(Some(json!({
        "records": to_json(&records),
        "supermartingale": to_json(&martingale),
    })))
}
