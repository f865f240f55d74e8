//! Subcommand pipelines. Each returns whether its verifications passed.

use std::path::PathBuf;

use fracdiff::analysis::{decay_fit, DecayReport};
use fracdiff::io::fmt_float;
use fracdiff::representation::{eval_quantity, evaluation_grid, Quantity};
use fracdiff::FundamentalSolution;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{CommandKind, ConfigError, RunConfig};
use crate::output::{alpha_tag, write_atomic, Csv};
use crate::suite::{build_solution, run_suite};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerics(#[from] fracdiff::Error),
    #[error("cannot write artifact: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot encode report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<bool, CliError> {
    match cfg.command {
        CommandKind::Profile => profile(cfg),
        CommandKind::Fundsol => fundsol(cfg),
        CommandKind::Evolve => evolve(cfg),
        CommandKind::Decay => decay(cfg),
        CommandKind::Verify => verify(cfg),
    }
}

fn announce(path: PathBuf) {
    println!("wrote {}", path.display());
}

fn profile(cfg: &RunConfig) -> Result<bool, CliError> {
    for &o in &cfg.orders {
        let fs = build_solution(cfg, o)?;
        let mut buf = Vec::new();
        fs.profile.write_csv(&mut buf)?;
        let tag = alpha_tag(o.alpha());
        println!("{tag}: a0 = {}", fmt_float(fs.a0));
        announce(write_atomic(
            &cfg.out_dir,
            &format!("profile_{tag}.csv"),
            &buf,
        )?);
    }
    Ok(true)
}

/// Physical nodes `tau xi_j` of the table at time `t`.
fn table_nodes(fs: &FundamentalSolution, t: f64) -> Vec<f64> {
    let tau = fs.scale(t);
    fs.profile.grid.nodes().iter().map(|xi| tau * xi).collect()
}

fn fundsol(cfg: &RunConfig) -> Result<bool, CliError> {
    for &o in &cfg.orders {
        let fs = build_solution(cfg, o)?;
        let mut csv = Csv::new(&["t", "x", "E"]);
        for &t in &cfg.times {
            for x in table_nodes(&fs, t) {
                csv.row([fmt_float(t), fmt_float(x), fmt_float(fs.eval(x, t)?)]);
            }
        }
        let tag = alpha_tag(o.alpha());
        announce(write_atomic(
            &cfg.out_dir,
            &format!("fundsol_{tag}.csv"),
            &csv.into_bytes(),
        )?);
    }
    Ok(true)
}

fn evolve(cfg: &RunConfig) -> Result<bool, CliError> {
    for &o in &cfg.orders {
        let fs = build_solution(cfg, o)?;
        let mut csv = Csv::new(&["datum", "which", "t", "x", "value"]);
        for (spec, g) in &cfg.data {
            for &t in &cfg.times {
                let tau = fs.scale(t);
                let reach = 2.0 * g.support_end + 40.0 * tau;
                let grid = evaluation_grid(tau, g.support_end)?;
                let xs: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .copied()
                    .filter(|&x| x <= reach)
                    .collect();
                for &which in &cfg.which {
                    let vals = xs
                        .par_iter()
                        .map(|&x| eval_quantity(&fs, g, which, x, t))
                        .collect::<fracdiff::Result<Vec<f64>>>()?;
                    for (x, v) in xs.iter().zip(vals) {
                        csv.row([
                            spec.clone(),
                            which.as_str().into(),
                            fmt_float(t),
                            fmt_float(*x),
                            fmt_float(v),
                        ]);
                    }
                }
            }
        }
        let tag = alpha_tag(o.alpha());
        announce(write_atomic(
            &cfg.out_dir,
            &format!("evolve_{tag}.csv"),
            &csv.into_bytes(),
        )?);
    }
    Ok(true)
}

fn decay_tables(fits: &[(String, DecayReport)]) -> (Vec<u8>, Vec<u8>) {
    let mut summary = Csv::new(&[
        "alpha",
        "datum",
        "which",
        "p",
        "fitted_slope",
        "theoretical_slope",
        "relative_gap",
        "tolerance",
        "max_prefactor",
        "prefactor_growth",
        "pass",
    ]);
    let mut norms = Csv::new(&["alpha", "datum", "which", "p", "t", "norm", "prefactor"]);
    for (spec, r) in fits {
        summary.row([
            fmt_float(r.alpha),
            spec.clone(),
            r.which.as_str().into(),
            r.p.clone(),
            fmt_float(r.fitted_slope),
            fmt_float(r.theoretical_slope),
            fmt_float(r.relative_gap),
            fmt_float(r.tolerance),
            fmt_float(r.max_prefactor),
            fmt_float(r.prefactor_growth),
            r.pass.to_string(),
        ]);
        for ((t, n), pf) in r.times.iter().zip(&r.norms).zip(&r.prefactors) {
            norms.row([
                fmt_float(r.alpha),
                spec.clone(),
                r.which.as_str().into(),
                r.p.clone(),
                fmt_float(*t),
                fmt_float(*n),
                fmt_float(*pf),
            ]);
        }
    }
    (summary.into_bytes(), norms.into_bytes())
}

fn write_decay(cfg: &RunConfig, fits: &[(String, DecayReport)]) -> Result<(), CliError> {
    let (summary, norms) = decay_tables(fits);
    announce(write_atomic(&cfg.out_dir, "decay_fits.csv", &summary)?);
    announce(write_atomic(&cfg.out_dir, "decay_norms.csv", &norms)?);
    Ok(())
}

fn decay_quantities_only(cfg: &RunConfig) -> Result<(), ConfigError> {
    match cfg
        .which
        .iter()
        .find(|w| !matches!(w, Quantity::W1 | Quantity::W2Dev))
    {
        Some(w) => Err(ConfigError::Invalid(format!(
            "which: decay fits take w1 or w2_minus_2mE, not {}",
            w.as_str()
        ))),
        None => Ok(()),
    }
}

fn decay(cfg: &RunConfig) -> Result<bool, CliError> {
    decay_quantities_only(cfg)?;
    let mut fits = Vec::new();
    for &o in &cfg.orders {
        let fs = build_solution(cfg, o)?;
        for (spec, g) in &cfg.data {
            for &which in &cfg.which {
                for &p in &cfg.p {
                    let r = decay_fit(&fs, g, which, p, &cfg.times)?;
                    println!(
                        "{} {spec} {} p={p}: slope {} (theory {}) gap {} growth {} {}",
                        alpha_tag(r.alpha),
                        which.as_str(),
                        fmt_float(r.fitted_slope),
                        fmt_float(r.theoretical_slope),
                        fmt_float(r.relative_gap),
                        fmt_float(r.prefactor_growth),
                        if r.pass { "PASS" } else { "FAIL" }
                    );
                    fits.push((spec.clone(), r));
                }
            }
        }
    }
    write_decay(cfg, &fits)?;
    Ok(fits.iter().all(|(_, r)| r.pass))
}

fn verify(cfg: &RunConfig) -> Result<bool, CliError> {
    decay_quantities_only(cfg)?;
    let out = run_suite(cfg)?;
    for (k, c) in &out.report.checks {
        if !c.pass {
            let kind = if c.informational { "note" } else { "FAIL" };
            println!("{kind} {k}: max_ratio {}", fmt_float(c.max_ratio));
        }
    }
    let mut json = serde_json::to_vec_pretty(&out.report)?;
    json.push(b'\n');
    announce(write_atomic(&cfg.out_dir, "verify_report.json", &json)?);
    write_decay(cfg, &out.decay)?;
    println!(
        "{}",
        if out.report.pass {
            "all checks passed"
        } else {
            "some checks failed"
        }
    );
    Ok(out.report.pass)
}
