use anyhow::Context;
use clap::Args as ClapArgs;
use rayon::prelude::*;
use serde_json::json;

use symprod::perm::random_permutation;
use symprod::stability::{
    default_c, make_perturbed, recover_conjugator, RecoveryConfig, RecoveryStrategy,
};
use symprod::{derive_seed, parse_ratio, Rat};

use crate::{f64_cell, rat_cell, Format, Outcome};

#[derive(ClapArgs)]
pub struct Args {
    /// Flat key-value manifest: degrees, deltas, trials, strategy,
    /// metric_samples, seed, c.
    #[arg(long)]
    manifest: String,
}

struct Manifest {
    cells: Vec<(u32, u32)>,
    deltas: Vec<Rat>,
    trials: u64,
    strategy_spec: StrategySpec,
    metric_samples: usize,
    seed: Option<u64>,
    c: Rat,
}

enum StrategySpec {
    Exhaustive,
    Vote { queries_per_point: usize },
}

fn parse_manifest(body: &str) -> anyhow::Result<Manifest> {
    let mut cells = Vec::new();
    let mut deltas = Vec::new();
    let mut trials = 100u64;
    let mut strategy_spec = StrategySpec::Vote {
        queries_per_point: 0,
    };
    let mut metric_samples = 200usize;
    let mut seed = None;
    let mut c = default_c();
    for line in body.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("manifest line `{line}` is not `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "degrees" => {
                for tok in value.split(',') {
                    let tok = tok.trim();
                    let (n, m) = match tok.split_once(':') {
                        Some((n, m)) => (n.trim().parse()?, m.trim().parse()?),
                        None => {
                            let n: u32 = tok.parse()?;
                            (n, n)
                        }
                    };
                    cells.push((n, m));
                }
            }
            "deltas" => {
                for tok in value.split(',') {
                    deltas.push(parse_ratio(tok.trim())?);
                }
            }
            "trials" => trials = value.parse()?,
            "strategy" => {
                strategy_spec = match value.split_once(':') {
                    Some(("vote", q)) => StrategySpec::Vote {
                        queries_per_point: q.trim().parse()?,
                    },
                    None if value == "vote" => StrategySpec::Vote {
                        queries_per_point: 0,
                    },
                    None if value == "exhaustive" => StrategySpec::Exhaustive,
                    _ => anyhow::bail!("unknown strategy `{value}`"),
                };
            }
            "metric_samples" => metric_samples = value.parse()?,
            "seed" => seed = Some(value.parse()?),
            "c" => c = parse_ratio(value)?,
            other => anyhow::bail!("unknown manifest key `{other}`"),
        }
    }
    anyhow::ensure!(!cells.is_empty(), "manifest needs `degrees = …`");
    anyhow::ensure!(!deltas.is_empty(), "manifest needs `deltas = …`");
    Ok(Manifest {
        cells,
        deltas,
        trials,
        strategy_spec,
        metric_samples,
        seed,
        c,
    })
}

struct TrialRow {
    n: u32,
    m: u32,
    delta: Rat,
    trial: u64,
    recovered_exact: bool,
    recovery_complete: bool,
    conj: Rat,
    iso: Rat,
    c_emp: Option<f64>,
    size_ok: bool,
}

pub fn run(args: &Args, cli_seed: u64, format: Format) -> anyhow::Result<Outcome> {
    let body = std::fs::read_to_string(&args.manifest)
        .with_context(|| format!("reading manifest `{}`", args.manifest))?;
    let manifest = parse_manifest(&body)?;
    let seed = manifest.seed.unwrap_or(cli_seed);
    let four = Rat::from_integer(4);
    let five = Rat::from_integer(5);

    let mut rows: Vec<TrialRow> = Vec::new();
    let mut summaries = Vec::new();
    let mut all_ok = true;
    for (cell_idx, &(n, m)) in manifest.cells.iter().enumerate() {
        for (delta_idx, &delta) in manifest.deltas.iter().enumerate() {
            let cell_seed = derive_seed(seed, &[cell_idx as u64, delta_idx as u64]);
            let cell_rows: Vec<TrialRow> = (0..manifest.trials)
                .into_par_iter()
                .map(|trial| {
                    run_trial(n, m, delta, trial, cell_seed, &manifest)
                        .expect("trial parameters validated")
                })
                .collect();
            let recovered = cell_rows.iter().filter(|r| r.recovered_exact).count();
            let recovery_rate = recovered as f64 / cell_rows.len() as f64;
            let max_conj = cell_rows.iter().map(|r| r.conj).max().unwrap();
            let max_iso = cell_rows.iter().map(|r| r.iso).max().unwrap();
            let mut sorted_c: Vec<Option<f64>> = cell_rows.iter().map(|r| r.c_emp).collect();
            sorted_c.sort_by(|a, b| match (a, b) {
                (Some(x), Some(y)) => x.partial_cmp(y).unwrap(),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            });
            let quantile = |q: f64| -> Option<f64> {
                let idx = ((sorted_c.len() - 1) as f64 * q).round() as usize;
                sorted_c[idx]
            };
            // Conclusion bounds with the configured constant; δ = 0 cells
            // must be pointwise exact with full recovery.
            let bounds_ok = if delta == Rat::from_integer(0) {
                recovery_rate == 1.0
                    && max_conj == Rat::from_integer(0)
                    && max_iso == Rat::from_integer(0)
            } else {
                cell_rows.iter().all(|r| {
                    r.conj <= four * manifest.c * delta && r.iso <= five * manifest.c * delta
                })
            };
            all_ok &= bounds_ok;
            summaries.push(json!({
                "n": n,
                "m": m,
                "delta": rat_cell(&delta),
                "trials": cell_rows.len(),
                "recovery_rate": recovery_rate,
                "max_conjugation_distance": rat_cell(&max_conj),
                "max_isometry_defect": rat_cell(&max_iso),
                "c_emp_median": quantile(0.5).map(f64_cell),
                "c_emp_q25": quantile(0.25).map(f64_cell),
                "c_emp_q75": quantile(0.75).map(f64_cell),
                "bounds_ok": bounds_ok,
            }));
            rows.extend(cell_rows);
        }
    }

    let mut csv = String::from(
        "n,m,delta,trial,recovered_exact,recovery_complete,conjugation_distance,isometry_defect,c_emp,size_bounds_ok\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.m,
            rat_cell(&r.delta),
            r.trial,
            r.recovered_exact,
            r.recovery_complete,
            rat_cell(&r.conj),
            rat_cell(&r.iso),
            r.c_emp.map(f64_cell).unwrap_or_else(|| "inf".into()),
            r.size_ok,
        ));
    }
    let summary = serde_json::to_string_pretty(&json!({
        "kind": "stability-summary",
        "configured_c": rat_cell(&manifest.c),
        "cells": summaries,
        "all_bounds_hold": all_ok,
    }))?;
    let stdout = match format {
        Format::Csv => format!("{csv}{summary}\n"),
        Format::Json => format!("{summary}\n"),
    };
    Ok(Outcome {
        stdout,
        files: vec![
            ("stability-trials.csv".into(), csv),
            ("stability-summary.json".into(), format!("{summary}\n")),
        ],
        bounds_hold: all_ok,
    })
}

fn run_trial(
    n: u32,
    m: u32,
    delta: Rat,
    trial: u64,
    cell_seed: u64,
    manifest: &Manifest,
) -> anyhow::Result<TrialRow> {
    let alpha = random_permutation(n, derive_seed(cell_seed, &[trial, 0]));
    let phi = make_perturbed(
        n,
        m,
        alpha.clone(),
        delta,
        derive_seed(cell_seed, &[trial, 1]),
        manifest.c,
    )?;
    let cfg = RecoveryConfig {
        strategy: match manifest.strategy_spec {
            StrategySpec::Exhaustive => RecoveryStrategy::Exhaustive,
            StrategySpec::Vote { queries_per_point } => RecoveryStrategy::TranspositionVote {
                queries_per_point,
                seed: derive_seed(cell_seed, &[trial, 2]),
            },
        },
        metric_samples: manifest.metric_samples,
        metric_seed: derive_seed(cell_seed, &[trial, 3]),
        c: manifest.c,
        ..RecoveryConfig::default()
    };
    let report = recover_conjugator(&phi, delta, &cfg)?;
    Ok(TrialRow {
        n,
        m,
        delta,
        trial,
        recovered_exact: report.recovered_alpha == alpha,
        recovery_complete: report.recovery_complete,
        conj: report.conjugation_distance.value,
        iso: report.isometry_defect.value,
        c_emp: report.empirical_c,
        size_ok: report.size_bounds_ok,
    })
}
