use clap::Args as ClapArgs;
use rayon::prelude::*;
use serde_json::json;

use symprod::cut_lift::{cut, cut_hom_bound, lift, roundtrip_bound};
use symprod::perm::{all_permutations, random_permutation, Permutation};
use symprod::{derive_seed, Rat};

use crate::{f64_cell, rat_cell, Format, Outcome};

#[derive(ClapArgs)]
pub struct Args {
    /// Source degree n.
    #[arg(long)]
    n: u32,
    /// Single target degree m (default: every m in m-min..=n).
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, default_value_t = 1)]
    m_min: u32,
    /// Scan all pairs (σ, τ); needs n ≤ 7.
    #[arg(long)]
    exhaustive: bool,
    /// Sampled pairs per (n, m) cell otherwise.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

struct Row {
    m: u32,
    mode: &'static str,
    pairs: u64,
    max_hom: Rat,
    hom_bound: Rat,
    max_roundtrip: Rat,
    roundtrip_bound: Rat,
    /// Observed defect·m / 2(n−m): how much of the bound is used.
    bound_usage: f64,
}

pub fn run(args: &Args, seed: u64, format: Format) -> anyhow::Result<Outcome> {
    let n = args.n;
    anyhow::ensure!(n >= 1, "degree must be positive");
    if args.exhaustive {
        anyhow::ensure!(n <= 7, "exhaustive pair scan needs n <= 7, got {n}");
    }
    if let Some(m) = args.m {
        anyhow::ensure!(m >= 1 && m <= n, "need 1 <= m <= n");
    }
    anyhow::ensure!(args.m_min >= 1 && args.m_min <= n, "need 1 <= m-min <= n");
    let ms: Vec<u32> = match args.m {
        Some(m) => vec![m],
        None => (args.m_min..=n).collect(),
    };
    let rows: Vec<Row> = ms
        .par_iter()
        .map(|&m| measure_cell(n, m, args, seed))
        .collect();
    let all_ok = rows.iter().all(|r| {
        r.max_hom <= r.hom_bound && r.max_roundtrip <= r.roundtrip_bound
    });
    let stdout = match format {
        Format::Csv => {
            let mut out = String::from(
                "n,m,mode,pairs,max_hom_defect,hom_bound,hom_ok,max_roundtrip,roundtrip_bound,roundtrip_ok,bound_usage\n",
            );
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    n,
                    r.m,
                    r.mode,
                    r.pairs,
                    rat_cell(&r.max_hom),
                    rat_cell(&r.hom_bound),
                    r.max_hom <= r.hom_bound,
                    rat_cell(&r.max_roundtrip),
                    rat_cell(&r.roundtrip_bound),
                    r.max_roundtrip <= r.roundtrip_bound,
                    f64_cell(r.bound_usage),
                ));
            }
            out
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "n": n,
                        "m": r.m,
                        "mode": r.mode,
                        "pairs": r.pairs,
                        "max_hom_defect": rat_cell(&r.max_hom),
                        "hom_bound": rat_cell(&r.hom_bound),
                        "max_roundtrip": rat_cell(&r.max_roundtrip),
                        "roundtrip_bound": rat_cell(&r.roundtrip_bound),
                        "bound_usage": r.bound_usage,
                    })
                })
                .collect();
            format!(
                "{}\n",
                serde_json::to_string_pretty(&json!({"rows": rows, "all_bounds_hold": all_ok}))?
            )
        }
    };
    Ok(Outcome {
        files: vec![(format!("cutlift-n{n}.csv"), stdout.clone())],
        stdout,
        bounds_hold: all_ok,
    })
}

fn measure_cell(n: u32, m: u32, args: &Args, seed: u64) -> Row {
    let mut max_hom = Rat::from_integer(0);
    let mut max_roundtrip = Rat::from_integer(0);
    let mut pairs = 0u64;
    let mut consider = |p: &Permutation, q: &Permutation| {
        let cut_pq = cut(&p.compose(q), m).expect("m validated");
        let prod = cut(p, m)
            .expect("m validated")
            .compose(&cut(q, m).expect("m validated"));
        let hom = cut_pq.hamming(&prod).ratio();
        if hom > max_hom {
            max_hom = hom;
        }
        let back = lift(&cut(p, m).expect("m validated"), n).expect("n >= m");
        let rt = back.hamming(p).ratio();
        if rt > max_roundtrip {
            max_roundtrip = rt;
        }
        pairs += 1;
    };
    if args.exhaustive {
        for p in all_permutations(n) {
            for q in all_permutations(n) {
                consider(&p, &q);
            }
        }
    } else {
        for t in 0..args.samples as u64 {
            let p = random_permutation(n, derive_seed(seed, &[n as u64, m as u64, t, 0]));
            let q = random_permutation(n, derive_seed(seed, &[n as u64, m as u64, t, 1]));
            consider(&p, &q);
        }
    }
    let hom_bound = cut_hom_bound(n, m);
    let bound_usage = if n == m {
        0.0
    } else {
        let used = max_hom * Rat::new(m as u128, 2 * (n - m) as u128);
        *used.numer() as f64 / *used.denom() as f64
    };
    Row {
        m,
        mode: if args.exhaustive { "exhaustive" } else { "sampled" },
        pairs,
        max_hom,
        hom_bound,
        max_roundtrip,
        roundtrip_bound: roundtrip_bound(n, m),
        bound_usage,
    }
}
