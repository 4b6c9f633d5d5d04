use clap::Args as ClapArgs;
use serde_json::json;

use symprod::parse_ratio;
use symprod::rearrange::{
    find_equivalent_rearrangement, find_rearrangement, log_gap, out_shadow, verify_rearrangement,
    EquivalentOutcome, RearrangementOutcome,
};

use crate::seqio::load_sequence;
use crate::{f64_cell, rat_cell, Format, Outcome};

#[derive(ClapArgs)]
pub struct Args {
    /// Source sequence: file path or inline spec ("affine a b", "geometric a r").
    k: String,
    /// Target sequence; omit with --shadow or --log-gap.
    l: Option<String>,
    /// Ratio tolerance as a rational ("0.1" or "1/10").
    #[arg(long, default_value = "0")]
    epsilon: String,
    /// Exception budget (positions allowed to miss).
    #[arg(long, default_value_t = 0)]
    budget: usize,
    /// Require the stricter diagonal + exact-multiset variant.
    #[arg(long)]
    equivalent: bool,
    /// Emit the tolerance graph of the source sequence instead.
    #[arg(long)]
    shadow: bool,
    /// Emit the tail-window log-gap profile instead.
    #[arg(long)]
    log_gap: bool,
    /// Horizon used when a sequence is an inline generator spec.
    #[arg(long, default_value_t = 64)]
    horizon: usize,
}

pub fn run(args: &Args, format: Format) -> anyhow::Result<Outcome> {
    let epsilon = parse_ratio(&args.epsilon)?;
    let k = load_sequence(&args.k, args.horizon)?;

    if args.shadow {
        let shadow = out_shadow(&k, epsilon);
        let dot: String = shadow
            .edges
            .iter()
            .map(|(a, b)| format!("{a} -- {b}\n"))
            .collect();
        let payload = json!({
            "kind": "out-shadow",
            "epsilon": rat_cell(&epsilon),
            "edges": shadow.edges,
            "component_histogram": shadow.histogram(),
            "discrete": shadow.is_discrete(),
        });
        let stdout = match format {
            Format::Csv => dot.clone(),
            Format::Json => format!("{}\n", serde_json::to_string_pretty(&payload)?),
        };
        return Ok(Outcome {
            stdout,
            files: vec![("shadow.edges".into(), dot)],
            bounds_hold: true,
        });
    }

    if args.log_gap {
        let profile = log_gap(&k)?;
        let rows: Vec<serde_json::Value> = profile
            .windows
            .iter()
            .enumerate()
            .map(|(i, (start, ratio))| {
                json!({
                    "window_start": start,
                    "min_ratio": ratio.map(|r| rat_cell(&r)),
                    "log": profile.log_at(i).map(f64_cell),
                })
            })
            .collect();
        let payload = json!({"kind": "log-gap", "windows": rows});
        let csv = {
            let mut out = String::from("window_start,min_ratio,log\n");
            for (i, (start, ratio)) in profile.windows.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    start,
                    ratio.map(|r| rat_cell(&r)).unwrap_or_else(|| "-".into()),
                    profile.log_at(i).map(f64_cell).unwrap_or_else(|| "-".into()),
                ));
            }
            out
        };
        let stdout = match format {
            Format::Csv => csv.clone(),
            Format::Json => format!("{}\n", serde_json::to_string_pretty(&payload)?),
        };
        return Ok(Outcome {
            stdout,
            files: vec![("log-gap.csv".into(), csv)],
            bounds_hold: true,
        });
    }

    let l_arg = args
        .l
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("matching needs a target sequence"))?;
    let l = load_sequence(l_arg, args.horizon)?;

    let (payload, verified) = if args.equivalent {
        match find_equivalent_rearrangement(&k, &l, epsilon, args.budget)? {
            EquivalentOutcome::Found {
                rearrangement,
                diagonal_violations,
            } => {
                let worst = verify_rearrangement(&k, &l, &rearrangement, epsilon.max(
                    symprod::Rat::from_integer(0),
                ));
                // Exact matching: the recheck must come back at gap zero.
                let ok = matches!(&worst, Ok(w) if *w == symprod::Rat::from_integer(0));
                (
                    json!({
                        "kind": "equivalent-rearrangement",
                        "feasible": true,
                        "f": rearrangement.f.images(),
                        "exceptional": rearrangement.exceptions,
                        "diagonal_violations": diagonal_violations,
                        "verified": ok,
                    }),
                    ok,
                )
            }
            EquivalentOutcome::Infeasible {
                unmatched,
                diagonal_violations,
            } => (
                json!({
                    "kind": "equivalent-rearrangement",
                    "feasible": false,
                    "unmatched": unmatched,
                    "diagonal_violations": diagonal_violations,
                }),
                true,
            ),
        }
    } else {
        match find_rearrangement(&k, &l, epsilon, args.budget)? {
            RearrangementOutcome::Found(r) => {
                let worst = verify_rearrangement(&k, &l, &r, epsilon);
                let ok = matches!(&worst, Ok(w) if *w == r.max_matched_epsilon);
                (
                    json!({
                        "kind": "rearrangement",
                        "feasible": true,
                        "f": r.f.images(),
                        "exceptional": r.exceptions,
                        "co_range": r.f.co_range().iter().collect::<Vec<_>>(),
                        "max_matched_epsilon": rat_cell(&r.max_matched_epsilon),
                        "verified": ok,
                    }),
                    ok,
                )
            }
            RearrangementOutcome::Infeasible(info) => {
                // The certificate must itself verify: feasible at the
                // reported minimum, infeasible strictly below it.
                let ok = match info.min_epsilon {
                    Some(min) => {
                        min > epsilon
                            && matches!(
                                find_rearrangement(&k, &l, min, args.budget)?,
                                RearrangementOutcome::Found(_)
                            )
                    }
                    None => true,
                };
                (
                    json!({
                        "kind": "rearrangement",
                        "feasible": false,
                        "unmatched": info.unmatched,
                        "min_epsilon": info.min_epsilon.map(|r| rat_cell(&r)),
                        "verified": ok,
                    }),
                    ok,
                )
            }
        }
    };
    let stdout = format!("{}\n", serde_json::to_string_pretty(&payload)?);
    Ok(Outcome {
        files: vec![("rearrange.json".into(), stdout.clone())],
        stdout,
        bounds_hold: verified,
    })
}
