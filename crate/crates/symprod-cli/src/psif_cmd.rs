use anyhow::Context;
use clap::Args as ClapArgs;
use serde_json::json;

use symprod::derive_seed;
use symprod::reduced::{psi_f, AlmostPermutation, TruncatedElement};

use crate::seqio::load_sequence;
use crate::{rat_cell, Format, Outcome};

#[derive(ClapArgs)]
pub struct Args {
    /// Source shape: file path or inline spec.
    #[arg(long)]
    source: String,
    /// Target shape: file path or inline spec.
    #[arg(long)]
    target: String,
    /// Index map: "identity" or "shift:<offset>".
    #[arg(long, default_value = "identity")]
    f: String,
    #[arg(long, default_value_t = 16)]
    horizon: usize,
    /// Read the input element from a file instead of sampling it.
    #[arg(long)]
    element: Option<String>,
    /// Include the image element's text form in the output.
    #[arg(long)]
    emit_element: bool,
}

pub fn run(args: &Args, seed: u64, format: Format) -> anyhow::Result<Outcome> {
    let source = load_sequence(&args.source, args.horizon)?;
    let target = load_sequence(&args.target, args.horizon)?;
    let a = match &args.element {
        Some(path) => {
            let body = std::fs::read_to_string(path).with_context(|| format!("reading `{path}`"))?;
            TruncatedElement::from_text(&body)?
        }
        None => TruncatedElement::random(source.clone(), derive_seed(seed, &[7])),
    };
    let f = parse_index_map(&args.f, target.horizon())?;
    let out = psi_f(&a, &f, &target)?;
    let element_text = out.element.to_text();
    let payload = json!({
        "kind": "psi-f",
        "certificate": {
            "max_ratio_gap": rat_cell(&out.certificate.max_ratio_gap),
            "flagged_stages": out.certificate.flagged_stages,
            "evaluated_stages": out.certificate.evaluated_stages,
            "horizon_estimate": true,
        },
        "element": if args.emit_element {
            json!(element_text.lines().collect::<Vec<_>>())
        } else {
            json!(null)
        },
    });
    let stdout = match format {
        Format::Csv | Format::Json => format!("{}\n", serde_json::to_string_pretty(&payload)?),
    };
    Ok(Outcome {
        stdout,
        files: vec![("psif-element.txt".into(), element_text)],
        bounds_hold: true,
    })
}

fn parse_index_map(spec: &str, horizon: usize) -> anyhow::Result<AlmostPermutation> {
    if spec == "identity" {
        return Ok(AlmostPermutation::identity(horizon));
    }
    if let Some(offset) = spec.strip_prefix("shift:") {
        let offset: i64 = offset.parse().with_context(|| format!("bad shift `{offset}`"))?;
        return Ok(AlmostPermutation::shift(offset, horizon));
    }
    anyhow::bail!("unknown index map `{spec}` (expected identity or shift:<offset>)")
}
