use clap::{Args as ClapArgs, ValueEnum};

use symprod::cut_lift::cut_hom_bound;
use symprod::reduced::{
    ConjUpdownFamily, ConstantIdentityFamily, DefectOptions, DefectReport,
    UpdownFamily,
};
use symprod::{derive_seed, Rat};

use crate::seqio::load_sequence;
use crate::{Format, Outcome};

#[derive(ClapArgs)]
pub struct Args {
    /// Source shape: file path or inline spec.
    #[arg(long)]
    source: String,
    /// Target shape: file path or inline spec.
    #[arg(long)]
    target: String,
    /// Stagewise map family.
    #[arg(long, value_enum, default_value_t = MapKind::Updown)]
    map: MapKind,
    #[arg(long, default_value_t = 16)]
    horizon: usize,
    /// Sample count per stage above the exhaustive caps.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MapKind {
    /// `x ↦ x ↕ Sym(l_n)`.
    Updown,
    /// `x ↦ ad_τ(x ↕ Sym(l_n))` with seeded stagewise conjugators.
    Conj,
    /// Constant identity map.
    Const,
}

pub fn run(args: &Args, seed: u64, format: Format) -> anyhow::Result<Outcome> {
    let source = load_sequence(&args.source, args.horizon)?;
    let target = load_sequence(&args.target, args.horizon)?;
    anyhow::ensure!(
        source.horizon() >= args.horizon && target.horizon() >= args.horizon,
        "shapes must cover the horizon"
    );
    let opts = DefectOptions {
        samples: args.samples,
        seed: derive_seed(seed, &[0]),
    };
    let (report, check_hom_bound): (DefectReport, bool) = match args.map {
        MapKind::Updown => (
            DefectReport::measure(&UpdownFamily::new(source.clone(), target.clone())?, args.horizon, opts)?,
            true,
        ),
        MapKind::Conj => (
            DefectReport::measure(
                &ConjUpdownFamily::new(source.clone(), target.clone(), derive_seed(seed, &[1]))?,
                args.horizon,
                opts,
            )?,
            true,
        ),
        MapKind::Const => (
            DefectReport::measure(
                &ConstantIdentityFamily::new(source.clone(), target.clone())?,
                args.horizon,
                opts,
            )?,
            false,
        ),
    };
    // Cutting stages obey 2(k−l)/l; lifting stages are exact homomorphisms.
    let mut bounds_hold = true;
    if check_hom_bound {
        for row in &report.rows {
            let k = source.degree_at(row.stage)?;
            let l = target.degree_at(row.stage)?;
            let bound = if k > l {
                cut_hom_bound(k, l)
            } else {
                Rat::from_integer(0)
            };
            bounds_hold &= row.hom.value <= bound;
        }
    }
    let csv = report.to_csv();
    let stdout = match format {
        Format::Csv => csv.clone(),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&report.to_json())?),
    };
    Ok(Outcome {
        files: vec![
            ("defects.csv".into(), csv),
            (
                "defects.json".into(),
                format!("{}\n", serde_json::to_string_pretty(&report.to_json())?),
            ),
        ],
        stdout,
        bounds_hold,
    })
}
