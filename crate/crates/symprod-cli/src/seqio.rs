//! Sequence input: inline generator specs or one-integer-per-line files
//! (whose first line may itself be a generator spec).

use anyhow::Context;

use symprod::reduced::ShapeSequence;

pub fn load_sequence(arg: &str, horizon: usize) -> anyhow::Result<ShapeSequence> {
    if looks_like_spec(arg) {
        return Ok(ShapeSequence::from_spec(arg, horizon)?);
    }
    let body = std::fs::read_to_string(arg).with_context(|| format!("reading `{arg}`"))?;
    let first = body.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if looks_like_spec(first) {
        return Ok(ShapeSequence::from_spec(first, horizon)?);
    }
    let values: Vec<u128> = body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<u128>().with_context(|| format!("bad entry `{l}`")))
        .collect::<anyhow::Result<_>>()?;
    Ok(ShapeSequence::explicit(values)?)
}

fn looks_like_spec(s: &str) -> bool {
    let s = s.trim();
    s.starts_with("affine ") || s.starts_with("geometric ")
}
