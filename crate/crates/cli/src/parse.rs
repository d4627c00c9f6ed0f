//! Parsing of inline specs, distributions and grids.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use divbound::divergences::{make_divergence, PhiSpec};
use divbound::measures::{
    numeric_ids, pushforward, quadrature_dist, read_function_csv, read_measure_csv, Family,
    PushforwardDist,
};
use divbound::ExtReal;

/// A catalog name (with `alpha`), inline JSON, or a path to a JSON file.
pub fn spec(s: &str, alpha: Option<f64>) -> Result<PhiSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        return PhiSpec::from_json(s).context("invalid --spec JSON");
    }
    if s.ends_with(".json") {
        let text =
            std::fs::read_to_string(s).with_context(|| format!("cannot read spec file {s}"))?;
        return PhiSpec::from_json(&text).with_context(|| format!("invalid spec in {s}"));
    }
    make_divergence(s, alpha).with_context(|| format!("invalid --spec {s}"))
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            let v: f64 = x
                .trim()
                .parse()
                .with_context(|| format!("not a number: {x:?}"))?;
            if !v.is_finite() {
                bail!("not finite: {x:?}");
            }
            Ok(v)
        })
        .collect()
}

fn exactly<const N: usize>(kind: &str, s: &str) -> Result<[f64; N]> {
    let v = numbers(s)?;
    v.try_into()
        .map_err(|v: Vec<f64>| anyhow::anyhow!("{kind} takes {N} numbers, got {}", v.len()))
}

/// Inline family or CSV path. With `g_path`, the CSV holds `ν` and `g` is
/// read from `g_path`; otherwise point ids are the values of `g`.
pub fn dist(s: &str, g_path: Option<&str>, order: usize) -> Result<PushforwardDist> {
    if let Some((kind, rest)) = s.split_once(':') {
        if !Path::new(s).exists() {
            if g_path.is_some() {
                bail!("--g requires --dist to be a CSV file");
            }
            let d = match kind {
                "uniform" => PushforwardDist::uniform(&numbers(rest)?)?,
                "point" => {
                    let [x] = exactly("point", rest)?;
                    PushforwardDist::point(x)?
                }
                "weighted" => {
                    let pts = rest
                        .split(',')
                        .map(|p| {
                            let (x, w) = p
                                .split_once('@')
                                .with_context(|| format!("weighted atoms are x@w, got {p:?}"))?;
                            let [x, w] = exactly("weighted atom", &format!("{x},{w}"))?;
                            Ok((x, w))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    PushforwardDist::new(pts)?
                }
                "gaussian" => {
                    let [mean, sd] = exactly("gaussian", rest)?;
                    quadrature_dist(Family::Gaussian { mean, sd }, order)?
                }
                "gamma" => {
                    let [shape, scale] = exactly("gamma", rest)?;
                    quadrature_dist(Family::Gamma { shape, scale }, order)?
                }
                "uniform-interval" => {
                    let [a, b] = exactly("uniform-interval", rest)?;
                    quadrature_dist(Family::Uniform { a, b }, order)?
                }
                _ => bail!(
                    "unknown distribution kind {kind:?}; use uniform, weighted, point, gaussian, gamma, uniform-interval or a CSV path"
                ),
            };
            return Ok(d);
        }
    }
    let file = File::open(s).with_context(|| format!("cannot open distribution file {s}"))?;
    let nu = read_measure_csv(file, s, true).with_context(|| format!("invalid measure in {s}"))?;
    let g = match g_path {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open function file {p}"))?;
            read_function_csv(f).with_context(|| format!("invalid function in {p}"))?
        }
        None => numeric_ids(&nu).context("point ids must be numbers when --g is not given")?,
    };
    Ok(pushforward(&nu, &g)?)
}

/// `lo:hi:step` (inclusive; `hi` snapped down to the last full step), a
/// comma-separated list, or a single value. The result is sorted, finite
/// and nonempty.
pub fn grid(s: &str) -> Result<Vec<f64>> {
    let v = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("grid must be lo:hi:step, got {s:?}");
        }
        let [lo, hi, step] = exactly("grid", &parts.join(","))?;
        if step <= 0.0 {
            bail!("grid step must be positive, got {step}");
        }
        if hi < lo {
            bail!("grid needs lo ≤ hi, got {lo} > {hi}");
        }
        let n = ((hi - lo) / step + 1e-9).floor();
        if n > 1e7 {
            bail!("grid {s:?} has too many points");
        }
        (0..=n as usize)
            .map(|i| clean(lo + step * i as f64))
            .collect()
    } else {
        numbers(s)?
    };
    if v.is_empty() {
        bail!("grid {s:?} is empty");
    }
    if v.windows(2).any(|w| w[0] >= w[1]) {
        bail!("grid {s:?} must be strictly increasing");
    }
    Ok(v)
}

/// Drops accumulated rounding noise such as `0.15000000000000002`.
fn clean(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// `lo,hi` with `inf`/`-inf` allowed.
pub fn range(s: &str) -> Result<(ExtReal, ExtReal)> {
    let (a, b) = s.split_once(',').context("range must be lo,hi")?;
    let p = |x: &str| -> Result<ExtReal> {
        let x = x.trim();
        let v: f64 = x.parse().with_context(|| format!("not a number: {x:?}"))?;
        if v.is_nan() {
            bail!("range bound is NaN");
        }
        Ok(ExtReal::from_f64(v))
    };
    let (lo, hi) = (p(a)?, p(b)?);
    if lo > hi {
        bail!("range needs lo ≤ hi");
    }
    Ok((lo, hi))
}
