//! CSV and JSON output for curves and reports.
//!
//! Numbers are written with 12 significant digits; infinities as `inf` and
//! `-inf`. Distribution dumps use shortest round-trip formatting instead so
//! they re-ingest bit for bit.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::bounds::BoundCurve;
use crate::cgf::CgfCurve;
use crate::extreal::ExtReal;
use crate::measures::PushforwardDist;
use crate::vajda::{HeightCurve, PinskerReport};

/// `x` with 12 significant digits, without trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn fmt_ext(x: ExtReal) -> String {
    fmt_num(x.to_f64())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// JSON number rounded like [`fmt_num`], or the strings `inf` / `-inf`.
pub fn num_json(x: f64) -> Value {
    if x.is_finite() {
        json!(fmt_num(x).parse::<f64>().expect("formatted number parses"))
    } else {
        json!(fmt_num(x))
    }
}

fn ext_json(x: ExtReal) -> Value {
    num_json(x.to_f64())
}

fn opt_json(x: Option<f64>) -> Value {
    x.map(num_json).unwrap_or(Value::Null)
}

/// Columns `t,K,lambda_opt,finite`.
pub fn write_cgf_csv<W: Write>(mut w: W, curve: &CgfCurve) -> io::Result<()> {
    writeln!(w, "t,K,lambda_opt,finite")?;
    for s in &curve.samples {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_num(s.t),
            fmt_ext(s.k),
            fmt_opt(s.lambda_opt),
            u8::from(s.is_finite())
        )?;
    }
    Ok(())
}

pub fn cgf_json(curve: &CgfCurve) -> Value {
    let rows: Vec<Value> = curve
        .samples
        .iter()
        .map(|s| {
            json!({
                "t": num_json(s.t),
                "K": ext_json(s.k),
                "lambda_opt": opt_json(s.lambda_opt),
                "finite": s.is_finite(),
            })
        })
        .collect();
    json!({ "spec": curve.spec_name, "dist_digest": curve.dist_digest, "samples": rows })
}

/// Columns `eps,L,boundary,provenance`.
pub fn write_bound_csv<W: Write>(mut w: W, curve: &BoundCurve) -> io::Result<()> {
    writeln!(w, "eps,L,boundary,provenance")?;
    for s in &curve.samples {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_num(s.eps),
            fmt_ext(s.l),
            u8::from(s.boundary),
            curve.provenance.as_str()
        )?;
    }
    Ok(())
}

pub fn bound_json(curve: &BoundCurve) -> Value {
    let rows: Vec<Value> = curve
        .samples
        .iter()
        .map(|s| {
            json!({
                "eps": num_json(s.eps),
                "L": ext_json(s.l),
                "boundary": s.boundary,
                "provenance": curve.provenance.as_str(),
            })
        })
        .collect();
    json!({ "spec": curve.spec_name, "samples": rows })
}

/// `{spec, dist_digest, subgaussian_sigma2_min}`.
pub fn bound_summary_json(spec: &str, dist_digest: &str, sigma2_min: ExtReal) -> Value {
    json!({
        "spec": spec,
        "dist_digest": dist_digest,
        "subgaussian_sigma2_min": ext_json(sigma2_min),
    })
}

/// Columns `w,H,lambda_w`.
pub fn write_height_csv<W: Write>(mut w: W, curve: &HeightCurve) -> io::Result<()> {
    writeln!(w, "w,H,lambda_w")?;
    for &(x, h, l) in &curve.samples {
        writeln!(w, "{},{},{}", fmt_num(x), fmt_ext(h), fmt_opt(l))?;
    }
    Ok(())
}

pub fn height_json(curve: &HeightCurve) -> Value {
    let rows: Vec<Value> = curve
        .samples
        .iter()
        .map(|&(x, h, l)| json!({ "w": num_json(x), "H": ext_json(h), "lambda_w": opt_json(l) }))
        .collect();
    json!({ "spec": curve.spec_name, "samples": rows })
}

/// Columns `eps,L`.
pub fn write_vajda_csv<W: Write>(mut w: W, rows: &[(f64, ExtReal)]) -> io::Result<()> {
    writeln!(w, "eps,L")?;
    for &(e, l) in rows {
        writeln!(w, "{},{}", fmt_num(e), fmt_ext(l))?;
    }
    Ok(())
}

pub fn vajda_json(spec: &str, rows: &[(f64, ExtReal)]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|&(e, l)| json!({ "eps": num_json(e), "L": ext_json(l) }))
        .collect();
    json!({ "spec": spec, "samples": rows })
}

/// `{kind, holds, constant, violating_z}` plus the verified range.
pub fn pinsker_json(r: &PinskerReport) -> Value {
    json!({
        "kind": r.kind.as_str(),
        "holds": r.holds,
        "constant": num_json(r.constant),
        "violating_z": opt_json(r.violating_z),
        "verified_range": [num_json(r.verified_range.0), num_json(r.verified_range.1)],
    })
}

/// Columns `point_id,weight`, with the point value as its id. Reading this
/// back with the measure CSV reader and pushing forward through the numeric
/// ids reproduces the same digest.
pub fn write_dist_csv<W: Write>(mut w: W, dist: &PushforwardDist) -> io::Result<()> {
    writeln!(w, "point_id,weight")?;
    for (x, p) in dist.points() {
        writeln!(w, "{x:?},{p:?}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{numeric_ids, pushforward, quadrature_dist, read_measure_csv, Family};

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.0625), "0.0625");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_num(1.5e-9), "1.5e-9");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
    }

    #[test]
    fn dist_dump_round_trips() {
        let d = quadrature_dist(Family::Gaussian { mean: 0.3, sd: 1.7 }, 9).unwrap();
        let mut buf = Vec::new();
        write_dist_csv(&mut buf, &d).unwrap();
        let mu = read_measure_csv(buf.as_slice(), "dump", true).unwrap();
        let back = pushforward(&mu, &numeric_ids(&mu).unwrap()).unwrap();
        assert_eq!(back.digest(), d.digest());
    }

    #[test]
    fn json_infinities_are_strings() {
        assert_eq!(num_json(f64::INFINITY), json!("inf"));
        assert_eq!(num_json(0.5), json!(0.5));
    }
}
