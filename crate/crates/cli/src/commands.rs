use std::fs;
use std::io::Write;

use anyhow::{bail, Context, Result};
use divbound::bounds::{
    abs_lower_bound, lower_bound_curve, min_subgaussian_sigma2, BoundCurve, IpmCgf,
};
use divbound::cgf::{cgf_curve, CgfCurve, CgfQuery, CumulantSource};
use divbound::checks::{self, CheckReport};
use divbound::divergences::PhiSpec;
use divbound::io;
use divbound::vajda::{self, PinskerKind};
use divbound::ExtReal;
use serde_json::json;

use crate::parse;
use crate::{
    BoundArgs, CgfArgs, CheckArgs, DistArgs, Format, Kind, OutArgs, PinskerArgs, SpecArgs,
    VajdaArgs,
};

pub enum Status {
    Ok,
    CheckFailed,
}

fn load_spec(a: &SpecArgs) -> Result<PhiSpec> {
    parse::spec(&a.spec, a.alpha)
}

/// Writes `bytes` to `path`, or to standard output. The summary line goes
/// to standard output with a file and to standard error otherwise.
fn emit(path: Option<&str>, bytes: &[u8], summary: &str) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes).with_context(|| format!("cannot write {p}"))?;
            println!("{summary} -> {p}");
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

/// One query per `--g` (or one for the point ids of `--dist`).
fn queries(spec: &PhiSpec, d: &DistArgs, generic: bool) -> Result<Vec<CgfQuery>> {
    let paths: Vec<Option<&str>> = if d.g.is_empty() {
        vec![None]
    } else {
        d.g.iter().map(|p| Some(p.as_str())).collect()
    };
    let range = d.range_override.as_deref().map(parse::range).transpose()?;
    let mut out = Vec::new();
    for (i, p) in paths.into_iter().enumerate() {
        let dist = parse::dist(&d.dist, p, d.order)?;
        if i == 0 {
            if let Some(path) = &d.dump_dist {
                let mut buf = Vec::new();
                io::write_dist_csv(&mut buf, &dist)?;
                fs::write(path, buf).with_context(|| format!("cannot write {path}"))?;
            }
        }
        let mut q = CgfQuery::new(spec.clone(), dist);
        if let Some((lo, hi)) = range {
            q = q.with_range_override(lo, hi)?;
        }
        if generic {
            q = q.generic();
        }
        out.push(q);
    }
    Ok(out)
}

fn range_summary(vals: impl Iterator<Item = ExtReal>) -> String {
    let v: Vec<ExtReal> = vals.collect();
    let finite: Vec<f64> = v.iter().filter_map(|x| x.finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!(
        "{} rows, {} finite, min {}, max {}",
        v.len(),
        finite.len(),
        io::fmt_num(lo),
        io::fmt_num(hi)
    )
}

fn write_cgf(curve: &CgfCurve, out: &OutArgs) -> Result<()> {
    let bytes = match out.format {
        Format::Csv => {
            let mut b = Vec::new();
            io::write_cgf_csv(&mut b, curve)?;
            b
        }
        Format::Json => json_bytes(&io::cgf_json(curve)),
    };
    let summary = format!(
        "cgf {}: {}",
        curve.spec_name,
        range_summary(curve.samples.iter().map(|s| s.k))
    );
    emit(out.out.as_deref(), &bytes, &summary)
}

pub fn cgf(a: CgfArgs) -> Result<Status> {
    let spec = load_spec(&a.spec)?;
    let ts = parse::grid(&a.t)?;
    let qs = queries(&spec, &a.dist, a.generic)?;
    let curve = if qs.len() == 1 {
        cgf_curve(&qs[0], &ts)
    } else {
        cgf_curve(&IpmCgf::from_queries(qs)?, &ts)
    };
    write_cgf(&curve, &a.out)?;
    Ok(Status::Ok)
}

fn default_ts<S: CumulantSource + ?Sized>(src: &S) -> Vec<f64> {
    let (lo, hi) = src.deviation_range();
    let width = (hi - lo).finite().filter(|w| *w > 0.0).unwrap_or(1.0);
    (-80..=80).map(|i| i as f64 * 0.5 / width).collect()
}

pub fn bound(a: BoundArgs) -> Result<Status> {
    let spec = load_spec(&a.spec)?;
    let eps = parse::grid(&a.eps)?;
    let qs = queries(&spec, &a.dist, false)?;
    if qs.iter().all(|q| q.dist().is_point_mass()) && a.dist.range_override.is_none() {
        bail!("g is constant under the distribution; every nonzero deviation is infeasible");
    }
    let given_ts = a.t.as_deref().map(parse::grid).transpose()?;
    let (curve, sigma2, digest): (BoundCurve, ExtReal, String) = if qs.len() == 1 && !a.abs {
        let q = &qs[0];
        let ts = given_ts.unwrap_or_else(|| default_ts(q));
        let c = cgf_curve(q, &ts);
        (
            lower_bound_curve(q, &c, &eps)?,
            min_subgaussian_sigma2(&c),
            c.dist_digest,
        )
    } else if qs.len() == 1 {
        let (p, m) = (&qs[0], qs[0].negated());
        let ts = given_ts.unwrap_or_else(|| default_ts(p));
        let (cp, cm) = (cgf_curve(p, &ts), cgf_curve(&m, &ts));
        let s2 = min_subgaussian_sigma2(&cp).max(min_subgaussian_sigma2(&cm));
        (
            abs_lower_bound((p, &cp), (&m, &cm), &eps)?,
            s2,
            cp.dist_digest,
        )
    } else {
        let mut members = qs.clone();
        if a.abs {
            members.extend(qs.iter().map(|q| q.negated()));
        }
        let ipm = IpmCgf::from_queries(members)?;
        let ts = given_ts.unwrap_or_else(|| default_ts(&ipm));
        let c = cgf_curve(&ipm, &ts);
        (
            lower_bound_curve(&ipm, &c, &eps)?,
            min_subgaussian_sigma2(&c),
            c.dist_digest,
        )
    };
    if let Some(path) = &a.summary {
        let v = io::bound_summary_json(&curve.spec_name, &digest, sigma2);
        fs::write(path, json_bytes(&v)).with_context(|| format!("cannot write {path}"))?;
    }
    let bytes = match a.out.format {
        Format::Csv => {
            let mut b = Vec::new();
            io::write_bound_csv(&mut b, &curve)?;
            b
        }
        Format::Json => {
            let mut v = io::bound_json(&curve);
            v["summary"] = io::bound_summary_json(&curve.spec_name, &digest, sigma2);
            json_bytes(&v)
        }
    };
    let boundary = curve.samples.iter().filter(|s| s.boundary).count();
    let summary = format!(
        "bound {}: {}, {} boundary",
        curve.spec_name,
        range_summary(curve.samples.iter().map(|s| s.l)),
        boundary
    );
    emit(a.out.out.as_deref(), &bytes, &summary)?;
    Ok(Status::Ok)
}

pub fn vajda(a: VajdaArgs) -> Result<Status> {
    let spec = load_spec(&a.spec)?;
    let label = spec.label();
    let (bytes, summary) = if let Some(w) = &a.w {
        let ws = parse::grid(w)?;
        if ws[0] < 0.0 {
            bail!("widths must be nonnegative");
        }
        let c = vajda::height_curve(&spec, &ws);
        let bytes = match a.out.format {
            Format::Csv => {
                let mut b = Vec::new();
                io::write_height_csv(&mut b, &c)?;
                b
            }
            Format::Json => json_bytes(&io::height_json(&c)),
        };
        (
            bytes,
            format!(
                "height {label}: {}",
                range_summary(c.samples.iter().map(|s| s.1))
            ),
        )
    } else {
        let eps = parse::grid(a.eps.as_deref().expect("clap requires --eps or --w"))?;
        if eps[0] < 0.0 {
            bail!("total variation values must be nonnegative");
        }
        let rows = vajda::vajda_curve(&spec, &eps);
        let bytes = match a.out.format {
            Format::Csv => {
                let mut b = Vec::new();
                io::write_vajda_csv(&mut b, &rows)?;
                b
            }
            Format::Json => json_bytes(&io::vajda_json(&label, &rows)),
        };
        (
            bytes,
            format!("vajda {label}: {}", range_summary(rows.iter().map(|r| r.1))),
        )
    };
    emit(a.out.out.as_deref(), &bytes, &summary)?;
    Ok(Status::Ok)
}

pub fn pinsker(a: PinskerArgs) -> Result<Status> {
    let spec = load_spec(&a.spec)?;
    let zs = parse::grid(&a.z)?;
    if !zs.iter().any(|z| *z > -1.0) {
        bail!("z grid has no point above -1");
    }
    let kind = match a.kind {
        Kind::Crude => PinskerKind::Crude,
        Kind::Optimal => PinskerKind::Optimal,
        Kind::Concave => PinskerKind::Concave,
    };
    let r = vajda::pinsker_check(&spec, kind, &zs)?;
    let summary = format!(
        "pinsker {} {}: holds={} constant={} verified z in [{}, {}]{}",
        spec.label(),
        kind.as_str(),
        r.holds,
        io::fmt_num(r.constant),
        io::fmt_num(r.verified_range.0),
        io::fmt_num(r.verified_range.1),
        r.violating_z
            .map(|z| format!(" violated at z={}", io::fmt_num(z)))
            .unwrap_or_default()
    );
    emit(
        a.out.as_deref(),
        &json_bytes(&io::pinsker_json(&r)),
        &summary,
    )?;
    Ok(if r.holds {
        Status::Ok
    } else {
        Status::CheckFailed
    })
}

fn finish_check(r: &CheckReport, spec: &PhiSpec, seed: u64, out: Option<&str>) -> Result<Status> {
    let v = json!({
        "check": r.name,
        "spec": spec.label(),
        "seed": seed,
        "trials": r.trials,
        "passed": r.passed,
        "tol": r.tol,
        "max_error": io::num_json(r.max_error),
        "failures": r.failures,
    });
    if let Some(p) = out {
        fs::write(p, json_bytes(&v)).with_context(|| format!("cannot write {p}"))?;
    }
    for f in &r.failures {
        eprintln!("{f}");
    }
    println!(
        "{} [{}]: {}",
        if r.ok() { "PASS" } else { "FAIL" },
        spec.label(),
        r.summary()
    );
    Ok(if r.ok() {
        Status::Ok
    } else {
        Status::CheckFailed
    })
}

fn check_args(a: &CheckArgs) -> Result<PhiSpec> {
    if a.trials == 0 {
        bail!("--trials must be positive");
    }
    parse::spec(&a.spec, a.alpha)
}

pub fn oracle_check(a: CheckArgs) -> Result<Status> {
    let spec = check_args(&a)?;
    let r = checks::oracle_check(&spec, a.seed, a.trials);
    finish_check(&r, &spec, a.seed, a.out.as_deref())
}

pub fn varrep_check(a: CheckArgs) -> Result<Status> {
    let spec = check_args(&a)?;
    let r = checks::varrep_check(&spec, a.seed, a.trials);
    finish_check(&r, &spec, a.seed, a.out.as_deref())
}
