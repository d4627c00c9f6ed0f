//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use divbound::bounds::{hcr_bound, lower_bound_curve};
use divbound::cgf::{cgf, cgf_curve, subexponential_probe, CgfQuery, SubexponentialHint};
use divbound::checks::{oracle_check, varrep_check};
use divbound::divergences::{csiszar_dual, divergence, make_divergence, PhiSpec, CATALOG};
use divbound::measures::{DiscreteMeasure, PushforwardDist};
use divbound::vajda::{
    height, hoeffding_bound, kl_height_closed_form, pinsker_check, vajda_bound, PinskerKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn random_weights(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(floor..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

fn random_dist(rng: &mut ChaCha8Rng, max_atoms: usize, floor: f64) -> PushforwardDist {
    loop {
        let n = rng.random_range(2..=max_atoms);
        let w = random_weights(rng, n, floor);
        let pts: Vec<(f64, f64)> = w
            .iter()
            .map(|&p| (rng.random_range(-3.0..3.0), p))
            .collect();
        if let Ok(d) = PushforwardDist::new(pts) {
            if !d.is_point_mass() {
                return d;
            }
        }
    }
}

fn spec(name: &str, alpha: Option<f64>) -> PhiSpec {
    make_divergence(name, alpha).expect("catalog entry")
}

fn max_err(errs: impl IntoIterator<Item = f64>) -> f64 {
    errs.into_iter().fold(
        0.0,
        |a, e| if e.is_nan() { f64::INFINITY } else { a.max(e) },
    )
}

/// Generic CGF path for KL against the centered log-MGF, computed directly.
fn kl_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kl = spec("kl", None);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = random_dist(&mut rng, 6, 0.01);
        let m = d.mean();
        let q = CgfQuery::new(kl.clone(), d.clone()).generic();
        for t in -5..=5 {
            let t = t as f64;
            let direct = d
                .points()
                .iter()
                .map(|(x, w)| w * (t * (x - m)).exp())
                .sum::<f64>()
                .ln();
            let k = cgf(&q, t).0.to_f64();
            worst = worst.max(max_err([(k - direct).abs()]));
        }
    }
    if worst <= 1e-8 {
        Ok(format!("max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e} > 1e-8"))
    }
}

fn figure_heights() -> Outcome {
    let kl = spec("kl", None);
    let h1 = height(&kl, 1.0).0.to_f64();
    let h3 = height(&kl, 3.0).0.to_f64();
    let worst = max_err((1..=1000).map(|i| {
        let w = i as f64 / 100.0;
        (height(&kl, w).0.to_f64() - kl_height_closed_form(w)).abs()
    }));
    let ok = (0.115..=0.125).contains(&h1) && (1.005..=1.015).contains(&h3) && worst <= 1e-8;
    let msg = format!("H(1)={h1:.6} H(3)={h3:.6} closed-form max error {worst:.2e}");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn vajda_fht() -> Outcome {
    let kl = spec("kl", None);
    let worst = max_err([0.25f64, 0.5, 1.0, 2.0, 3.0].iter().map(|&t| {
        let s2 = t.sinh().powi(2);
        let v = 2.0 / t.tanh() - t / s2 - 1.0 / t;
        let l = (t / t.sinh()).ln() + t / t.tanh() - t * t / s2;
        (vajda_bound(&kl, v).to_f64() - l).abs()
    }));
    if worst <= 1e-6 {
        Ok(format!("max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e} > 1e-6"))
    }
}

fn pinsker_constants() -> Outcome {
    let zs: Vec<f64> = (1..=400).map(|i| -1.0 + i as f64 * 0.025).collect();
    let eps: Vec<f64> = (0..=38).map(|i| i as f64 * 0.05).collect();
    let mut fails = Vec::new();
    for a in [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0] {
        let s = spec("alpha", Some(a));
        let r = pinsker_check(&s, PinskerKind::Optimal, &zs).map_err(|e| e.to_string())?;
        if !r.holds || (r.constant - 0.5).abs() > 1e-12 {
            fails.push(format!("optimal alpha={a}: {r:?}"));
        }
        for &e in &eps {
            let l = vajda_bound(&s, e).to_f64();
            if l < e * e / 2.0 - 1e-6 {
                fails.push(format!("alpha={a} eps={e}: L={l} < eps^2/2"));
            }
        }
    }
    for a in [2.5, 3.0, 4.0] {
        let r = pinsker_check(&spec("alpha", Some(a)), PinskerKind::Crude, &zs)
            .map_err(|e| e.to_string())?;
        if !r.holds || (r.constant - 0.125).abs() > 1e-12 {
            fails.push(format!("crude alpha={a}: {r:?}"));
        }
    }
    if fails.is_empty() {
        Ok("10 generators".into())
    } else {
        Err(fails.join("; "))
    }
}

fn hcr_tightness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let chi2 = spec("chi2", None);
    let (mut tight, mut below): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        // Normalized weights ≥ 1/16 keep the optimal μ nonnegative for
        // |ε| ≤ 0.2·σ.
        let d = random_dist(&mut rng, 4, 0.2);
        let var = d.variance();
        let sd = var.sqrt();
        let (lo, hi) = (d.min() - d.mean(), d.max() - d.mean());
        let width = hi - lo;
        let q = CgfQuery::new(chi2.clone(), d.clone());
        let ts: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.1 / width).collect();
        let curve = cgf_curve(&q, &ts);
        let near: Vec<f64> = (-10..=10).map(|i| 0.02 * sd * i as f64).collect();
        let far: Vec<f64> = (0..=40).map(|i| lo + width * i as f64 / 40.0).collect();
        let b = lower_bound_curve(&q, &curve, &near).map_err(|e| e.to_string())?;
        for s in &b.samples {
            tight = tight.max(max_err([(s.l.to_f64() - s.eps * s.eps / var).abs()]));
        }
        let b = lower_bound_curve(&q, &curve, &far).map_err(|e| e.to_string())?;
        for s in &b.samples {
            let h = hcr_bound(&d, s.eps).map_err(|e| e.to_string())?;
            below = below.max(h - 1e-8 - s.l.to_f64());
        }
    }
    let msg = format!("near-zero max error {tight:.2e}, max shortfall below HCR {below:.2e}");
    if tight <= 1e-6 && below <= 0.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_equivalence() -> Outcome {
    let specs = [
        spec("kl", None),
        spec("chi2", None),
        spec("squared_hellinger", None),
        spec("alpha", Some(1.5)),
        spec("jensen_shannon", None),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, s) in specs.iter().enumerate() {
        let r = oracle_check(s, 100 + i as u64, 50);
        ok &= r.ok();
        lines.push(format!(
            "{} {}/{} max {:.1e}",
            s.label(),
            r.passed,
            r.trials,
            r.max_error
        ));
        if !r.ok() {
            lines.extend(r.failures.iter().take(3).cloned());
        }
    }
    if ok {
        Ok(lines.join(", "))
    } else {
        Err(lines.join("; "))
    }
}

fn donsker_varadhan() -> Outcome {
    let r = varrep_check(&spec("kl", None), 11, 50);
    if r.ok() {
        Ok(r.summary())
    } else {
        Err(format!("{} {:?}", r.summary(), r.failures))
    }
}

fn hoeffding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let m = rng.random_range(-5.0..5.0);
        let big_m = m + rng.random_range(0.01..10.0);
        let t = rng.random_range(-10.0..10.0);
        let b = hoeffding_bound(m, big_m, t).map_err(|e| e.to_string())?;
        if b.refined > b.classical + 1e-15 * b.classical {
            return Err(format!(
                "refined {} > classical {} at m={m} M={big_m} t={t}",
                b.refined, b.classical
            ));
        }
    }
    let b = hoeffding_bound(0.0, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let ratio = b.refined / b.classical;
    if (ratio - 1.0).abs() <= 1e-3 {
        Ok(format!("200 samples, ratio at t=1e-3: {ratio:.9}"))
    } else {
        Err(format!("ratio at t=1e-3: {ratio}"))
    }
}

fn all_catalog_specs() -> Vec<PhiSpec> {
    let mut v = Vec::new();
    for name in CATALOG {
        match name {
            "alpha" => {
                for a in [-1.0, 0.5, 1.5, 2.0, 3.0] {
                    v.push(spec(name, Some(a)));
                }
            }
            "chi_alpha" => {
                for a in [1.5, 2.0, 3.0] {
                    v.push(spec(name, Some(a)));
                }
            }
            _ => v.push(spec(name, None)),
        }
    }
    v
}

fn property_suites() -> Outcome {
    let mut fails = Vec::new();
    let specs = all_catalog_specs();

    // ψ* ≥ 0, ψ*(0) = 0, ψ*(x) ≤ −x for x ≤ 0.
    for s in &specs {
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            let v = s.psi_star_eval(x);
            let bad = v < divbound::ExtReal::Finite(-1e-9)
                || (x == 0.0 && v.abs_diff(divbound::ExtReal::ZERO) > 1e-9)
                || (x <= 0.0 && v > divbound::ExtReal::Finite(-x + 1e-9));
            if bad {
                fails.push(format!("psi* {} at {x}: {v}", s.label()));
                break;
            }
        }
    }

    // K(t) invariant under shifts of X and covariant under positive scaling.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut k_err: f64 = 0.0;
    for s in [
        spec("kl", None),
        spec("chi2", None),
        spec("squared_hellinger", None),
        spec("alpha", Some(1.5)),
    ] {
        for _ in 0..5 {
            let d = random_dist(&mut rng, 5, 0.05);
            let c = rng.random_range(-2.0..2.0);
            let a = rng.random_range(0.5..2.0);
            let base = CgfQuery::new(s.clone(), d.clone());
            let shifted = CgfQuery::new(s.clone(), d.affine(1.0, c).unwrap());
            let scaled = CgfQuery::new(s.clone(), d.affine(a, 0.0).unwrap());
            for t in [-1.5, -0.3, 0.4, 1.2] {
                let k = cgf(&base, t).0.to_f64();
                k_err = k_err.max(max_err([
                    (cgf(&shifted, t).0.to_f64() - k).abs(),
                    (cgf(&scaled, t).0.to_f64() - cgf(&base, a * t).0.to_f64()).abs(),
                ]));
            }
        }
    }
    if k_err > 1e-10 {
        fails.push(format!("K shift/scale max error {k_err:.2e}"));
    }

    // Height curves of φ and its Csiszár dual agree.
    let mut dag_err: f64 = 0.0;
    for s in [
        spec("kl", None),
        spec("chi2", None),
        spec("alpha", Some(1.5)),
        spec("squared_hellinger", None),
    ] {
        let d = csiszar_dual(&s);
        for i in 1..=20 {
            let w = i as f64 * 0.25;
            dag_err = dag_err.max(max_err([height(&s, w).0.abs_diff(height(&d, w).0)]));
        }
    }
    if dag_err > 1e-8 {
        fails.push(format!("dagger symmetry max error {dag_err:.2e}"));
    }

    // Data processing: coarsening never increases the divergence; joint
    // convexity under mixing.
    let mut dp_viol: f64 = 0.0;
    let mut jc_viol: f64 = 0.0;
    for s in &specs {
        for _ in 0..5 {
            let n = rng.random_range(3..=6);
            let mu =
                DiscreteMeasure::from_weights("u", &random_weights(&mut rng, n, 0.01)).unwrap();
            let nu =
                DiscreteMeasure::from_weights("u", &random_weights(&mut rng, n, 0.01)).unwrap();
            let bins: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let bin = |id: &divbound::measures::PointId| {
                let i: usize = id.0.parse().unwrap();
                divbound::measures::PointId::from(bins[i])
            };
            let d = divergence(&mu, &nu, s).unwrap().value.to_f64();
            let dc = divergence(&mu.coarsen("b", bin), &nu.coarsen("b", bin), s)
                .unwrap()
                .value
                .to_f64();
            dp_viol = dp_viol.max(dc - d);

            let mu2 =
                DiscreteMeasure::from_weights("u", &random_weights(&mut rng, n, 0.01)).unwrap();
            let nu2 =
                DiscreteMeasure::from_weights("u", &random_weights(&mut rng, n, 0.01)).unwrap();
            let th = rng.random_range(0.0..1.0);
            let d2 = divergence(&mu2, &nu2, s).unwrap().value.to_f64();
            let mixed = divergence(&mu.mix(th, &mu2).unwrap(), &nu.mix(th, &nu2).unwrap(), s)
                .unwrap()
                .value
                .to_f64();
            jc_viol = jc_viol.max(mixed - (th * d + (1.0 - th) * d2));
        }
    }
    if dp_viol > 1e-10 {
        fails.push(format!("data processing violated by {dp_viol:.2e}"));
    }
    if jc_viol > 1e-10 {
        fails.push(format!("joint convexity violated by {jc_viol:.2e}"));
    }

    // Probe smoke tests: bounded support is finite everywhere for KL.
    let p = subexponential_probe(&CgfQuery::new(
        spec("kl", None),
        PushforwardDist::uniform(&[-1.0, 1.0]).unwrap(),
    ));
    if p.finite_ts.len() != 27 || p.hint == SubexponentialHint::Inconclusive {
        fails.push(format!("probe: {p:?}"));
    }

    if fails.is_empty() {
        Ok(format!(
            "{} specs; K err {k_err:.1e}; dagger err {dag_err:.1e}; dp {dp_viol:.1e}; jc {jc_viol:.1e}",
            specs.len()
        ))
    } else {
        Err(fails.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 kl-closed-forms", kl_closed_forms),
        ("2 figure-heights", figure_heights),
        ("3 vajda-fht", vajda_fht),
        ("4 pinsker-constants", pinsker_constants),
        ("5 hcr-tightness", hcr_tightness),
        ("6 oracle-equivalence", oracle_equivalence),
        ("7 donsker-varadhan", donsker_varadhan),
        ("8 hoeffding-refinement", hoeffding),
        ("9 property-suites", property_suites),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("PASS {name} ({secs:.2}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
