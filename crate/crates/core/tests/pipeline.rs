use divbound::bounds::{lower_bound_curve, oracle_lower_bound};
use divbound::cgf::{cgf, cgf_curve, CgfQuery};
use divbound::convex::minimize_1d;
use divbound::divergences::make_divergence;
use divbound::measures::{DiscreteMeasure, FunctionOnSupport, PushforwardDist};
use divbound::vajda::{height, vajda_bound};
use divbound::ExtReal;

fn two_point_k(spec: &divbound::divergences::PhiSpec, p: f64, t: f64) -> f64 {
    let d = PushforwardDist::new([(-1.0, 1.0 - p), (1.0, p)]).unwrap();
    cgf(&CgfQuery::new(spec.clone(), d), t).0.to_f64()
}

#[test]
fn worst_two_point_cgf_is_the_height() {
    for name in ["kl", "chi2", "squared_hellinger", "reverse_kl"] {
        let s = make_divergence(name, None).unwrap();
        for t in [0.25, 0.5, 1.0, 1.5] {
            let best = (1..100)
                .map(|i| i as f64 / 100.0)
                .max_by(|a, b| two_point_k(&s, *a, t).total_cmp(&two_point_k(&s, *b, t)))
                .unwrap();
            let m = minimize_1d(
                |p: f64| {
                    if p <= 0.0 || p >= 1.0 {
                        ExtReal::PosInf
                    } else {
                        ExtReal::Finite(-two_point_k(&s, p, t))
                    }
                },
                (best - 0.01, best + 0.01),
                1e-12,
            )
            .unwrap();
            let sup = -m.value.to_f64();
            let h = height(&s, 2.0 * t).0.to_f64();
            assert!((sup - h).abs() < 1e-5, "{name} t={t}: {sup} vs {h}");
        }
    }
}

#[test]
fn end_to_end_bound_agrees_with_oracle() {
    // Three atoms, one function, a few deviations: the conjugate route and
    // the brute-force search over measures must agree.
    let nu = DiscreteMeasure::from_weights("u", &[0.5, 0.3, 0.2]).unwrap();
    let g = FunctionOnSupport::from_values(&[-1.0, 0.5, 1.0]);
    let dist = divbound::measures::pushforward(&nu, &g).unwrap();
    let width = dist.max() - dist.min();
    let ts: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.2 / width).collect();
    for name in ["kl", "chi2", "squared_hellinger", "jensen_shannon"] {
        let s = make_divergence(name, None).unwrap();
        let q = CgfQuery::new(s.clone(), dist.clone());
        let eps = [-0.6, -0.2, 0.1, 0.4];
        let b = lower_bound_curve(&q, &cgf_curve(&q, &ts), &eps).unwrap();
        for smp in &b.samples {
            let o = oracle_lower_bound(&s, &nu, &g, smp.eps, 4)
                .unwrap()
                .to_f64();
            let l = smp.l.to_f64();
            assert!(
                (l - o).abs() <= 1e-4 * (1.0 + o.abs()),
                "{name} eps={}: {l} vs {o}",
                smp.eps
            );
        }
    }
}

#[test]
fn total_variation_floor_is_consistent_with_mean_deviation() {
    // For g with values in {−1, 1}, |μ(g) − ν(g)| is at most the total variation, so
    // the conjugate bound can never exceed the tight TV bound.
    let nu = DiscreteMeasure::from_weights("u", &[0.5, 0.5]).unwrap();
    let g = FunctionOnSupport::from_values(&[-1.0, 1.0]);
    let dist = divbound::measures::pushforward(&nu, &g).unwrap();
    let ts: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.05).collect();
    for name in ["kl", "chi2", "squared_hellinger"] {
        let s = make_divergence(name, None).unwrap();
        let q = CgfQuery::new(s.clone(), dist.clone());
        let eps = [0.2, 0.6, 1.0, 1.4];
        let b = lower_bound_curve(&q, &cgf_curve(&q, &ts), &eps).unwrap();
        for smp in &b.samples {
            let v = vajda_bound(&s, smp.eps).to_f64();
            assert!(
                smp.l.to_f64() >= v - 1e-6,
                "{name} eps={}: {} < {v}",
                smp.eps,
                smp.l
            );
        }
    }
}
