//! Seeded randomized self-checks: conjugate-of-CGF bound against the
//! brute-force oracle, and the variational representation with its
//! optimal witness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{lower_bound_curve, oracle_lower_bound};
use crate::cgf::{cgf_curve, CgfQuery};
use crate::divergences::{variational_gap, PhiSpec};
use crate::measures::{pushforward, DiscreteMeasure, FunctionOnSupport};

/// Outcome of a randomized check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub trials: usize,
    pub passed: usize,
    pub max_error: f64,
    pub tol: f64,
    /// One line per failed trial.
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.passed == self.trials
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {}/{} within {:e} (max error {:.3e})",
            self.name, self.passed, self.trials, self.tol, self.max_error
        )
    }
}

pub const ORACLE_TOL: f64 = 1e-4;
pub const VARREP_TOL: f64 = 1e-10;

/// Weights at least `floor` before normalization.
fn random_weights(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(floor..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

/// A random instance for the oracle comparison: `ν` on 2 or 3 atoms, `g`
/// with values in `[−1, 1]`, and `ε` in the interior of the achievable
/// range of `μ(g) − ν(g)`.
pub fn oracle_instance(rng: &mut ChaCha8Rng) -> (DiscreteMeasure, FunctionOnSupport, f64) {
    loop {
        let n = rng.random_range(2..=3);
        let w = random_weights(rng, n, 0.05);
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 0.2 {
            continue;
        }
        let mean: f64 = g.iter().zip(&w).map(|(a, b)| a * b).sum();
        let u = rng.random_range(0.1..0.9);
        let eps = (lo - mean) + u * (hi - lo);
        let nu = DiscreteMeasure::from_weights("check", &w).expect("valid weights");
        return (nu, FunctionOnSupport::from_values(&g), eps);
    }
}

/// Conjugate-of-CGF bound at a single `eps`.
pub fn conjugate_bound_at(
    spec: &PhiSpec,
    nu: &DiscreteMeasure,
    g: &FunctionOnSupport,
    eps: f64,
) -> f64 {
    let dist = pushforward(nu, g).expect("valid instance");
    let width = (dist.max() - dist.min()).max(1e-9);
    let q = CgfQuery::new(spec.clone(), dist);
    let ts: Vec<f64> = (-40..=40).map(|i| i as f64 / width).collect();
    let curve = cgf_curve(&q, &ts);
    let b = lower_bound_curve(&q, &curve, &[eps]).expect("curve has finite samples");
    b.samples[0].l.to_f64()
}

/// Compares the conjugate-of-CGF bound with the brute-force oracle on
/// `trials` random instances.
pub fn oracle_check(spec: &PhiSpec, seed: u64, trials: usize) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instances: Vec<_> = (0..trials).map(|_| oracle_instance(&mut rng)).collect();
    let results = crate::par::map(&instances, |(nu, g, eps)| {
        let conj = conjugate_bound_at(spec, nu, g, *eps);
        let oracle = oracle_lower_bound(spec, nu, g, *eps, 4)
            .map(|v| v.to_f64())
            .unwrap_or(f64::NAN);
        (conj, oracle, *eps)
    });
    let mut report = CheckReport {
        name: "oracle-check",
        trials,
        passed: 0,
        max_error: 0.0,
        tol: ORACLE_TOL,
        failures: Vec::new(),
    };
    for (i, (conj, oracle, eps)) in results.into_iter().enumerate() {
        let err = (conj - oracle).abs();
        let err = if err.is_nan() { f64::INFINITY } else { err };
        report.max_error = report.max_error.max(err);
        if err <= ORACLE_TOL {
            report.passed += 1;
        } else {
            report.failures.push(format!(
                "trial {i}: eps={eps} conjugate={conj} oracle={oracle}"
            ));
        }
    }
    report
}

/// `D(μ‖ν) = μ(g) − inf_λ {ν(φ*(g + λ)) − λ}` with the optimal witness
/// `g = φ′(dμ/dν)` (for KL, `log dμ/dν`), on random full-support pairs.
pub fn varrep_check(spec: &PhiSpec, seed: u64, trials: usize) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport {
        name: "varrep-check",
        trials,
        passed: 0,
        max_error: 0.0,
        tol: VARREP_TOL,
        failures: Vec::new(),
    };
    for i in 0..trials {
        let n = rng.random_range(2..=6);
        let mw = random_weights(&mut rng, n, 0.05);
        let nw = random_weights(&mut rng, n, 0.05);
        let mu = DiscreteMeasure::from_weights("check", &mw).expect("valid weights");
        let nu = DiscreteMeasure::from_weights("check", &nw).expect("valid weights");
        let witness: Vec<f64> = mw
            .iter()
            .zip(&nw)
            .map(|(a, b)| {
                spec.phi()
                    .subgradient(a / b)
                    .map(|s| s.midpoint().to_f64())
                    .unwrap_or(f64::NAN)
            })
            .collect();
        let g = FunctionOnSupport::from_values(&witness);
        let gap = variational_gap(spec, &mu, &nu, &g)
            .map(|v| v.to_f64())
            .unwrap_or(f64::NAN);
        let err = if gap.is_nan() {
            f64::INFINITY
        } else {
            gap.abs()
        };
        report.max_error = report.max_error.max(err);
        if err <= VARREP_TOL {
            report.passed += 1;
        } else {
            report.failures.push(format!("trial {i}: gap={gap}"));
        }
    }
    report
}
