//! The (φ, ν)-cumulant generating function
//! `K(t) = inf { ⟨ν, ψ*(t·g + λ)⟩ : λ + esssup(t·g) ≤ φ′(∞) }`,
//! evaluated on the pushforward distribution of `g`.

use thiserror::Error;

use crate::divergences::{log_sum_exp, shift_infimum, FastPath, PhiSpec};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::measures::PushforwardDist;
use crate::par;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CgfError {
    #[error("range override [{lo}, {hi}] does not contain the support [{min}, {max}]")]
    OverrideTooTight {
        lo: ExtReal,
        hi: ExtReal,
        min: f64,
        max: f64,
    },
}

/// Anything that can be evaluated as a cumulant generating function.
pub trait CumulantSource: Sync {
    /// `(K(t), optimal shift)`.
    fn cumulant(&self, t: f64) -> (ExtReal, Option<f64>);
    /// Label of the divergence generator.
    fn spec_label(&self) -> String;
    /// Digest of the distribution(s) involved.
    fn digest(&self) -> String;
    /// Range of achievable mean deviations `μ(g) − ν(g)`; outside it the
    /// bound is `+∞`.
    fn deviation_range(&self) -> (ExtReal, ExtReal);
}

/// Inputs of a cumulant evaluation.
#[derive(Debug, Clone)]
pub struct CgfQuery {
    spec: PhiSpec,
    dist: PushforwardDist,
    range_override: Option<(ExtReal, ExtReal)>,
    generic: bool,
}

impl CgfQuery {
    pub fn new(spec: PhiSpec, dist: PushforwardDist) -> Self {
        CgfQuery {
            spec,
            dist,
            range_override: None,
            generic: false,
        }
    }

    /// Replaces the essential range of `g` by `[lo, hi]`, which must contain
    /// the support.
    pub fn with_range_override(mut self, lo: ExtReal, hi: ExtReal) -> Result<Self, CgfError> {
        let (min, max) = (self.dist.min(), self.dist.max());
        if lo > ExtReal::Finite(min) || hi < ExtReal::Finite(max) {
            return Err(CgfError::OverrideTooTight { lo, hi, min, max });
        }
        self.range_override = Some((lo, hi));
        Ok(self)
    }

    /// Disables closed-form shortcuts.
    pub fn generic(mut self) -> Self {
        self.generic = true;
        self
    }

    pub fn spec(&self) -> &PhiSpec {
        &self.spec
    }

    pub fn dist(&self) -> &PushforwardDist {
        &self.dist
    }

    pub fn range_override(&self) -> Option<(ExtReal, ExtReal)> {
        self.range_override
    }

    /// `(essinf g, esssup g)`: the override if set, else the support.
    pub fn effective_range(&self) -> (ExtReal, ExtReal) {
        self.range_override.unwrap_or((
            ExtReal::Finite(self.dist.min()),
            ExtReal::Finite(self.dist.max()),
        ))
    }

    /// Query for `−g` (support and override mirrored).
    pub fn negated(&self) -> Self {
        let dist = self
            .dist
            .affine(-1.0, 0.0)
            .expect("negation keeps a valid distribution");
        CgfQuery {
            spec: self.spec.clone(),
            dist,
            range_override: self.range_override.map(|(lo, hi)| (-hi, -lo)),
            generic: self.generic,
        }
    }
}

/// `K(t)` and the optimal shift `λ`, or `(+∞, None)` when the constraint
/// set is empty or the objective is `+∞` on it.
pub fn cgf(query: &CgfQuery, t: f64) -> (ExtReal, Option<f64>) {
    let pts = query.dist.points();
    if t == 0.0 {
        // ψ*(λ) is minimized at λ = 0 with value 0, which is feasible since
        // φ′(∞) ≥ 0 for a normalized generator.
        return (ExtReal::ZERO, Some(0.0));
    }
    let (lo, hi) = query.effective_range();
    let upper = if t > 0.0 { hi.scale(t) } else { lo.scale(t) };
    if query.spec.fast_path() == Some(FastPath::KlLogMgf) && !query.generic {
        let m = query.dist.mean();
        let centered: Vec<(f64, f64)> = pts.iter().map(|&(x, w)| (x - m, w)).collect();
        let k = log_sum_exp(&centered, t).max(0.0);
        return (ExtReal::from_f64(k), Some(-log_sum_exp(pts, t)));
    }
    let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, w)| (t * x, w)).collect();
    shift_infimum(&query.spec, &scaled, upper)
}

impl CumulantSource for CgfQuery {
    fn cumulant(&self, t: f64) -> (ExtReal, Option<f64>) {
        cgf(self, t)
    }

    fn spec_label(&self) -> String {
        self.spec.label()
    }

    fn digest(&self) -> String {
        self.dist.digest()
    }

    fn deviation_range(&self) -> (ExtReal, ExtReal) {
        let m = self.dist.mean();
        // Mass beyond the support is only affordable when φ′(∞) < ∞.
        let (lo, hi) = if self.spec.slope_inf().is_finite() {
            self.effective_range()
        } else {
            (
                ExtReal::Finite(self.dist.min()),
                ExtReal::Finite(self.dist.max()),
            )
        };
        (lo - m, hi - m)
    }
}

/// One evaluation of `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfSample {
    pub t: f64,
    pub k: ExtReal,
    pub lambda_opt: Option<f64>,
}

impl CgfSample {
    pub fn is_finite(&self) -> bool {
        self.k.is_finite()
    }
}

/// Sampled graph of a cumulant generating function.
#[derive(Debug, Clone, PartialEq)]
pub struct CgfCurve {
    pub samples: Vec<CgfSample>,
    pub spec_name: String,
    pub dist_digest: String,
}

impl CgfCurve {
    pub fn finite_samples(&self) -> impl Iterator<Item = &CgfSample> {
        self.samples.iter().filter(|s| s.is_finite())
    }

    /// `K` at `t` if `t` is a sample point.
    pub fn at(&self, t: f64) -> Option<ExtReal> {
        self.samples.iter().find(|s| s.t == t).map(|s| s.k)
    }

    /// Checks `K ≥ 0`, `K(0) = 0` and convexity of consecutive finite
    /// samples, up to `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<(), String> {
        for s in &self.samples {
            if s.k < ExtReal::Finite(-tol) {
                return Err(format!("K({}) = {} < 0", s.t, s.k));
            }
            if s.t == 0.0 && s.k.abs_diff(ExtReal::ZERO) > tol {
                return Err(format!("K(0) = {}", s.k));
            }
        }
        let fin: Vec<(f64, f64)> = self.finite_samples().map(|s| (s.t, s.k.to_f64())).collect();
        for w in fin.windows(3) {
            let ((t0, k0), (t1, k1), (t2, k2)) = (w[0], w[1], w[2]);
            let chord = k0 + (k2 - k0) * (t1 - t0) / (t2 - t0);
            if k1 > chord + tol * (1.0 + chord.abs()) {
                return Err(format!("not convex at t = {t1}"));
            }
        }
        Ok(())
    }
}

/// Samples `source` at every `t`, in parallel when enabled. Output order
/// follows `ts`.
pub fn cgf_curve<S: CumulantSource + ?Sized>(source: &S, ts: &[f64]) -> CgfCurve {
    let samples = par::map(ts, |&t| {
        let (k, lambda_opt) = source.cumulant(t);
        CgfSample { t, k, lambda_opt }
    });
    CgfCurve {
        samples,
        spec_name: source.spec_label(),
        dist_digest: source.digest(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubexponentialHint {
    LooksStronglySubexponential,
    LooksSubexponential,
    BoundedOnlyRegime,
    Inconclusive,
}

impl SubexponentialHint {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubexponentialHint::LooksStronglySubexponential => "looks-strongly-subexponential",
            SubexponentialHint::LooksSubexponential => "looks-subexponential",
            SubexponentialHint::BoundedOnlyRegime => "bounded-only-regime",
            SubexponentialHint::Inconclusive => "inconclusive",
        }
    }
}

/// Result of [`subexponential_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    /// Probe points where `K` is finite.
    pub finite_ts: Vec<f64>,
    /// Largest `T` with `K` finite at every probe point in `[−T, T]`.
    pub symmetric_radius: f64,
    pub hint: SubexponentialHint,
}

/// Probes where `K` is finite on a symmetric geometric grid
/// `±10^{k/2}`, `k = −6..6`.
pub fn subexponential_probe(query: &CgfQuery) -> ProbeReport {
    let mut ts: Vec<f64> = (-6..=6).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    ts.extend(ts.clone().iter().map(|t| -t));
    ts.push(0.0);
    ts.sort_by(f64::total_cmp);
    let ks = par::map(&ts, |&t| cgf(query, t).0);
    let finite_ts: Vec<f64> = ts
        .iter()
        .zip(&ks)
        .filter(|(_, k)| k.is_finite())
        .map(|(t, _)| *t)
        .collect();
    let mut radius = 0.0;
    let positives: Vec<f64> = ts.iter().copied().filter(|t| *t > 0.0).collect();
    for t in positives {
        let ok = ts
            .iter()
            .zip(&ks)
            .filter(|(s, _)| s.abs() <= t)
            .all(|(_, k)| k.is_finite());
        if ok {
            radius = t;
        } else {
            break;
        }
    }
    let (lo, hi) = query.effective_range();
    let bounded = lo.is_finite() && hi.is_finite();
    let hint = if query.dist.is_point_mass() && bounded
        || (bounded && query.spec.slope_inf().is_pos_inf())
    {
        SubexponentialHint::LooksStronglySubexponential
    } else if query.spec.slope_inf().is_finite() && (lo == NegInf || hi == PosInf) {
        SubexponentialHint::BoundedOnlyRegime
    } else if finite_ts.len() == ts.len() {
        SubexponentialHint::LooksStronglySubexponential
    } else if radius > 0.0 {
        SubexponentialHint::LooksSubexponential
    } else {
        SubexponentialHint::Inconclusive
    };
    ProbeReport {
        finite_ts,
        symmetric_radius: radius,
        hint,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::make_divergence;
    use crate::measures::{quadrature_dist, Family};

    fn q(name: &str, xs: &[f64]) -> CgfQuery {
        CgfQuery::new(
            make_divergence(name, None).unwrap(),
            PushforwardDist::uniform(xs).unwrap(),
        )
    }

    #[test]
    fn kl_fast_and_generic_paths_agree() {
        let fast = q("kl", &[-1.0, 1.0]);
        let slow = fast.clone().generic();
        let expect = 1f64.cosh().ln();
        assert!((cgf(&fast, 1.0).0.to_f64() - expect).abs() < 1e-12);
        assert!((cgf(&slow, 1.0).0.to_f64() - expect).abs() < 1e-8);
        let (l1, l2) = (cgf(&fast, 1.0).1.unwrap(), cgf(&slow, 1.0).1.unwrap());
        assert!((l1 - l2).abs() < 1e-6, "{l1} vs {l2}");
    }

    #[test]
    fn zero_at_zero() {
        for name in ["kl", "chi2", "total_variation", "squared_hellinger"] {
            assert_eq!(cgf(&q(name, &[0.0, 3.0]), 0.0).0, ExtReal::ZERO);
        }
    }

    #[test]
    fn chi_square_quadratic_region() {
        let query = q("chi2", &[-1.0, 1.0]);
        let (k, lam) = cgf(&query, 0.5);
        assert!((k.to_f64() - 0.0625).abs() < 1e-12);
        // The optimum keeps t·x + λ in the quadratic region x ≥ −2.
        let lam = lam.unwrap();
        assert!(-0.5 + lam >= -2.0);
        let brute = (0..=20000)
            .map(|i| {
                let l = -1.0 + 1e-4 * i as f64;
                let psi = |y: f64| if y >= -2.0 { y * y / 4.0 } else { -1.0 - y };
                0.5 * psi(-0.5 + l) + 0.5 * psi(0.5 + l)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((brute - 0.0625).abs() < 1e-10);
    }

    #[test]
    fn bounded_tv_curve_is_finite() {
        let ts: Vec<f64> = (-20..=20).map(|i| 0.1 * i as f64).collect();
        let c = cgf_curve(&q("total_variation", &[-1.0, -0.2, 0.5, 1.0]), &ts);
        assert!(c.samples.iter().all(|s| s.is_finite()));
        c.check_invariants(1e-9).unwrap();
    }

    #[test]
    fn gaussian_log_mgf() {
        let d = quadrature_dist(Family::Gaussian { mean: 0.0, sd: 1.0 }, 40).unwrap();
        let query = CgfQuery::new(make_divergence("kl", None).unwrap(), d);
        let ts: Vec<f64> = (-3..=3).map(|t| t as f64).collect();
        for s in cgf_curve(&query, &ts).samples {
            assert!((s.k.to_f64() - s.t * s.t / 2.0).abs() < 0.01, "t={}", s.t);
        }
    }

    #[test]
    fn point_mass_has_zero_cgf() {
        let query = q("kl", &[2.0]);
        for t in [-3.0, 0.5, 10.0] {
            assert!(cgf(&query, t).0.to_f64().abs() < 1e-12);
            assert!(cgf(&query.clone().generic(), t).0.to_f64().abs() < 1e-12);
        }
    }

    #[test]
    fn override_is_validated_and_used() {
        let base = q("total_variation", &[-1.0, 1.0]);
        assert!(base
            .clone()
            .with_range_override(ExtReal::Finite(-0.5), ExtReal::Finite(1.0))
            .is_err());
        let wide = base
            .with_range_override(ExtReal::Finite(-1.0), PosInf)
            .unwrap();
        assert!(cgf(&wide, 0.5).0.is_pos_inf());
        assert!(cgf(&wide, -0.5).0.is_finite());
        let r = subexponential_probe(&wide);
        assert_eq!(r.hint, SubexponentialHint::BoundedOnlyRegime);
    }

    #[test]
    fn probe_hints() {
        let d = quadrature_dist(Family::Gaussian { mean: 0.0, sd: 1.0 }, 20).unwrap();
        let gq = CgfQuery::new(make_divergence("kl", None).unwrap(), d);
        assert_eq!(
            subexponential_probe(&gq).hint,
            SubexponentialHint::LooksStronglySubexponential
        );
        let pm = q("total_variation", &[1.0]);
        let r = subexponential_probe(&pm);
        assert_eq!(r.hint, SubexponentialHint::LooksStronglySubexponential);
        assert_eq!(r.finite_ts.len(), 27);
    }
}
