//! Bounds in terms of the total variation distance.
//!
//! Throughout, total variation is `sup |μ(g) − ν(g)|` over `g` valued in
//! `[−1, 1]`, so it ranges over `[0, 2]` (the L1 distance, twice the
//! "half-L1" convention).
//!
//! The tight lower bound is `L(ε) = H*(ε/2)` where `H` is the height-for-width
//! function of `ψ*`: the smallest `h` whose sublevel set `{ψ* ≤ h}` has
//! length at least `w`.

use thiserror::Error;

use crate::convex::{minimize_1d, Minimizer};
use crate::divergences::PhiSpec;
use crate::extreal::{ExtReal, PosInf};
use crate::par;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VajdaError {
    #[error("generator is not twice differentiable near x = {0}")]
    NotTwiceDifferentiable(f64),
    #[error("degenerate interval: need m < M, got m = {m}, M = {big_m}")]
    DegenerateInterval { m: f64, big_m: f64 },
}

/// `(w, H(w), λ(w))` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightCurve {
    pub samples: Vec<(f64, ExtReal, Option<f64>)>,
    pub spec_name: String,
}

impl HeightCurve {
    /// `H(0) = 0`, `H` nondecreasing, and equal heights at `λ(w) ± w/2`.
    pub fn check_invariants(&self, spec: &PhiSpec, tol: f64) -> Result<(), String> {
        let mut prev: Option<(f64, ExtReal)> = None;
        for &(w, h, lam) in &self.samples {
            if w == 0.0 && h.abs_diff(ExtReal::ZERO) > tol {
                return Err(format!("H(0) = {h}"));
            }
            if let Some((pw, ph)) = prev {
                if w > pw && h + tol < ph {
                    return Err(format!("H decreases between {pw} and {w}"));
                }
            }
            if let Some(l) = lam {
                let a = spec.psi_star_eval(l + w / 2.0);
                let b = spec.psi_star_eval(l - w / 2.0);
                if a.abs_diff(b) > tol * (1.0 + h.to_f64().abs()) {
                    return Err(format!("unequal heights at w = {w}: {a} vs {b}"));
                }
            }
            prev = Some((w, h));
        }
        Ok(())
    }
}

/// Length of `{ψ* ≤ h}`. Each endpoint is found by bisection on one side of
/// the minimizer `0` of `ψ*`.
pub fn sublevel_width(spec: &PhiSpec, h: f64) -> f64 {
    let h = h.max(0.0);
    let below = |y: f64| spec.psi_star_eval(y) <= ExtReal::Finite(h);
    let hi = match spec.slope_inf().finite() {
        Some(s) if below(s) => s,
        Some(s) => bisect_edge(&below, 0.0, s),
        None => bisect_edge(&below, 0.0, expand(&below, 1.0)),
    };
    let lo = bisect_edge(&below, 0.0, expand(&below, -1.0));
    hi - lo
}

/// First point of the form `dir·2^k` outside the sublevel set.
fn expand(inside: &dyn Fn(f64) -> bool, dir: f64) -> f64 {
    let mut y = dir;
    while inside(y) && y.abs() < 1e300 {
        y *= 2.0;
    }
    y
}

/// Boundary between `a` (inside) and `b` (outside).
fn bisect_edge(inside: &dyn Fn(f64) -> bool, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if inside(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// `H(w) = inf_λ max{ψ*(λ + w/2), ψ*(λ − w/2)}` together with the
/// equalizing shift `λ(w)` when one exists.
pub fn height(spec: &PhiSpec, w: f64) -> (ExtReal, Option<f64>) {
    if w <= 0.0 {
        return (ExtReal::ZERO, Some(0.0));
    }
    let half = w / 2.0;
    let up = |l: f64| spec.psi_star_eval(l + half);
    let down = |l: f64| spec.psi_star_eval(l - half);
    let top = |l: f64| up(l).max(down(l));

    // ψ*(λ + w/2) − ψ*(λ − w/2) is nondecreasing in λ; it is ≤ 0 at
    // λ = −w/2 and ≥ 0 at λ = w/2 since ψ* is minimal at 0. Keep
    // λ + w/2 inside dom ψ*.
    let a = -half;
    let b = match spec.slope_inf().finite() {
        Some(s) => half.min(s - half),
        None => half,
    };
    let diff = |l: f64| up(l) - down(l);
    if b < a || !down(a).is_finite() || !down(b).is_finite() {
        return match minimize_1d(top, (a, a.max(b)), 1e-12 * (1.0 + w)) {
            Ok(m) => (m.value, None),
            Err(_) => (PosInf, None),
        };
    }
    if diff(b) < ExtReal::ZERO {
        // The right-hand branch never catches up inside the domain.
        return (top(b), None);
    }
    // Zero set of the difference, as [sup{diff < 0}, inf{diff > 0}].
    let neg = |l: f64| diff(l) < ExtReal::ZERO;
    let pos = |l: f64| diff(l) > ExtReal::ZERO;
    let left = if neg(a) { bisect_edge(&neg, a, b) } else { a };
    let right = if pos(b) {
        bisect_edge(&|l| !pos(l), a, b)
    } else {
        b
    };
    let lam = 0.5 * (left + right);
    let h = top(lam);
    if left < right && right - left > 1e-9 * (1.0 + w) {
        // Flat stretch: several equalizers; the minimum of the max may still
        // sit elsewhere when ψ* has a flat minimum.
        if let Ok(m) = minimize_1d(top, (left, right), 1e-12 * (1.0 + w)) {
            if m.value < h {
                return (m.value, Some(m.argmin));
            }
        }
    }
    (h, Some(lam))
}

/// `H` for KL in closed form.
pub fn kl_height_closed_form(w: f64) -> f64 {
    let w = w.abs();
    if w < 1e-3 {
        let w2 = w * w;
        return w2 / 8.0 - w2 * w2 / 576.0 + w2 * w2 * w2 / 21600.0;
    }
    let h = w / 2.0;
    // log(2 sinh(h)/w), stable for large h.
    let log_ratio = h + (-(-2.0 * h).exp()).ln_1p() - w.ln();
    -1.0 + h / h.tanh() + log_ratio
}

/// Equalizing shift for KL in closed form: `−log(2 sinh(w/2)/w)`.
pub fn kl_lambda_closed_form(w: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let h = w.abs() / 2.0;
    -(h + (-(-2.0 * h).exp()).ln_1p() - w.abs().ln())
}

/// `H` sampled on `ws`.
pub fn height_curve(spec: &PhiSpec, ws: &[f64]) -> HeightCurve {
    let samples = par::map(ws, |&w| {
        let (h, l) = height(spec, w);
        (w, h, l)
    });
    HeightCurve {
        samples,
        spec_name: spec.label(),
    }
}

/// Tight lower bound on `D_φ(μ‖ν)` given total variation `eps`:
/// `L(ε) = sup_{w ≥ 0} { w·ε/2 − H(w) }`. Even in `eps`; `+∞` beyond 2.
pub fn vajda_bound(spec: &PhiSpec, eps: f64) -> ExtReal {
    let eps = eps.abs();
    if eps == 0.0 {
        return ExtReal::ZERO;
    }
    if eps > 2.0 {
        return PosInf;
    }
    let s = eps / 2.0;
    // H is convex, so the objective is concave in w.
    let obj = |w: f64| height(spec, w).0 - ExtReal::Finite(w * s);
    let ws: Vec<f64> = std::iter::once(0.0)
        .chain((-32..=64).map(|k| 10f64.powf(k as f64 / 8.0)))
        .collect();
    let vals: Vec<ExtReal> = ws.iter().map(|&w| obj(w)).collect();
    let (j, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cmp(b.1))
        .expect("grid is nonempty");
    let last = ws.len() - 1;
    if j == last {
        // Still increasing at the far end: check the tail for growth.
        let far = obj(1e10);
        return if far < vals[last] - ExtReal::Finite(1e-6) {
            PosInf
        } else {
            (-far.min(vals[last])).max(ExtReal::ZERO)
        };
    }
    let a = ws[j.saturating_sub(1)];
    let b = ws[j + 1];
    let tol = 1e-12 * (1.0 + ws[j]);
    match Minimizer::new(tol)
        .with_limits(0.0, ws[last])
        .minimize(obj, (a, b))
    {
        Ok(m) => (-m.value.min(vals[j])).max(ExtReal::ZERO),
        Err(_) => (-vals[j]).max(ExtReal::ZERO),
    }
}

/// [`vajda_bound`] sampled on `eps`.
pub fn vajda_curve(spec: &PhiSpec, eps: &[f64]) -> Vec<(f64, ExtReal)> {
    par::map(eps, |&e| (e, vajda_bound(spec, e)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinskerKind {
    /// `φ″` monotone; constant `φ″(1)/8`.
    Crude,
    /// `27φ″(1)/(3 − zφ‴(1)/φ″(1))³ ≤ φ″(1 + z)`; constant `φ″(1)/2`.
    Optimal,
    /// `1/φ″` concave; constant `φ″(1)/2`.
    Concave,
}

impl PinskerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PinskerKind::Crude => "crude",
            PinskerKind::Optimal => "optimal",
            PinskerKind::Concave => "concave",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "crude" => Some(PinskerKind::Crude),
            "optimal" => Some(PinskerKind::Optimal),
            "concave" => Some(PinskerKind::Concave),
            _ => None,
        }
    }
}

/// Outcome of a Pinsker-type sufficient condition checked on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PinskerReport {
    pub kind: PinskerKind,
    pub holds: bool,
    /// `c` in `D ≥ c·TV²` when the condition holds.
    pub constant: f64,
    pub violating_z: Option<f64>,
    /// Range of `z` (with `x = 1 + z`) actually checked. The conditions
    /// quantify over all `z ≥ −1`; only this range is verified.
    pub verified_range: (f64, f64),
}

const D2_STEP: f64 = 1e-4;
const D3_STEP: f64 = 1e-3;

/// Checks the sufficient condition `kind` for `D ≥ c·TV²` at the points
/// `x = 1 + z`, `z ∈ z_grid` with `z > −1`.
pub fn pinsker_check(
    spec: &PhiSpec,
    kind: PinskerKind,
    z_grid: &[f64],
) -> Result<PinskerReport, VajdaError> {
    let mut zs: Vec<f64> = z_grid
        .iter()
        .copied()
        .filter(|z| *z > -1.0 && z.is_finite())
        .collect();
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    let d2 = |x: f64| second_derivative(spec, x);
    let c2 = d2(1.0)?;
    let verified_range = (
        zs.first().copied().unwrap_or(f64::NAN),
        zs.last().copied().unwrap_or(f64::NAN),
    );
    let d2s: Vec<f64> = zs.iter().map(|z| d2(1.0 + z)).collect::<Result<_, _>>()?;
    let rel = |a: f64, b: f64| 1e-9 * (1.0 + a.abs().max(b.abs()));

    let (constant, violating_z) = match kind {
        PinskerKind::Crude => {
            let up = d2s.windows(2).position(|p| p[1] < p[0] - rel(p[0], p[1]));
            let down = d2s.windows(2).position(|p| p[1] > p[0] + rel(p[0], p[1]));
            let bad = match (up, down) {
                (Some(i), Some(j)) => Some(zs[i.max(j) + 1]),
                _ => None,
            };
            (c2 / 8.0, bad)
        }
        PinskerKind::Optimal => {
            let c3 = third_derivative(spec, 1.0)?;
            let bad = zs.iter().zip(&d2s).find_map(|(&z, &rhs)| {
                let den = 3.0 - z * c3 / c2;
                // A nonpositive denominator leaves the left side ≤ 0.
                let lhs = if den > 0.0 {
                    27.0 * c2 / den.powi(3)
                } else {
                    f64::NEG_INFINITY
                };
                (lhs > rhs + rel(lhs, rhs)).then_some(z)
            });
            (c2 / 2.0, bad)
        }
        PinskerKind::Concave => {
            let inv: Vec<f64> = d2s.iter().map(|v| 1.0 / v).collect();
            let mut bad = None;
            for i in 1..zs.len().saturating_sub(1) {
                // Concavity at the middle of each consecutive triple.
                let (x0, x1, x2) = (zs[i - 1], zs[i], zs[i + 1]);
                let t = (x1 - x0) / (x2 - x0);
                let chord = (1.0 - t) * inv[i - 1] + t * inv[i + 1];
                if inv[i] < chord - rel(inv[i], chord) {
                    bad = Some(x1);
                    break;
                }
            }
            if bad.is_none() && !spec.slope_inf().is_pos_inf() {
                // ψ* must blow up at the right end of its domain.
                let s = spec.slope_inf().to_f64();
                if spec.psi_star_eval(s).is_finite() {
                    bad = zs.last().copied();
                }
            }
            (c2 / 2.0, bad)
        }
    };
    Ok(PinskerReport {
        kind,
        holds: violating_z.is_none(),
        constant,
        violating_z,
        verified_range,
    })
}

/// `φ″(x)`: closed form when registered, else Richardson-extrapolated
/// central differences.
pub fn second_derivative(spec: &PhiSpec, x: f64) -> Result<f64, VajdaError> {
    if let Some(v) = spec.second_derivative(x) {
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(VajdaError::NotTwiceDifferentiable(x))
        };
    }
    let f = |y: f64| spec.phi_eval(y).to_f64();
    let diff = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    richardson(diff, D2_STEP, x)
}

/// `φ‴(x)`, as [`second_derivative`].
pub fn third_derivative(spec: &PhiSpec, x: f64) -> Result<f64, VajdaError> {
    if let Some(v) = spec.third_derivative(x) {
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(VajdaError::NotTwiceDifferentiable(x))
        };
    }
    let f = |y: f64| spec.phi_eval(y).to_f64();
    let diff = |h: f64| {
        (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
    };
    richardson(diff, D3_STEP, x)
}

/// Second-order-accurate differences `d(h)` extrapolated from `h` and
/// `h/2`; rejected when the estimate from the next halving disagrees.
fn richardson(d: impl Fn(f64) -> f64, h: f64, x: f64) -> Result<f64, VajdaError> {
    let (a, b, c) = (d(h), d(h / 2.0), d(h / 4.0));
    let r1 = (4.0 * b - a) / 3.0;
    let r2 = (4.0 * c - b) / 3.0;
    let stable = [a, b, c, r1, r2].iter().all(|v| v.is_finite())
        && (r1 - r2).abs() <= 1e-3 * (1.0 + r1.abs().max(r2.abs()));
    if stable {
        Ok(r2)
    } else {
        Err(VajdaError::NotTwiceDifferentiable(x))
    }
}

/// Upper bounds on `log E_ν[e^{t g}]` for `ν`-centered `g` valued in `[m, M]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingBound {
    /// `H_KL((M − m)|t|)`.
    pub refined: f64,
    /// `(M − m)² t² / 8`.
    pub classical: f64,
}

pub fn hoeffding_bound(m: f64, big_m: f64, t: f64) -> Result<HoeffdingBound, VajdaError> {
    if !(m < big_m) {
        return Err(VajdaError::DegenerateInterval { m, big_m });
    }
    let r = big_m - m;
    Ok(HoeffdingBound {
        refined: kl_height_closed_form(r * t.abs()),
        classical: r * r * t * t / 8.0,
    })
}
