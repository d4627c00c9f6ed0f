//! Legendre–Fenchel conjugation `f*(y) = sup_x { x·y − f(x) }`.

use std::fmt;
use std::sync::Arc;

use super::{ConvexError, FunctionKind, Minimizer, ScalarConvexFunction, Side};
use crate::extreal::{ExtReal, NegInf, PosInf};

/// Grid used by the numeric conjugate: a coarse log-spaced pass around an
/// anchor and the domain endpoints, `refine_rounds` local linear passes
/// around the running maximizer, then a golden-section polish.
#[derive(Debug, Clone, Copy)]
pub struct GridPolicy {
    pub min_decade: i32,
    pub max_decade: i32,
    pub points_per_decade: usize,
    pub refine_rounds: usize,
    pub refine_points: usize,
    pub tol: f64,
    /// Ignore a registered closed form and conjugate numerically.
    pub force_numeric: bool,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            min_decade: -12,
            max_decade: 12,
            points_per_decade: 4,
            refine_rounds: 3,
            refine_points: 16,
            tol: 1e-12,
            force_numeric: false,
        }
    }
}

impl GridPolicy {
    pub fn numeric() -> Self {
        GridPolicy {
            force_numeric: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugateMethod {
    ClosedForm,
    Numeric,
}

type ArgmaxFn = Arc<dyn Fn(f64) -> Option<f64> + Send + Sync>;

/// The conjugate `f*` together with the maximizer map `y ↦ argmax_x {xy − f(x)}`.
#[derive(Clone)]
pub struct ConjugateResult {
    pub function: ScalarConvexFunction,
    pub method: ConjugateMethod,
    argmax: ArgmaxFn,
    /// `(f′(−∞), f′(+∞))`, the endpoints of `dom f*`.
    pub domain: (ExtReal, ExtReal),
}

impl fmt::Debug for ConjugateResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConjugateResult")
            .field("function", &self.function)
            .field("method", &self.method)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ConjugateResult {
    pub fn eval(&self, y: f64) -> ExtReal {
        self.function.eval(y)
    }

    /// A maximizer of `x·y − f(x)` when the supremum is attained.
    pub fn argmax(&self, y: f64) -> Option<f64> {
        (self.argmax)(y)
    }

    /// Whether `y` sits on the boundary of `dom f*`, where the value is a
    /// limit and the supremum may not be attained.
    pub fn is_boundary(&self, y: f64) -> bool {
        let tol = 1e-12 * (1.0 + y.abs());
        [self.domain.0, self.domain.1]
            .iter()
            .any(|e| e.finite().is_some_and(|e| (e - y).abs() <= tol))
    }
}

/// Computes the convex conjugate of a proper convex `f`.
pub fn conjugate(
    f: &ScalarConvexFunction,
    policy: GridPolicy,
) -> Result<ConjugateResult, ConvexError> {
    if f.dom_lo() > f.dom_hi() || f.finite_point().is_none() {
        return Err(ConvexError::EmptyDomain);
    }
    f.check_convexity(64, 10.0, 1e-9)?;
    let domain = (
        f.slope_at_infinity(Side::Minus),
        f.slope_at_infinity(Side::Plus),
    );

    if let (Some(g), false) = (f.registered_conjugate(), policy.force_numeric) {
        let g = g.clone();
        let gd = g.clone();
        let argmax: ArgmaxFn =
            Arc::new(move |y| gd.subgradient(y).and_then(|s| s.midpoint().finite()));
        return Ok(ConjugateResult {
            function: g,
            method: ConjugateMethod::ClosedForm,
            argmax,
            domain,
        });
    }

    let engine = Arc::new(NumericConjugate::new(f.clone(), policy, domain)?);
    let e1 = engine.clone();
    let e2 = engine.clone();
    let function = ScalarConvexFunction::numeric(move |y| e1.value(y).0)
        .on_domain(domain.0, domain.1)
        .with_slopes(f.dom_lo(), f.dom_hi())
        .with_kind(FunctionKind::Numeric);
    Ok(ConjugateResult {
        function,
        method: ConjugateMethod::Numeric,
        argmax: Arc::new(move |y| e2.value(y).1),
        domain,
    })
}

/// Cached coarse grid of a function, evaluated once per conjugate.
struct NumericConjugate {
    f: ScalarConvexFunction,
    policy: GridPolicy,
    domain: (ExtReal, ExtReal),
    xs: Vec<f64>,
    fs: Vec<f64>,
    unbounded_lo: bool,
    unbounded_hi: bool,
}

impl NumericConjugate {
    fn new(
        f: ScalarConvexFunction,
        policy: GridPolicy,
        domain: (ExtReal, ExtReal),
    ) -> Result<Self, ConvexError> {
        let anchor = f.finite_point().ok_or(ConvexError::EmptyDomain)?;
        let lo = f.dom_lo().to_f64();
        let hi = f.dom_hi().to_f64();
        let mut xs = vec![anchor, 0.0, 1.0];
        let per = policy.points_per_decade.max(1) as i32;
        for i in (policy.min_decade * per)..=(policy.max_decade * per) {
            let e = 10f64.powf(i as f64 / per as f64);
            xs.push(anchor + e);
            xs.push(anchor - e);
            if lo.is_finite() {
                xs.push(lo + e);
            }
            if hi.is_finite() {
                xs.push(hi - e);
            }
        }
        if lo.is_finite() {
            xs.push(lo);
        }
        if hi.is_finite() {
            xs.push(hi);
        }
        xs.retain(|x| x.is_finite());
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let (xs, fs): (Vec<f64>, Vec<f64>) = xs
            .into_iter()
            .filter_map(|x| f.eval(x).finite().map(|v| (x, v)))
            .unzip();
        if xs.is_empty() {
            return Err(ConvexError::EmptyDomain);
        }
        Ok(NumericConjugate {
            unbounded_lo: !lo.is_finite(),
            unbounded_hi: !hi.is_finite(),
            f,
            policy,
            domain,
            xs,
            fs,
        })
    }

    /// `(f*(y), maximizer)`.
    fn value(&self, y: f64) -> (ExtReal, Option<f64>) {
        if ExtReal::Finite(y) > self.domain.1 || ExtReal::Finite(y) < self.domain.0 {
            return (PosInf, None);
        }
        let obj = |x: f64| -> ExtReal { ExtReal::Finite(x * y) - self.f.eval(x) };
        let (mut j, mut best) = (0, f64::NEG_INFINITY);
        for (i, (&x, &fx)) in self.xs.iter().zip(&self.fs).enumerate() {
            let v = x * y - fx;
            if v > best {
                best = v;
                j = i;
            }
        }
        let n = self.xs.len();
        if (j == n - 1 && self.unbounded_hi) || (j == 0 && self.unbounded_lo) {
            // Supremum approached at infinity: y is on the boundary of the
            // conjugate's domain and the value is a limit.
            return (ExtReal::Finite(best), None);
        }
        let mut a = self.xs[j.saturating_sub(1)];
        let mut b = self.xs[(j + 1).min(n - 1)];
        let mut xbest = self.xs[j];
        for _ in 0..self.policy.refine_rounds {
            let m = self.policy.refine_points.max(2);
            let step = (b - a) / m as f64;
            if step <= 0.0 {
                break;
            }
            let mut k_best = 0;
            let mut v_best = NegInf;
            for k in 0..=m {
                let x = a + step * k as f64;
                let v = obj(x);
                if v > v_best {
                    v_best = v;
                    k_best = k;
                }
            }
            xbest = a + step * k_best as f64;
            let na = (xbest - step).max(a);
            let nb = (xbest + step).min(b);
            a = na;
            b = nb;
        }
        let tol = self.policy.tol * (1.0 + xbest.abs());
        let polished = Minimizer::new(tol)
            .with_limits(a, b)
            .minimize(|x| -obj(x), (a, b));
        match polished {
            Ok(m) if -m.value >= obj(xbest) => (-m.value, Some(m.argmin)),
            _ => (obj(xbest), Some(xbest)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::Subgradient;

    fn kl_phi() -> ScalarConvexFunction {
        ScalarConvexFunction::closed_form(|x: f64| {
            ExtReal::Finite(if x == 0.0 { 1.0 } else { x * x.ln() - x + 1.0 })
        })
        .on_domain(ExtReal::ZERO, PosInf)
        .with_subgradient(|x: f64| Subgradient::point(x.ln()))
    }

    /// Brute-force supremum over a dense grid on (0, 50].
    fn grid_sup(f: impl Fn(f64) -> f64, y: f64) -> f64 {
        (1..=500_000)
            .map(|i| {
                let x = 50.0 * i as f64 / 500_000.0;
                x * y - f(x)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn kl_generator_conjugate_is_exp_minus_one() {
        let raw = |x: f64| x * x.ln() - x + 1.0;
        let c = conjugate(&kl_phi(), GridPolicy::numeric()).unwrap();
        assert_eq!(c.method, ConjugateMethod::Numeric);
        for y in [-1.0f64, 0.0, 1.0] {
            let oracle = grid_sup(raw, y);
            assert!((oracle - y.exp_m1()).abs() < 1e-6);
            assert!((c.eval(y).to_f64() - y.exp_m1()).abs() < 1e-9, "y={y}");
            let x = c.argmax(y).unwrap();
            assert!((x - y.exp()).abs() < 1e-5, "argmax {x} at {y}");
        }
    }

    #[test]
    fn square_conjugate() {
        let sq = ScalarConvexFunction::closed_form(|x: f64| ExtReal::Finite(x * x));
        let c = conjugate(&sq, GridPolicy::numeric()).unwrap();
        assert!((c.eval(2.0).to_f64() - 1.0).abs() < 1e-10);
        // Fenchel–Young with equality at (1, 2).
        assert!((sq.eval(1.0).to_f64() + c.eval(2.0).to_f64() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn chi_square_psi_conjugate_has_linear_tail() {
        let psi = ScalarConvexFunction::closed_form(|x: f64| ExtReal::Finite(x * x))
            .on_domain(ExtReal::Finite(-1.0), PosInf);
        let c = conjugate(&psi, GridPolicy::numeric()).unwrap();
        for y in [-5.0, -2.5, -2.0, -1.0, 0.0, 0.7, 3.0] {
            let expect = if y >= -2.0 { y * y / 4.0 } else { -1.0 - y };
            assert!((c.eval(y).to_f64() - expect).abs() < 1e-9, "y={y}");
        }
    }

    #[test]
    fn finite_slope_gives_bounded_domain() {
        let tv = ScalarConvexFunction::closed_form(|x: f64| ExtReal::Finite((x - 1.0).abs()))
            .on_domain(ExtReal::ZERO, PosInf);
        let c = conjugate(&tv, GridPolicy::numeric()).unwrap();
        assert!(c.eval(1.5).is_pos_inf());
        assert!((c.eval(0.3).to_f64() - 0.3).abs() < 1e-9);
        assert!((c.eval(-4.0).to_f64() + 1.0).abs() < 1e-9);
        assert!(c.is_boundary(1.0));
        assert!((c.eval(1.0).to_f64() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonconvex_and_empty() {
        let f = ScalarConvexFunction::closed_form(|x: f64| ExtReal::Finite(x.sin()));
        assert!(matches!(
            conjugate(&f, GridPolicy::default()),
            Err(ConvexError::NonConvexInput { .. })
        ));
        let e = ScalarConvexFunction::closed_form(|_| PosInf);
        assert!(matches!(
            conjugate(&e, GridPolicy::default()),
            Err(ConvexError::EmptyDomain)
        ));
    }
}
