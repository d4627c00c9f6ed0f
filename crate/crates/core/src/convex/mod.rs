//! Extended-real convex functions on ℝ: evaluation, one-sided derivatives,
//! asymptotic slopes, conjugation and 1-D minimization.

mod conjugate;
mod minimize;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::extreal::{ExtReal, NegInf, PosInf};

pub use conjugate::{conjugate, ConjugateMethod, ConjugateResult, GridPolicy};
pub use minimize::{minimize_1d, Minimizer, Minimum};

/// Tolerance for closed-form paths.
pub const CLOSED_FORM_TOL: f64 = 1e-10;
/// Tolerance for sampled / numerically conjugated paths.
pub const SAMPLED_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("function failed the convexity spot check at a={a}, b={b}, theta={theta}")]
    NonConvexInput { a: f64, b: f64, theta: f64 },
    #[error("function has an empty effective domain")]
    EmptyDomain,
    #[error("objective still decreasing after expanding the bracket to width {width}")]
    UnboundedBelow { width: f64 },
    #[error("objective is +inf everywhere on [{lo}, {hi}]")]
    AllInfinite { lo: f64, hi: f64 },
    #[error("invalid bracket or limits")]
    InvalidBracket,
}

/// Direction of an asymptotic slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    ClosedForm,
    /// Values computed by an inner optimization (numeric conjugates).
    Numeric,
    /// Piecewise interpolant of sampled values.
    Interpolant,
}

/// The subdifferential `[f'₋(x), f'₊(x)]` of a convex function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subgradient {
    pub left: ExtReal,
    pub right: ExtReal,
}

impl Subgradient {
    pub fn point(d: f64) -> Self {
        Subgradient {
            left: ExtReal::Finite(d),
            right: ExtReal::Finite(d),
        }
    }

    pub fn interval(left: f64, right: f64) -> Self {
        Subgradient {
            left: ExtReal::from_f64(left),
            right: ExtReal::from_f64(right),
        }
    }

    /// Midpoint of the interval; an infinite end gives the other end.
    pub fn midpoint(&self) -> ExtReal {
        match (self.left, self.right) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(0.5 * (a + b)),
            (ExtReal::Finite(a), _) => ExtReal::Finite(a),
            (_, ExtReal::Finite(b)) => ExtReal::Finite(b),
            (l, _) => l,
        }
    }

    pub fn contains(&self, d: f64, tol: f64) -> bool {
        let d = ExtReal::Finite(d);
        self.left <= d + tol && d - tol <= self.right
    }

    pub fn is_kink(&self, tol: f64) -> bool {
        self.left.abs_diff(self.right) > tol
    }
}

type EvalFn = Arc<dyn Fn(f64) -> ExtReal + Send + Sync>;
type SubgradFn = Arc<dyn Fn(f64) -> Subgradient + Send + Sync>;

/// A proper convex function `ℝ → ℝ ∪ {+∞}`.
///
/// Evaluation is `+∞` outside `[dom_lo, dom_hi]`. Derivatives, asymptotic
/// slopes and the conjugate are taken from closed forms when registered and
/// computed numerically otherwise.
#[derive(Clone)]
pub struct ScalarConvexFunction {
    eval: EvalFn,
    subgrad: Option<SubgradFn>,
    dom_lo: ExtReal,
    dom_hi: ExtReal,
    slope_plus: Option<ExtReal>,
    slope_minus: Option<ExtReal>,
    kind: FunctionKind,
    conjugate: Option<Arc<ScalarConvexFunction>>,
}

impl fmt::Debug for ScalarConvexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarConvexFunction")
            .field("dom", &(self.dom_lo, self.dom_hi))
            .field("kind", &self.kind)
            .field("has_conjugate", &self.conjugate.is_some())
            .finish()
    }
}

impl ScalarConvexFunction {
    /// A closed-form function finite on all of ℝ unless restricted.
    pub fn closed_form<F>(f: F) -> Self
    where
        F: Fn(f64) -> ExtReal + Send + Sync + 'static,
    {
        ScalarConvexFunction {
            eval: Arc::new(f),
            subgrad: None,
            dom_lo: NegInf,
            dom_hi: PosInf,
            slope_plus: None,
            slope_minus: None,
            kind: FunctionKind::ClosedForm,
            conjugate: None,
        }
    }

    pub(crate) fn numeric<F>(f: F) -> Self
    where
        F: Fn(f64) -> ExtReal + Send + Sync + 'static,
    {
        let mut g = Self::closed_form(f);
        g.kind = FunctionKind::Numeric;
        g
    }

    /// Sets the effective domain endpoints.
    pub fn on_domain(mut self, lo: ExtReal, hi: ExtReal) -> Self {
        self.dom_lo = lo;
        self.dom_hi = hi;
        self
    }

    /// Registers exact asymptotic slopes `f′(−∞)` and `f′(+∞)`.
    pub fn with_slopes(mut self, minus: ExtReal, plus: ExtReal) -> Self {
        self.slope_minus = Some(minus);
        self.slope_plus = Some(plus);
        self
    }

    /// Registers exact one-sided derivatives.
    pub fn with_subgradient<D>(mut self, d: D) -> Self
    where
        D: Fn(f64) -> Subgradient + Send + Sync + 'static,
    {
        self.subgrad = Some(Arc::new(d));
        self
    }

    /// Registers a closed-form convex conjugate.
    pub fn with_conjugate(mut self, g: ScalarConvexFunction) -> Self {
        self.conjugate = Some(Arc::new(g));
        self
    }

    pub(crate) fn with_kind(mut self, kind: FunctionKind) -> Self {
        self.kind = kind;
        self
    }

    /// Piecewise-linear interpolant through `(xs[i], ys[i])`, extended
    /// linearly with `left_slope` before `xs[0]` and `right_slope` after the
    /// last breakpoint. Convexity is not checked here.
    pub fn piecewise_linear(xs: Vec<f64>, ys: Vec<f64>, left_slope: f64, right_slope: f64) -> Self {
        let xs: Arc<[f64]> = xs.into();
        let ys: Arc<[f64]> = ys.into();
        let (ex, ey) = (xs.clone(), ys.clone());
        let eval = move |x: f64| {
            let n = ex.len();
            let v = if x <= ex[0] {
                ey[0] + left_slope * (x - ex[0])
            } else if x >= ex[n - 1] {
                ey[n - 1] + right_slope * (x - ex[n - 1])
            } else {
                let i = ex.partition_point(|&b| b <= x);
                let (x0, x1, y0, y1) = (ex[i - 1], ex[i], ey[i - 1], ey[i]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            };
            ExtReal::from_f64(v)
        };
        let subgrad = move |x: f64| {
            let n = xs.len();
            let slope = |i: usize| -> f64 {
                if i == 0 {
                    left_slope
                } else if i >= n {
                    right_slope
                } else {
                    (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])
                }
            };
            let i = xs.partition_point(|&b| b < x);
            if i < n && xs[i] == x {
                Subgradient::interval(slope(i), slope(i + 1))
            } else {
                Subgradient::point(slope(i))
            }
        };
        Self::closed_form(eval)
            .with_subgradient(subgrad)
            .with_slopes(ExtReal::Finite(left_slope), ExtReal::Finite(right_slope))
            .with_kind(FunctionKind::Interpolant)
    }

    pub fn eval(&self, x: f64) -> ExtReal {
        if x.is_nan() || !self.in_domain(x) {
            return PosInf;
        }
        (self.eval)(x)
    }

    pub fn in_domain(&self, x: f64) -> bool {
        let x = ExtReal::Finite(x);
        self.dom_lo <= x && x <= self.dom_hi
    }

    pub fn dom_lo(&self) -> ExtReal {
        self.dom_lo
    }

    pub fn dom_hi(&self) -> ExtReal {
        self.dom_hi
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn registered_conjugate(&self) -> Option<&ScalarConvexFunction> {
        self.conjugate.as_deref()
    }

    /// `x ↦ f(x) + slope·x + intercept`, keeping any closed-form conjugate.
    pub fn add_affine(&self, slope: f64, intercept: f64) -> Self {
        let inner = self.clone();
        let eval = move |x: f64| inner.eval(x) + (slope * x + intercept);
        let mut out = Self::closed_form(eval)
            .on_domain(self.dom_lo, self.dom_hi)
            .with_kind(self.kind);
        if let Some(d) = &self.subgrad {
            let d = d.clone();
            out = out.with_subgradient(move |x| {
                let s = d(x);
                Subgradient {
                    left: s.left + slope,
                    right: s.right + slope,
                }
            });
        }
        out.slope_plus = self.slope_plus.map(|s| s + slope);
        out.slope_minus = self.slope_minus.map(|s| s + slope);
        if let Some(g) = &self.conjugate {
            // (f + a·x + b)*(y) = f*(y − a) − b
            let g = g.as_ref().clone();
            let shifted = g.translate(slope).add_affine(0.0, -intercept);
            out = out.with_conjugate(shifted);
        }
        out
    }

    /// `y ↦ f(y − shift)`.
    fn translate(&self, shift: f64) -> Self {
        let inner = self.clone();
        let mut out = Self::closed_form(move |y| inner.eval(y - shift))
            .on_domain(self.dom_lo + shift, self.dom_hi + shift)
            .with_kind(self.kind);
        if let Some(d) = &self.subgrad {
            let d = d.clone();
            out = out.with_subgradient(move |y| d(y - shift));
        }
        out.slope_plus = self.slope_plus;
        out.slope_minus = self.slope_minus;
        out
    }

    /// Intersects the domain with `[lo, hi]`.
    ///
    /// A registered conjugate is dropped (it no longer applies); asymptotic
    /// slopes on a newly bounded side become infinite.
    pub fn restrict(&self, lo: ExtReal, hi: ExtReal) -> Self {
        let mut out = self.clone();
        if lo > out.dom_lo {
            out.dom_lo = lo;
            out.slope_minus = Some(NegInf);
        }
        if hi < out.dom_hi {
            out.dom_hi = hi;
            out.slope_plus = Some(PosInf);
        }
        out.conjugate = None;
        out
    }

    /// One-sided derivatives at `x`, or `None` outside the domain.
    pub fn subgradient(&self, x: f64) -> Option<Subgradient> {
        let fx = self.eval(x);
        if !fx.is_finite() {
            return None;
        }
        let mut s = match &self.subgrad {
            Some(d) => d(x),
            None => self.numeric_subgradient(x, fx.to_f64()),
        };
        // At the boundary of the domain the outward derivative is infinite.
        if ExtReal::Finite(x) <= self.dom_lo {
            s.left = NegInf;
        }
        if ExtReal::Finite(x) >= self.dom_hi {
            s.right = PosInf;
        }
        Some(s)
    }

    fn numeric_subgradient(&self, x: f64, fx: f64) -> Subgradient {
        let h = 1e-5 * x.abs().max(1.0);
        let one_sided = |dir: f64| -> ExtReal {
            let q = |h: f64| -> ExtReal { (self.eval(x + dir * h) - fx).scale(dir / h) };
            let (d1, d2) = (q(h), q(0.5 * h));
            match (d1, d2) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(2.0 * b - a),
                _ => d2,
            }
        };
        let right = one_sided(1.0);
        let left = one_sided(-1.0);
        Subgradient { left, right }
    }

    /// `lim f(x)/x` as `x → ±∞`.
    pub fn slope_at_infinity(&self, side: Side) -> ExtReal {
        let known = match side {
            Side::Plus => self.slope_plus,
            Side::Minus => self.slope_minus,
        };
        if let Some(s) = known {
            return s;
        }
        match side {
            Side::Plus if self.dom_hi.is_finite() => return PosInf,
            Side::Minus if self.dom_lo.is_finite() => return NegInf,
            _ => {}
        }
        let sign = match side {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        };
        let ratios: Vec<ExtReal> = (1..=15)
            .map(|k| {
                let x = sign * 10f64.powi(k);
                self.eval(x).scale(1.0 / x)
            })
            .collect();
        if let Some(inf) = ratios.iter().find(|r| !r.is_finite()) {
            return *inf;
        }
        let r: Vec<f64> = ratios.iter().map(|r| r.to_f64()).collect();
        let n = r.len();
        let (r0, r1, r2) = (r[n - 3], r[n - 2], r[n - 1]);
        let (d1, d2) = (r1 - r0, r2 - r1);
        let scale = 1.0 + r2.abs();
        if d2.abs() > 1e-9 * scale && d2.abs() >= 0.5 * d1.abs() {
            // Increments are not shrinking geometrically: the ratio diverges
            // (e.g. logarithmic growth).
            return if d2 * sign > 0.0 {
                PosInf.scale(sign)
            } else {
                NegInf.scale(sign)
            };
        }
        let denom = d2 - d1;
        if denom.abs() < 1e-300 || d2.abs() <= 1e-15 * scale {
            return ExtReal::Finite(r2);
        }
        // Aitken Δ² extrapolation of the last three ratios.
        ExtReal::Finite(r2 - d2 * d2 / denom)
    }

    /// Spot-checks convexity on `n` random triples inside the domain
    /// (clipped to `[-window, window]`).
    pub fn check_convexity(&self, n: usize, window: f64, tol: f64) -> Result<(), ConvexError> {
        let lo = self.dom_lo.to_f64().max(-window);
        let hi = self.dom_hi.to_f64().min(window);
        if !(lo <= hi) {
            return Err(ConvexError::EmptyDomain);
        }
        if lo == hi {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de_u64);
        for _ in 0..n {
            let a = rng.random_range(lo..=hi);
            let b = rng.random_range(lo..=hi);
            let theta: f64 = rng.random();
            let mid = self.eval(theta * a + (1.0 - theta) * b);
            let chord = self.eval(a).scale(theta) + self.eval(b).scale(1.0 - theta);
            if let (Some(m), Some(c)) = (mid.finite(), chord.finite()) {
                if m > c + tol * (1.0 + c.abs()) {
                    return Err(ConvexError::NonConvexInput { a, b, theta });
                }
            } else if chord.is_finite() && mid.is_pos_inf() {
                return Err(ConvexError::NonConvexInput { a, b, theta });
            }
        }
        Ok(())
    }

    /// A point where `f` is finite, searched on a coarse grid.
    pub(crate) fn finite_point(&self) -> Option<f64> {
        let lo = self.dom_lo.to_f64();
        let hi = self.dom_hi.to_f64();
        let mut candidates = vec![1.0, 0.0, -1.0];
        if lo.is_finite() && hi.is_finite() {
            candidates.push(0.5 * (lo + hi));
        }
        for k in -12..=12 {
            let e = 10f64.powi(k);
            if lo.is_finite() {
                candidates.push(lo + e);
            }
            if hi.is_finite() {
                candidates.push(hi - e);
            }
            candidates.push(e);
            candidates.push(-e);
        }
        if lo.is_finite() {
            candidates.push(lo);
        }
        if hi.is_finite() {
            candidates.push(hi);
        }
        candidates.into_iter().find(|&x| self.eval(x).is_finite())
    }
}
