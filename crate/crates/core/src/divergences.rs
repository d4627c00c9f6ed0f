//! Divergence generators φ, their conjugates, and φ-divergences between
//! finite measures.
//!
//! Every [`PhiSpec`] holds a generator that is normalized (`φ(1) = 0`,
//! `0 ∈ ∂φ(1)`) and restricted to `x ≥ 0`. Its conjugate `φ*` is the
//! conjugate of the restricted function, and `ψ*(y) = φ*(y) − y`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex::{
    conjugate, ConjugateMethod, ConvexError, GridPolicy, Minimizer, ScalarConvexFunction,
    Subgradient,
};
use crate::extreal::{ExtReal, NegInf, PosInf};
use crate::measures::{DiscreteMeasure, FunctionOnSupport, MeasureError};

/// Catalog names accepted by [`make_divergence`].
pub const CATALOG: [&str; 10] = [
    "kl",
    "reverse_kl",
    "alpha",
    "chi2",
    "squared_hellinger",
    "jeffreys",
    "chi_alpha",
    "total_variation",
    "jensen_shannon",
    "triangular",
];

const AT_ONE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error("unknown divergence {0:?}; expected one of {CATALOG:?}")]
    UnknownName(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("generator is {0} at 1, not 0")]
    NotZeroAtOne(f64),
    #[error("1 is not an interior point of the generator's domain")]
    OneNotInterior,
    #[error("measures live on different universes ({0} vs {1})")]
    MismatchedUniverse(String, String),
    #[error("reference measure has negative weight {weight} at {id}")]
    NegativeNu { id: String, weight: f64 },
    #[error("no shift satisfies the range constraint")]
    InfeasibleConstraint,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
}

/// Closed-form shortcuts known for a spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastPath {
    /// `K(t) = log E[e^{t(X − m)}]` and `D̃*(g) = log E[e^g]`.
    KlLogMgf,
}

type DerivFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// JSON description of a spec.
///
/// Catalog entries are `{"name": "alpha", "params": {"alpha": 0.5},
/// "normalized": true}`. A custom generator is given by values at
/// breakpoints, linear extension slopes and an optional quadratic term
/// `q·(x − 1)²`:
/// `{"breakpoints": [0, 1, 3], "values": [1, 0, 2], "left_slope": -1,
/// "right_slope": 1, "quadratic": 0.5}`. Either form may carry
/// `"dual": true` to denote the Csiszár dual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiDescriptor {
    Custom {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
        #[serde(default)]
        quadratic: f64,
        #[serde(default, skip_serializing_if = "is_false")]
        dual: bool,
    },
    Catalog {
        name: String,
        #[serde(default)]
        params: Params,
        #[serde(default = "yes")]
        normalized: bool,
        #[serde(default, skip_serializing_if = "is_false")]
        dual: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn yes() -> bool {
    true
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// A normalized divergence generator restricted to `ℝ≥0`.
#[derive(Clone)]
pub struct PhiSpec {
    name: String,
    alpha: Option<f64>,
    descriptor: PhiDescriptor,
    phi: ScalarConvexFunction,
    phi_star: ScalarConvexFunction,
    psi_star: ScalarConvexFunction,
    slope_inf: ExtReal,
    phi_at_zero: ExtReal,
    method: ConjugateMethod,
    fast_path: Option<FastPath>,
    d2: Option<DerivFn>,
    d3: Option<DerivFn>,
}

impl fmt::Debug for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiSpec")
            .field("label", &self.label())
            .field("slope_inf", &self.slope_inf)
            .field("phi_at_zero", &self.phi_at_zero)
            .field("method", &self.method)
            .finish()
    }
}

impl PhiSpec {
    /// Catalog name (`"custom"` for user generators).
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Human-readable label such as `alpha(1.5)` or `dual(chi2)`.
    pub fn label(&self) -> String {
        let base = match self.alpha {
            Some(a) => format!("{}({a})", self.name),
            None => self.name.clone(),
        };
        if self.is_dual() {
            format!("dual({base})")
        } else {
            base
        }
    }

    fn is_dual(&self) -> bool {
        matches!(
            self.descriptor,
            PhiDescriptor::Catalog { dual: true, .. } | PhiDescriptor::Custom { dual: true, .. }
        )
    }

    pub fn descriptor(&self) -> &PhiDescriptor {
        &self.descriptor
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.descriptor).expect("descriptor serializes")
    }

    pub fn phi(&self) -> &ScalarConvexFunction {
        &self.phi
    }

    pub fn phi_star(&self) -> &ScalarConvexFunction {
        &self.phi_star
    }

    pub fn psi_star(&self) -> &ScalarConvexFunction {
        &self.psi_star
    }

    pub fn phi_eval(&self, x: f64) -> ExtReal {
        self.phi.eval(x)
    }

    pub fn psi_star_eval(&self, y: f64) -> ExtReal {
        self.psi_star.eval(y)
    }

    /// `φ′(∞)`.
    pub fn slope_inf(&self) -> ExtReal {
        self.slope_inf
    }

    /// `φ(0)`, which is also `(φ†)′(∞)`.
    pub fn phi_at_zero(&self) -> ExtReal {
        self.phi_at_zero
    }

    /// How `φ*` and `ψ*` are evaluated.
    pub fn conjugate_method(&self) -> ConjugateMethod {
        self.method
    }

    pub fn fast_path(&self) -> Option<FastPath> {
        self.fast_path
    }

    /// Closed-form `φ″(x)`, when registered.
    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        self.d2.as_ref().map(|d| d(x))
    }

    /// Closed-form `φ‴(x)`, when registered.
    pub fn third_derivative(&self, x: f64) -> Option<f64> {
        self.d3.as_ref().map(|d| d(x))
    }

    pub fn from_descriptor(d: &PhiDescriptor) -> Result<Self, DivergenceError> {
        let (base, dual) = match d {
            PhiDescriptor::Catalog {
                name, params, dual, ..
            } => (make_divergence(name, params.alpha)?, *dual),
            PhiDescriptor::Custom {
                breakpoints,
                values,
                left_slope,
                right_slope,
                quadratic,
                dual,
            } => (
                custom_divergence(breakpoints, values, *left_slope, *right_slope, *quadratic)?,
                *dual,
            ),
        };
        Ok(if dual { csiszar_dual(&base) } else { base })
    }

    pub fn from_json(s: &str) -> Result<Self, DivergenceError> {
        let d: PhiDescriptor =
            serde_json::from_str(s).map_err(|e| DivergenceError::Descriptor(e.to_string()))?;
        Self::from_descriptor(&d)
    }
}

/// Closed-form pieces of a generator on `x ≥ 0`.
struct Generator {
    name: &'static str,
    alpha: Option<f64>,
    phi: fn(f64, f64) -> f64,
    dphi: fn(f64, f64) -> Subgradient,
    slope_inf: ExtReal,
    /// `(φ*, ψ*)` of the restricted generator, and whether `dom φ*` is
    /// closed at `φ′(∞)`.
    conj: Option<(fn(f64, f64) -> f64, fn(f64, f64) -> f64, bool)>,
    d2: Option<fn(f64, f64) -> f64>,
    d3: Option<fn(f64, f64) -> f64>,
}

fn kl() -> Generator {
    Generator {
        name: "kl",
        alpha: None,
        phi: |x, _| if x == 0.0 { 1.0 } else { x * x.ln() - x + 1.0 },
        dphi: |x, _| Subgradient::point(x.ln()),
        slope_inf: PosInf,
        conj: Some((|y, _| y.exp_m1(), |y, _| y.exp_m1() - y, false)),
        d2: Some(|x, _| 1.0 / x),
        d3: Some(|x, _| -1.0 / (x * x)),
    }
}

fn reverse_kl() -> Generator {
    Generator {
        name: "reverse_kl",
        alpha: None,
        phi: |x, _| x - 1.0 - x.ln(),
        dphi: |x, _| Subgradient::point(1.0 - 1.0 / x),
        slope_inf: ExtReal::Finite(1.0),
        conj: Some((
            |y, _| {
                if y < 1.0 {
                    -(-y).ln_1p()
                } else {
                    f64::INFINITY
                }
            },
            |y, _| {
                if y < 1.0 {
                    -(-y).ln_1p() - y
                } else {
                    f64::INFINITY
                }
            },
            false,
        )),
        d2: Some(|x, _| 1.0 / (x * x)),
        d3: Some(|x, _| -2.0 / (x * x * x)),
    }
}

fn alpha_family(a: f64) -> Generator {
    // φ*(y) = ((1 + (α−1)y)^{α/(α−1)} − 1)/α where 1 + (α−1)y > 0. For
    // α < 0 the exponent is positive and the value −1/α is kept at the
    // endpoint y = φ′(∞).
    fn phi_star(y: f64, a: f64) -> f64 {
        let base = (a - 1.0) * y;
        if a > 1.0 && base <= -1.0 {
            return -1.0 / a;
        }
        if base < -1.0 - 4.0 * f64::EPSILON {
            return f64::INFINITY;
        }
        if base <= -1.0 {
            return if a < 0.0 { -1.0 / a } else { f64::INFINITY };
        }
        (a / (a - 1.0) * base.ln_1p()).exp_m1() / a
    }
    Generator {
        name: "alpha",
        alpha: Some(a),
        phi: |x, a| {
            if x == 0.0 {
                return if a > 0.0 { 1.0 / a } else { f64::INFINITY };
            }
            (x.powf(a) - a * (x - 1.0) - 1.0) / (a * (a - 1.0))
        },
        dphi: |x, a| Subgradient::point((x.powf(a - 1.0) - 1.0) / (a - 1.0)),
        slope_inf: if a > 1.0 {
            PosInf
        } else {
            ExtReal::Finite(1.0 / (1.0 - a))
        },
        conj: Some((phi_star, |y, a| phi_star(y, a) - y, a < 0.0)),
        d2: Some(|x, a| x.powf(a - 2.0)),
        d3: Some(|x, a| (a - 2.0) * x.powf(a - 3.0)),
    }
}

fn chi2() -> Generator {
    Generator {
        name: "chi2",
        alpha: None,
        phi: |x, _| (x - 1.0) * (x - 1.0),
        dphi: |x, _| Subgradient::point(2.0 * (x - 1.0)),
        slope_inf: PosInf,
        conj: Some((
            |y, _| if y >= -2.0 { y + 0.25 * y * y } else { -1.0 },
            |y, _| if y >= -2.0 { 0.25 * y * y } else { -1.0 - y },
            false,
        )),
        d2: Some(|_, _| 2.0),
        d3: Some(|_, _| 0.0),
    }
}

fn squared_hellinger() -> Generator {
    Generator {
        name: "squared_hellinger",
        alpha: None,
        phi: |x, _| (x.sqrt() - 1.0).powi(2),
        dphi: |x, _| Subgradient::point(1.0 - 1.0 / x.sqrt()),
        slope_inf: ExtReal::Finite(1.0),
        conj: Some((
            |y, _| {
                if y < 1.0 {
                    y / (1.0 - y)
                } else {
                    f64::INFINITY
                }
            },
            |y, _| {
                if y < 1.0 {
                    y * y / (1.0 - y)
                } else {
                    f64::INFINITY
                }
            },
            false,
        )),
        d2: Some(|x, _| 0.5 * x.powf(-1.5)),
        d3: Some(|x, _| -0.75 * x.powf(-2.5)),
    }
}

fn jeffreys() -> Generator {
    Generator {
        name: "jeffreys",
        alpha: None,
        phi: |x, _| if x == 1.0 { 0.0 } else { (x - 1.0) * x.ln() },
        dphi: |x, _| Subgradient::point(x.ln() + 1.0 - 1.0 / x),
        slope_inf: PosInf,
        conj: None,
        d2: Some(|x, _| 1.0 / x + 1.0 / (x * x)),
        d3: Some(|x, _| -1.0 / (x * x) - 2.0 / (x * x * x)),
    }
}

fn chi_alpha(a: f64) -> Generator {
    Generator {
        name: "chi_alpha",
        alpha: Some(a),
        phi: |x, a| (x - 1.0).abs().powf(a),
        dphi: |x, a| Subgradient::point(a * (x - 1.0).abs().powf(a - 1.0) * (x - 1.0).signum()),
        slope_inf: PosInf,
        conj: None,
        d2: Some(|x, a| a * (a - 1.0) * (x - 1.0).abs().powf(a - 2.0)),
        d3: Some(|x, a| {
            a * (a - 1.0) * (a - 2.0) * (x - 1.0).abs().powf(a - 3.0) * (x - 1.0).signum()
        }),
    }
}

fn total_variation() -> Generator {
    Generator {
        name: "total_variation",
        alpha: None,
        phi: |x, _| (x - 1.0).abs(),
        dphi: |x, _| {
            if x == 1.0 {
                Subgradient::interval(-1.0, 1.0)
            } else {
                Subgradient::point((x - 1.0).signum())
            }
        },
        slope_inf: ExtReal::Finite(1.0),
        conj: Some((
            |y, _| {
                if y > 1.0 {
                    f64::INFINITY
                } else {
                    y.max(-1.0)
                }
            },
            |y, _| {
                if y > 1.0 {
                    f64::INFINITY
                } else {
                    (-1.0 - y).max(0.0)
                }
            },
            true,
        )),
        d2: None,
        d3: None,
    }
}

fn jensen_shannon() -> Generator {
    const LN2: f64 = std::f64::consts::LN_2;
    Generator {
        name: "jensen_shannon",
        alpha: None,
        phi: |x, _| {
            if x == 0.0 {
                LN2
            } else {
                x * x.ln() - (1.0 + x) * (0.5 * (1.0 + x)).ln()
            }
        },
        dphi: |x, _| Subgradient::point((2.0 * x / (1.0 + x)).ln()),
        slope_inf: ExtReal::Finite(LN2),
        // φ*(y) = −log(2 − e^y) = −log(1 − expm1(y)).
        conj: Some((
            |y, _| {
                if y < LN2 {
                    -(-y.exp_m1()).ln_1p()
                } else {
                    f64::INFINITY
                }
            },
            |y, _| {
                if y < LN2 {
                    -(-y.exp_m1()).ln_1p() - y
                } else {
                    f64::INFINITY
                }
            },
            false,
        )),
        d2: Some(|x, _| 1.0 / (x * (1.0 + x))),
        d3: Some(|x, _| -1.0 / (x * x) + 1.0 / ((1.0 + x) * (1.0 + x))),
    }
}

fn triangular() -> Generator {
    // ψ*(y) = 4 − 2y − 4√(1−y) = 2y²/(1 + √(1−y))² on [−3, 1].
    fn psi_star(y: f64, _: f64) -> f64 {
        if y > 1.0 {
            f64::INFINITY
        } else if y < -3.0 {
            -1.0 - y
        } else {
            let s = 1.0 + (1.0 - y).sqrt();
            2.0 * y * y / (s * s)
        }
    }
    Generator {
        name: "triangular",
        alpha: None,
        phi: |x, _| (x - 1.0) * (x - 1.0) / (x + 1.0),
        dphi: |x, _| Subgradient::point((x - 1.0) * (x + 3.0) / ((x + 1.0) * (x + 1.0))),
        slope_inf: ExtReal::Finite(1.0),
        conj: Some((|y, a| psi_star(y, a) + y, psi_star, true)),
        d2: Some(|x, _| 8.0 / (x + 1.0).powi(3)),
        d3: Some(|x, _| -24.0 / (x + 1.0).powi(4)),
    }
}

/// Builds a catalog generator.
///
/// `alpha` is required for `alpha` (any real; 0 and 1 give reverse KL and
/// KL) and `chi_alpha` (`α ≥ 1`; 1 gives total variation).
pub fn make_divergence(name: &str, alpha: Option<f64>) -> Result<PhiSpec, DivergenceError> {
    let need_alpha = |what: &str| -> Result<f64, DivergenceError> {
        match alpha {
            Some(a) if a.is_finite() => Ok(a),
            Some(a) => Err(DivergenceError::BadParameter(format!(
                "{what}: alpha={a} is not finite"
            ))),
            None => Err(DivergenceError::BadParameter(format!(
                "{what} requires alpha"
            ))),
        }
    };
    let gen = match name {
        "kl" => kl(),
        "reverse_kl" => reverse_kl(),
        "chi2" => chi2(),
        "squared_hellinger" => squared_hellinger(),
        "jeffreys" => jeffreys(),
        "total_variation" => total_variation(),
        "jensen_shannon" => jensen_shannon(),
        "triangular" => triangular(),
        "alpha" => {
            let a = need_alpha("alpha")?;
            if a == 0.0 {
                return with_params(make_divergence("reverse_kl", None)?, "alpha", a);
            }
            if a == 1.0 {
                return with_params(make_divergence("kl", None)?, "alpha", a);
            }
            alpha_family(a)
        }
        "chi_alpha" => {
            let a = need_alpha("chi_alpha")?;
            if a < 1.0 {
                return Err(DivergenceError::BadParameter(format!(
                    "chi_alpha needs alpha >= 1, got {a}"
                )));
            }
            if a == 1.0 {
                return with_params(make_divergence("total_variation", None)?, "chi_alpha", a);
            }
            chi_alpha(a)
        }
        other => return Err(DivergenceError::UnknownName(other.to_string())),
    };
    build(gen)
}

/// Keeps the requested catalog name and parameter on a limit case.
fn with_params(mut spec: PhiSpec, name: &str, a: f64) -> Result<PhiSpec, DivergenceError> {
    spec.name = name.to_string();
    spec.alpha = Some(a);
    spec.descriptor = PhiDescriptor::Catalog {
        name: name.to_string(),
        params: Params { alpha: Some(a) },
        normalized: true,
        dual: false,
    };
    Ok(spec)
}

fn build(gen: Generator) -> Result<PhiSpec, DivergenceError> {
    let a = gen.alpha.unwrap_or(0.0);
    let (f, df) = (gen.phi, gen.dphi);
    let raw = ScalarConvexFunction::closed_form(move |x| ExtReal::from_f64(f(x, a)))
        .on_domain(ExtReal::ZERO, PosInf)
        .with_slopes(NegInf, gen.slope_inf)
        .with_subgradient(move |x| df(x, a));
    let phi = normalize(&raw)?;
    let descriptor = PhiDescriptor::Catalog {
        name: gen.name.to_string(),
        params: Params { alpha: gen.alpha },
        normalized: true,
        dual: false,
    };
    let d2 = gen.d2.map(|d| Arc::new(move |x| d(x, a)) as DerivFn);
    let d3 = gen.d3.map(|d| Arc::new(move |x| d(x, a)) as DerivFn);
    let fast_path = (gen.name == "kl").then_some(FastPath::KlLogMgf);
    match gen.conj {
        Some((fs, ps, closed)) => {
            let hi = gen.slope_inf;
            let dom = |g: fn(f64, f64) -> f64| {
                ScalarConvexFunction::closed_form(move |y| ExtReal::from_f64(g(y, a)))
                    .on_domain(NegInf, if closed { hi } else { PosInf })
                    .with_slopes(ExtReal::ZERO, PosInf)
            };
            let phi_star = dom(fs);
            let psi_star = dom(ps).with_slopes(ExtReal::Finite(-1.0), PosInf);
            let phi = phi.with_conjugate(phi_star.clone());
            Ok(assemble(
                gen.name,
                gen.alpha,
                descriptor,
                phi,
                phi_star,
                psi_star,
                ConjugateMethod::ClosedForm,
                fast_path,
                d2,
                d3,
            ))
        }
        None => numeric_spec(gen.name, gen.alpha, descriptor, phi, d2, d3),
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    name: &str,
    alpha: Option<f64>,
    descriptor: PhiDescriptor,
    phi: ScalarConvexFunction,
    phi_star: ScalarConvexFunction,
    psi_star: ScalarConvexFunction,
    method: ConjugateMethod,
    fast_path: Option<FastPath>,
    d2: Option<DerivFn>,
    d3: Option<DerivFn>,
) -> PhiSpec {
    PhiSpec {
        name: name.to_string(),
        alpha,
        descriptor,
        slope_inf: phi.slope_at_infinity(crate::convex::Side::Plus),
        phi_at_zero: phi.eval(0.0),
        phi,
        phi_star,
        psi_star,
        method,
        fast_path,
        d2,
        d3,
    }
}

/// A spec whose conjugates are computed numerically from `phi`.
fn numeric_spec(
    name: &str,
    alpha: Option<f64>,
    descriptor: PhiDescriptor,
    phi: ScalarConvexFunction,
    d2: Option<DerivFn>,
    d3: Option<DerivFn>,
) -> Result<PhiSpec, DivergenceError> {
    let conj = conjugate(&phi, GridPolicy::numeric())?;
    let phi_star = conj.function;
    let psi_star = phi_star.add_affine(-1.0, 0.0);
    Ok(assemble(
        name,
        alpha,
        descriptor,
        phi,
        phi_star,
        psi_star,
        ConjugateMethod::Numeric,
        None,
        d2,
        d3,
    ))
}

/// `φ̃(x) = φ(x) − s·(x − 1)` with `s` the midpoint of `∂φ(1)`, so that
/// `0 ∈ ∂φ̃(1)`. Divergences between probability measures are unchanged.
pub fn normalize(phi_raw: &ScalarConvexFunction) -> Result<ScalarConvexFunction, DivergenceError> {
    let at_one = phi_raw.eval(1.0);
    match at_one.finite() {
        Some(v) if v.abs() <= AT_ONE_TOL => {}
        Some(v) => return Err(DivergenceError::NotZeroAtOne(v)),
        None => return Err(DivergenceError::NotZeroAtOne(at_one.to_f64())),
    }
    let sub = phi_raw
        .subgradient(1.0)
        .ok_or(DivergenceError::OneNotInterior)?;
    if !(sub.left.is_finite() && sub.right.is_finite()) {
        return Err(DivergenceError::OneNotInterior);
    }
    let s = sub.midpoint().to_f64();
    if s == 0.0 {
        return Ok(phi_raw.clone());
    }
    Ok(phi_raw.add_affine(-s, s))
}

/// A generator given by a piecewise-linear part plus `q·(x − 1)²`,
/// normalized and restricted to `x ≥ 0`.
pub fn custom_divergence(
    breakpoints: &[f64],
    values: &[f64],
    left_slope: f64,
    right_slope: f64,
    quadratic: f64,
) -> Result<PhiSpec, DivergenceError> {
    let bad = |m: &str| Err(DivergenceError::BadParameter(m.to_string()));
    if breakpoints.is_empty() || breakpoints.len() != values.len() {
        return bad("breakpoints and values must be nonempty and of equal length");
    }
    let all_finite = breakpoints
        .iter()
        .chain(values)
        .chain([&left_slope, &right_slope, &quadratic])
        .all(|v| v.is_finite());
    if !all_finite {
        return bad("custom generator entries must be finite");
    }
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return bad("breakpoints must be strictly increasing");
    }
    if quadratic < 0.0 {
        return bad("quadratic coefficient must be non-negative");
    }
    let mut slopes = vec![left_slope];
    slopes.extend(
        breakpoints
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])),
    );
    slopes.push(right_slope);
    if slopes
        .windows(2)
        .any(|s| s[1] < s[0] - 1e-12 * (1.0 + s[0].abs()))
    {
        return bad("piecewise-linear part is not convex (slopes must be nondecreasing)");
    }
    let pl = ScalarConvexFunction::piecewise_linear(
        breakpoints.to_vec(),
        values.to_vec(),
        left_slope,
        right_slope,
    );
    let q = quadratic;
    let (pe, ps) = (pl.clone(), pl);
    let mut f = ScalarConvexFunction::closed_form(move |x| pe.eval(x) + q * (x - 1.0) * (x - 1.0))
        .with_subgradient(move |x| {
            let s = ps
                .subgradient(x)
                .expect("piecewise-linear is finite everywhere");
            let d = 2.0 * q * (x - 1.0);
            Subgradient {
                left: s.left + d,
                right: s.right + d,
            }
        });
    if q == 0.0 {
        f = f.with_slopes(ExtReal::Finite(left_slope), ExtReal::Finite(right_slope));
    } else {
        f = f.with_slopes(NegInf, PosInf);
    }
    let phi = normalize(&f)?.restrict(ExtReal::ZERO, PosInf);
    let descriptor = PhiDescriptor::Custom {
        breakpoints: breakpoints.to_vec(),
        values: values.to_vec(),
        left_slope,
        right_slope,
        quadratic,
        dual: false,
    };
    numeric_spec("custom", None, descriptor, phi, None, None)
}

/// The Csiszár dual `φ†(x) = x·φ(1/x)`, with `φ†(0) = φ′(∞)`, so that
/// `D_φ(ν‖μ) = D_{φ†}(μ‖ν)`. Known pairs map to catalog entries; other
/// generators get a numeric conjugate.
pub fn csiszar_dual(spec: &PhiSpec) -> PhiSpec {
    let named = match (spec.name.as_str(), spec.alpha, spec.is_dual()) {
        (_, _, true) => return undual(spec),
        ("kl", _, _) => make_divergence("reverse_kl", None),
        ("reverse_kl", _, _) => make_divergence("kl", None),
        ("alpha", Some(a), _) => make_divergence("alpha", Some(1.0 - a)),
        (
            "total_variation" | "squared_hellinger" | "jensen_shannon" | "triangular" | "jeffreys",
            _,
            _,
        ) => Ok(spec.clone()),
        ("chi_alpha", Some(1.0), _) => Ok(spec.clone()),
        _ => Err(DivergenceError::UnknownName(String::new())),
    };
    if let Ok(s) = named {
        return s;
    }
    generic_dual(spec)
}

/// Recovers the original spec from a dual descriptor.
fn undual(spec: &PhiSpec) -> PhiSpec {
    let mut d = spec.descriptor.clone();
    match &mut d {
        PhiDescriptor::Catalog { dual, .. } | PhiDescriptor::Custom { dual, .. } => *dual = false,
    }
    PhiSpec::from_descriptor(&d).unwrap_or_else(|_| generic_dual(spec))
}

fn generic_dual(spec: &PhiSpec) -> PhiSpec {
    let at_zero = spec.slope_inf;
    let (pe, ps) = (spec.phi.clone(), spec.phi.clone());
    let phi = ScalarConvexFunction::closed_form(move |x: f64| {
        if x == 0.0 {
            at_zero
        } else {
            pe.eval(1.0 / x).scale(x)
        }
    })
    .on_domain(ExtReal::ZERO, PosInf)
    .with_slopes(NegInf, spec.phi_at_zero)
    .with_subgradient(move |x: f64| {
        // (φ†)′(x) = φ(1/x) − φ′(1/x)/x; the derivative of φ at 1/x runs
        // backwards in x.
        let u = 1.0 / x;
        let v = ps.eval(u);
        match ps.subgradient(u) {
            Some(s) if x > 0.0 => Subgradient {
                left: v - s.right.scale(u),
                right: v - s.left.scale(u),
            },
            _ => Subgradient {
                left: NegInf,
                right: at_zero,
            },
        }
    });
    let phi = normalize(&phi).unwrap_or(phi);
    let d2 = spec
        .d2
        .clone()
        .map(|d| Arc::new(move |x: f64| d(1.0 / x) / (x * x * x)) as DerivFn);
    let d3 = match (spec.d2.clone(), spec.d3.clone()) {
        (Some(d2), Some(d3)) => Some(Arc::new(move |x: f64| {
            let u = 1.0 / x;
            -d3(u) * u.powi(5) - 3.0 * d2(u) * u.powi(4)
        }) as DerivFn),
        _ => None,
    };
    let mut descriptor = spec.descriptor.clone();
    match &mut descriptor {
        PhiDescriptor::Catalog { dual, .. } | PhiDescriptor::Custom { dual, .. } => *dual = true,
    }
    numeric_spec(&spec.name, spec.alpha, descriptor, phi, d2, d3)
        .expect("the dual of a valid generator is a valid generator")
}

/// `D_φ(μ‖ν)` split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub value: ExtReal,
    /// `Σ ν_i φ(μ_i/ν_i)` over atoms with `ν_i > 0`.
    pub continuous_part: ExtReal,
    /// `μ_s⁺(Ω)·φ′(∞)`.
    pub singular_plus: ExtReal,
    /// `μ_s⁻(Ω)·φ′(−∞)`; `−∞` when there is negative singular mass.
    pub singular_minus: ExtReal,
}

/// φ-divergence of `mu` with respect to the non-negative `nu`, including
/// the part of `mu` on atoms where `nu` has zero weight.
pub fn divergence(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    spec: &PhiSpec,
) -> Result<DivergenceValue, DivergenceError> {
    if mu.universe() != nu.universe() {
        return Err(DivergenceError::MismatchedUniverse(
            mu.universe().to_string(),
            nu.universe().to_string(),
        ));
    }
    if let Some((id, w)) = nu.atoms().iter().find(|(_, w)| *w < 0.0) {
        return Err(DivergenceError::NegativeNu {
            id: id.to_string(),
            weight: *w,
        });
    }
    let continuous_part: ExtReal = nu
        .atoms()
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(id, w)| spec.phi_eval(mu.weight(id) / w).scale(*w))
        .sum();
    let (mut plus, mut minus) = (0.0, 0.0);
    for (id, m) in mu.atoms() {
        if nu.weight(id) == 0.0 {
            if *m > 0.0 {
                plus += m;
            } else {
                minus -= m;
            }
        }
    }
    let singular_plus = spec.slope_inf.scale(plus);
    let singular_minus = spec
        .phi
        .slope_at_infinity(crate::convex::Side::Minus)
        .scale(minus);
    Ok(DivergenceValue {
        value: continuous_part + singular_plus - singular_minus,
        continuous_part,
        singular_plus,
        singular_minus,
    })
}

/// `inf_λ Σ wᵢ ψ*(xᵢ + λ)` over `λ ≤ φ′(∞) − upper`, where `upper` bounds
/// the `xᵢ` from above. Returns `(+∞, None)` when the feasible set is empty
/// or the objective is `+∞` on it.
pub(crate) fn shift_infimum(
    spec: &PhiSpec,
    pts: &[(f64, f64)],
    upper: ExtReal,
) -> (ExtReal, Option<f64>) {
    let limit = match (spec.slope_inf, upper) {
        (PosInf, _) => f64::INFINITY,
        (_, PosInf) => return (PosInf, None),
        (s, u) => (s - u).to_f64(),
    };
    if limit == f64::NEG_INFINITY {
        return (PosInf, None);
    }
    let objective = |lam: f64| -> ExtReal {
        pts.iter()
            .map(|&(x, w)| spec.psi_star_eval(x + lam).scale(w))
            .sum()
    };
    let mean: f64 = pts.iter().map(|(x, w)| x * w).sum();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, _)| {
            (a.min(*x), b.max(*x))
        });
    let half = 4.0 * (hi - lo) + 1.0;
    let tol = 1e-12 * (1.0 + mean.abs() + half);
    match Minimizer::new(tol)
        .with_limits(f64::NEG_INFINITY, limit)
        .minimize(objective, (-mean - half, -mean + half))
    {
        Ok(m) if !m.value.is_pos_inf() => (m.value.max(ExtReal::ZERO), Some(m.argmin)),
        _ => (PosInf, None),
    }
}

/// Options for [`restricted_conjugate_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ConjugateOptions {
    /// Replaces the essential supremum of `g` (the support maximum).
    pub upper_override: Option<ExtReal>,
    /// Skips closed-form shortcuts.
    pub generic: bool,
}

/// Conjugate of `μ ↦ D(μ‖ν)` restricted to probability measures, at `g`:
/// `inf { ⟨ν, φ*(g + λ)⟩ − λ : λ + esssup g ≤ φ′(∞) }`. Returns the value
/// and the optimal shift.
pub fn restricted_conjugate(
    spec: &PhiSpec,
    nu: &DiscreteMeasure,
    g: &FunctionOnSupport,
) -> Result<(f64, f64), DivergenceError> {
    restricted_conjugate_with(spec, nu, g, ConjugateOptions::default())
}

pub fn restricted_conjugate_with(
    spec: &PhiSpec,
    nu: &DiscreteMeasure,
    g: &FunctionOnSupport,
    opts: ConjugateOptions,
) -> Result<(f64, f64), DivergenceError> {
    nu.validate_probability()?;
    let pts = nu
        .atoms()
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(id, w)| g.value(id).map(|x| (x, *w)))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some((x, _)) = pts.iter().find(|(x, _)| !x.is_finite()) {
        return Err(DivergenceError::BadParameter(format!(
            "g takes the non-finite value {x}"
        )));
    }
    let max = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let upper = match opts.upper_override {
        Some(u) if u < ExtReal::Finite(max) => {
            return Err(DivergenceError::BadParameter(format!(
                "range override {u} is below the support maximum {max}"
            )))
        }
        Some(u) => u,
        None => ExtReal::Finite(max),
    };
    let mean: f64 = pts.iter().map(|(x, w)| x * w).sum();
    if spec.fast_path == Some(FastPath::KlLogMgf) && !opts.generic && upper.is_finite() {
        let lse = log_sum_exp(&pts, 1.0);
        return Ok((lse, -lse));
    }
    match shift_infimum(spec, &pts, upper) {
        (v, Some(lam)) => Ok((mean + v.to_f64(), lam)),
        _ => Err(DivergenceError::InfeasibleConstraint),
    }
}

/// `log Σ wᵢ e^{t·xᵢ}`, computed stably.
pub fn log_sum_exp(pts: &[(f64, f64)], t: f64) -> f64 {
    let m = pts
        .iter()
        .map(|(x, _)| t * x)
        .fold(f64::NEG_INFINITY, f64::max);
    m + pts
        .iter()
        .map(|(x, w)| w * (t * x - m).exp())
        .sum::<f64>()
        .ln()
}

/// `D(μ‖ν) − (μ(g) − D̃*(g))`, non-negative by weak duality and zero for
/// an optimal witness `g`.
pub fn variational_gap(
    spec: &PhiSpec,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    g: &FunctionOnSupport,
) -> Result<ExtReal, DivergenceError> {
    let d = divergence(mu, nu, spec)?;
    let (conj, _) = restricted_conjugate(spec, nu, g)?;
    let mu_g = mu.integrate(g)?;
    Ok(d.value - (mu_g - conj))
}
