//! Optimal lower bounds `L = K*` on a divergence in terms of a mean
//! deviation, their aggregation over function classes, and a brute-force
//! reference solver on small supports.

use thiserror::Error;

use crate::cgf::{cgf_curve, CgfCurve, CgfQuery, CumulantSource};
use crate::convex::Minimizer;
use crate::divergences::{DivergenceError, PhiSpec};
use crate::extreal::{ExtReal, PosInf};
use crate::measures::{
    pushforward, DiscreteMeasure, FunctionOnSupport, MeasureError, PushforwardDist,
};
use crate::par;

/// Largest support the brute-force solver accepts.
pub const MAX_ORACLE_SUPPORT: usize = 4;

const ORACLE_INTERVALS: usize = 40;
const ORACLE_ROUNDS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("need at least 3 finite cumulant samples, got {0}")]
    InsufficientSamples(usize),
    #[error("function class is empty")]
    EmptyClass,
    #[error("support of size {size} exceeds the cap {cap} (at most {MAX_ORACLE_SUPPORT})")]
    SupportTooLarge { size: usize, cap: usize },
    #[error("distribution has zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ConjugateOfCgf,
    Oracle,
    ClosedForm,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::ConjugateOfCgf => "conjugate-of-cgf",
            Provenance::Oracle => "oracle",
            Provenance::ClosedForm => "closed-form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSample {
    pub eps: f64,
    pub l: ExtReal,
    /// `eps` sits on the boundary of the bound's domain, or the supremum was
    /// not attained inside the searched range of `t`.
    pub boundary: bool,
    /// Maximizing `t`, for conjugate-based samples.
    pub t_opt: Option<f64>,
}

/// Sampled lower bound `ε ↦ L(ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub samples: Vec<BoundSample>,
    pub provenance: Provenance,
    pub spec_name: String,
}

impl BoundCurve {
    /// `L` at `eps` if it is a sample point.
    pub fn at(&self, eps: f64) -> Option<ExtReal> {
        self.samples.iter().find(|s| s.eps == eps).map(|s| s.l)
    }

    /// Checks `L(0) = 0`, `L ≥ 0` and monotonicity for `ε ≥ 0`, up to `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<(), String> {
        let mut prev: Option<&BoundSample> = None;
        for s in &self.samples {
            if s.l < ExtReal::Finite(-tol) {
                return Err(format!("L({}) = {} < 0", s.eps, s.l));
            }
            if s.eps == 0.0 && s.l.abs_diff(ExtReal::ZERO) > tol {
                return Err(format!("L(0) = {}", s.l));
            }
            if let Some(p) = prev {
                if p.eps >= 0.0 && s.eps > p.eps && s.l + tol < p.l {
                    return Err(format!("L decreases between {} and {}", p.eps, s.eps));
                }
            }
            prev = Some(s);
        }
        Ok(())
    }
}

/// `L(ε) = sup_t { t·ε − K(t) }` at each `eps`, starting from the sampled
/// `curve` and refining around the best sample with further evaluations of
/// `source`.
pub fn lower_bound_curve<S: CumulantSource + ?Sized>(
    source: &S,
    curve: &CgfCurve,
    eps: &[f64],
) -> Result<BoundCurve, BoundError> {
    let n_finite = curve.finite_samples().count();
    if n_finite < 3 {
        return Err(BoundError::InsufficientSamples(n_finite));
    }
    let range = source.deviation_range();
    let samples = par::map(eps, |&e| conjugate_at(source, curve, range, e));
    Ok(BoundCurve {
        samples,
        provenance: Provenance::ConjugateOfCgf,
        spec_name: curve.spec_name.clone(),
    })
}

fn conjugate_at<S: CumulantSource + ?Sized>(
    source: &S,
    curve: &CgfCurve,
    (dlo, dhi): (ExtReal, ExtReal),
    eps: f64,
) -> BoundSample {
    let e = ExtReal::Finite(eps);
    if e < dlo || e > dhi {
        return BoundSample {
            eps,
            l: PosInf,
            boundary: false,
            t_opt: None,
        };
    }
    let at_edge = e == dlo || e == dhi;
    // Beyond this |t| the supremum is treated as not attained.
    let width = (dhi - dlo).finite().filter(|w| *w > 0.0).unwrap_or(1.0);
    let t_cap = 1e6 / width;

    let s = &curve.samples;
    let (j, _) = s
        .iter()
        .enumerate()
        .filter(|(_, x)| x.is_finite())
        .map(|(i, x)| (i, ExtReal::Finite(x.t * eps) - x.k))
        .max_by(|a, b| a.1.cmp(&b.1))
        .expect("curve has finite samples");
    let first = s.iter().position(|x| x.is_finite()).unwrap_or(0);
    let last = s.iter().rposition(|x| x.is_finite()).unwrap_or(0);
    // dom K is an interval: the first infinite samples past the finite run
    // bound the search.
    let lim_lo = if first > 0 { s[first - 1].t } else { -t_cap };
    let lim_hi = if last + 1 < s.len() {
        s[last + 1].t
    } else {
        t_cap
    };
    let a = s[j.saturating_sub(1).max(first)].t;
    let b = s[(j + 1).min(last)].t;

    let h = |t: f64| source.cumulant(t).0 - ExtReal::Finite(t * eps);
    let tol = 1e-10 * (1.0 + s[j].t.abs());
    let best = Minimizer::new(tol)
        .with_limits(lim_lo.min(a), lim_hi.max(b))
        .with_max_width(4.0 * t_cap)
        .minimize(h, (a, b));
    match best {
        Ok(m) => {
            let runaway = m.argmin.abs() >= t_cap * (1.0 - 1e-9);
            BoundSample {
                eps,
                l: (-m.value).max(ExtReal::ZERO),
                boundary: at_edge || runaway,
                t_opt: Some(m.argmin),
            }
        }
        Err(_) => BoundSample {
            eps,
            l: PosInf,
            boundary: true,
            t_opt: None,
        },
    }
}

/// `min { L_g(ε), L_{−g}(ε) }`: the bound in terms of `|μ(g) − ν(g)|`.
/// `minus` is the source and curve for `−g`.
pub fn abs_lower_bound<S: CumulantSource + ?Sized>(
    plus: (&S, &CgfCurve),
    minus: (&S, &CgfCurve),
    eps: &[f64],
) -> Result<BoundCurve, BoundError> {
    let p = lower_bound_curve(plus.0, plus.1, eps)?;
    let m = lower_bound_curve(minus.0, minus.1, eps)?;
    let samples = p
        .samples
        .iter()
        .zip(&m.samples)
        .map(|(a, b)| if a.l <= b.l { *a } else { *b })
        .collect();
    Ok(BoundCurve {
        samples,
        provenance: Provenance::ConjugateOfCgf,
        spec_name: p.spec_name,
    })
}

/// A finite class of test functions.
#[derive(Debug, Clone)]
pub struct FunctionClass {
    members: Vec<FunctionOnSupport>,
    closed_under_negation: bool,
}

impl FunctionClass {
    pub fn new(
        members: Vec<FunctionOnSupport>,
        closed_under_negation: bool,
    ) -> Result<Self, BoundError> {
        if members.is_empty() {
            return Err(BoundError::EmptyClass);
        }
        Ok(FunctionClass {
            members,
            closed_under_negation,
        })
    }

    pub fn members(&self) -> &[FunctionOnSupport] {
        &self.members
    }

    /// Pushforwards of `nu` under every member (and its negation when the
    /// class is declared closed under negation).
    pub fn pushforwards(&self, nu: &DiscreteMeasure) -> Result<Vec<PushforwardDist>, BoundError> {
        let mut out = Vec::new();
        for g in &self.members {
            out.push(pushforward(nu, g)?);
            if self.closed_under_negation {
                out.push(pushforward(nu, &g.negate())?);
            }
        }
        Ok(out)
    }
}

/// `K_{G,N}(t) = max` of the member cumulant generating functions.
#[derive(Debug, Clone)]
pub struct IpmCgf {
    members: Vec<CgfQuery>,
}

impl IpmCgf {
    pub fn new(spec: &PhiSpec, dists: Vec<PushforwardDist>) -> Result<Self, BoundError> {
        if dists.is_empty() {
            return Err(BoundError::EmptyClass);
        }
        Ok(IpmCgf {
            members: dists
                .into_iter()
                .map(|d| CgfQuery::new(spec.clone(), d))
                .collect(),
        })
    }

    pub fn from_queries(members: Vec<CgfQuery>) -> Result<Self, BoundError> {
        if members.is_empty() {
            return Err(BoundError::EmptyClass);
        }
        Ok(IpmCgf { members })
    }

    pub fn members(&self) -> &[CgfQuery] {
        &self.members
    }
}

impl CumulantSource for IpmCgf {
    fn cumulant(&self, t: f64) -> (ExtReal, Option<f64>) {
        self.members
            .iter()
            .map(|q| q.cumulant(t))
            .max_by(|a, b| a.0.cmp(&b.0))
            .expect("class is nonempty")
    }

    fn spec_label(&self) -> String {
        self.members[0].spec_label()
    }

    fn digest(&self) -> String {
        let all: Vec<String> = self.members.iter().map(|q| q.digest()).collect();
        all.join("+")
    }

    fn deviation_range(&self) -> (ExtReal, ExtReal) {
        self.members
            .iter()
            .map(|q| q.deviation_range())
            .fold((PosInf, -PosInf), |(a, b), (lo, hi)| (a.min(lo), b.max(hi)))
    }
}

/// Samples `K_{G,N}` on `ts`.
pub fn ipm_cgf(
    spec: &PhiSpec,
    dists: Vec<PushforwardDist>,
    ts: &[f64],
) -> Result<CgfCurve, BoundError> {
    Ok(cgf_curve(&IpmCgf::new(spec, dists)?, ts))
}

/// Options for [`oracle_lower_bound_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleOptions {
    /// Value of `g` on the synthetic singular atom (used when `φ′(∞) < ∞`);
    /// defaults to the largest value of `g` on the support of `nu`.
    pub g_singular: Option<f64>,
}

/// `inf { D(μ‖ν) : μ probability, μ(g) − ν(g) = eps }` by exhaustive
/// search over `μ` on the support of `nu` (plus one `ν`-singular atom when
/// `φ′(∞) < ∞`). `+∞` when no such `μ` exists.
pub fn oracle_lower_bound(
    spec: &PhiSpec,
    nu: &DiscreteMeasure,
    g: &FunctionOnSupport,
    eps: f64,
    support_cap: usize,
) -> Result<ExtReal, BoundError> {
    oracle_lower_bound_with(spec, nu, g, eps, support_cap, OracleOptions::default())
}

pub fn oracle_lower_bound_with(
    spec: &PhiSpec,
    nu: &DiscreteMeasure,
    g: &FunctionOnSupport,
    eps: f64,
    support_cap: usize,
    opts: OracleOptions,
) -> Result<ExtReal, BoundError> {
    nu.validate_probability()?;
    let atoms: Vec<(f64, f64)> = nu
        .atoms()
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(id, w)| g.value(id).map(|x| (x, *w)))
        .collect::<Result<_, _>>()?;
    let cap = support_cap.min(MAX_ORACLE_SUPPORT);
    if atoms.len() > cap {
        return Err(BoundError::SupportTooLarge {
            size: atoms.len(),
            cap: support_cap,
        });
    }
    let mean: f64 = atoms.iter().map(|(x, w)| x * w).sum();
    let target = mean + eps;

    // Each variable is the μ-mass on one atom: (g value, cost of the mass).
    let mut vars: Vec<(f64, Box<dyn Fn(f64) -> ExtReal + '_>)> = atoms
        .iter()
        .map(|&(x, w)| {
            let cost = move |m: f64| spec.phi_eval(m / w).scale(w);
            (x, Box::new(cost) as Box<dyn Fn(f64) -> ExtReal>)
        })
        .collect();
    if let Some(slope) = spec.slope_inf().finite() {
        let gs = opts
            .g_singular
            .unwrap_or_else(|| atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max));
        vars.push((gs, Box::new(move |m: f64| ExtReal::Finite(m * slope))));
    }

    let (p, q) = extreme_indices(&vars);
    let (ap, aq) = (vars[p].0, vars[q].0);
    let scale = 1.0 + ap.abs().max(aq.abs());
    if ap == aq {
        if (target - ap).abs() > 1e-12 * scale {
            return Ok(PosInf);
        }
        // One constraint: search the simplex over all but the first variable.
        let free: Vec<usize> = (1..vars.len()).collect();
        let f = |fs: &[f64]| -> ExtReal {
            let used: f64 = fs.iter().sum();
            let mut total = vars[0].1(1.0 - used);
            for (k, &i) in free.iter().enumerate() {
                total = total + vars[i].1(fs[k]);
            }
            total
        };
        let coeffs: Vec<(f64, f64)> = free.iter().map(|_| (1.0, 0.0)).collect();
        return Ok(nested_search(
            &coeffs,
            (1.0, f64::INFINITY),
            &mut Vec::new(),
            &f,
        ));
    }

    // Masses on p and q are fixed by the two constraints once the others
    // (the free coordinates) are chosen:
    //   Σ (a_j − a_p) f_j ≤ target − a_p   (mass on q ≥ 0)
    //   Σ (a_q − a_j) f_j ≤ a_q − target   (mass on p ≥ 0)
    let free: Vec<usize> = (0..vars.len()).filter(|&i| i != p && i != q).collect();
    let d = aq - ap;
    let slack = |v: f64| {
        if v < 0.0 && v > -1e-13 * scale {
            0.0
        } else {
            v
        }
    };
    let r1 = slack(target - ap);
    let r2 = slack(aq - target);
    if r1 < 0.0 || r2 < 0.0 {
        return Ok(PosInf);
    }
    let coeffs: Vec<(f64, f64)> = free
        .iter()
        .map(|&i| (vars[i].0 - ap, aq - vars[i].0))
        .collect();
    let f = |fs: &[f64]| -> ExtReal {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut total = ExtReal::ZERO;
        for (k, &i) in free.iter().enumerate() {
            s0 += fs[k];
            s1 += (vars[i].0 - ap) * fs[k];
            total = total + vars[i].1(fs[k]);
        }
        let mq = ((r1 - s1) / d).max(0.0);
        let mp = (1.0 - s0 - mq).max(0.0);
        total + vars[q].1(mq) + vars[p].1(mp)
    };
    Ok(nested_search(&coeffs, (r1, r2), &mut Vec::new(), &f))
}

fn extreme_indices<T>(vars: &[(f64, T)]) -> (usize, usize) {
    let mut p = 0;
    let mut q = 0;
    for (i, (a, _)) in vars.iter().enumerate() {
        if *a < vars[p].0 {
            p = i;
        }
        if *a > vars[q].0 {
            q = i;
        }
    }
    if p == q && vars.len() > 1 {
        q = if p == 0 { 1 } else { 0 };
    }
    (p, q)
}

/// Minimizes `f` over `f_k ≥ 0` subject to `Σ c1_k f_k ≤ r1` and
/// `Σ c2_k f_k ≤ r2` (non-negative coefficients), one coordinate at a
/// time. The exact range of coordinate `k` given the earlier ones is
/// `[0, min(r1'/c1_k, r2'/c2_k)]` with the residual capacities `r'`.
fn nested_search(
    coeffs: &[(f64, f64)],
    (r1, r2): (f64, f64),
    fixed: &mut Vec<f64>,
    f: &dyn Fn(&[f64]) -> ExtReal,
) -> ExtReal {
    let k = fixed.len();
    if k == coeffs.len() {
        return f(fixed);
    }
    let used = fixed
        .iter()
        .zip(coeffs)
        .fold((0.0, 0.0), |(u1, u2), (x, (c1, c2))| {
            (u1 + c1 * x, u2 + c2 * x)
        });
    let cap = |r: f64, u: f64, c: f64| {
        if c > 0.0 {
            ((r - u) / c).max(0.0)
        } else {
            f64::INFINITY
        }
    };
    let hi = cap(r1, used.0, coeffs[k].0).min(cap(r2, used.1, coeffs[k].1));
    let hi = if hi.is_finite() { hi } else { 1.0 };
    let mut eval = |x: f64| {
        fixed.push(x);
        let v = nested_search(coeffs, (r1, r2), fixed, f);
        fixed.pop();
        v
    };
    grid_minimize(0.0, hi, &mut eval)
}

/// Refined grid search of a convex function on `[lo, hi]`: a uniform grid,
/// then repeated zooms to ±1 step around the best point.
fn grid_minimize(lo: f64, hi: f64, f: &mut dyn FnMut(f64) -> ExtReal) -> ExtReal {
    if hi <= lo {
        return f(lo);
    }
    let (mut a, mut b) = (lo, hi);
    let mut best = PosInf;
    for _ in 0..=ORACLE_ROUNDS {
        let step = (b - a) / ORACLE_INTERVALS as f64;
        let mut arg = a;
        for i in 0..=ORACLE_INTERVALS {
            let x = if i == ORACLE_INTERVALS {
                b
            } else {
                a + step * i as f64
            };
            let v = f(x);
            if v < best {
                best = v;
                arg = x;
            }
        }
        a = (arg - step).max(lo);
        b = (arg + step).min(hi);
    }
    best
}

/// `ε² / Var(X)`, the χ² bound.
pub fn hcr_bound(dist: &PushforwardDist, eps: f64) -> Result<f64, BoundError> {
    let v = dist.variance();
    if v <= 0.0 {
        return Err(BoundError::ZeroVariance);
    }
    Ok(eps * eps / v)
}

/// [`hcr_bound`] sampled on `eps`.
pub fn hcr_curve(dist: &PushforwardDist, eps: &[f64]) -> Result<BoundCurve, BoundError> {
    let samples = eps
        .iter()
        .map(|&e| {
            hcr_bound(dist, e).map(|l| BoundSample {
                eps: e,
                l: ExtReal::Finite(l),
                boundary: false,
                t_opt: None,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(BoundCurve {
        samples,
        provenance: Provenance::ClosedForm,
        spec_name: "chi2".into(),
    })
}

/// Whether `K(t) ≤ σ²t²/2` at every sample. A sample with `K = +∞` at
/// `t ≠ 0` fails the check.
pub fn subgaussian_certificate(curve: &CgfCurve, sigma2: f64) -> bool {
    curve.samples.iter().all(|s| {
        let bound = 0.5 * sigma2 * s.t * s.t;
        match s.k.finite() {
            Some(k) => k <= bound + 1e-12 * (1.0 + bound.abs()),
            None => s.t == 0.0,
        }
    })
}

/// Smallest `σ²` accepted by [`subgaussian_certificate`] on this curve.
pub fn min_subgaussian_sigma2(curve: &CgfCurve) -> ExtReal {
    curve
        .samples
        .iter()
        .filter(|s| s.t != 0.0)
        .map(|s| s.k.scale(2.0 / (s.t * s.t)))
        .fold(ExtReal::ZERO, ExtReal::max)
}
