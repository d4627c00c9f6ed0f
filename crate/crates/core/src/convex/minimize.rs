//! Golden-section minimization of extended-real convex functions of one
//! variable, with automatic bracket expansion.

use crate::convex::ConvexError;
use crate::extreal::ExtReal;

const INV_PHI: f64 = 0.618_033_988_749_894_8;
const GROWTH: f64 = 2.0;
const SCAN_POINTS: usize = 64;

/// Location and value of a minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub argmin: f64,
    pub value: ExtReal,
}

/// Configuration for [`Minimizer::minimize`].
///
/// `limits` are hard feasibility bounds: the search never evaluates outside
/// them and never expands past them. The bracket handed to `minimize` is a
/// starting guess that may be expanded up to `max_width`.
#[derive(Debug, Clone, Copy)]
pub struct Minimizer {
    pub tol: f64,
    pub limits: (f64, f64),
    pub max_width: f64,
    pub max_iter: usize,
}

impl Default for Minimizer {
    fn default() -> Self {
        Self::new(1e-10)
    }
}

impl Minimizer {
    pub fn new(tol: f64) -> Self {
        Minimizer {
            tol,
            limits: (f64::NEG_INFINITY, f64::INFINITY),
            max_width: 1e12,
            max_iter: 500,
        }
    }

    pub fn with_limits(mut self, lo: f64, hi: f64) -> Self {
        self.limits = (lo, hi);
        self
    }

    pub fn with_max_width(mut self, width: f64) -> Self {
        self.max_width = width;
        self
    }

    /// Minimizes the convex function `h` starting from `bracket`.
    pub fn minimize<F>(&self, h: F, bracket: (f64, f64)) -> Result<Minimum, ConvexError>
    where
        F: Fn(f64) -> ExtReal,
    {
        let (lim_lo, lim_hi) = self.limits;
        if !(lim_lo <= lim_hi) || bracket.0.is_nan() || bracket.1.is_nan() {
            return Err(ConvexError::InvalidBracket);
        }
        let mut lo = bracket.0.min(bracket.1).max(lim_lo);
        let mut hi = bracket.0.max(bracket.1).min(lim_hi);
        if lo > hi {
            // The guess lies entirely outside the feasible limits; start at
            // the nearest feasible edge.
            if bracket.0.max(bracket.1) < lim_lo {
                lo = lim_lo;
                hi = lim_lo;
            } else {
                lo = lim_hi;
                hi = lim_hi;
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(ConvexError::InvalidBracket);
        }

        let mut search = Search::new(&h);
        if hi - lo <= self.tol {
            let pad = self.tol.max(1e-3 * (1.0 + lo.abs()));
            lo = (lo - pad).max(lim_lo);
            hi = (hi + pad).min(lim_hi);
        }
        if hi <= lo {
            let v = search.eval(lo);
            return if v.is_pos_inf() {
                Err(ConvexError::AllInfinite { lo, hi })
            } else {
                Ok(Minimum {
                    argmin: lo,
                    value: v,
                })
            };
        }

        let (a, b) = self.bracket(&mut search, lo, hi)?;
        let (a, b) = self.golden(&mut search, a, b);
        let mut best = search.best.expect("a finite point was found");

        // Snap to the ends of the final interval and to nearby hard limits.
        for x in [a, b, lim_lo, lim_hi] {
            if x.is_finite() && x >= a - 2.0 * self.tol && x <= b + 2.0 * self.tol {
                let v = search.eval(x);
                if v < best.1 {
                    best = (x, v);
                }
            }
        }
        let best = self.plateau_midpoint(&mut search, best);
        Ok(Minimum {
            argmin: best.0,
            value: best.1,
        })
    }

    /// Grows `[lo, hi]` until it brackets the minimum of the convex `h`.
    fn bracket<F>(&self, s: &mut Search<F>, lo: f64, hi: f64) -> Result<(f64, f64), ConvexError>
    where
        F: Fn(f64) -> ExtReal,
    {
        let (lim_lo, lim_hi) = self.limits;
        let mut a = lo;
        let mut b = hi;
        let mut c = 0.5 * (a + b);
        let mut fa = s.eval(a);
        let mut fb = s.eval(b);
        let mut fc = s.eval(c);

        if fa.is_pos_inf() && fb.is_pos_inf() && fc.is_pos_inf() {
            // Locate the best finite grid point; by convexity the minimum
            // lies within one grid step of it.
            let step = (b - a) / SCAN_POINTS as f64;
            let mut best: Option<(f64, ExtReal)> = None;
            for i in 1..SCAN_POINTS {
                let x = a + step * i as f64;
                let v = s.eval(x);
                if !v.is_pos_inf() && best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((x, v));
                }
            }
            return match best {
                Some((x, _)) => Ok(((x - step).max(a), (x + step).min(b))),
                None => Err(ConvexError::AllInfinite { lo, hi }),
            };
        }

        loop {
            if fc <= fa && fc <= fb {
                return Ok((a, b));
            }
            if fb < fc {
                // Decreasing to the right.
                if b >= lim_hi {
                    return Ok((c, b));
                }
                let nb = (b + GROWTH * (b - c)).min(lim_hi);
                a = c;
                fa = fc;
                c = b;
                fc = fb;
                b = nb;
                fb = s.eval(b);
            } else {
                // fa < fc: decreasing to the left.
                if a <= lim_lo {
                    return Ok((a, c));
                }
                let na = (a - GROWTH * (c - a)).max(lim_lo);
                b = c;
                fb = fc;
                c = a;
                fc = fa;
                a = na;
                fa = s.eval(a);
            }
            if b - a > self.max_width {
                return Err(ConvexError::UnboundedBelow { width: b - a });
            }
        }
    }

    fn golden<F>(&self, s: &mut Search<F>, mut a: f64, mut b: f64) -> (f64, f64)
    where
        F: Fn(f64) -> ExtReal,
    {
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = s.eval(x1);
        let mut f2 = s.eval(x2);
        for _ in 0..self.max_iter {
            let floor = 4.0 * f64::EPSILON * (a.abs() + b.abs());
            if b - a <= self.tol.max(floor) {
                break;
            }
            let go_left = match f1.cmp(&f2) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => {
                    // Both infinite: keep the side holding a known finite point.
                    if f1.is_pos_inf() {
                        s.best.map(|(x, _)| x <= x2).unwrap_or(true)
                    } else {
                        true
                    }
                }
            };
            if go_left {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = s.eval(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = s.eval(x2);
            }
        }
        (a, b)
    }

    /// On a flat minimum, returns the midpoint of the optimal interval.
    fn plateau_midpoint<F>(&self, s: &mut Search<F>, best: (f64, ExtReal)) -> (f64, ExtReal)
    where
        F: Fn(f64) -> ExtReal,
    {
        let (x, v) = best;
        let Some(m) = v.finite() else {
            return best;
        };
        let slack = 1e-13 * (1.0 + m.abs());
        let flat = |y: ExtReal| y.finite().is_some_and(|y| y <= m + slack);
        let probe = (10.0 * self.tol).max(1e-9 * (1.0 + x.abs()));
        let (lim_lo, lim_hi) = self.limits;
        let left_probe = (x - probe).max(lim_lo);
        let right_probe = (x + probe).min(lim_hi);
        if !(flat(s.eval(left_probe)) && flat(s.eval(right_probe))) {
            return best;
        }
        let edge = |s: &mut Search<F>, dir: f64, limit: f64| -> f64 {
            let mut inside = x;
            let mut step = probe;
            let outside;
            loop {
                let cand = x + dir * step;
                let beyond = if dir > 0.0 {
                    cand >= limit
                } else {
                    cand <= limit
                };
                if beyond {
                    if flat(s.eval(limit)) {
                        return limit;
                    }
                    outside = limit;
                    break;
                }
                if !flat(s.eval(cand)) {
                    outside = cand;
                    break;
                }
                inside = cand;
                step *= 2.0;
                if step > self.max_width {
                    return inside;
                }
            }
            let (mut i, mut o) = (inside, outside);
            for _ in 0..200 {
                if (o - i).abs() <= self.tol.max(4.0 * f64::EPSILON * i.abs()) {
                    break;
                }
                let mid = 0.5 * (i + o);
                if flat(s.eval(mid)) {
                    i = mid;
                } else {
                    o = mid;
                }
            }
            i
        };
        let left = edge(s, -1.0, lim_lo);
        let right = edge(s, 1.0, lim_hi);
        let mid = 0.5 * (left + right);
        let vm = s.eval(mid);
        if vm <= v || flat(vm) {
            (mid, vm)
        } else {
            best
        }
    }
}

/// Minimizes the convex `h` with the default configuration and tolerance
/// `tol` on the location of the minimum.
pub fn minimize_1d<F>(h: F, bracket: (f64, f64), tol: f64) -> Result<Minimum, ConvexError>
where
    F: Fn(f64) -> ExtReal,
{
    Minimizer::new(tol).minimize(h, bracket)
}

struct Search<'a, F> {
    h: &'a F,
    best: Option<(f64, ExtReal)>,
}

impl<'a, F: Fn(f64) -> ExtReal> Search<'a, F> {
    fn new(h: &'a F) -> Self {
        Search { h, best: None }
    }

    fn eval(&mut self, x: f64) -> ExtReal {
        let v = (self.h)(x);
        if v.is_finite() || v.is_neg_inf() {
            match self.best {
                Some((_, b)) if b <= v => {}
                _ => self.best = Some((x, v)),
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(x: f64) -> ExtReal {
        ExtReal::Finite(x)
    }

    #[test]
    fn quadratic_vertex_outside_bracket() {
        let m = minimize_1d(|x| fin((x - 3.0).powi(2)), (0.0, 1.0), 1e-10).unwrap();
        assert!((m.argmin - 3.0).abs() < 1e-8, "{m:?}");
        assert!(m.value.finite().unwrap() < 1e-15);
    }

    #[test]
    fn exponential_minus_linear() {
        let m = minimize_1d(|x: f64| fin(x.exp() - x), (-5.0, 5.0), 1e-10).unwrap();
        assert!(m.argmin.abs() < 1e-7);
        assert!((m.value.finite().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn height_of_kl_at_width_one() {
        let psi = |x: f64| x.exp_m1() - x;
        let h = |l: f64| fin(psi(l + 0.5).max(psi(l - 0.5)));
        let m = minimize_1d(h, (-2.0, 2.0), 1e-12).unwrap();
        let v = m.value.finite().unwrap();
        assert!((v - 0.12).abs() < 0.005, "{v}");
    }

    #[test]
    fn infinite_regions_are_ordered_values() {
        // Finite only on [2, 2.5], minimum at the left edge of the domain.
        let h = |x: f64| {
            if (2.0..=2.5).contains(&x) {
                fin(x)
            } else {
                ExtReal::PosInf
            }
        };
        let m = minimize_1d(h, (-10.0, 10.0), 1e-10).unwrap();
        assert!((m.argmin - 2.0).abs() < 1e-8);
    }

    #[test]
    fn respects_hard_limits() {
        let m = Minimizer::new(1e-10)
            .with_limits(f64::NEG_INFINITY, 0.0)
            .minimize(|x| fin(-x), (-3.0, 3.0))
            .unwrap();
        assert_eq!(m.argmin, 0.0);
        assert_eq!(m.value, fin(0.0));
    }

    #[test]
    fn flat_minimum_returns_midpoint() {
        let h = |x: f64| fin((x.abs() - 1.0).max(0.0));
        let m = minimize_1d(h, (-0.3, 5.0), 1e-10).unwrap();
        assert!(m.argmin.abs() < 1e-7, "{m:?}");
    }

    #[test]
    fn unbounded_and_all_infinite() {
        let err = Minimizer::new(1e-8)
            .with_max_width(1e6)
            .minimize(|x| fin(-x), (0.0, 1.0))
            .unwrap_err();
        assert!(matches!(err, ConvexError::UnboundedBelow { .. }));
        let err = minimize_1d(|_| ExtReal::PosInf, (0.0, 1.0), 1e-8).unwrap_err();
        assert!(matches!(err, ConvexError::AllInfinite { .. }));
    }
}
