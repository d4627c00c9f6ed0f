//! Extended real numbers `ℝ ∪ {−∞, +∞}`.
//!
//! Addition follows the convex-analysis convention `(+∞) + (−∞) = +∞`, and
//! scaling by zero gives zero (`0·(±∞) = 0`). Values never hold a NaN.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// An extended real value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

pub use ExtReal::{NegInf, PosInf};

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Converts a float, mapping `±inf` to the matching infinity.
    ///
    /// NaN has no extended-real meaning; it is mapped to `+∞` so that a
    /// failed evaluation reads as "outside the domain".
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() || x == f64::INFINITY {
            PosInf
        } else if x == f64::NEG_INFINITY {
            NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        matches!(self, PosInf)
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, NegInf)
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Lossy conversion to `f64` (infinities become float infinities).
    pub fn to_f64(self) -> f64 {
        match self {
            NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            PosInf => f64::INFINITY,
        }
    }

    /// `c · self` for a real scalar, with `0 · (±∞) = 0`.
    pub fn scale(self, c: f64) -> Self {
        if c == 0.0 {
            return ExtReal::ZERO;
        }
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(c * x),
            PosInf if c > 0.0 => PosInf,
            PosInf => NegInf,
            NegInf if c > 0.0 => NegInf,
            NegInf => PosInf,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Absolute difference for comparing two values in tests and checks;
    /// equal infinities are at distance zero.
    pub fn abs_diff(self, other: Self) -> f64 {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
            (PosInf, PosInf) | (NegInf, NegInf) => 0.0,
            _ => f64::INFINITY,
        }
    }

    fn rank(self) -> u8 {
        match self {
            NegInf => 0,
            ExtReal::Finite(_) => 1,
            PosInf => 2,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::from_f64(a + b),
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::from_f64(rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        match self {
            NegInf => PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            PosInf => NegInf,
        }
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;

    fn sub(self, rhs: ExtReal) -> ExtReal {
        self + (-rhs)
    }
}

impl Sub<f64> for ExtReal {
    type Output = ExtReal;

    fn sub(self, rhs: f64) -> ExtReal {
        self + ExtReal::from_f64(-rhs)
    }
}

impl std::iter::Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> Self {
        iter.fold(ExtReal::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => f.write_str("-inf"),
            ExtReal::Finite(x) => fmt::Display::fmt(x, f),
            PosInf => f.write_str("inf"),
        }
    }
}
