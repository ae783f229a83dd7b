//! Truncated bidirectional Laurent series over [`CoeffElem`].
//!
//! A series stores the coefficients it knows inside a window `[lo, hi]`. Anything
//! outside the window is summarized by a tail certificate: "every dropped term
//! satisfies `r·v_p(c) + i ≥ floor`", where `r` is the radius declared by the
//! series' [`SeriesCtx`]. Each operation computes the exact product/sum of the
//! known parts and then folds in the contribution of every uncertain piece,
//! shrinking the upper end of the window where such a contribution could be
//! visible at the working precision.

mod laurent;
mod matrix;

use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;

use crate::coeff::CoeffRing;
use crate::error::{Error, Result};

pub use laurent::{FrobeniusLift, LaurentSeries};
pub use matrix::SeriesMatrix;

pub type Q = Rational64;

/// Fewest coefficients a window may keep before an operation reports underflow.
pub const MIN_WINDOW: i64 = 8;

/// Shared configuration of a computation: coefficient ring, certification radius
/// and default window.
#[derive(Debug, PartialEq, Eq)]
pub struct SeriesCtx {
    ring: Arc<CoeffRing>,
    radius: Q,
    lo: i64,
    hi: i64,
}

impl SeriesCtx {
    pub fn new(ring: Arc<CoeffRing>, radius: Q, lo: i64, hi: i64) -> Result<Arc<Self>> {
        if radius <= Q::from_integer(0) {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        if hi - lo + 1 < MIN_WINDOW || lo > 0 || hi < 0 {
            return Err(Error::InvalidParameter(format!("window [{lo}, {hi}] too small or excludes 0")));
        }
        Ok(Arc::new(SeriesCtx { ring, radius, lo, hi }))
    }

    /// Window `[-40, 40]`.
    pub fn with_default_window(ring: Arc<CoeffRing>, radius: Q) -> Result<Arc<Self>> {
        Self::new(ring, radius, -40, 40)
    }

    pub fn ring(&self) -> &Arc<CoeffRing> {
        &self.ring
    }

    pub fn radius(&self) -> Q {
        self.radius
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    /// Same ring and window at another radius.
    pub fn at_radius(&self, radius: Q) -> Result<Arc<Self>> {
        Self::new(self.ring.clone(), radius, self.lo, self.hi)
    }

    /// `r·N`: an error of Gauss value `F` at exponent `i` is invisible at
    /// precision once `F − i ≥ r·N`.
    pub(crate) fn precision_reach(&self) -> Q {
        self.radius * Q::from_integer(self.ring.precision() as i64)
    }
}

/// Truncation state of one end of a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    Exact,
    /// All dropped terms satisfy `r·v_p + i ≥ floor` at the context radius.
    Truncated(Q),
}

impl Tail {
    pub fn is_exact(&self) -> bool {
        matches!(self, Tail::Exact)
    }

    pub fn floor(&self) -> Option<Q> {
        match self {
            Tail::Exact => None,
            Tail::Truncated(f) => Some(*f),
        }
    }
}

/// Certified value of `w_s`: exact for Laurent polynomials, a lower bound when a
/// truncated tail contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaussValue {
    pub s: Q,
    /// `None` is `+∞`.
    pub w: Option<Q>,
    pub exact: bool,
}

impl GaussValue {
    pub fn infinite(s: Q) -> Self {
        GaussValue { s, w: None, exact: true }
    }

    pub fn is_infinite(&self) -> bool {
        self.w.is_none()
    }

    /// `w > x`, with `+∞` above everything.
    pub fn exceeds(&self, x: Q) -> bool {
        self.w.is_none_or(|w| w > x)
    }

    pub fn at_least(&self, x: Q) -> bool {
        self.w.is_none_or(|w| w >= x)
    }

    pub fn min(self, other: GaussValue) -> GaussValue {
        let w = match (self.w, other.w) {
            (None, w) | (w, None) => w,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        GaussValue { s: self.s, w, exact: self.exact && other.exact }
    }
}

impl fmt::Display for GaussValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.w {
            None => write!(f, "+inf"),
            Some(w) => write!(f, "{}/{}", w.numer(), w.denom()),
        }
    }
}

pub(crate) fn q_floor(x: Q) -> i64 {
    x.floor().to_integer()
}

/// Formats a rational as `num/den`.
pub fn fmt_q(x: Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: i64 = n.parse().map_err(|_| Error::Document(format!("bad rational {s:?}")))?;
    let d: i64 = d.parse().map_err(|_| Error::Document(format!("bad rational {s:?}")))?;
    if d == 0 {
        return Err(Error::Document(format!("zero denominator in {s:?}")));
    }
    Ok(Q::new(n, d))
}
