use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{q_floor, GaussValue, SeriesCtx, Tail, MIN_WINDOW, Q};
use crate::coeff::{CoeffElem, CoeffRing};
use crate::error::{Error, Result};

/// Truncated Laurent series `Σ c_i u^i` with certified error regions.
///
/// Besides the known coefficients in `[lo, hi]`, a series carries up to two
/// error regions: an upper one covering exponents `≥ hi_start` and a lower one
/// covering exponents `≤ lo_end`. Each has a floor `F` meaning that the unknown
/// remainder there has `w_r ≥ F`. An error region may overlap the window, in
/// which case the coefficient at `u^i` is only known modulo `p^⌈(F − i)/r⌉`.
#[derive(Clone, Debug)]
pub struct LaurentSeries {
    ctx: Arc<SeriesCtx>,
    lo: i64,
    hi: i64,
    coeffs: BTreeMap<i64, CoeffElem>,
    tail_lo: Tail,
    lo_end: i64,
    tail_hi: Tail,
    hi_start: i64,
}

/// Newton steps allowed when inverting a series with terms on both sides of
/// its dominant monomial.
const NEWTON_STEPS: usize = 64;

impl LaurentSeries {
    /// The zero series on the context window, exact at both ends.
    pub fn zero(ctx: &Arc<SeriesCtx>) -> Self {
        LaurentSeries {
            ctx: ctx.clone(),
            lo: ctx.lo,
            hi: ctx.hi,
            coeffs: BTreeMap::new(),
            tail_lo: Tail::Exact,
            lo_end: ctx.lo - 1,
            tail_hi: Tail::Exact,
            hi_start: ctx.hi + 1,
        }
    }

    pub fn one(ctx: &Arc<SeriesCtx>) -> Self {
        Self::constant(ctx, ctx.ring.one())
    }

    pub fn constant(ctx: &Arc<SeriesCtx>, c: CoeffElem) -> Self {
        Self::monomial(ctx, c, 0)
    }

    /// `c·u^k`; a monomial outside the window becomes a tail.
    pub fn monomial(ctx: &Arc<SeriesCtx>, c: CoeffElem, k: i64) -> Self {
        Self::from_terms(ctx, [(k, c)])
    }

    /// Laurent polynomial from `(exponent, coefficient)` pairs. Repeated
    /// exponents are summed; terms outside the window are folded into tails.
    pub fn from_terms(ctx: &Arc<SeriesCtx>, terms: impl IntoIterator<Item = (i64, CoeffElem)>) -> Self {
        let mut out = Self::zero(ctx);
        for (i, c) in terms {
            out.insert_known(i, c);
        }
        out.normalize();
        out
    }

    /// Laurent polynomial with integer coefficients, `(exponent, value)` pairs.
    pub fn from_ints(ctx: &Arc<SeriesCtx>, terms: &[(i64, i64)]) -> Self {
        let ring = ctx.ring.clone();
        Self::from_terms(ctx, terms.iter().map(|&(i, c)| (i, ring.from_int(c))))
    }

    /// Series with an explicit window and tail state, as read from a document.
    /// Truncated tails start just outside the window.
    pub fn from_parts(
        ctx: &Arc<SeriesCtx>,
        lo: i64,
        hi: i64,
        terms: impl IntoIterator<Item = (i64, CoeffElem)>,
        tail_lo: Tail,
        tail_hi: Tail,
    ) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!("empty window [{lo}, {hi}]")));
        }
        let mut out = LaurentSeries {
            ctx: ctx.clone(),
            lo,
            hi,
            coeffs: BTreeMap::new(),
            tail_lo,
            lo_end: lo - 1,
            tail_hi,
            hi_start: hi + 1,
        };
        for (i, c) in terms {
            if i < lo || i > hi {
                return Err(Error::InvalidParameter(format!("exponent {i} outside window [{lo}, {hi}]")));
            }
            out.insert_known(i, c);
        }
        Ok(out)
    }

    /// Moves the error regions to cover `(−∞, lo_end]` and `[hi_start, ∞)`.
    pub fn with_error_regions(mut self, lo_end: i64, hi_start: i64) -> Result<Self> {
        if lo_end < self.lo - 1 || hi_start > self.hi + 1 {
            return Err(Error::InvalidParameter("error region leaves a gap outside the window".into()));
        }
        self.lo_end = lo_end;
        self.hi_start = hi_start;
        Ok(self)
    }

    pub fn ctx(&self) -> &Arc<SeriesCtx> {
        &self.ctx
    }

    pub fn ring(&self) -> &Arc<CoeffRing> {
        &self.ctx.ring
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn tail_lo(&self) -> Tail {
        self.tail_lo
    }

    pub fn tail_hi(&self) -> Tail {
        self.tail_hi
    }

    /// Largest exponent covered by the lower error region.
    pub fn lo_end(&self) -> i64 {
        self.lo_end
    }

    /// Smallest exponent covered by the upper error region.
    pub fn hi_start(&self) -> i64 {
        self.hi_start
    }

    /// Nonzero coefficients in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &CoeffElem)> {
        self.coeffs.iter().map(|(&i, c)| (i, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `u^i`; `None` outside the window.
    pub fn coeff(&self, i: i64) -> Option<CoeffElem> {
        if i < self.lo || i > self.hi {
            None
        } else {
            Some(self.coeffs.get(&i).cloned().unwrap_or_else(CoeffElem::zero))
        }
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Smallest exponent the true value may involve (`None` for unbounded).
    fn support_lo(&self) -> Option<i64> {
        match self.tail_lo {
            Tail::Truncated(_) => None,
            Tail::Exact => {
                let known = self.min_exp().unwrap_or(i64::MAX / 4);
                Some(if self.tail_hi.is_exact() { known } else { known.min(self.hi_start) })
            }
        }
    }

    fn support_hi(&self) -> Option<i64> {
        match self.tail_hi {
            Tail::Truncated(_) => None,
            Tail::Exact => {
                let known = self.max_exp().unwrap_or(i64::MIN / 4);
                Some(if self.tail_lo.is_exact() { known } else { known.max(self.lo_end) })
            }
        }
    }

    pub fn is_laurent_polynomial(&self) -> bool {
        self.tail_lo.is_exact() && self.tail_hi.is_exact()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.is_laurent_polynomial()
    }

    /// Support in `[0, ∞)`: a model of an element of `R⁺`.
    pub fn is_plus(&self) -> bool {
        self.tail_lo.is_exact()
            && self.min_exp().is_none_or(|i| i >= 0)
            && (self.tail_hi.is_exact() || self.hi_start >= 0)
    }

    /// Support in `(−∞, 0]`: a model of an element of `R⁻`.
    pub fn is_minus(&self) -> bool {
        self.tail_hi.is_exact()
            && self.max_exp().is_none_or(|i| i <= 0)
            && (self.tail_lo.is_exact() || self.lo_end <= 0)
    }

    /// Support in `(−∞, −1]`.
    pub fn is_strict_minus(&self) -> bool {
        self.tail_hi.is_exact()
            && self.max_exp().is_none_or(|i| i <= -1)
            && (self.tail_lo.is_exact() || self.lo_end <= -1)
    }

    /// All represented coefficients have `v_p ≥ 0`. Error regions are not inspected.
    pub fn is_integral(&self) -> bool {
        self.coeffs.values().all(|c| c.is_integral())
    }

    /// Constant series whose coefficient is in `O`.
    pub fn is_integral_constant(&self) -> bool {
        self.is_laurent_polynomial() && self.coeffs.keys().all(|&i| i == 0) && self.is_integral()
    }

    /// The represented coefficients with both error regions dropped.
    pub fn known_part(&self) -> Self {
        LaurentSeries {
            tail_lo: Tail::Exact,
            lo_end: self.lo - 1,
            tail_hi: Tail::Exact,
            hi_start: self.hi + 1,
            ..self.clone()
        }
    }

    fn term_w(&self, i: i64, c: &CoeffElem, s: Q) -> Option<Q> {
        c.vp().map(|v| s * Q::from_integer(v) + Q::from_integer(i))
    }

    /// Gauss value of the represented terms only, at the context radius.
    pub fn known_w(&self) -> Option<Q> {
        let r = self.ctx.radius;
        self.coeffs.iter().filter_map(|(&i, c)| self.term_w(i, c, r)).min()
    }

    /// Certified `w_s`.
    ///
    /// A truncated upper region certifies only `s ≤ r` and a truncated lower
    /// region only `s ≥ r`, where `r` is the context radius.
    pub fn gauss_norm(&self, s: Q) -> Result<GaussValue> {
        if s <= Q::from_integer(0) {
            return Err(Error::InvalidParameter("s must be positive".into()));
        }
        let r = self.ctx.radius;
        let known = self.coeffs.iter().filter_map(|(&i, c)| self.term_w(i, c, s)).min();
        let one = Q::from_integer(1);
        let mut bound: Option<Q> = None;
        let mut push = |x: Q| bound = Some(bound.map_or(x, |cur: Q| cur.min(x)));
        if let Tail::Truncated(f) = self.tail_hi {
            if s > r {
                return Err(Error::NotCertified(format!("upper tail certified at r = {r}, asked s = {s}")));
            }
            push((s / r) * f + (one - s / r) * Q::from_integer(self.hi_start));
        }
        if let Tail::Truncated(f) = self.tail_lo {
            if s < r {
                return Err(Error::NotCertified(format!("lower tail certified at r = {r}, asked s = {s}")));
            }
            push((s / r) * f + (one - s / r) * Q::from_integer(self.lo_end));
        }
        let (w, exact) = match (known, bound) {
            (k, None) => (k, true),
            (None, b) => (b, false),
            (Some(k), Some(b)) => (Some(k.min(b)), k < b),
        };
        Ok(GaussValue { s, w, exact })
    }

    /// Certified `w_r` at the context radius.
    pub fn gauss_norm_r(&self) -> Result<GaussValue> {
        self.gauss_norm(self.ctx.radius)
    }

    // ----- construction helpers -------------------------------------------------

    fn empty_like(&self) -> Self {
        Self::zero(&self.ctx)
    }

    fn same_ctx(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ctx, &other.ctx) || *self.ctx == *other.ctx {
            Ok(())
        } else {
            Err(Error::RingMismatch)
        }
    }

    /// Adds `c·u^i` to the known part, or to an error region when outside the window.
    fn insert_known(&mut self, i: i64, c: CoeffElem) {
        if c.is_zero() {
            return;
        }
        if i < self.lo || i > self.hi {
            let w = self.term_w(i, &c, self.ctx.radius).unwrap();
            if i < self.lo {
                self.merge_lo(w, i);
            } else {
                self.merge_hi(w, i);
            }
            return;
        }
        let ring = self.ctx.ring.clone();
        match self.coeffs.remove(&i) {
            None => {
                self.coeffs.insert(i, c);
            }
            Some(prev) => {
                let sum = ring.add(&prev, &c);
                if !sum.is_zero() {
                    self.coeffs.insert(i, sum);
                }
            }
        }
    }

    fn merge_hi(&mut self, floor: Q, start: i64) {
        let start = start.min(self.hi + 1);
        match self.tail_hi {
            Tail::Exact => {
                self.tail_hi = Tail::Truncated(floor);
                self.hi_start = start;
            }
            Tail::Truncated(f) => {
                self.tail_hi = Tail::Truncated(f.min(floor));
                self.hi_start = self.hi_start.min(start);
            }
        }
    }

    fn merge_lo(&mut self, floor: Q, end: i64) {
        let end = end.max(self.lo - 1);
        match self.tail_lo {
            Tail::Exact => {
                self.tail_lo = Tail::Truncated(floor);
                self.lo_end = end;
            }
            Tail::Truncated(f) => {
                self.tail_lo = Tail::Truncated(f.min(floor));
                self.lo_end = self.lo_end.max(end);
            }
        }
    }

    /// Accounts for an unknown contribution of Gauss value `≥ floor` supported in
    /// the exponent range `[a, b]` (`None` for unbounded). The part at
    /// nonnegative exponents joins the upper region, the rest the lower one.
    fn absorb_piece(&mut self, floor: Q, a: Option<i64>, b: Option<i64>) {
        if let (Some(a), Some(b)) = (a, b) {
            if a > b {
                return;
            }
        }
        if b.is_none_or(|b| b >= 0) {
            self.merge_hi(floor, a.map_or(0, |a| a.max(0)));
        }
        if a.is_none_or(|a| a <= -1) {
            self.merge_lo(floor, b.map_or(-1, |b| b.min(-1)));
        }
    }

    /// Drops what is zero at precision: error contributions at exponents where
    /// the floor forces `v_p ≥ N`, and known terms already covered by an error
    /// region's floor.
    fn normalize(&mut self) {
        let reach = self.ctx.precision_reach();
        if let Tail::Truncated(f) = self.tail_lo {
            if f - Q::from_integer(self.lo_end) >= reach {
                self.tail_lo = Tail::Exact;
                self.lo_end = self.lo - 1;
            }
        }
        if let Tail::Truncated(f) = self.tail_hi {
            self.hi_start = self.hi_start.max(q_floor(f - reach) + 1).min(self.hi + 1);
        }
        let r = self.ctx.radius;
        if let Tail::Truncated(f) = self.tail_hi {
            let start = self.hi_start;
            self.coeffs.retain(|&i, c| i < start || c.vp().is_some_and(|v| r * Q::from_integer(v) + Q::from_integer(i) < f));
        }
        if let Tail::Truncated(f) = self.tail_lo {
            let end = self.lo_end;
            self.coeffs.retain(|&i, c| i > end || c.vp().is_some_and(|v| r * Q::from_integer(v) + Q::from_integer(i) < f));
        }
    }

    /// Number of window positions whose coefficient is fully known.
    pub fn certified_len(&self) -> i64 {
        let top = if self.tail_hi.is_exact() { self.hi } else { self.hi.min(self.hi_start - 1) };
        let bottom = if self.tail_lo.is_exact() { self.lo } else { self.lo.max(self.lo_end + 1) };
        (top - bottom + 1).max(0)
    }

    fn finish(mut self) -> Result<Self> {
        self.normalize();
        if self.certified_len() < MIN_WINDOW {
            return Err(Error::WindowUnderflow(format!(
                "fewer than {MIN_WINDOW} certified coefficients remain in [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(self)
    }

    fn absorb_tails_of(&mut self, other: &Self, shift: i64) {
        if let Tail::Truncated(f) = other.tail_hi {
            self.absorb_piece(f + Q::from_integer(shift), Some(other.hi_start + shift), None);
        }
        if let Tail::Truncated(f) = other.tail_lo {
            self.absorb_piece(f + Q::from_integer(shift), None, Some(other.lo_end + shift));
        }
    }

    // ----- ring operations ------------------------------------------------------

    pub fn neg(&self) -> Self {
        let ring = self.ctx.ring.clone();
        let coeffs = self.coeffs.iter().map(|(&i, c)| (i, ring.neg(c))).collect();
        LaurentSeries { coeffs, ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        let mut out = self.empty_like();
        for (&i, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            out.insert_known(i, c.clone());
        }
        out.absorb_tails_of(self, 0);
        out.absorb_tails_of(other, 0);
        out.finish()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        let ring = self.ctx.ring.clone();
        let mut out = self.empty_like();
        if let (Some(fa), Some(fb), Some(ga), Some(gb)) = (self.min_exp(), self.max_exp(), other.min_exp(), other.max_exp()) {
            let base = fa + ga;
            let mut acc: Vec<CoeffElem> = vec![CoeffElem::zero(); (fb + gb - base + 1) as usize];
            for (&i, x) in &self.coeffs {
                for (&j, y) in &other.coeffs {
                    let k = (i + j - base) as usize;
                    let prod = ring.mul(x, y);
                    acc[k] = ring.add(&acc[k], &prod);
                }
            }
            for (k, c) in acc.into_iter().enumerate() {
                out.insert_known(base + k as i64, c);
            }
        }
        for (f, g) in [(self, other), (other, self)] {
            // known part of f against the error regions of g
            if let Some(wf) = f.known_w() {
                if let Tail::Truncated(fl) = g.tail_hi {
                    out.absorb_piece(wf + fl, Some(g.hi_start + f.min_exp().unwrap()), None);
                }
                if let Tail::Truncated(fl) = g.tail_lo {
                    out.absorb_piece(wf + fl, None, Some(g.lo_end + f.max_exp().unwrap()));
                }
            }
        }
        if let (Tail::Truncated(a), Tail::Truncated(b)) = (self.tail_hi, other.tail_hi) {
            out.absorb_piece(a + b, Some(self.hi_start + other.hi_start), None);
        }
        if let (Tail::Truncated(a), Tail::Truncated(b)) = (self.tail_lo, other.tail_lo) {
            out.absorb_piece(a + b, None, Some(self.lo_end + other.lo_end));
        }
        for (x, y) in [(self.tail_hi, other.tail_lo), (self.tail_lo, other.tail_hi)] {
            if let (Tail::Truncated(a), Tail::Truncated(b)) = (x, y) {
                out.absorb_piece(a + b, None, None);
            }
        }
        out.finish()
    }

    /// `c·f` for a constant `c`.
    pub fn scale(&self, c: &CoeffElem) -> Result<Self> {
        let ring = self.ctx.ring.clone();
        let Some(v) = c.vp() else {
            return Ok(self.empty_like());
        };
        let mut out = self.empty_like();
        for (&i, x) in &self.coeffs {
            out.insert_known(i, ring.mul(c, x));
        }
        let shift = self.ctx.radius * Q::from_integer(v);
        if let Tail::Truncated(f) = self.tail_hi {
            out.absorb_piece(f + shift, Some(self.hi_start), None);
        }
        if let Tail::Truncated(f) = self.tail_lo {
            out.absorb_piece(f + shift, None, Some(self.lo_end));
        }
        out.finish()
    }

    /// `u^k·f`.
    pub fn shift(&self, k: i64) -> Result<Self> {
        let mut out = self.empty_like();
        for (&i, c) in &self.coeffs {
            out.insert_known(i + k, c.clone());
        }
        out.absorb_tails_of(self, k);
        out.finish()
    }

    /// `θ(f) = u·df/du`.
    pub fn theta(&self) -> Self {
        let ring = self.ctx.ring.clone();
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&i, c)| (i, ring.scale(i, c)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        // unknown terms only gain valuation under multiplication by their exponent
        LaurentSeries { coeffs, ..self.clone() }
    }

    /// Applies `σ` to the coefficients and substitutes `u ↦ u^σ`.
    pub fn frobenius_substitute(&self, lift: &FrobeniusLift) -> Result<Self> {
        let ring = self.ctx.ring.clone();
        let q = lift.q as i64;
        if let Tail::Truncated(_) = self.tail_lo {
            return Err(Error::NotCertified("Frobenius of a series with a truncated lower tail".into()));
        }
        let mut out = self.empty_like();
        match &lift.image_of_u {
            None => {
                for (&i, c) in &self.coeffs {
                    out.insert_known(q * i, ring.sigma(c));
                }
            }
            Some(image) => {
                self.same_ctx(image)?;
                if let (Some(a), Some(b)) = (self.min_exp(), self.max_exp()) {
                    let mut acc = self.empty_like();
                    let mut power = LaurentSeries::one(&self.ctx);
                    for i in 0..=b.max(0) {
                        if i >= a {
                            if let Some(c) = self.coeffs.get(&i) {
                                acc = acc.add(&power.scale(&ring.sigma(c))?)?;
                            }
                        }
                        if i < b {
                            power = power.mul(image)?;
                        }
                    }
                    if a < 0 {
                        let neg = image.inv()?;
                        let mut power = neg.clone();
                        for i in 1..=(-a) {
                            if let Some(c) = self.coeffs.get(&(-i)) {
                                acc = acc.add(&power.scale(&ring.sigma(c))?)?;
                            }
                            if i < -a {
                                power = power.mul(&neg)?;
                            }
                        }
                    }
                    out = acc;
                }
            }
        }
        if let Tail::Truncated(f) = self.tail_hi {
            // r·v + q·i = (r·v + i) + (q − 1)·i with i ≥ hi_start
            let floor = f + Q::from_integer((q - 1) * self.hi_start);
            out.absorb_piece(floor, Some(q * self.hi_start), None);
        }
        out.finish()
    }

    /// `(f⁻, f⁺)` with `f⁻` supported in `(−∞, −1]` and `f⁺` in `[0, ∞)`.
    pub fn split_plus_minus(&self) -> (Self, Self) {
        let mut minus = self.known_part();
        let plus_coeffs = minus.coeffs.split_off(&0);
        let mut plus = LaurentSeries { coeffs: plus_coeffs, ..minus.clone() };
        if let Tail::Truncated(f) = self.tail_lo {
            minus.merge_lo(f, self.lo_end.min(-1));
            if self.lo_end >= 0 {
                plus.merge_hi(f, 0);
            }
        }
        if let Tail::Truncated(f) = self.tail_hi {
            plus.merge_hi(f, self.hi_start.max(0));
            if self.hi_start <= -1 {
                minus.merge_lo(f, -1);
            }
        }
        (minus, plus)
    }

    /// Known terms with `w_r ≤ limit`, as an exact Laurent polynomial.
    pub fn terms_up_to_weight(&self, limit: Q) -> Self {
        let r = self.ctx.radius;
        let mut out = self.known_part();
        out.coeffs.retain(|&i, c| c.vp().is_some_and(|v| r * Q::from_integer(v) + Q::from_integer(i) <= limit));
        out
    }

    /// Keeps only the exponents in `[lo, hi]`; the rest is folded into error regions.
    pub fn truncate_to(&self, lo: i64, hi: i64) -> Result<Self> {
        let mut out = LaurentSeries {
            lo,
            hi,
            coeffs: BTreeMap::new(),
            tail_lo: Tail::Exact,
            lo_end: lo - 1,
            tail_hi: Tail::Exact,
            hi_start: hi + 1,
            ..self.clone()
        };
        for (&i, c) in &self.coeffs {
            out.insert_known(i, c.clone());
        }
        out.absorb_tails_of(self, 0);
        out.finish()
    }

    /// The `w_r`-dominant monomial `c·u^k`, if it is unique and no tail can reach it.
    pub fn dominant_term(&self) -> Result<(i64, CoeffElem, Q)> {
        let r = self.ctx.radius;
        let mut best: Option<(i64, Q)> = None;
        let mut tie = false;
        for (&i, c) in &self.coeffs {
            let w = self.term_w(i, c, r).unwrap();
            match best {
                None => best = Some((i, w)),
                Some((_, bw)) if w < bw => {
                    best = Some((i, w));
                    tie = false;
                }
                Some((_, bw)) if w == bw => tie = true,
                _ => {}
            }
        }
        let Some((k, w)) = best else {
            return Err(Error::NotAUnit("zero series".into()));
        };
        if tie {
            return Err(Error::NotAUnit(format!("no unique w_r-dominant term at r = {r}")));
        }
        for t in [self.tail_lo, self.tail_hi] {
            if let Tail::Truncated(f) = t {
                if f <= w {
                    return Err(Error::NotAUnit("a truncated tail may dominate".into()));
                }
            }
        }
        Ok((k, self.coeffs[&k].clone(), w))
    }

    /// Multiplicative inverse, certified a posteriori.
    ///
    /// The dominant monomial `c·u^k` is factored out; the remaining unit is
    /// inverted by a power-series recurrence when all other terms lie on one side
    /// of `k`, and by Newton iteration otherwise. The residual `f·g − 1` then
    /// bounds the error of the returned `g`.
    pub fn inv(&self) -> Result<Self> {
        let ring = self.ctx.ring.clone();
        let (k, c, _) = self.dominant_term()?;
        let c_inv = ring.inv(&c)?;
        let approx = if self.tail_lo.is_exact() && self.min_exp() == Some(k) {
            self.recurrence_inverse(k, &c_inv, 1)
        } else if self.tail_hi.is_exact() && self.max_exp() == Some(k) {
            self.recurrence_inverse(k, &c_inv, -1)
        } else {
            self.newton_inverse(k, &c_inv)?
        };
        self.certify_inverse(approx)
    }

    /// Inverse of `c·u^k·(1 + h)` with `h` supported strictly on one side
    /// (`dir = 1`: positive exponents, `dir = −1`: negative).
    fn recurrence_inverse(&self, k: i64, c_inv: &CoeffElem, dir: i64) -> Self {
        let ring = self.ctx.ring.clone();
        // exponent of the inverse is -k + dir·n
        let depth = if dir > 0 { self.ctx.hi + k } else { -k - self.ctx.lo };
        let mut out = self.empty_like();
        if depth < 0 {
            out.insert_known(-k, c_inv.clone());
            return out;
        }
        let depth = depth as usize;
        let mut h: Vec<(usize, CoeffElem)> = self
            .coeffs
            .iter()
            .filter(|(&i, _)| i != k)
            .map(|(&i, x)| (((i - k) * dir) as usize, ring.mul(c_inv, x)))
            .collect();
        h.sort_by_key(|(j, _)| *j);
        let mut g: Vec<CoeffElem> = Vec::with_capacity(depth + 1);
        g.push(ring.one());
        for n in 1..=depth {
            let mut acc = CoeffElem::zero();
            for (j, hj) in &h {
                if *j > n {
                    break;
                }
                let gn = &g[n - j];
                if !gn.is_zero() {
                    acc = ring.add(&acc, &ring.mul(hj, gn));
                }
            }
            g.push(ring.neg(&acc));
        }
        for (n, gn) in g.into_iter().enumerate() {
            out.insert_known(-k + dir * n as i64, ring.mul(c_inv, &gn));
        }
        out
    }

    fn newton_inverse(&self, k: i64, c_inv: &CoeffElem) -> Result<Self> {
        let known = self.known_part();
        let one = LaurentSeries::one(&self.ctx);
        let mut x = LaurentSeries::monomial(&self.ctx, c_inv.clone(), -k).known_part();
        let mut last: Option<Q> = None;
        for _ in 0..NEWTON_STEPS {
            let e = one.sub(&known.mul(&x)?.known_part())?.known_part();
            let w = e.known_w();
            if w.is_none() {
                break;
            }
            if let (Some(prev), Some(cur)) = (last, w) {
                if cur <= prev {
                    break;
                }
            }
            last = w;
            x = x.add(&x.mul(&e)?.known_part())?.known_part();
        }
        Ok(x)
    }

    /// Given an approximation `g` of `f^{-1}`, bounds `f^{-1} − g = −g·R·(1+R)^{-1}`
    /// with `R = f·g − 1`, which needs `w_r(R) > 0`.
    fn certify_inverse(&self, approx: Self) -> Result<Self> {
        let one = LaurentSeries::one(&self.ctx);
        let residual = self.mul(&approx)?.sub(&one)?;
        let rho = residual.gauss_norm_r()?;
        let Some(rho) = rho.w else {
            return approx.finish();
        };
        if rho <= Q::from_integer(0) {
            return Err(Error::NotAUnit(format!("inverse residual has w_r = {rho}")));
        }
        let wx = approx.gauss_norm_r()?.w.unwrap_or(Q::from_integer(0));
        let (a, b) = error_support(&approx, residual.support_lo(), residual.support_hi());
        let mut out = approx;
        out.absorb_piece(wx + rho, a, b);
        out.finish()
    }

    pub(crate) fn absorb_error(&mut self, floor: Q, a: Option<i64>, b: Option<i64>) {
        self.absorb_piece(floor, a, b)
    }

    pub(crate) fn support(&self) -> (Option<i64>, Option<i64>) {
        (self.support_lo(), self.support_hi())
    }

    pub(crate) fn finish_pub(self) -> Result<Self> {
        self.finish()
    }

    /// Value at `u = 0` of a plus series (its constant term).
    pub fn residue_at_zero(&self) -> Result<CoeffElem> {
        if !self.is_plus() {
            return Err(Error::Precondition("evaluation at u = 0 needs a plus series".into()));
        }
        Ok(self.coeffs.get(&0).cloned().unwrap_or_else(CoeffElem::zero))
    }
}

/// Support of `g·R·(1+R)^{-1}` given the support of `R`.
pub(crate) fn error_support(g: &LaurentSeries, ra: Option<i64>, rb: Option<i64>) -> (Option<i64>, Option<i64>) {
    let (ga, gb) = g.support();
    match (ra, rb) {
        (Some(a), _) if a >= 0 => (ga.map(|x| x + a), None),
        (_, Some(b)) if b <= 0 => (None, gb.map(|x| x + b)),
        _ => (None, None),
    }
}

/// Frobenius lift on the series ring: `σ` on coefficients and `u ↦ u^σ`.
#[derive(Clone, Debug)]
pub struct FrobeniusLift {
    pub q: u64,
    /// `None` is the standard lift `u^σ = u^q`.
    pub image_of_u: Option<LaurentSeries>,
}

impl FrobeniusLift {
    pub fn standard(q: u64) -> Self {
        FrobeniusLift { q, image_of_u: None }
    }

    /// Lift with `u^σ = image`, which must be `u^q` times an integral plus series
    /// with unit constant term.
    pub fn with_image(q: u64, image: LaurentSeries) -> Result<Self> {
        let lift = FrobeniusLift { q, image_of_u: Some(image) };
        lift.validate()?;
        Ok(lift)
    }

    pub fn is_standard(&self) -> bool {
        self.image_of_u.is_none()
    }

    /// `u^σ / u^q`.
    pub fn ratio(&self, ctx: &Arc<SeriesCtx>) -> Result<LaurentSeries> {
        match &self.image_of_u {
            None => Ok(LaurentSeries::one(ctx)),
            Some(img) => img.shift(-(self.q as i64)),
        }
    }

    /// Checks that `u^σ/u^q` is a unit: integral, plus, with unit constant term.
    pub fn validate(&self) -> Result<()> {
        let Some(img) = &self.image_of_u else {
            return Ok(());
        };
        let ratio = self.ratio(img.ctx())?;
        let c0 = ratio.coeff(0).unwrap_or_else(CoeffElem::zero);
        if !ratio.is_plus() || !ratio.is_integral() || c0.vp() != Some(0) {
            return Err(Error::Precondition("u^sigma / u^q is not a unit of the integral plus ring".into()));
        }
        Ok(())
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Tail::Truncated(_) = self.tail_lo {
            write!(f, "O(u^{}) + ", self.lo_end)?;
        }
        if self.coeffs.is_empty() {
            write!(f, "0")?;
        }
        for (n, (i, c)) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*u^{i}")?;
        }
        if let Tail::Truncated(_) = self.tail_hi {
            write!(f, " + O(u^{})", self.hi_start)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffRing;

    fn ctx(r: Q, lo: i64, hi: i64) -> Arc<SeriesCtx> {
        SeriesCtx::new(CoeffRing::new(5, 1, 1, 12).unwrap(), r, lo, hi).unwrap()
    }

    fn half() -> Q {
        Q::new(1, 2)
    }

    #[test]
    fn geometric_series_inverse() {
        let c = ctx(half(), -8, 5);
        let f = LaurentSeries::from_ints(&c, &[(0, 1), (1, -1)]);
        let g = f.inv().unwrap();
        for i in 0..=5 {
            assert_eq!(g.coeff(i).unwrap(), c.ring().one());
        }
        assert!(!g.tail_hi().is_exact());
        assert!(g.tail_lo().is_exact());
        assert_eq!(g.num_terms(), 6);
    }

    #[test]
    fn monomial_product() {
        let c = ctx(half(), -40, 40);
        let f = LaurentSeries::from_ints(&c, &[(-2, 1)]);
        let g = LaurentSeries::from_ints(&c, &[(3, 1)]);
        let h = f.mul(&g).unwrap();
        assert_eq!(h.terms().map(|(i, _)| i).collect::<Vec<_>>(), vec![1]);
        assert!(h.is_laurent_polynomial());
    }

    #[test]
    fn inverse_of_minus_unit_multiplies_back() {
        let c = ctx(Q::from_integer(2), -40, 40);
        let f = LaurentSeries::from_ints(&c, &[(0, 1), (-1, 5)]);
        let g = f.inv().unwrap();
        let prod = f.mul(&g).unwrap();
        let diff = prod.sub(&LaurentSeries::one(&c)).unwrap();
        assert!(diff.gauss_norm_r().unwrap().is_infinite());
    }

    #[test]
    fn gauss_norm_examples() {
        let c = ctx(half(), -40, 40);
        let u = LaurentSeries::from_ints(&c, &[(1, 1)]);
        for s in [Q::new(1, 3), Q::from_integer(1), Q::from_integer(7)] {
            assert_eq!(u.gauss_norm(s).unwrap().w, Some(Q::from_integer(1)));
        }
        let f = LaurentSeries::from_ints(&c, &[(-3, 5)]);
        assert_eq!(f.gauss_norm(Q::from_integer(2)).unwrap().w, Some(Q::from_integer(-1)));
        let g = LaurentSeries::from_ints(&c, &[(-1, 5), (1, 1)]);
        assert_eq!(g.gauss_norm(half()).unwrap().w, Some(Q::new(-1, 2)));
        assert!(LaurentSeries::zero(&c).gauss_norm(half()).unwrap().is_infinite());
    }

    #[test]
    fn truncated_upper_tail_not_certified_above_radius() {
        let c = ctx(half(), -8, 5);
        let g = LaurentSeries::from_ints(&c, &[(0, 1), (1, -1)]).inv().unwrap();
        assert!(g.gauss_norm(half()).is_ok());
        assert!(g.gauss_norm(Q::new(1, 4)).is_ok());
        assert!(matches!(g.gauss_norm(Q::from_integer(1)), Err(Error::NotCertified(_))));
    }

    #[test]
    fn theta_examples() {
        let c = ctx(half(), -40, 40);
        let f = LaurentSeries::from_ints(&c, &[(-3, 1)]);
        let t = f.theta();
        assert_eq!(t.coeff(-3).unwrap(), c.ring().from_int(-3));
        assert!(LaurentSeries::from_ints(&c, &[(0, 7)]).theta().is_zero());
    }

    #[test]
    fn frobenius_standard_lift() {
        let c = ctx(half(), -40, 40);
        let f = LaurentSeries::from_ints(&c, &[(2, 1)]);
        let s = f.frobenius_substitute(&FrobeniusLift::standard(5)).unwrap();
        assert_eq!(s.terms().map(|(i, _)| i).collect::<Vec<_>>(), vec![10]);
        // u^9 lands outside the window and becomes a tail
        let g = LaurentSeries::from_ints(&c, &[(9, 1)]);
        let sg = g.frobenius_substitute(&FrobeniusLift::standard(5)).unwrap();
        assert_eq!(sg.num_terms(), 0);
        assert_eq!(sg.tail_hi(), Tail::Truncated(Q::from_integer(45)));
    }

    #[test]
    fn split_examples() {
        let c = ctx(half(), -40, 40);
        let f = LaurentSeries::from_ints(&c, &[(-1, 5), (0, 3), (1, 1)]);
        let (m, p) = f.split_plus_minus();
        assert_eq!(m.terms().map(|(i, _)| i).collect::<Vec<_>>(), vec![-1]);
        assert_eq!(p.terms().map(|(i, _)| i).collect::<Vec<_>>(), vec![0, 1]);
        let (m2, p2) = p.split_plus_minus();
        assert!(m2.is_zero());
        assert_eq!(p2.num_terms(), 2);
    }

    #[test]
    fn non_unit_detected() {
        let c = ctx(Q::from_integer(1), -40, 40);
        // w_1(5u^{-1}) = 0 = w_1(1): no unique dominant term
        let f = LaurentSeries::from_ints(&c, &[(0, 1), (-1, 5)]);
        assert!(matches!(f.inv(), Err(Error::NotAUnit(_))));
        assert!(matches!(LaurentSeries::zero(&c).inv(), Err(Error::NotAUnit(_))));
    }

    #[test]
    fn mixed_inverse_is_certified() {
        let c = ctx(half(), -40, 40);
        // dominant term 5u^{-1} at r = 1/2; both sides present
        let f = LaurentSeries::from_ints(&c, &[(-2, 625), (-1, 5), (0, 1), (1, 1)]);
        let g = f.inv().unwrap();
        let diff = f.mul(&g).unwrap().sub(&LaurentSeries::one(&c)).unwrap();
        let w = diff.gauss_norm_r().unwrap();
        assert!(w.exceeds(Q::from_integer(0)), "{w}");
    }
}
