use std::fmt;
use std::sync::Arc;

use super::laurent::FrobeniusLift;
use super::{GaussValue, LaurentSeries, SeriesCtx, Q};
use crate::coeff::CoeffElem;
use crate::error::{Error, Result};

/// Square matrix of [`LaurentSeries`] over one context, row-major.
#[derive(Clone, Debug)]
pub struct SeriesMatrix {
    n: usize,
    entries: Vec<LaurentSeries>,
}

impl SeriesMatrix {
    pub fn from_entries(n: usize, entries: Vec<LaurentSeries>) -> Result<Self> {
        if entries.len() != n * n || n == 0 {
            return Err(Error::Dimension(format!("{} entries for rank {n}", entries.len())));
        }
        let ctx = entries[0].ctx().clone();
        if entries.iter().any(|e| !Arc::ptr_eq(e.ctx(), &ctx) && **e.ctx() != *ctx) {
            return Err(Error::RingMismatch);
        }
        Ok(SeriesMatrix { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> LaurentSeries) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        SeriesMatrix { n, entries }
    }

    pub fn zero(ctx: &Arc<SeriesCtx>, n: usize) -> Self {
        Self::from_fn(n, |_, _| LaurentSeries::zero(ctx))
    }

    pub fn identity(ctx: &Arc<SeriesCtx>, n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { LaurentSeries::one(ctx) } else { LaurentSeries::zero(ctx) })
    }

    /// Elementary matrix with `s` at `(i, j)`.
    pub fn elementary(ctx: &Arc<SeriesCtx>, n: usize, i: usize, j: usize, s: LaurentSeries) -> Self {
        let mut m = Self::zero(ctx, n);
        m.set(i, j, s);
        m
    }

    pub fn diagonal(ctx: &Arc<SeriesCtx>, diag: Vec<LaurentSeries>) -> Self {
        let n = diag.len();
        let mut m = Self::zero(ctx, n);
        for (i, d) in diag.into_iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Integer matrix given by rows of `(exponent, coefficient)` term lists.
    pub fn from_int_terms(ctx: &Arc<SeriesCtx>, rows: &[Vec<Vec<(i64, i64)>>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension("ragged matrix".into()));
            }
            for terms in row {
                entries.push(LaurentSeries::from_ints(ctx, terms));
            }
        }
        Self::from_entries(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ctx(&self) -> &Arc<SeriesCtx> {
        self.entries[0].ctx()
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: LaurentSeries) {
        self.entries[i * self.n + j] = s;
    }

    pub fn entries(&self) -> &[LaurentSeries] {
        &self.entries
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("{} vs {}", self.n, other.n)));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(&LaurentSeries) -> Result<LaurentSeries>) -> Result<Self> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix { n: self.n, entries })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix { n: self.n, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix { n: self.n, entries })
    }

    pub fn neg(&self) -> Self {
        SeriesMatrix { n: self.n, entries: self.entries.iter().map(|e| e.neg()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let n = self.n;
        let ctx = self.ctx().clone();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = LaurentSeries::zero(&ctx);
                for k in 0..n {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b)?)?;
                }
                entries.push(acc);
            }
        }
        Ok(SeriesMatrix { n, entries })
    }

    pub fn scale(&self, c: &CoeffElem) -> Result<Self> {
        self.map(|e| e.scale(c))
    }

    /// Every entry multiplied by the series `s`.
    pub fn scale_series(&self, s: &LaurentSeries) -> Result<Self> {
        self.map(|e| e.mul(s))
    }

    pub fn theta(&self) -> Self {
        SeriesMatrix { n: self.n, entries: self.entries.iter().map(|e| e.theta()).collect() }
    }

    /// Entrywise `σ`.
    pub fn frobenius_substitute(&self, lift: &FrobeniusLift) -> Result<Self> {
        self.map(|e| e.frobenius_substitute(lift))
    }

    /// `(M⁻, M⁺)`, entrywise strict-minus and plus parts.
    pub fn split_plus_minus(&self) -> (Self, Self) {
        let (minus, plus): (Vec<_>, Vec<_>) = self.entries.iter().map(|e| e.split_plus_minus()).unzip();
        (SeriesMatrix { n: self.n, entries: minus }, SeriesMatrix { n: self.n, entries: plus })
    }

    pub fn known_part(&self) -> Self {
        SeriesMatrix { n: self.n, entries: self.entries.iter().map(|e| e.known_part()).collect() }
    }

    pub fn truncate_to(&self, lo: i64, hi: i64) -> Result<Self> {
        self.map(|e| e.truncate_to(lo, hi))
    }

    /// Matrix Gauss value: the minimum over entries.
    pub fn gauss_norm(&self, s: Q) -> Result<GaussValue> {
        let mut acc = GaussValue::infinite(s);
        for e in &self.entries {
            acc = acc.min(e.gauss_norm(s)?);
        }
        Ok(acc)
    }

    pub fn gauss_norm_r(&self) -> Result<GaussValue> {
        self.gauss_norm(self.ctx().radius())
    }

    /// Certified `w_s(M − I)`.
    pub fn distance_to_identity(&self, s: Q) -> Result<GaussValue> {
        self.sub(&Self::identity(self.ctx(), self.n))?.gauss_norm(s)
    }

    /// Total number of stored coefficients.
    pub fn num_terms(&self) -> usize {
        self.entries.iter().map(|e| e.num_terms()).sum()
    }

    pub fn is_plus(&self) -> bool {
        self.entries.iter().all(|e| e.is_plus())
    }

    pub fn is_strict_minus(&self) -> bool {
        self.entries.iter().all(|e| e.is_strict_minus())
    }

    pub fn is_laurent_polynomial(&self) -> bool {
        self.entries.iter().all(|e| e.is_laurent_polynomial())
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|e| e.is_integral())
    }

    /// Every entry a constant in `O`.
    pub fn is_integral_constant(&self) -> bool {
        self.entries.iter().all(|e| e.is_integral_constant())
    }

    fn minor(&self, row: usize, col: usize) -> Self {
        let n = self.n;
        let mut entries = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != row) {
            for j in (0..n).filter(|&j| j != col) {
                entries.push(self.get(i, j).clone());
            }
        }
        SeriesMatrix { n: n - 1, entries }
    }

    /// Determinant by cofactor expansion along the first row.
    pub fn det(&self) -> Result<LaurentSeries> {
        let n = self.n;
        if n == 1 {
            return Ok(self.entries[0].clone());
        }
        if n == 2 {
            return self.get(0, 0).mul(self.get(1, 1))?.sub(&self.get(0, 1).mul(self.get(1, 0))?);
        }
        let mut acc = LaurentSeries::zero(self.ctx());
        for j in 0..n {
            let a = self.get(0, j);
            if a.is_zero() {
                continue;
            }
            let term = a.mul(&self.minor(0, j).det()?)?;
            acc = if j % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
        }
        Ok(acc)
    }

    pub fn adjugate(&self) -> Result<Self> {
        let n = self.n;
        let ctx = self.ctx().clone();
        if n == 1 {
            return Ok(Self::identity(&ctx, 1));
        }
        let mut out = Self::zero(&ctx, n);
        for i in 0..n {
            for j in 0..n {
                let c = self.minor(j, i).det()?;
                out.set(i, j, if (i + j) % 2 == 0 { c } else { c.neg() });
            }
        }
        Ok(out)
    }

    /// Inverse, certified a posteriori by the residual `M·X − I`.
    ///
    /// For `n ≤ 4` the approximation is `adj(M)·det(M)^{-1}`; larger matrices
    /// must satisfy `w_r(M − I) > 0` and use the geometric series.
    pub fn inverse(&self) -> Result<Self> {
        let approx = if self.n <= 4 {
            let det_inv = self.det()?.inv().map_err(|e| match e {
                Error::NotAUnit(msg) => Error::NotAUnit(format!("determinant: {msg}")),
                other => other,
            })?;
            self.adjugate()?.known_part().scale_series(&det_inv.known_part())?.known_part()
        } else {
            self.geometric_inverse()?
        };
        self.certify_inverse(approx)
    }

    fn geometric_inverse(&self) -> Result<Self> {
        let ctx = self.ctx().clone();
        let id = Self::identity(&ctx, self.n);
        let e = id.sub(self)?.known_part();
        let delta = e.gauss_norm_r()?;
        if !delta.exceeds(Q::from_integer(0)) {
            return Err(Error::NotInvertible);
        }
        let mut term = id.clone();
        let mut acc = id;
        for _ in 0..4096 {
            term = term.mul(&e)?.known_part();
            if term.entries.iter().all(|t| t.num_terms() == 0) {
                break;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc.known_part())
    }

    fn certify_inverse(&self, approx: Self) -> Result<Self> {
        let ctx = self.ctx().clone();
        let residual = self.mul(&approx)?.sub(&Self::identity(&ctx, self.n))?;
        let rho = residual.gauss_norm_r()?;
        let Some(rho) = rho.w else {
            return Ok(approx);
        };
        if rho <= Q::from_integer(0) {
            return Err(Error::NotInvertible);
        }
        let wx = approx.gauss_norm_r()?.w.unwrap_or(Q::from_integer(0));
        let mut ra: Option<i64> = Some(i64::MAX / 4);
        let mut rb: Option<i64> = Some(i64::MIN / 4);
        for e in &residual.entries {
            let (a, b) = e.support();
            ra = match (ra, a) {
                (Some(x), Some(y)) => Some(x.min(y)),
                _ => None,
            };
            rb = match (rb, b) {
                (Some(x), Some(y)) => Some(x.max(y)),
                _ => None,
            };
        }
        // column supports of X·R·(1+R)^{-1} are bounded by the row supports of X
        let mut xa: Option<i64> = Some(i64::MAX / 4);
        let mut xb: Option<i64> = Some(i64::MIN / 4);
        for e in &approx.entries {
            let (a, b) = e.support();
            xa = match (xa, a) {
                (Some(x), Some(y)) => Some(x.min(y)),
                _ => None,
            };
            xb = match (xb, b) {
                (Some(x), Some(y)) => Some(x.max(y)),
                _ => None,
            };
        }
        let (a, b) = match (ra, rb) {
            (Some(a), _) if a >= 0 => (xa.map(|x| x + a), None),
            (_, Some(b)) if b <= 0 => (None, xb.map(|x| x + b)),
            _ => (None, None),
        };
        let floor = wx + rho;
        let entries = approx
            .entries
            .into_iter()
            .map(|mut e| {
                e.absorb_error(floor, a, b);
                e.finish_pub()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix { n: self.n, entries })
    }
}

impl fmt::Display for SeriesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffRing;

    fn ctx() -> Arc<SeriesCtx> {
        SeriesCtx::with_default_window(CoeffRing::new(5, 1, 1, 12).unwrap(), Q::new(1, 2)).unwrap()
    }

    #[test]
    fn identity_inverse() {
        let c = ctx();
        let id = SeriesMatrix::identity(&c, 3);
        let inv = id.inverse().unwrap();
        assert!(inv.sub(&id).unwrap().gauss_norm_r().unwrap().is_infinite());
    }

    #[test]
    fn unipotent_inverse_exact() {
        let c = ctx();
        let m = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1)], vec![(-1, 5)]], vec![vec![], vec![(0, 1)]]]).unwrap();
        let inv = m.inverse().unwrap();
        let expect = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1)], vec![(-1, -5)]], vec![vec![], vec![(0, 1)]]]).unwrap();
        assert!(inv.sub(&expect).unwrap().gauss_norm_r().unwrap().is_infinite());
        assert!(inv.is_laurent_polynomial());
    }

    #[test]
    fn det_of_triangular() {
        let c = ctx();
        let m = SeriesMatrix::from_int_terms(
            &c,
            &[
                vec![vec![(0, 2)], vec![(3, 1)], vec![(-1, 7)]],
                vec![vec![], vec![(1, 1)], vec![(2, 2)]],
                vec![vec![], vec![], vec![(0, 3)]],
            ],
        )
        .unwrap();
        let d = m.det().unwrap();
        assert_eq!(d.terms().map(|(i, _)| i).collect::<Vec<_>>(), vec![1]);
        assert_eq!(d.coeff(1).unwrap(), c.ring().from_int(6));
    }
}
