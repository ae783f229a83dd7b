//! Trivializing unit-root Frobenius structures: residue-level Lang and
//! Artin–Schreier solvers, and the lift to `C^{-1}·Φ·C^σ ≡ I (mod p^d)` over an
//! unramified extension of the coefficient ring.

mod residue;

use std::sync::Arc;

pub use residue::{solve_artin_schreier, solve_lang_mult, ResidueMatrix, MAX_CANDIDATES};

use crate::coeff::{CoeffElem, CoeffRing};
use crate::error::{Error, Result};
use crate::field::FiniteField;
use crate::series::{FrobeniusLift, LaurentSeries, SeriesCtx, SeriesMatrix, Tail, Q};

/// Default bound on the residue extension degree searched.
pub const DEFAULT_MAX_DEGREE: usize = 64;

/// Result of [`unit_root_reduce`].
#[derive(Clone, Debug)]
pub struct UnitRootDescent {
    /// Number of `p`-adic steps.
    pub d: u32,
    /// Residue degree of the extension the solution lives over.
    pub m: usize,
    /// Change of basis over `W(F_{p^m})[[u]]`, truncated after `u^T`.
    pub c: SeriesMatrix,
    /// `v_p(C^{-1}·Φ·C^σ − I)` through `u^T`; `None` when it vanishes at precision.
    pub residual: Option<i64>,
    pub degree: usize,
    /// One line per step and check, in order.
    pub transcript: Vec<String>,
}

/// Smallest `d` with `d > 1/(p − 1)`.
pub fn steps_for(p: u64) -> u32 {
    if p == 2 {
        2
    } else {
        1
    }
}

/// Square matrix over `R[[u]]` truncated after `u^T`, row-major per power of `u`.
#[derive(Clone, Debug)]
struct PolyMat {
    ring: Arc<CoeffRing>,
    n: usize,
    coeffs: Vec<Vec<CoeffElem>>,
}

impl PolyMat {
    fn zero(ring: &Arc<CoeffRing>, n: usize, t: usize) -> Self {
        PolyMat { ring: ring.clone(), n, coeffs: vec![vec![CoeffElem::zero(); n * n]; t + 1] }
    }

    fn identity(ring: &Arc<CoeffRing>, n: usize, t: usize) -> Self {
        let mut m = Self::zero(ring, n, t);
        for i in 0..n {
            m.coeffs[0][i * n + i] = ring.one();
        }
        m
    }

    fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn sub(&self, other: &Self) -> Self {
        let r = &self.ring;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| r.sub(x, y)).collect())
            .collect();
        PolyMat { ring: r.clone(), n: self.n, coeffs }
    }

    fn add(&self, other: &Self) -> Self {
        let r = &self.ring;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| r.add(x, y)).collect())
            .collect();
        PolyMat { ring: r.clone(), n: self.n, coeffs }
    }

    fn scale(&self, c: &CoeffElem) -> Self {
        let r = &self.ring;
        let coeffs = self.coeffs.iter().map(|a| a.iter().map(|x| r.mul(c, x)).collect()).collect();
        PolyMat { ring: r.clone(), n: self.n, coeffs }
    }

    fn mul(&self, other: &Self) -> Self {
        let t = self.degree();
        let mut out = Self::zero(&self.ring, self.n, t);
        for a in 0..=t {
            if self.coeffs[a].iter().all(CoeffElem::is_zero) {
                continue;
            }
            for b in 0..=t - a {
                let prod = const_mul(&self.ring, self.n, &self.coeffs[a], &other.coeffs[b]);
                for (x, y) in out.coeffs[a + b].iter_mut().zip(prod) {
                    *x = self.ring.add(x, &y);
                }
            }
        }
        out
    }

    /// `σ` on coefficients and `u ↦ u^q`.
    fn sigma(&self) -> Self {
        let q = self.ring.q() as usize;
        let t = self.degree();
        let mut out = Self::zero(&self.ring, self.n, t);
        for j in (0..=t).step_by(q) {
            out.coeffs[j] = self.coeffs[j / q].iter().map(|x| self.ring.sigma(x)).collect();
        }
        out
    }

    /// Inverse through `u^T`, given a constant term invertible modulo `p`.
    fn inverse(&self) -> Result<Self> {
        let r = &self.ring;
        let n = self.n;
        let c0 = const_inverse(r, n, &self.coeffs[0])?;
        let t = self.degree();
        let mut out = Self::zero(r, n, t);
        out.coeffs[0] = c0.clone();
        for j in 1..=t {
            let mut acc = vec![CoeffElem::zero(); n * n];
            for i in 1..=j {
                let prod = const_mul(r, n, &self.coeffs[i], &out.coeffs[j - i]);
                for (x, y) in acc.iter_mut().zip(prod) {
                    *x = r.add(x, &y);
                }
            }
            out.coeffs[j] = const_mul(r, n, &c0, &acc).iter().map(|x| r.neg(x)).collect();
        }
        Ok(out)
    }

    /// Smallest `v_p` over all coefficients; `None` if every one is zero.
    fn min_vp(&self) -> Option<i64> {
        self.coeffs.iter().flatten().filter_map(CoeffElem::vp).min()
    }

    fn residue(&self, field: &FiniteField) -> Result<ResidueMatrix> {
        let n = self.n;
        let mut out = ResidueMatrix::zero(field, n, self.degree());
        for (j, c) in self.coeffs.iter().enumerate() {
            for (e, x) in c.iter().enumerate() {
                out.set(j, e / n, e % n, self.ring.residue(x)?);
            }
        }
        Ok(out)
    }

    fn lift(ring: &Arc<CoeffRing>, m: &ResidueMatrix) -> Self {
        let n = m.n();
        let mut out = Self::zero(ring, n, m.degree());
        for (j, c) in out.coeffs.iter_mut().enumerate() {
            for (e, x) in c.iter_mut().enumerate() {
                *x = ring.lift(m.get(j, e / n, e % n));
            }
        }
        out
    }

    fn to_series(&self, ctx: &Arc<SeriesCtx>) -> Result<SeriesMatrix> {
        let n = self.n;
        let t = self.degree() as i64;
        let (lo, hi) = ctx.window();
        let entries = (0..n * n)
            .map(|e| {
                let terms = self.coeffs.iter().enumerate().map(|(j, c)| (j as i64, c[e].clone()));
                LaurentSeries::from_parts(ctx, lo, hi, terms, Tail::Exact, Tail::Truncated(Q::from_integer(t + 1)))?
                    .with_error_regions(lo - 1, t + 1)
            })
            .collect::<Result<Vec<_>>>()?;
        SeriesMatrix::from_entries(n, entries)
    }
}

fn const_mul(r: &CoeffRing, n: usize, a: &[CoeffElem], b: &[CoeffElem]) -> Vec<CoeffElem> {
    let mut out = vec![CoeffElem::zero(); n * n];
    for i in 0..n {
        for l in 0..n {
            let x = &a[i * n + l];
            if x.is_zero() {
                continue;
            }
            for k in 0..n {
                let y = &b[l * n + k];
                if !y.is_zero() {
                    out[i * n + k] = r.add(&out[i * n + k], &r.mul(x, y));
                }
            }
        }
    }
    out
}

/// Gauss–Jordan inverse over the valuation ring, pivoting on units.
fn const_inverse(r: &CoeffRing, n: usize, a: &[CoeffElem]) -> Result<Vec<CoeffElem>> {
    let mut m = a.to_vec();
    let mut inv = vec![CoeffElem::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = r.one();
    }
    for col in 0..n {
        let piv = (col..n).find(|&row| m[row * n + col].vp() == Some(0)).ok_or(Error::NotInvertible)?;
        for k in 0..n {
            m.swap(piv * n + k, col * n + k);
            inv.swap(piv * n + k, col * n + k);
        }
        let s = r.inv(&m[col * n + col])?;
        for k in 0..n {
            m[col * n + k] = r.mul(&s, &m[col * n + k]);
            inv[col * n + k] = r.mul(&s, &inv[col * n + k]);
        }
        for row in 0..n {
            if row == col || m[row * n + col].is_zero() {
                continue;
            }
            let f = m[row * n + col].clone();
            for k in 0..n {
                let x = r.mul(&f, &m[col * n + k]);
                m[row * n + k] = r.sub(&m[row * n + k], &x);
                let y = r.mul(&f, &inv[col * n + k]);
                inv[row * n + k] = r.sub(&inv[row * n + k], &y);
            }
        }
    }
    Ok(inv)
}

/// Coefficients of `Φ` through `u^T`, each required to be known modulo `p^d`.
fn read_input(phi: &SeriesMatrix, t: usize, d: u32) -> Result<PolyMat> {
    let ring = phi.ctx().ring().clone();
    let r = phi.ctx().radius();
    let n = phi.n();
    let mut out = PolyMat::zero(&ring, n, t);
    for (e, s) in phi.entries().iter().enumerate() {
        for j in 0..=t as i64 {
            if let Tail::Truncated(floor) = s.tail_hi() {
                // unknown part contributes v_p ≥ (floor − j)/r at u^j
                if j >= s.hi_start() && (floor - Q::from_integer(j)) / r < Q::from(d as i64) {
                    return Err(Error::NotCertified(format!("entry {e}: u^{j} not known modulo p^{d}")));
                }
            }
            let c = s.coeff(j).unwrap_or_else(CoeffElem::zero);
            out.coeffs[j as usize][e] = c;
        }
    }
    Ok(out)
}

/// Reads `x ∈ Z_p` into the extension ring.
fn embed_elem(ext: &CoeffRing, x: &CoeffElem) -> Result<CoeffElem> {
    match x.vp() {
        None => Ok(CoeffElem::zero()),
        Some(v) => ext.from_parts(v, &[x.unit()[0] as i64]),
    }
}

fn embed(ext: &Arc<CoeffRing>, m: &PolyMat) -> Result<PolyMat> {
    let coeffs = m
        .coeffs
        .iter()
        .map(|c| c.iter().map(|x| embed_elem(ext, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(PolyMat { ring: ext.clone(), n: m.n, coeffs })
}

/// Descent inside one residue field; `Ok(None)` if some residue equation has no
/// solution there.
fn descend_in(
    phi: &PolyMat,
    field: &FiniteField,
    d: u32,
    transcript: &mut Vec<String>,
) -> Result<Option<(PolyMat, PolyMat)>> {
    let base = phi.ring.clone();
    let ext = CoeffRing::with_residue(field.clone(), base.a(), base.precision())?;
    let a = base.a();
    let k = field.degree();
    let phi = embed(&ext, phi)?;
    let n = phi.n;
    let t = phi.degree();
    let id = PolyMat::identity(&ext, n, t);
    let b = phi.residue(field)?;
    let Some(d0) = residue::lang_in_field(&b, a) else {
        return Ok(None);
    };
    if b.mul(&d0.tau(a))? != d0 || !d0.is_invertible() {
        return Err(Error::Precondition(format!("Lang solution over F_{}^{k} fails substitution", field.p())));
    }
    transcript.push(format!("step 1: D = B D^tau solved over F_{}^{k} and substituted back through t^{t}", field.p()));
    let mut c = PolyMat::lift(&ext, &d0);
    for i in 1..d {
        let e = c.inverse()?.mul(&phi).mul(&c.sigma()).sub(&id);
        if e.min_vp().is_some_and(|v| v < i as i64) {
            return Err(Error::Precondition(format!("step {i} left v_p(C^-1 Phi C^sigma - I) < {i}")));
        }
        let scaled = e.scale(&ext.p_power(-(i as i64)));
        let bi = scaled.residue(field)?.neg();
        let Some(di) = residue::artin_schreier_in_field(&bi, a) else {
            return Ok(None);
        };
        if di.tau(a).sub(&di)? != bi {
            return Err(Error::Precondition(format!(
                "Artin-Schreier solution over F_{}^{k} fails substitution",
                field.p()
            )));
        }
        transcript.push(format!(
            "step {}: D^tau - D = -B solved over F_{}^{k} and substituted back through t^{t}",
            i + 1,
            field.p()
        ));
        let corr = id.add(&PolyMat::lift(&ext, &di).scale(&ext.p_power(i as i64)));
        c = c.mul(&corr);
    }
    let e = c.inverse()?.mul(&phi).mul(&c.sigma()).sub(&id);
    Ok(Some((c, e)))
}

/// Change of basis `C` over `W(F_{p^m})[[u]]` with `C^{-1}·Φ·C^σ ≡ I (mod p^d)`
/// through `u^T`, for the smallest residue degree `m ≤ max_m` admitting one.
///
/// `Φ` must have integral plus entries over `Z_p` and be invertible modulo `p`.
/// `σ` is the standard lift `u ↦ u^q` composed with the Frobenius of the ring.
pub fn unit_root_reduce(phi: &SeriesMatrix, t: usize, max_m: usize) -> Result<UnitRootDescent> {
    let ctx = phi.ctx();
    let ring = ctx.ring().clone();
    if ring.m() != 1 {
        return Err(Error::InvalidParameter("unit-root descent expects coefficients in Z_p".into()));
    }
    if !phi.is_plus() || !phi.is_integral() {
        return Err(Error::NotUnitRoot("Phi is not an integral plus matrix".into()));
    }
    let p = ring.p();
    let d = steps_for(p);
    if ring.precision() <= d {
        return Err(Error::InvalidParameter(format!("precision {} too small for {d} steps", ring.precision())));
    }
    let input = read_input(phi, t, d)?;
    let fp = FiniteField::new(p, 1)?;
    if !input.residue(&fp)?.is_invertible() {
        return Err(Error::NotUnitRoot("Phi(0) is singular modulo p".into()));
    }
    let mut transcript = Vec::new();
    let base_residue = input.residue(&fp)?;
    for m in 1..=max_m {
        if !residue::lang_degree_admissible(&base_residue, ring.a(), m) {
            transcript.push(format!("F_{p}^{m}: Phi(0) mod p fails the norm condition"));
            continue;
        }
        let field = FiniteField::new(p, m)?;
        let mut lines = Vec::new();
        let Some((c, e)) = descend_in(&input, &field, d, &mut lines)? else {
            transcript.push(format!("F_{p}^{m}: no solution"));
            continue;
        };
        transcript.extend(lines);
        let residual = e.min_vp();
        if residual.is_some_and(|v| v < d as i64) {
            return Err(Error::Precondition(format!("v_p(C^-1 Phi C^sigma - I) = {residual:?} < {d}")));
        }
        transcript.push(format!(
            "check: v_p(C^-1 Phi C^sigma - I) through u^{t} is {}",
            residual.map_or("+inf".to_string(), |v| v.to_string())
        ));
        let (lo, hi) = ctx.window();
        let out_ctx = SeriesCtx::new(c.ring.clone(), ctx.radius(), lo, hi.max(t as i64))?;
        let c = c.to_series(&out_ctx)?;
        return Ok(UnitRootDescent { d, m, c, residual, degree: t, transcript });
    }
    Err(Error::NoSolution { bound: max_m, detail: "no residue field of this degree trivializes Phi".into() })
}

/// `v_p(Φ·C^σ − C)` through `u^T`, recomputed with series arithmetic over the
/// extension ring. Equals the residual of the descent since `C` is invertible.
pub fn verify_descent(phi: &SeriesMatrix, desc: &UnitRootDescent) -> Result<Option<i64>> {
    let ctx = desc.c.ctx();
    let ext = ctx.ring().clone();
    let mut entries = Vec::with_capacity(phi.n() * phi.n());
    for s in phi.entries() {
        let terms = s
            .terms()
            .map(|(j, c)| Ok((j, embed_elem(&ext, c)?)))
            .collect::<Result<Vec<_>>>()?;
        entries.push(LaurentSeries::from_terms(ctx, terms));
    }
    let phi_ext = SeriesMatrix::from_entries(phi.n(), entries)?;
    let lift = FrobeniusLift::standard(ext.q());
    let diff = phi_ext.mul(&desc.c.frobenius_substitute(&lift)?)?.sub(&desc.c)?;
    let t = desc.degree as i64;
    let mut lowest: Option<i64> = None;
    for e in diff.entries() {
        if e.hi_start() <= t || e.lo_end() >= 0 {
            return Err(Error::NotCertified(format!("coefficients through u^{t} are not all certified")));
        }
        for j in 0..=t {
            if let Some(v) = e.coeff(j).and_then(|c| c.vp()) {
                lowest = Some(lowest.map_or(v, |x: i64| x.min(v)));
            }
        }
    }
    Ok(lowest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64) -> Arc<SeriesCtx> {
        SeriesCtx::with_default_window(CoeffRing::new(p, 1, 1, 10).unwrap(), Q::new(1, 2)).unwrap()
    }

    fn scalar(c: &Arc<SeriesCtx>, terms: &[(i64, i64)]) -> SeriesMatrix {
        SeriesMatrix::from_entries(1, vec![LaurentSeries::from_ints(c, terms)]).unwrap()
    }

    /// `C^{-1}·Φ·C^σ − I` recomputed with series arithmetic over the extension.
    fn independent_residual(phi: &SeriesMatrix, desc: &UnitRootDescent) -> Option<i64> {
        let ext = desc.c.ctx().ring().clone();
        let t = desc.degree;
        let phi_ext = embed(&ext, &read_input(phi, t, desc.d).unwrap()).unwrap();
        let n = phi.n();
        let mut c = PolyMat::zero(&ext, n, t);
        for (e, s) in desc.c.entries().iter().enumerate() {
            for j in 0..=t {
                c.coeffs[j][e] = s.coeff(j as i64).unwrap();
            }
        }
        // C^σ·... = Φ^{-1}... checked as Φ·C^σ − C, which has the same v_p
        phi_ext.mul(&c.sigma()).sub(&c).min_vp()
    }

    #[test]
    fn steps_follow_ramification_bound() {
        assert_eq!(steps_for(2), 2);
        assert_eq!(steps_for(3), 1);
        assert_eq!(steps_for(5), 1);
    }

    #[test]
    fn identity_needs_no_extension() {
        let c = ctx(5);
        let desc = unit_root_reduce(&SeriesMatrix::identity(&c, 2), 12, 4).unwrap();
        assert_eq!((desc.d, desc.m, desc.residual), (1, 1, None));
        let id = SeriesMatrix::identity(desc.c.ctx(), 2);
        assert_eq!(desc.c.sub(&id).unwrap().num_terms(), 0);
    }

    #[test]
    fn two_plus_five_u_needs_degree_four() {
        let c = ctx(5);
        let phi = scalar(&c, &[(0, 2), (1, 5)]);
        let desc = unit_root_reduce(&phi, 30, 6).unwrap();
        assert_eq!((desc.d, desc.m), (1, 4));
        assert!(desc.residual.is_none_or(|v| v >= 1));
        assert!(independent_residual(&phi, &desc).is_none_or(|v| v >= 1));
    }

    #[test]
    fn two_adic_case_takes_two_steps() {
        let c = ctx(2);
        let phi = scalar(&c, &[(0, 1), (1, 2)]);
        let desc = unit_root_reduce(&phi, 30, 6).unwrap();
        assert_eq!(desc.d, 2);
        assert!(desc.residual.is_none_or(|v| v >= 2));
        assert!(independent_residual(&phi, &desc).is_none_or(|v| v >= 2));
        assert!(desc.transcript.iter().any(|l| l.starts_with("step 2")));
    }

    #[test]
    fn singular_frobenius_is_rejected() {
        let c = ctx(5);
        let phi = scalar(&c, &[(0, 5), (1, 1)]);
        assert!(matches!(unit_root_reduce(&phi, 10, 3), Err(Error::NotUnitRoot(_))));
    }
}
