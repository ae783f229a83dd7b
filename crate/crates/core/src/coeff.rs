//! Fixed-precision arithmetic in `O = W(F_{p^m})` and its fraction field.
//!
//! `O` is presented as `(Z/p^N)[x]/(f)` with `f` the lifted monic irreducible
//! that also defines the residue field. Elements are stored as `p^val · unit`
//! where the unit is known modulo `p^rel`. Precision is capped two ways: the
//! relative precision never exceeds `N`, and nothing below `p^N` absolutely is
//! kept, so an element of valuation `≥ N` is zero at precision.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::field::{self, FiniteField, Fq};

pub(crate) type Digits = SmallVec<[u64; 4]>;

/// Parameters of the unramified coefficient ring together with the Hensel-lifted
/// image of the generator under the absolute Frobenius `σ₀`.
#[derive(Debug, PartialEq, Eq)]
pub struct CoeffRing {
    p: u64,
    a: u32,
    m: usize,
    prec: u32,
    /// Monic, leading coefficient included, entries in `[0, p)`.
    modulus: Vec<u64>,
    frobenius_image: Vec<u64>,
    /// `σ₀(x^k)` for `k < m`, modulo `p^N`.
    frob_table: Vec<Vec<u64>>,
    pow_p: Vec<u64>,
    residue: FiniteField,
}

/// An element `p^val · unit` of `K = Frac O`, or the zero sentinel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoeffElem {
    val: i64,
    rel: u32,
    unit: Digits,
}

impl CoeffRing {
    /// Ring `W(F_{p^m})` at absolute precision `p^prec`, with `σ = σ₀^a`.
    pub fn new(p: u64, a: u32, m: usize, prec: u32) -> Result<Arc<Self>> {
        let residue = FiniteField::new(p, m)?;
        Self::with_residue(residue, a, prec)
    }

    pub fn with_residue(residue: FiniteField, a: u32, prec: u32) -> Result<Arc<Self>> {
        let p = residue.p();
        let m = residue.degree();
        if a == 0 {
            return Err(Error::InvalidParameter("a must be positive".into()));
        }
        if prec == 0 {
            return Err(Error::InvalidParameter("precision must be positive".into()));
        }
        let mut pow_p = vec![1u64];
        for _ in 0..prec {
            let next = (*pow_p.last().unwrap() as u128) * p as u128;
            if next >= 1u128 << 62 {
                return Err(Error::InvalidParameter(format!("p^N too large for p = {p}, N = {prec}")));
            }
            pow_p.push(next as u64);
        }
        let mut ring = CoeffRing {
            p,
            a,
            m,
            prec,
            modulus: residue.modulus().to_vec(),
            frobenius_image: Vec::new(),
            frob_table: Vec::new(),
            pow_p,
            residue,
        };
        ring.frobenius_image = ring.hensel_frobenius_image();
        let mut table = vec![ring.poly_one()];
        for k in 1..m {
            let prev = table[k - 1].clone();
            table.push(ring.poly_mul(&prev, &ring.frobenius_image, ring.modulus_n()));
        }
        ring.frob_table = table;
        Ok(Arc::new(ring))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    /// `q = p^a`.
    pub fn q(&self) -> u64 {
        self.p.pow(self.a)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn frobenius_image(&self) -> &[u64] {
        &self.frobenius_image
    }

    pub fn residue_field(&self) -> &FiniteField {
        &self.residue
    }

    fn modulus_n(&self) -> u64 {
        self.pow_p[self.prec as usize]
    }

    fn poly_one(&self) -> Vec<u64> {
        let mut v = vec![0; self.m];
        v[0] = 1;
        v
    }

    /// Product in `(Z/md)[x]/(f)`.
    fn poly_mul(&self, a: &[u64], b: &[u64], md: u64) -> Vec<u64> {
        let m = self.m;
        if m == 1 {
            return vec![field::mul_mod(a[0], b[0], md)];
        }
        let md128 = md as u128;
        let mut acc = vec![0u128; 2 * m - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                acc[i + j] = (acc[i + j] + x as u128 * y as u128) % md128;
            }
        }
        for d in (m..2 * m - 1).rev() {
            let c = acc[d];
            if c == 0 {
                continue;
            }
            acc[d] = 0;
            for j in 0..m {
                let sub = c * self.modulus[j] as u128 % md128;
                acc[d - m + j] = (acc[d - m + j] + md128 - sub) % md128;
            }
        }
        acc.truncate(m);
        acc.into_iter().map(|c| c as u64).collect()
    }

    fn poly_sub(&self, a: &[u64], b: &[u64], md: u64) -> Vec<u64> {
        a.iter().zip(b).map(|(&x, &y)| ((x as u128 + md as u128 - y as u128 % md as u128) % md as u128) as u64).collect()
    }

    /// Inverse of a unit of `(Z/p^N)[x]/(f)`, via the residue field and Newton lifting.
    fn poly_unit_inv(&self, u: &[u64]) -> Option<Vec<u64>> {
        let md = self.modulus_n();
        let res: Fq = u.iter().map(|c| c % self.p).collect();
        let inv0 = self.residue.inv(&res)?;
        let mut z: Vec<u64> = inv0;
        let mut known = 1u32;
        let two = {
            let mut t = vec![0; self.m];
            t[0] = 2 % md;
            t
        };
        while known < self.prec {
            let uz = self.poly_mul(u, &z, md);
            z = self.poly_mul(&z, &self.poly_sub(&two, &uz, md), md);
            known *= 2;
        }
        Some(z)
    }

    fn hensel_frobenius_image(&self) -> Vec<u64> {
        let md = self.modulus_n();
        let m = self.m;
        if m == 1 {
            return vec![0];
        }
        let eval = |y: &[u64], coeffs: &[u64]| -> Vec<u64> {
            // Horner over the ring
            let mut acc = vec![0u64; m];
            for &c in coeffs.iter().rev() {
                acc = self.poly_mul(&acc, y, md);
                acc[0] = ((acc[0] as u128 + c as u128) % md as u128) as u64;
            }
            acc
        };
        let deriv: Vec<u64> = self.modulus.iter().enumerate().skip(1).map(|(i, &c)| field::mul_mod(c, i as u64, md)).collect();
        let g = self.residue.generator();
        let mut y: Vec<u64> = self.residue.frobenius(&g, 1);
        let mut known = 1u32;
        while known < self.prec {
            let fy = eval(&y, &self.modulus);
            let dfy = eval(&y, &deriv);
            let inv = self.poly_unit_inv(&dfy).expect("modulus is separable");
            y = self.poly_sub(&y, &self.poly_mul(&fy, &inv, md), md);
            known *= 2;
        }
        y
    }

    fn max_rel(&self, val: i64) -> i64 {
        self.prec as i64 - val.max(0)
    }

    /// Canonical form of `p^val · digits` where `digits` is known modulo `p^rel`.
    fn normalize(&self, mut val: i64, digits: &[u64], rel: i64) -> CoeffElem {
        if rel <= 0 {
            return CoeffElem::zero();
        }
        let rel_u = rel.min(self.prec as i64) as usize;
        let md = self.pow_p[rel_u];
        let mut d: Digits = digits.iter().map(|c| c % md).collect();
        if d.iter().all(|&c| c == 0) {
            return CoeffElem::zero();
        }
        let mut shift = 0i64;
        while d.iter().all(|&c| c % self.p == 0) {
            for c in d.iter_mut() {
                *c /= self.p;
            }
            shift += 1;
        }
        val += shift;
        let rel = (rel_u as i64 - shift).min(self.max_rel(val));
        if rel <= 0 {
            return CoeffElem::zero();
        }
        let md = self.pow_p[rel as usize];
        for c in d.iter_mut() {
            *c %= md;
        }
        CoeffElem { val, rel: rel as u32, unit: d }
    }

    pub fn zero(&self) -> CoeffElem {
        CoeffElem::zero()
    }

    pub fn one(&self) -> CoeffElem {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> CoeffElem {
        if n == 0 {
            return CoeffElem::zero();
        }
        let mut val = 0i64;
        let mut unit = n;
        while unit % self.p as i64 == 0 {
            unit /= self.p as i64;
            val += 1;
        }
        self.from_parts(val, &[unit]).expect("degree 1 unit")
    }

    /// `p^val · Σ unit[k] x^k` with the unit taken at full available precision.
    pub fn from_parts(&self, val: i64, unit: &[i64]) -> Result<CoeffElem> {
        if unit.len() > self.m {
            return Err(Error::InvalidParameter(format!("unit has {} digits, ring degree is {}", unit.len(), self.m)));
        }
        let rel = self.max_rel(val);
        if rel <= 0 {
            return Ok(CoeffElem::zero());
        }
        let md = self.pow_p[rel as usize] as i64;
        let mut d = vec![0u64; self.m];
        for (k, &c) in unit.iter().enumerate() {
            d[k] = c.rem_euclid(md) as u64;
        }
        Ok(self.normalize(val, &d, rel))
    }

    /// `p^k` for any integer `k`.
    pub fn p_power(&self, k: i64) -> CoeffElem {
        self.from_parts(k, &[1]).expect("degree 1 unit")
    }

    /// The image of the generator `x` of `O` over `Z_p`.
    pub fn generator(&self) -> CoeffElem {
        let mut u = vec![0i64; self.m];
        if self.m == 1 {
            return self.zero();
        }
        u[1] = 1;
        self.from_parts(0, &u).unwrap()
    }

    pub fn neg(&self, x: &CoeffElem) -> CoeffElem {
        if x.is_zero() {
            return CoeffElem::zero();
        }
        let md = self.pow_p[x.rel as usize];
        let unit = x.unit.iter().map(|&c| (md - c) % md).collect();
        CoeffElem { val: x.val, rel: x.rel, unit }
    }

    pub fn add(&self, x: &CoeffElem, y: &CoeffElem) -> CoeffElem {
        if x.is_zero() {
            return y.clone();
        }
        if y.is_zero() {
            return x.clone();
        }
        let v = x.val.min(y.val);
        let abs = (x.val + x.rel as i64).min(y.val + y.rel as i64).min(self.prec as i64);
        let work = abs - v;
        if work <= 0 {
            return CoeffElem::zero();
        }
        let md = self.pow_p[work.min(self.prec as i64) as usize] as u128;
        let mut d: Digits = SmallVec::from_elem(0, self.m);
        for (el, shift) in [(x, x.val - v), (y, y.val - v)] {
            if shift >= work {
                continue;
            }
            let f = self.pow_p[shift as usize] as u128;
            for (k, &c) in el.unit.iter().enumerate() {
                d[k] = ((d[k] as u128 + c as u128 * f) % md) as u64;
            }
        }
        self.normalize(v, &d, work)
    }

    pub fn sub(&self, x: &CoeffElem, y: &CoeffElem) -> CoeffElem {
        self.add(x, &self.neg(y))
    }

    pub fn mul(&self, x: &CoeffElem, y: &CoeffElem) -> CoeffElem {
        if x.is_zero() || y.is_zero() {
            return CoeffElem::zero();
        }
        let val = x.val + y.val;
        let rel = (x.rel.min(y.rel) as i64).min(self.max_rel(val));
        if rel <= 0 {
            return CoeffElem::zero();
        }
        let md = self.pow_p[rel as usize];
        let d = self.poly_mul(&x.unit, &y.unit, md);
        self.normalize(val, &d, rel)
    }

    pub fn inv(&self, x: &CoeffElem) -> Result<CoeffElem> {
        if x.is_zero() {
            return Err(Error::NotInvertible);
        }
        let inv = self.poly_unit_inv(&x.unit).ok_or(Error::NotInvertible)?;
        let val = -x.val;
        Ok(self.normalize(val, &inv, x.rel as i64))
    }

    pub fn div(&self, x: &CoeffElem, y: &CoeffElem) -> Result<CoeffElem> {
        Ok(self.mul(x, &self.inv(y)?))
    }

    /// Multiplication by an integer.
    pub fn scale(&self, n: i64, x: &CoeffElem) -> CoeffElem {
        self.mul(&self.from_int(n), x)
    }

    /// `σ₀^power(x)`; `power = a` gives `σ`.
    pub fn frobenius(&self, x: &CoeffElem, power: u32) -> CoeffElem {
        if x.is_zero() || self.m == 1 {
            return x.clone();
        }
        let steps = power as usize % self.m;
        let mut cur = x.clone();
        for _ in 0..steps {
            let md = self.pow_p[cur.rel as usize] as u128;
            let mut d: Digits = SmallVec::from_elem(0, self.m);
            for (k, &c) in cur.unit.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for (j, &t) in self.frob_table[k].iter().enumerate() {
                    d[j] = ((d[j] as u128 + c as u128 * (t as u128 % md)) % md) as u64;
                }
            }
            cur = self.normalize(cur.val, &d, cur.rel as i64);
        }
        cur
    }

    /// `σ = σ₀^a`.
    pub fn sigma(&self, x: &CoeffElem) -> CoeffElem {
        self.frobenius(x, self.a)
    }

    pub fn eq_at_precision(&self, x: &CoeffElem, y: &CoeffElem) -> bool {
        self.sub(x, y).is_zero()
    }

    /// Reduction modulo `p` of an integral element.
    pub fn residue(&self, x: &CoeffElem) -> Result<Fq> {
        if x.is_zero() || x.val > 0 {
            return Ok(self.residue.zero());
        }
        if x.val < 0 {
            return Err(Error::Precondition("residue of a non-integral element".into()));
        }
        Ok(x.unit.iter().map(|c| c % self.p).collect())
    }

    /// Lift of a residue-field element by its coordinates in `[0, p)`.
    pub fn lift(&self, r: &Fq) -> CoeffElem {
        let u: Vec<i64> = r.iter().map(|&c| c as i64).collect();
        self.from_parts(0, &u).expect("residue has ring degree")
    }

    /// Element `Σ p^val·unit` with `unit` a random unit and `val` in `0..=max_val`.
    pub fn random_integral<R: Rng + ?Sized>(&self, rng: &mut R, max_val: i64) -> CoeffElem {
        let val = rng.gen_range(0..=max_val);
        self.random_with_val(rng, val)
    }

    pub fn random_with_val<R: Rng + ?Sized>(&self, rng: &mut R, val: i64) -> CoeffElem {
        let rel = self.max_rel(val);
        if rel <= 0 {
            return CoeffElem::zero();
        }
        let md = self.pow_p[rel as usize];
        loop {
            let d: Vec<u64> = (0..self.m).map(|_| rng.gen_range(0..md)).collect();
            if d.iter().any(|c| c % self.p != 0) {
                return self.normalize(val, &d, rel);
            }
        }
    }

    /// Unit with a representative in `[0, p)` for each coordinate: a lift of a
    /// random nonzero residue.
    pub fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> CoeffElem {
        self.random_with_val(rng, 0)
    }
}

impl CoeffElem {
    pub fn zero() -> Self {
        CoeffElem { val: i64::MAX, rel: 0, unit: SmallVec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.rel == 0
    }

    /// `v_p`, with `None` standing for `+∞`.
    pub fn vp(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Relative precision: number of known p-digits of the unit.
    pub fn rel_precision(&self) -> u32 {
        self.rel
    }

    /// Unit digits, each known modulo `p^rel`.
    pub fn unit(&self) -> &[u64] {
        &self.unit
    }

    pub fn is_integral(&self) -> bool {
        self.is_zero() || self.val >= 0
    }
}

impl fmt::Display for CoeffElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let digits: Vec<String> = self.unit.iter().map(|c| c.to_string()).collect();
        if self.val == 0 {
            write!(f, "[{}]", digits.join(","))
        } else {
            write!(f, "p^{}*[{}]", self.val, digits.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(m: usize) -> Arc<CoeffRing> {
        CoeffRing::new(5, 1, m, 12).unwrap()
    }

    #[test]
    fn unit_inverse_mod_p_n() {
        let r = ring(1);
        let two = r.from_int(2);
        let inv = r.inv(&two).unwrap();
        assert_eq!(r.mul(&two, &inv), r.one());
        assert_eq!(inv.vp(), Some(0));
    }

    #[test]
    fn additive_inverse_is_zero_sentinel() {
        let r = ring(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = r.random_integral(&mut rng, 3);
        let s = r.add(&x, &r.neg(&x));
        assert!(s.is_zero());
        assert_eq!(s.vp(), None);
    }

    #[test]
    fn inverting_zero_fails() {
        let r = ring(1);
        assert_eq!(r.inv(&r.zero()), Err(Error::NotInvertible));
        // p^12 is below the absolute cap
        assert!(r.p_power(12).is_zero());
    }

    #[test]
    fn integers_carry_valuation() {
        let r = ring(1);
        assert_eq!(r.from_int(250).vp(), Some(3));
        assert_eq!(r.from_int(-7).vp(), Some(0));
        assert_eq!(r.mul(&r.p_power(3), &r.one()).vp(), Some(3));
        assert_eq!(r.p_power(-2).vp(), Some(-2));
    }

    #[test]
    fn negative_valuation_roundtrip() {
        let r = ring(1);
        let x = r.p_power(-3);
        let y = r.mul(&x, &r.p_power(3));
        assert!(r.eq_at_precision(&y, &r.one()));
        // p^3 is only known modulo p^12, so nine digits survive
        assert_eq!(y.rel_precision(), 9);
        let sum = r.add(&x, &r.one());
        assert_eq!(sum.vp(), Some(-3));
    }

    #[test]
    fn cancellation_loses_relative_precision() {
        let r = ring(1);
        let a = r.from_int(1 + 125);
        let b = r.one();
        let d = r.sub(&a, &b);
        assert_eq!(d.vp(), Some(3));
        assert_eq!(d.rel_precision(), 9);
    }

    #[test]
    fn frobenius_is_identity_on_zp() {
        let r = ring(1);
        let x = r.from_int(17);
        assert_eq!(r.frobenius(&x, 3), x);
    }

    #[test]
    fn frobenius_reduces_to_pth_power() {
        let r = ring(2);
        let g = r.generator();
        let s = r.frobenius(&g, 1);
        let res = r.residue(&s).unwrap();
        let f = r.residue_field();
        assert_eq!(res, f.pow(&f.generator(), 5));
    }

    #[test]
    fn frobenius_image_satisfies_modulus() {
        let r = ring(4);
        // f(σ₀(x)) = σ₀(f(x)) = 0 at full precision
        let y = r.frobenius(&r.generator(), 1);
        let mut acc = r.zero();
        for (k, &c) in r.modulus().iter().enumerate().rev() {
            acc = r.add(&r.mul(&acc, &y), &r.from_int(c as i64));
            let _ = k;
        }
        assert!(acc.is_zero());
    }
}
