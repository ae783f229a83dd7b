//! Prime fields, polynomials over them, and the finite fields `F_{p^k}`.
//!
//! Extension fields are presented as `F_p[x]/(f)` for the lexicographically
//! first monic irreducible `f` of the requested degree. The same modulus is
//! lifted verbatim to build the unramified coefficient rings in [`crate::coeff`],
//! so a residue field element and the reduction of a coefficient share one
//! coordinate system.

use crate::error::{Error, Result};

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo a prime `p`; `None` when `a ≡ 0`.
pub(crate) fn inv_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        None
    } else {
        Some(pow_mod(a, p - 2, p))
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Dense polynomials over `F_p`, lowest degree first, no trailing zeros.
pub mod fp_poly {
    use super::{inv_mod_prime, mul_mod};

    pub fn trim(mut a: Vec<u64>) -> Vec<u64> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let out = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(out)
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + mul_mod(x, y, p)) % p;
            }
        }
        trim(out)
    }

    /// Remainder of `a` modulo a nonzero `b`.
    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let b = trim(b.to_vec());
        let mut r = trim(a.to_vec());
        let lead_inv = inv_mod_prime(*b.last().expect("division by zero polynomial"), p).unwrap();
        while r.len() >= b.len() {
            let shift = r.len() - b.len();
            let c = mul_mod(*r.last().unwrap(), lead_inv, p);
            for (j, &bj) in b.iter().enumerate() {
                r[shift + j] = (r[shift + j] + p - mul_mod(c, bj, p)) % p;
            }
            r = trim(r);
        }
        r
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        if let Some(&lead) = a.last() {
            let inv = inv_mod_prime(lead, p).unwrap();
            for c in a.iter_mut() {
                *c = mul_mod(*c, inv, p);
            }
        }
        a
    }

    pub fn mul_rem(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
        rem(&mul(a, b, p), f, p)
    }

    /// `x^(p^k) mod f` by repeated p-th powering.
    pub fn x_pow_p_iter(f: &[u64], p: u64, k: usize) -> Vec<u64> {
        let mut cur = rem(&[0, 1], f, p);
        for _ in 0..k {
            cur = pow_rem(&cur, p, f, p);
        }
        cur
    }

    /// Inverse of `a` modulo `f`, if they are coprime.
    pub fn inv_rem(a: &[u64], f: &[u64], p: u64) -> Option<Vec<u64>> {
        // invariant: s·a ≡ r (mod f)
        let (mut r0, mut r1) = (trim(f.to_vec()), rem(a, f, p));
        let (mut s0, mut s1): (Vec<u64>, Vec<u64>) = (Vec::new(), vec![1]);
        while !r1.is_empty() {
            let (qt, r) = div_rem(&r0, &r1, p);
            let s = sub(&s0, &mul(&qt, &s1, p), p);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        if r0.len() != 1 {
            return None;
        }
        let c = inv_mod_prime(r0[0], p)?;
        Some(rem(&s0.iter().map(|&x| mul_mod(x, c, p)).collect::<Vec<_>>(), f, p))
    }

    fn div_rem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        let lead_inv = inv_mod_prime(*b.last().unwrap(), p).unwrap();
        let mut r = trim(a.to_vec());
        let mut qt = vec![0u64; r.len().saturating_sub(b.len()) + 1];
        while r.len() >= b.len() {
            let shift = r.len() - b.len();
            let c = mul_mod(*r.last().unwrap(), lead_inv, p);
            qt[shift] = c;
            for (j, &bj) in b.iter().enumerate() {
                r[shift + j] = (r[shift + j] + p - mul_mod(c, bj, p)) % p;
            }
            r = trim(r);
        }
        (trim(qt), r)
    }

    pub fn pow_rem(a: &[u64], mut e: u64, f: &[u64], p: u64) -> Vec<u64> {
        let mut acc = rem(&[1], f, p);
        let mut base = rem(a, f, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_rem(&acc, &base, f, p);
            }
            base = mul_rem(&base, &base, f, p);
            e >>= 1;
        }
        acc
    }
}

/// Irreducibility of a monic `f` of degree `k` over `F_p`: no factor of degree
/// `i ≤ k/2`, i.e. `gcd(x^(p^i) − x, f) = 1`. Small factors are found first, so
/// most reducible inputs are rejected after a few powerings.
pub fn is_irreducible(f: &[u64], p: u64) -> bool {
    let f = fp_poly::trim(f.to_vec());
    if f.len() < 2 {
        return false;
    }
    let k = f.len() - 1;
    let x = vec![0, 1];
    let mut h = fp_poly::rem(&x, &f, p);
    for _ in 0..k / 2 {
        h = fp_poly::pow_rem(&h, p, &f, p);
        if fp_poly::gcd(&fp_poly::sub(&h, &x, p), &f, p).len() != 1 {
            return false;
        }
    }
    true
}

/// First monic irreducible of degree `k` over `F_p` in lexicographic order of
/// its low coefficients. Returned with the leading `1` included.
pub fn find_irreducible(p: u64, k: usize) -> Vec<u64> {
    assert!(k >= 1);
    if k == 1 {
        return vec![0, 1];
    }
    let mut low = vec![0u64; k];
    loop {
        let mut f = low.clone();
        f.push(1);
        if f[0] != 0 && is_irreducible(&f, p) {
            return f;
        }
        // odometer increment
        let mut i = 0;
        loop {
            low[i] += 1;
            if low[i] < p {
                break;
            }
            low[i] = 0;
            i += 1;
            assert!(i < k, "no irreducible polynomial found");
        }
    }
}

/// The finite field `F_{p^k} = F_p[x]/(modulus)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteField {
    p: u64,
    k: usize,
    /// Monic, leading coefficient included.
    modulus: Vec<u64>,
}

/// Element of a [`FiniteField`]: exactly `k` coordinates in `[0, p)`.
pub type Fq = Vec<u64>;

impl FiniteField {
    pub fn new(p: u64, k: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("extension degree must be >= 1".into()));
        }
        Ok(Self { p, k, modulus: find_irreducible(p, k) })
    }

    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<Self> {
        if !is_irreducible(&modulus, p) || modulus.last() != Some(&1) {
            return Err(Error::InvalidParameter("modulus is not monic irreducible mod p".into()));
        }
        Ok(Self { p, k: modulus.len() - 1, modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// `p^k`, saturating at `u128::MAX`.
    pub fn order(&self) -> u128 {
        (self.p as u128).checked_pow(self.k as u32).unwrap_or(u128::MAX)
    }

    pub fn zero(&self) -> Fq {
        vec![0; self.k]
    }

    pub fn one(&self) -> Fq {
        self.from_prime(1)
    }

    pub fn from_prime(&self, c: u64) -> Fq {
        let mut v = self.zero();
        v[0] = c % self.p;
        v
    }

    /// The class of `x`.
    pub fn generator(&self) -> Fq {
        let mut v = self.zero();
        if self.k == 1 {
            v[0] = (self.p - self.modulus[0]) % self.p;
        } else {
            v[1] = 1;
        }
        v
    }

    pub fn is_zero(&self, a: &Fq) -> bool {
        a.iter().all(|&c| c == 0)
    }

    fn pad(&self, mut v: Vec<u64>) -> Fq {
        v.resize(self.k, 0);
        v
    }

    pub fn add(&self, a: &Fq, b: &Fq) -> Fq {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub fn sub(&self, a: &Fq, b: &Fq) -> Fq {
        a.iter().zip(b).map(|(x, y)| (x + self.p - y) % self.p).collect()
    }

    pub fn neg(&self, a: &Fq) -> Fq {
        a.iter().map(|x| (self.p - x) % self.p).collect()
    }

    pub fn scale(&self, c: u64, a: &Fq) -> Fq {
        a.iter().map(|&x| mul_mod(c, x, self.p)).collect()
    }

    pub fn mul(&self, a: &Fq, b: &Fq) -> Fq {
        self.pad(fp_poly::mul_rem(a, b, &self.modulus, self.p))
    }

    pub fn pow(&self, a: &Fq, e: u128) -> Fq {
        let mut acc = self.one();
        let mut base = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: &Fq) -> Option<Fq> {
        if self.is_zero(a) {
            None
        } else {
            fp_poly::inv_rem(a, &self.modulus, self.p).map(|v| self.pad(v))
        }
    }

    /// `a^(p^e)`.
    pub fn frobenius(&self, a: &Fq, e: u32) -> Fq {
        let mut out = a.clone();
        for _ in 0..e {
            out = self.pow(&out, self.p as u128);
        }
        out
    }

    /// Matrix over `F_p` (row-major, `k × k`) of the `F_p`-linear map `a ↦ a^(p^e)`
    /// in the monomial basis: column `j` holds the image of `x^j`.
    pub fn frobenius_matrix(&self, e: u32) -> Vec<Vec<u64>> {
        let mut m = vec![vec![0u64; self.k]; self.k];
        for j in 0..self.k {
            let mut basis = self.zero();
            basis[j] = 1;
            let img = self.frobenius(&basis, e);
            for i in 0..self.k {
                m[i][j] = img[i];
            }
        }
        m
    }

    /// Matrix of `a ↦ c·a`.
    pub fn mul_matrix(&self, c: &Fq) -> Vec<Vec<u64>> {
        let mut m = vec![vec![0u64; self.k]; self.k];
        for j in 0..self.k {
            let mut basis = self.zero();
            basis[j] = 1;
            let img = self.mul(c, &basis);
            for i in 0..self.k {
                m[i][j] = img[i];
            }
        }
        m
    }

    /// Every element, in lexicographic coordinate order. Only sensible for small fields.
    pub fn elements(&self) -> impl Iterator<Item = Fq> + '_ {
        let total = self.order();
        (0..total).map(move |mut idx| {
            let mut v = self.zero();
            for c in v.iter_mut() {
                *c = (idx % self.p as u128) as u64;
                idx /= self.p as u128;
            }
            v
        })
    }
}

/// Linear algebra over `F_p` on dense row-major matrices.
pub mod fp_linalg {
    use super::{inv_mod_prime, mul_mod};

    /// Basis of the kernel of `a` (rows × cols), as column vectors.
    pub fn kernel(a: &[Vec<u64>], cols: usize, p: u64) -> Vec<Vec<u64>> {
        let mut m: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..cols {
            let Some(sel) = (row..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(row, sel);
            clear_column(&mut m, row, col, p);
            pivots.push(col);
            row += 1;
            if row == m.len() {
                break;
            }
        }
        let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![0u64; cols];
                v[f] = 1;
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = (p - m[r][f]) % p;
                }
                v
            })
            .collect()
    }

    /// Scales row `row` to a unit pivot at `col` and clears `col` in every other row.
    fn clear_column(m: &mut [Vec<u64>], row: usize, col: usize, p: u64) {
        let inv = inv_mod_prime(m[row][col], p).unwrap();
        for x in m[row].iter_mut() {
            *x = mul_mod(*x, inv, p);
        }
        let pivot = m[row].clone();
        for (r, line) in m.iter_mut().enumerate() {
            if r != row && line[col] != 0 {
                let f = line[col];
                for (x, &y) in line.iter_mut().zip(&pivot) {
                    *x = (*x + p - mul_mod(f, y, p)) % p;
                }
            }
        }
    }

    /// One solution of `a·x = b`, if any.
    pub fn solve(a: &[Vec<u64>], b: &[u64], cols: usize, p: u64) -> Option<Vec<u64>> {
        let rows = a.len();
        let mut m: Vec<Vec<u64>> = a
            .iter()
            .zip(b)
            .map(|(r, &bi)| {
                let mut row: Vec<u64> = r.iter().map(|x| x % p).collect();
                row.push(bi % p);
                row
            })
            .collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..cols {
            let Some(sel) = (row..rows).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(row, sel);
            clear_column(&mut m, row, col, p);
            pivots.push(col);
            row += 1;
            if row == rows {
                break;
            }
        }
        if m[row..].iter().any(|r| r[cols] != 0) {
            return None;
        }
        let mut x = vec![0u64; cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = m[r][cols];
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irreducible_search_small_cases() {
        assert_eq!(find_irreducible(5, 1), vec![0, 1]);
        // x^2 + 2 is the first: x^2+1 = (x-2)(x-3) mod 5
        assert_eq!(find_irreducible(5, 2), vec![2, 0, 1]);
        let f = find_irreducible(5, 4);
        assert!(is_irreducible(&f, 5));
        assert!(!is_irreducible(&[1, 0, 1], 5));
        assert!(is_irreducible(&[1, 1, 1], 2));
    }

    #[test]
    fn multiplicative_group_order() {
        let f = FiniteField::new(5, 3).unwrap();
        let g = f.generator();
        assert_eq!(f.pow(&g, 124), f.one());
        let inv = f.inv(&g).unwrap();
        assert_eq!(f.mul(&g, &inv), f.one());
    }

    #[test]
    fn frobenius_has_order_k() {
        let f = FiniteField::new(7, 3).unwrap();
        let g = f.generator();
        assert_ne!(f.frobenius(&g, 1), g);
        assert_eq!(f.frobenius(&g, 3), g);
    }

    #[test]
    fn kernel_of_rank_one() {
        let a = vec![vec![1, 2, 3]];
        let ker = fp_linalg::kernel(&a, 3, 5);
        assert_eq!(ker.len(), 2);
        for v in ker {
            assert_eq!((v[0] + 2 * v[1] + 3 * v[2]) % 5, 0);
        }
    }
}
