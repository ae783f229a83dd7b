use std::fmt;

use crate::error::{Error, Result};
use crate::field::{fp_linalg, FiniteField, Fq};

/// `n × n` matrix over `F_{p^k}[[t]]`, truncated after `t^T`.
///
/// Stored as one dense row-major matrix per power of `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueMatrix {
    field: FiniteField,
    n: usize,
    coeffs: Vec<Vec<Fq>>,
}

impl ResidueMatrix {
    pub fn zero(field: &FiniteField, n: usize, t: usize) -> Self {
        let z = vec![field.zero(); n * n];
        ResidueMatrix { field: field.clone(), n, coeffs: vec![z; t + 1] }
    }

    pub fn identity(field: &FiniteField, n: usize, t: usize) -> Self {
        let mut m = Self::zero(field, n, t);
        for i in 0..n {
            m.coeffs[0][i * n + i] = field.one();
        }
        m
    }

    /// Matrix whose `(i, k)` entry at `t^j` is `f(j, i, k)`.
    pub fn from_fn(field: &FiniteField, n: usize, t: usize, mut f: impl FnMut(usize, usize, usize) -> Fq) -> Self {
        let mut m = Self::zero(field, n, t);
        for j in 0..=t {
            for i in 0..n {
                for k in 0..n {
                    m.coeffs[j][i * n + k] = f(j, i, k);
                }
            }
        }
        m
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Truncation degree `T`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn get(&self, j: usize, i: usize, k: usize) -> &Fq {
        &self.coeffs[j][i * self.n + k]
    }

    pub fn set(&mut self, j: usize, i: usize, k: usize, x: Fq) {
        self.coeffs[j][i * self.n + k] = x;
    }

    /// Constant matrix `X(0)`, row-major.
    pub fn constant_term(&self) -> &[Fq] {
        &self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|x| self.field.is_zero(x))
    }

    /// Same entries read in the larger field `F_{p^K}`. Only entries of the prime
    /// field embed canonically, so the source must be `F_p` or `target` itself.
    pub fn embed(&self, target: &FiniteField) -> Result<Self> {
        if &self.field == target {
            return Ok(self.clone());
        }
        if self.field.degree() != 1 || self.field.p() != target.p() {
            return Err(Error::InvalidParameter(format!(
                "cannot embed F_{}^{} into F_{}^{}",
                self.field.p(),
                self.field.degree(),
                target.p(),
                target.degree()
            )));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.iter().map(|x| target.from_prime(x[0])).collect())
            .collect();
        Ok(ResidueMatrix { field: target.clone(), n: self.n, coeffs })
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.field != other.field || self.n != other.n || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::Dimension("residue matrices differ in field, size or degree".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let f = &self.field;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f.add(x, y)).collect())
            .collect();
        Ok(ResidueMatrix { field: f.clone(), n: self.n, coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let f = &self.field;
        let coeffs = self.coeffs.iter().map(|a| a.iter().map(|x| f.neg(x)).collect()).collect();
        ResidueMatrix { field: f.clone(), n: self.n, coeffs }
    }

    /// Product truncated after `t^T`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let t = self.degree();
        let mut out = Self::zero(&self.field, self.n, t);
        for a in 0..=t {
            if self.coeffs[a].iter().all(|x| self.field.is_zero(x)) {
                continue;
            }
            for b in 0..=t - a {
                let prod = mat_mul(&self.field, self.n, &self.coeffs[a], &other.coeffs[b]);
                mat_add_into(&self.field, &mut out.coeffs[a + b], &prod);
            }
        }
        Ok(out)
    }

    /// Coefficientwise `x ↦ x^q`, `q = p^a`.
    pub fn frobenius(&self, a: u32) -> Self {
        let f = &self.field;
        let coeffs = self.coeffs.iter().map(|c| c.iter().map(|x| f.frobenius(x, a)).collect()).collect();
        ResidueMatrix { field: f.clone(), n: self.n, coeffs }
    }

    /// `X^τ`: coefficientwise `q`-th power composed with `t ↦ t^q`.
    pub fn tau(&self, a: u32) -> Self {
        let q = self.field.p().pow(a) as usize;
        let t = self.degree();
        let mut out = Self::zero(&self.field, self.n, t);
        for j in (0..=t).step_by(q) {
            out.coeffs[j] = self.coeffs[j / q].iter().map(|x| self.field.frobenius(x, a)).collect();
        }
        out
    }

    pub fn is_invertible(&self) -> bool {
        mat_det(&self.field, self.n, &self.coeffs[0]).is_some_and(|d| !self.field.is_zero(&d))
    }
}

impl fmt::Display for ResidueMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|k| {
                    let terms: Vec<String> = (0..self.coeffs.len())
                        .filter(|&j| !self.field.is_zero(self.get(j, i, k)))
                        .map(|j| format!("{:?}t^{j}", self.get(j, i, k)))
                        .collect();
                    if terms.is_empty() {
                        "0".into()
                    } else {
                        terms.join(" + ")
                    }
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

pub(crate) fn mat_mul(f: &FiniteField, n: usize, a: &[Fq], b: &[Fq]) -> Vec<Fq> {
    let mut out = vec![f.zero(); n * n];
    for i in 0..n {
        for l in 0..n {
            let x = &a[i * n + l];
            if f.is_zero(x) {
                continue;
            }
            for k in 0..n {
                let y = &b[l * n + k];
                if !f.is_zero(y) {
                    out[i * n + k] = f.add(&out[i * n + k], &f.mul(x, y));
                }
            }
        }
    }
    out
}

fn mat_add_into(f: &FiniteField, acc: &mut [Fq], b: &[Fq]) {
    for (x, y) in acc.iter_mut().zip(b) {
        *x = f.add(x, y);
    }
}

/// Determinant by elimination; `None` only for an empty matrix.
pub(crate) fn mat_det(f: &FiniteField, n: usize, a: &[Fq]) -> Option<Fq> {
    if n == 0 {
        return None;
    }
    let mut m: Vec<Fq> = a.to_vec();
    let mut det = f.one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !f.is_zero(&m[r * n + col])) else {
            return Some(f.zero());
        };
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            det = f.neg(&det);
        }
        let pv = m[col * n + col].clone();
        det = f.mul(&det, &pv);
        let inv = f.inv(&pv).expect("nonzero pivot");
        for r in col + 1..n {
            let factor = f.mul(&m[r * n + col], &inv);
            if f.is_zero(&factor) {
                continue;
            }
            for k in col..n {
                let s = f.mul(&factor, &m[col * n + k]);
                m[r * n + k] = f.sub(&m[r * n + k], &s);
            }
        }
    }
    Some(det)
}

/// Cap on candidates tried when searching a fixed space for an invertible point.
pub const MAX_CANDIDATES: usize = 1 << 16;

/// Prime-field coordinates of a matrix over `F_{p^k}`: entry-major, then field
/// coordinate.
fn to_coords(x: &[Fq]) -> Vec<u64> {
    x.iter().flatten().copied().collect()
}

fn from_coords(f: &FiniteField, n: usize, v: &[u64]) -> Vec<Fq> {
    let k = f.degree();
    (0..n * n).map(|e| v[e * k..(e + 1) * k].to_vec()).collect()
}

/// Invertible `X` over `f` with `X = B₀·X^{(q)}`, searched deterministically: the
/// identity if it qualifies, then `F_p`-combinations of a kernel basis in
/// lexicographic order of their coordinates.
fn lang_constant(f: &FiniteField, n: usize, b0: &[Fq], a: u32) -> Option<Vec<Fq>> {
    let p = f.p();
    let k = f.degree();
    let dim = n * n * k;
    let apply = |x: &[Fq]| -> Vec<Fq> {
        let xq: Vec<Fq> = x.iter().map(|e| f.frobenius(e, a)).collect();
        let bx = mat_mul(f, n, b0, &xq);
        bx.iter().zip(x).map(|(u, v)| f.sub(u, v)).collect()
    };
    let mut cols = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut v = vec![0u64; dim];
        v[c] = 1;
        cols.push(to_coords(&apply(&from_coords(f, n, &v))));
    }
    let rows: Vec<Vec<u64>> = (0..dim).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    let basis = fp_linalg::kernel(&rows, dim, p);
    if basis.is_empty() {
        return None;
    }
    let mut id = vec![f.zero(); n * n];
    for i in 0..n {
        id[i * n + i] = f.one();
    }
    if apply(&id).iter().all(|x| f.is_zero(x)) {
        return Some(id);
    }
    let s = basis.len();
    let total = (p as u128).checked_pow(s as u32).unwrap_or(u128::MAX);
    let limit = total.min(MAX_CANDIDATES as u128 + 1);
    for idx in 1..limit {
        // first basis vector is the most significant digit
        let mut coef = vec![0u64; s];
        let mut rest = idx;
        for c in coef.iter_mut().rev() {
            *c = (rest % p as u128) as u64;
            rest /= p as u128;
        }
        let mut v = vec![0u64; dim];
        for (c, b) in coef.iter().zip(&basis) {
            if *c == 0 {
                continue;
            }
            for (x, y) in v.iter_mut().zip(b) {
                *x = (*x + c * y) % p;
            }
        }
        let x = from_coords(f, n, &v);
        if mat_det(f, n, &x).is_some_and(|d| !f.is_zero(&d)) {
            return Some(x);
        }
    }
    None
}

/// Necessary condition for `X = B₀·X^{(q)}` to have an invertible solution over
/// `F_{p^m}` when `B₀` is defined over `F_p`: iterating the equation `j` times,
/// with `q^j` acting trivially on `F_{p^m}`, gives `B₀^j = I`. It is also
/// sufficient, so degrees failing it are skipped without a kernel computation.
pub(crate) fn lang_degree_admissible(b: &ResidueMatrix, a: u32, m: usize) -> bool {
    let f = b.field();
    let n = b.n();
    let g = gcd(a as usize, m);
    let j = m / g;
    let mut acc = ResidueMatrix::identity(f, n, 0).coeffs.swap_remove(0);
    for _ in 0..j {
        acc = mat_mul(f, n, &acc, b.constant_term());
    }
    acc == ResidueMatrix::identity(f, n, 0).coeffs[0]
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Solves `D = B·D^τ` over the field of `b`, or `None` if the constant term has
/// no invertible solution there.
pub(crate) fn lang_in_field(b: &ResidueMatrix, a: u32) -> Option<ResidueMatrix> {
    let f = b.field();
    let n = b.n();
    let t = b.degree();
    let q = f.p().pow(a) as usize;
    let d0 = lang_constant(f, n, b.constant_term(), a)?;
    let mut d = ResidueMatrix::zero(f, n, t);
    d.coeffs[0] = d0;
    // D_j = Σ_{i + q·l = j} B_i·(D_l)^{(q)}, with l < j for j ≥ 1
    let mut frob: Vec<Vec<Fq>> = vec![d.coeffs[0].iter().map(|x| f.frobenius(x, a)).collect()];
    for j in 1..=t {
        let mut acc = vec![f.zero(); n * n];
        for (l, fl) in frob.iter().enumerate().take(j / q + 1) {
            let prod = mat_mul(f, n, &b.coeffs[j - q * l], fl);
            mat_add_into(f, &mut acc, &prod);
        }
        frob.push(acc.iter().map(|x| f.frobenius(x, a)).collect());
        d.coeffs[j] = acc;
    }
    Some(d)
}

/// Solves `D^τ − D = B` over the field of `b`, or `None` if some constant entry
/// has no Artin–Schreier root there.
pub(crate) fn artin_schreier_in_field(b: &ResidueMatrix, a: u32) -> Option<ResidueMatrix> {
    let f = b.field();
    let n = b.n();
    let t = b.degree();
    let p = f.p();
    let k = f.degree();
    let q = p.pow(a) as usize;
    // x ↦ x^q − x on prime-field coordinates
    let mut op = f.frobenius_matrix(a);
    for (i, row) in op.iter_mut().enumerate() {
        row[i] = (row[i] + p - 1) % p;
    }
    let mut d = ResidueMatrix::zero(f, n, t);
    for e in 0..n * n {
        d.coeffs[0][e] = fp_linalg::solve(&op, &b.coeffs[0][e], k, p)?;
    }
    for j in 1..=t {
        for e in 0..n * n {
            let mut x = f.neg(&b.coeffs[j][e]);
            if j % q == 0 {
                x = f.add(&x, &f.frobenius(&d.coeffs[j / q][e], a));
            }
            d.coeffs[j][e] = x;
        }
    }
    Some(d)
}

fn verify_lang(b: &ResidueMatrix, d: &ResidueMatrix, a: u32) -> Result<bool> {
    Ok(b.mul(&d.tau(a))? == *d && d.is_invertible())
}

fn verify_artin_schreier(b: &ResidueMatrix, d: &ResidueMatrix, a: u32) -> Result<bool> {
    Ok(d.tau(a).sub(d)? == *b)
}

fn check_base(b: &ResidueMatrix) -> Result<()> {
    if b.field().degree() != 1 {
        return Err(Error::InvalidParameter("residue equations must be given over the prime field".into()));
    }
    Ok(())
}

/// Invertible `D` over the smallest `F_{p^m}`, `m ≤ max_m`, with `D = B·D^τ` to
/// the truncation degree of `B`. `τ` raises coefficients to the `q = p^a` power
/// and sends `t ↦ t^q`.
pub fn solve_lang_mult(b: &ResidueMatrix, a: u32, max_m: usize) -> Result<(usize, ResidueMatrix)> {
    check_base(b)?;
    if !b.is_invertible() {
        return Err(Error::Precondition("B(0) is not invertible".into()));
    }
    for m in 1..=max_m {
        if !lang_degree_admissible(b, a, m) {
            continue;
        }
        let f = FiniteField::new(b.field().p(), m)?;
        let bm = b.embed(&f)?;
        if let Some(d) = lang_in_field(&bm, a) {
            if !verify_lang(&bm, &d, a)? {
                return Err(Error::Precondition(format!("Lang solution over F_{}^{m} fails substitution", f.p())));
            }
            return Ok((m, d));
        }
    }
    Err(Error::NoSolution { bound: max_m, detail: "no invertible fixed point of X -> B(0) X^(q)".into() })
}

/// `D` over the smallest `F_{p^m}`, `m ≤ max_m`, with `D^τ − D = B` to the
/// truncation degree of `B`.
pub fn solve_artin_schreier(b: &ResidueMatrix, a: u32, max_m: usize) -> Result<(usize, ResidueMatrix)> {
    check_base(b)?;
    for m in 1..=max_m {
        let f = FiniteField::new(b.field().p(), m)?;
        let bm = b.embed(&f)?;
        if let Some(d) = artin_schreier_in_field(&bm, a) {
            if !verify_artin_schreier(&bm, &d, a)? {
                return Err(Error::Precondition(format!(
                    "Artin-Schreier solution over F_{}^{m} fails substitution",
                    f.p()
                )));
            }
            return Ok((m, d));
        }
    }
    Err(Error::NoSolution { bound: max_m, detail: "x^q - x = b has no root for some constant entry".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f5() -> FiniteField {
        FiniteField::new(5, 1).unwrap()
    }

    fn scalar(f: &FiniteField, c: u64, t: usize) -> ResidueMatrix {
        ResidueMatrix::from_fn(f, 1, t, |j, _, _| if j == 0 { f.from_prime(c) } else { f.zero() })
    }

    /// Smallest `m` such that `x^e = c` has a root in `F_{p^m}`, by listing the field.
    fn brute_root_degree(p: u64, e: u128, c: u64, max_m: usize) -> Option<usize> {
        (1..=max_m).find(|&m| {
            let f = FiniteField::new(p, m).unwrap();
            let target = f.from_prime(c);
            let found = f.elements().any(|x| f.pow(&x, e) == target);
            found
        })
    }

    /// Smallest `m` such that `x^q − x = c` has a root in `F_{p^m}`, by listing the field.
    fn brute_as_degree(p: u64, c: u64, max_m: usize) -> Option<usize> {
        (1..=max_m).find(|&m| {
            let f = FiniteField::new(p, m).unwrap();
            let target = f.from_prime(c);
            let found = f.elements().any(|x| f.sub(&f.pow(&x, p as u128), &x) == target);
            found
        })
    }

    #[test]
    fn identity_is_its_own_fixed_point() {
        let f = f5();
        let (m, d) = solve_lang_mult(&scalar(&f, 1, 10), 1, 6).unwrap();
        assert_eq!(m, 1);
        assert_eq!(d, ResidueMatrix::identity(&f, 1, 10));
    }

    #[test]
    fn lang_degree_matches_root_search() {
        // d = 2·d^5 means d^4 = 3
        let expect = brute_root_degree(5, 4, 3, 4);
        assert_eq!(expect, Some(4));
        let (m, d) = solve_lang_mult(&scalar(&f5(), 2, 12), 1, 6).unwrap();
        assert_eq!(Some(m), expect);
        let fm = d.field().clone();
        assert_eq!(fm.pow(d.get(0, 0, 0), 4), fm.from_prime(3));
    }

    #[test]
    fn admissible_degrees_are_the_multiples_of_the_order() {
        // 2 has order 4 in F_5^*
        let b = scalar(&f5(), 2, 3);
        let admissible: Vec<usize> = (1..=12).filter(|&m| lang_degree_admissible(&b, 1, m)).collect();
        assert_eq!(admissible, vec![4, 8, 12]);
    }

    #[test]
    fn artin_schreier_degree_matches_root_search() {
        let expect = brute_as_degree(5, 1, 5);
        assert_eq!(expect, Some(5));
        let (m, _) = solve_artin_schreier(&scalar(&f5(), 1, 12), 1, 6).unwrap();
        assert_eq!(Some(m), expect);
    }

    #[test]
    fn artin_schreier_of_zero_is_zero() {
        let f = f5();
        let (m, d) = solve_artin_schreier(&ResidueMatrix::zero(&f, 2, 8), 1, 3).unwrap();
        assert_eq!(m, 1);
        assert!(d.is_zero());
    }

    #[test]
    fn random_rank_two_substitute_back() {
        let f = f5();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let b = loop {
                let b = ResidueMatrix::from_fn(&f, 2, 30, |_, _, _| f.from_prime(rng.gen_range(0..5)));
                if b.is_invertible() {
                    break b;
                }
            };
            let (_, d) = solve_lang_mult(&b, 1, 6).unwrap();
            let bm = b.embed(d.field()).unwrap();
            for j in 0..=30 {
                // D_j against Σ B_i·(D^τ)_{j−i}, computed independently
                let mut acc = vec![d.field().zero(); 4];
                for i in 0..=j {
                    if (j - i) % 5 == 0 {
                        let dq: Vec<Fq> = (0..4).map(|e| d.field().frobenius(&d.coeffs[(j - i) / 5][e], 1)).collect();
                        mat_add_into(d.field(), &mut acc, &mat_mul(d.field(), 2, &bm.coeffs[i], &dq));
                    }
                }
                assert_eq!(acc, d.coeffs[j], "t^{j}");
            }
            let (_, e) = solve_artin_schreier(&b, 1, 6).unwrap();
            let lhs = e.tau(1).sub(&e).unwrap();
            assert_eq!(lhs, b.embed(e.field()).unwrap());
        }
    }

    #[test]
    fn singular_constant_term_is_rejected() {
        let f = f5();
        assert!(matches!(solve_lang_mult(&scalar(&f, 0, 4), 1, 2), Err(Error::Precondition(_))));
    }
}
