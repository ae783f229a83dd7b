//! Seeded generators of test inputs shared by the self-check corpus, the
//! acceptance suite and the benchmarks.

use std::sync::Arc;

use rand::Rng;

use crate::coeff::CoeffElem;
use crate::series::{FrobeniusLift, LaurentSeries, SeriesCtx, SeriesMatrix, Q};
use crate::sigma_nabla::{base_change, RingKind, SigmaNablaModule};

/// Random Laurent polynomial whose terms all have `w_r ≥ min_w`, with exponents
/// in `[-span, span]` and at most `max_terms` terms.
pub fn random_series_above<R: Rng + ?Sized>(
    ctx: &Arc<SeriesCtx>,
    rng: &mut R,
    min_w: Q,
    span: i64,
    max_terms: usize,
) -> LaurentSeries {
    let ring = ctx.ring().clone();
    let r = ctx.radius();
    let n = ring.precision() as i64;
    let count = rng.gen_range(0..=max_terms);
    let mut terms: Vec<(i64, CoeffElem)> = Vec::with_capacity(count);
    for _ in 0..count {
        let i = rng.gen_range(-span..=span);
        // smallest v with r·v + i ≥ min_w
        let need = ((min_w - Q::from_integer(i)) / r).ceil().to_integer().max(0);
        if need >= n {
            continue;
        }
        let v = rng.gen_range(need..n.min(need + 3));
        terms.push((i, ring.random_with_val(rng, v)));
    }
    LaurentSeries::from_terms(ctx, terms)
}

/// `I + E` with every entry of `E` a random Laurent polynomial of `w_r ≥ min_w`.
pub fn random_near_identity<R: Rng + ?Sized>(
    ctx: &Arc<SeriesCtx>,
    n: usize,
    rng: &mut R,
    min_w: Q,
    span: i64,
) -> SeriesMatrix {
    let id = SeriesMatrix::identity(ctx, n);
    let e = SeriesMatrix::from_fn(n, |_, _| random_series_above(ctx, rng, min_w, span, 3));
    id.add(&e).expect("same context")
}

/// Random integral polynomial in `u` of degree `≤ deg` with zero constant term.
fn random_u_poly<R: Rng + ?Sized>(ctx: &Arc<SeriesCtx>, rng: &mut R, deg: i64) -> LaurentSeries {
    let ring = ctx.ring().clone();
    let mut terms: Vec<(i64, CoeffElem)> = Vec::new();
    for i in 1..=deg {
        if rng.gen_bool(0.6) {
            terms.push((i, ring.random_integral(rng, 2)));
        }
    }
    LaurentSeries::from_terms(ctx, terms)
}

/// Invertible integral constant matrix: a product of random elementary matrices
/// and a diagonal of units.
pub fn random_constant_unit<R: Rng + ?Sized>(ctx: &Arc<SeriesCtx>, n: usize, rng: &mut R) -> SeriesMatrix {
    let ring = ctx.ring().clone();
    let diag = (0..n).map(|_| LaurentSeries::constant(ctx, ring.random_unit(rng))).collect();
    let mut m = SeriesMatrix::diagonal(ctx, diag);
    for _ in 0..2 * n {
        if n < 2 {
            break;
        }
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let mut e = SeriesMatrix::identity(ctx, n);
        e.set(i, j, LaurentSeries::constant(ctx, ring.random_integral(rng, 1)));
        m = m.mul(&e).expect("same context");
    }
    m
}

/// Unit of the plus ring: an integral constant unit plus integral multiples of
/// `u, …, u^deg`.
pub fn random_plus_unit<R: Rng + ?Sized>(ctx: &Arc<SeriesCtx>, n: usize, rng: &mut R, deg: i64) -> SeriesMatrix {
    let c = random_constant_unit(ctx, n, rng);
    let t = SeriesMatrix::from_fn(n, |_, _| random_u_poly(ctx, rng, deg));
    c.add(&t).expect("same context")
}

/// Laurent-polynomial matrix with monomial-unit determinant: a product of
/// elementary matrices `I + c·u^j·E_ik` with `|j| ≤ span`, times a diagonal of
/// monomials `u^k`.
pub fn random_laurent_unit<R: Rng + ?Sized>(ctx: &Arc<SeriesCtx>, n: usize, rng: &mut R, span: i64) -> SeriesMatrix {
    let ring = ctx.ring().clone();
    let diag = (0..n)
        .map(|_| LaurentSeries::monomial(ctx, ring.random_unit(rng), rng.gen_range(-1..=1)))
        .collect();
    let mut m = SeriesMatrix::diagonal(ctx, diag);
    if n < 2 {
        return m;
    }
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        let k = (i + rng.gen_range(1..n)) % n;
        let j = rng.gen_range(-span..=span);
        let mut e = SeriesMatrix::identity(ctx, n);
        e.set(i, k, LaurentSeries::monomial(ctx, ring.random_integral(rng, 1), j));
        m = m.mul(&e).expect("same context");
    }
    m
}

/// Largest `|i|` over the represented exponents of a matrix.
pub fn exponent_depth(m: &SeriesMatrix) -> i64 {
    m.entries()
        .iter()
        .flat_map(|e| e.terms().map(|(i, _)| i.abs()))
        .max()
        .unwrap_or(0)
}

/// Constant unipotent module: `Φ = P^{-1}·diag(c, c·q, …, c·q^{n−1})·P` and
/// `N = P^{-1}·S·P` with `S` a random integral superdiagonal and `P` an integral
/// upper unitriangular matrix.
pub fn random_unipotent_constants<R: Rng + ?Sized>(ctx: &Arc<SeriesCtx>, n: usize, rng: &mut R) -> SigmaNablaModule {
    let ring = ctx.ring().clone();
    let q = ring.q() as i64;
    let c = ring.random_unit(rng);
    let mut scale = ring.one();
    let mut diag = Vec::with_capacity(n);
    for _ in 0..n {
        diag.push(LaurentSeries::constant(ctx, ring.mul(&c, &scale)));
        scale = ring.mul(&scale, &ring.from_int(q));
    }
    let phi = SeriesMatrix::diagonal(ctx, diag);
    let mut nconn = SeriesMatrix::zero(ctx, n);
    for i in 0..n.saturating_sub(1) {
        nconn.set(i, i + 1, LaurentSeries::constant(ctx, ring.random_integral(rng, 1)));
    }
    let mut p = SeriesMatrix::identity(ctx, n);
    for i in 0..n {
        for j in i + 1..n {
            p.set(i, j, LaurentSeries::constant(ctx, ring.random_integral(rng, 1)));
        }
    }
    let m = SigmaNablaModule::new(phi, nconn, FrobeniusLift::standard(ring.q()), RingKind::Plus)
        .expect("diagonal Frobenius is invertible");
    base_change(&m, &p).expect("unitriangular change of basis")
}

/// Random twist for [`random_unipotent_constants`]: a Laurent-polynomial unit
/// whose entries and inverse entries stay within exponents `[-depth, depth]`.
pub fn random_twist<R: Rng + ?Sized>(ctx: &Arc<SeriesCtx>, n: usize, rng: &mut R, depth: i64) -> SeriesMatrix {
    loop {
        let t = random_laurent_unit(ctx, n, rng, depth);
        let inv = t.inverse().expect("monomial-unit determinant");
        if exponent_depth(&t) <= depth && exponent_depth(&inv) <= depth && inv.is_laurent_polynomial() {
            return t;
        }
    }
}
