//! Matrix factorizations over the truncated Robba ring: approximate inversion by
//! Laurent polynomials, plus/minus splitting near the identity, and the full
//! factorization `U = V·W` with `V` Laurent-polynomial and `W` plus.

use crate::error::{Error, Result};
use crate::series::{GaussValue, SeriesMatrix, Q};

/// `M = Y·Z` with `Y − I` strict-minus and `Z` plus.
#[derive(Clone, Debug)]
pub struct BirkhoffFactorization {
    pub y: SeriesMatrix,
    pub z: SeriesMatrix,
    pub r: Q,
    /// Certified `w_r(Y·Z − M)`.
    pub achieved_floor: GaussValue,
    /// Certified `w_r(M_k − I)` before each iteration and after the last one.
    pub contraction: Vec<GaussValue>,
}

impl BirkhoffFactorization {
    pub fn iterations(&self) -> usize {
        self.contraction.len() - 1
    }
}

/// `U = V·W` with `V` Laurent-polynomial and `W` plus.
#[derive(Clone, Debug)]
pub struct FullFactorization {
    pub v: SeriesMatrix,
    pub w: SeriesMatrix,
    pub r: Q,
    /// Laurent-polynomial approximate inverse used to move `U` near the identity.
    pub x: SeriesMatrix,
    pub birkhoff: BirkhoffFactorization,
    /// Certified `w_r(V·W − U)`.
    pub achieved_floor: GaussValue,
}

/// Iteration cap used by [`factor_full`].
pub const DEFAULT_MAX_ITERS: usize = 30;

/// Contraction `w_r(X·U − I)` that [`approximate_inverse`] aims for.
const TARGET_CONTRACTION: i64 = 1;

fn check_radius(m: &SeriesMatrix, r: Q) -> Result<()> {
    if m.ctx().radius() != r {
        return Err(Error::InvalidParameter(format!(
            "matrix certified at r = {}, asked r = {r}",
            m.ctx().radius()
        )));
    }
    Ok(())
}

/// Laurent-polynomial `V` with certified `w_r(V·U − I) > 0`.
///
/// `V` keeps the terms of `U^{-1}` with `r·v_p + i ≤ w_r(U^{-1}) + budget`. The
/// budget starts at twice the target contraction, widened by the defect
/// `−(w_r(U) + w_r(U^{-1}))` when `U` is far from an isometry, and doubles
/// until the product certifies.
pub fn approximate_inverse(u: &SeriesMatrix, r: Q) -> Result<SeriesMatrix> {
    check_radius(u, r)?;
    let n = u.n();
    let id = SeriesMatrix::identity(u.ctx(), n);
    let inv = u.inverse()?;
    let w_inv = inv.gauss_norm_r()?.w.ok_or(Error::NotInvertible)?;
    let w_u = u.gauss_norm_r()?.w.ok_or(Error::NotInvertible)?;
    let defect = (-(w_inv + w_u)).max(Q::from_integer(0));
    let mut budget = Q::from_integer(2 * TARGET_CONTRACTION) + defect;
    let total = inv.num_terms();
    for _ in 0..16 {
        let v = inv.map(|e| Ok(e.terms_up_to_weight(w_inv + budget)))?;
        let residual = v.mul(u)?.sub(&id)?.gauss_norm_r()?;
        if residual.exceeds(Q::from_integer(0)) && !v.det()?.known_part().is_zero() {
            return Ok(v);
        }
        if v.num_terms() == total {
            break;
        }
        budget *= Q::from_integer(2);
    }
    Err(Error::Precondition("no Laurent-polynomial truncation of U^{-1} certifies w_r(VU - I) > 0".into()))
}

/// Factors `M = Y·Z` near the identity by repeated plus/minus splitting.
///
/// Each step splits `E = M − I` into `E⁻ + E⁺`, then replaces `M` by
/// `(I + E⁻)^{-1}·M·(I + E⁺)^{-1}`. The loop ends once `M − I` has no represented
/// terms left or its certified value is limited by truncation error alone. A
/// step that does not strictly raise `w_r(M − I)` otherwise is reported as
/// divergence.
pub fn birkhoff_factor(m: &SeriesMatrix, r: Q, max_iters: usize) -> Result<BirkhoffFactorization> {
    check_radius(m, r)?;
    let ctx = m.ctx().clone();
    let n = m.n();
    let id = SeriesMatrix::identity(&ctx, n);
    let d0 = m.distance_to_identity(r)?;
    if !d0.exceeds(Q::from_integer(0)) {
        return Err(Error::Precondition(format!("w_r(M - I) = {d0} is not positive")));
    }
    let mut cur = m.clone();
    let mut y = id.clone();
    let mut z = id.clone();
    let mut contraction = vec![d0];
    for _ in 0..max_iters {
        let e = cur.sub(&id)?;
        if e.num_terms() == 0 {
            break;
        }
        let (em, ep) = e.known_part().split_plus_minus();
        let a = id.add(&em)?;
        let b = id.add(&ep)?;
        y = y.mul(&a)?;
        z = b.mul(&z)?;
        cur = a.inverse()?.mul(&cur)?.mul(&b.inverse()?)?;
        let d = cur.distance_to_identity(r)?;
        let prev = *contraction.last().unwrap();
        let improved = match (prev.w, d.w) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => b > a,
        };
        contraction.push(d);
        if !improved {
            if d.exact {
                return Err(Error::Diverged(format!("w_r(M - I) went from {prev} to {d}")));
            }
            break;
        }
        if d.is_infinite() {
            break;
        }
    }
    let achieved_floor = y.mul(&z)?.sub(m)?.gauss_norm(r)?;
    Ok(BirkhoffFactorization { y, z, r, achieved_floor, contraction })
}

/// Factors `U = V·W` with `V` a Laurent-polynomial matrix and `W` plus.
///
/// `X` from [`approximate_inverse`] brings `X·U` near the identity, its plus/minus
/// factorization `X·U = Y·Z` gives `W = Z`, and `V = X^{-1}·Y` is truncated back
/// to its represented Laurent-polynomial part.
pub fn factor_full(u: &SeriesMatrix, r: Q) -> Result<FullFactorization> {
    factor_full_with(u, r, DEFAULT_MAX_ITERS)
}

pub fn factor_full_with(u: &SeriesMatrix, r: Q, max_iters: usize) -> Result<FullFactorization> {
    let x = approximate_inverse(u, r)?;
    let birkhoff = birkhoff_factor(&x.mul(u)?, r, max_iters)?;
    let v = x.inverse()?.mul(&birkhoff.y)?.known_part();
    let w = birkhoff.z.clone();
    let achieved_floor = v.mul(&w)?.sub(u)?.gauss_norm(r)?;
    Ok(FullFactorization { v, w, r, x, birkhoff, achieved_floor })
}

/// `P` is a unit of the plus ring up to a strict-minus part of `w_r ≥ threshold`:
/// the plus part's determinant has its dominant term at `u^0`.
pub fn is_plus_unit(p: &SeriesMatrix, threshold: Q) -> Result<bool> {
    let (minus, plus) = p.split_plus_minus();
    if !minus.gauss_norm_r()?.at_least(threshold) {
        return Ok(false);
    }
    Ok(matches!(plus.det()?.dominant_term(), Ok((0, _, _))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffRing;
    use crate::series::SeriesCtx;
    use std::sync::Arc;

    fn ctx() -> Arc<SeriesCtx> {
        SeriesCtx::with_default_window(CoeffRing::new(5, 1, 1, 12).unwrap(), Q::new(1, 2)).unwrap()
    }

    fn half() -> Q {
        Q::new(1, 2)
    }

    fn is_zero(m: &SeriesMatrix) -> bool {
        m.gauss_norm_r().unwrap().is_infinite()
    }

    #[test]
    fn identity_factors_trivially() {
        let c = ctx();
        let id = SeriesMatrix::identity(&c, 2);
        let x = approximate_inverse(&id, half()).unwrap();
        assert!(is_zero(&x.sub(&id).unwrap()));
        let b = birkhoff_factor(&id, half(), 10).unwrap();
        assert!(is_zero(&b.y.sub(&id).unwrap()) && is_zero(&b.z.sub(&id).unwrap()));
        let f = factor_full(&id, half()).unwrap();
        assert!(is_zero(&f.v.sub(&id).unwrap()) && is_zero(&f.w.sub(&id).unwrap()));
    }

    #[test]
    fn nilpotent_approximate_inverse_is_exact() {
        let c = ctx();
        let u = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1)], vec![(-1, 5)]], vec![vec![], vec![(0, 1)]]]).unwrap();
        let v = approximate_inverse(&u, half()).unwrap();
        let expect = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1)], vec![(-1, -5)]], vec![vec![], vec![(0, 1)]]]).unwrap();
        assert!(is_zero(&v.sub(&expect).unwrap()));
        assert!(v.mul(&u).unwrap().distance_to_identity(half()).unwrap().is_infinite());
    }

    #[test]
    fn diagonal_approximate_inverse_contracts() {
        let c = ctx();
        let u = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1), (-1, 5)], vec![]], vec![vec![], vec![(0, 1), (1, -5)]]]).unwrap();
        let v = approximate_inverse(&u, half()).unwrap();
        assert!(v.is_laurent_polynomial());
        let d = v.mul(&u).unwrap().distance_to_identity(half()).unwrap();
        assert!(d.exceeds(Q::from_integer(0)), "{d}");
    }

    #[test]
    fn commuting_nilpotent_split() {
        // at r = 2 both 5u^{-1} and 5u have positive Gauss value
        let two = Q::from_integer(2);
        let c = ctx().at_radius(two).unwrap();
        let m = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1)], vec![(-1, 5), (1, 5)]], vec![vec![], vec![(0, 1)]]]).unwrap();
        let b = birkhoff_factor(&m, two, 10).unwrap();
        let y = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1)], vec![(-1, 5)]], vec![vec![], vec![(0, 1)]]]).unwrap();
        let z = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1)], vec![(1, 5)]], vec![vec![], vec![(0, 1)]]]).unwrap();
        assert!(is_zero(&b.y.sub(&y).unwrap()));
        assert!(is_zero(&b.z.sub(&z).unwrap()));
        assert!(b.achieved_floor.is_infinite());
    }

    #[test]
    fn rejects_matrix_far_from_identity() {
        let c = ctx();
        let m = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 2)], vec![]], vec![vec![], vec![(0, 1)]]]).unwrap();
        assert!(matches!(birkhoff_factor(&m, half(), 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn plus_input_factors_with_trivial_v() {
        let c = ctx();
        let u = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 2), (1, 1)], vec![(2, 3)]], vec![vec![(1, 1)], vec![(0, 1)]]]).unwrap();
        let f = factor_full(&u, half()).unwrap();
        assert!(f.w.is_plus());
        assert!(f.achieved_floor.at_least(Q::from_integer(10)), "{}", f.achieved_floor);
        assert!(is_plus_unit(&f.v, Q::from_integer(10)).unwrap());
    }
}
