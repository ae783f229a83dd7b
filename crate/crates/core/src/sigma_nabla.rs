//! Frobenius/connection modules over the truncated Robba ring: compatibility,
//! change of basis, unipotence, and reduction to a log model over the plus ring.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::factor::{factor_full, FullFactorization};
use crate::series::{GaussValue, LaurentSeries, SeriesMatrix, Q};

pub use crate::series::FrobeniusLift;

/// Subring the entries of a module's matrices are asserted to lie in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingKind {
    /// The full ring `R`.
    Full,
    /// Plus series `R⁺`.
    Plus,
    /// Laurent polynomials with monomial-unit denominators.
    Localization,
}

impl RingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RingKind::Full => "R",
            RingKind::Plus => "R+",
            RingKind::Localization => "loc",
        }
    }
}

impl fmt::Display for RingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" => Ok(RingKind::Full),
            "R+" => Ok(RingKind::Plus),
            "loc" => Ok(RingKind::Localization),
            other => Err(Error::Document(format!("unknown ring descriptor {other:?}"))),
        }
    }
}

/// Free module with a Frobenius `F e_j = Σ Φ_ij e_i` and a connection
/// `∇ e_j = Σ N_ij e_i ⊗ du/u`.
#[derive(Clone, Debug)]
pub struct SigmaNablaModule {
    pub phi: SeriesMatrix,
    pub nconn: SeriesMatrix,
    pub frob: FrobeniusLift,
    pub ring: RingKind,
}

impl SigmaNablaModule {
    /// Checks shapes, the lift, that `Φ` is invertible at precision and that
    /// plus-ring modules have plus entries.
    pub fn new(phi: SeriesMatrix, nconn: SeriesMatrix, frob: FrobeniusLift, ring: RingKind) -> Result<Self> {
        if phi.n() != nconn.n() {
            return Err(Error::Dimension(format!("Phi is {0}x{0}, N is {1}x{1}", phi.n(), nconn.n())));
        }
        frob.validate()?;
        phi.det()?.dominant_term().map_err(|_| Error::Precondition("Phi is not invertible at precision".into()))?;
        if ring == RingKind::Plus && !(phi.is_plus() && nconn.is_plus()) {
            return Err(Error::Precondition("module over R+ with entries outside R+".into()));
        }
        Ok(SigmaNablaModule { phi, nconn, frob, ring })
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    /// Plus entries and `Φ` invertible over `R⁺`.
    pub fn is_log_model(&self) -> bool {
        self.phi.is_plus()
            && self.nconn.is_plus()
            && matches!(self.phi.det().map(|d| d.dominant_term()), Ok(Ok((0, _, _))))
    }

    /// `N(0)`, the residue of the connection, for a plus connection matrix.
    pub fn residue(&self) -> Result<SeriesMatrix> {
        constant_terms(&self.nconn)
    }
}

/// Witness of unipotence: a change of basis `U` making both structure matrices
/// constant, optionally together with the expected constants `(Φ̂, N̂)`.
#[derive(Clone, Debug)]
pub struct UnipotenceWitness {
    pub u: SeriesMatrix,
    pub target: Option<(SeriesMatrix, SeriesMatrix)>,
}

/// Outcome of an identity check: whether every certified coefficient of the
/// residual vanishes, and the residual's certified `w_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityCheck {
    pub holds: bool,
    pub residual: GaussValue,
}

impl IdentityCheck {
    fn of(residual: &SeriesMatrix) -> Result<Self> {
        Ok(IdentityCheck { holds: residual.num_terms() == 0, residual: residual.gauss_norm_r()? })
    }
}

/// Entrywise constant terms, as constant series.
pub fn constant_terms(m: &SeriesMatrix) -> Result<SeriesMatrix> {
    let ctx = m.ctx().clone();
    m.map(|e| {
        let c = e.coeff(0).ok_or_else(|| Error::Precondition("exponent 0 outside window".into()))?;
        Ok(LaurentSeries::constant(&ctx, c))
    })
}

/// Multiplier of the Frobenius on `du/u`: `q + θ(g)/g` with `g = u^σ/u^q`.
fn dlog_factor(m: &SigmaNablaModule) -> Result<LaurentSeries> {
    let ctx = m.phi.ctx().clone();
    let q = LaurentSeries::constant(&ctx, ctx.ring().from_int(m.frob.q as i64));
    if m.frob.is_standard() {
        return Ok(q);
    }
    let g = m.frob.ratio(&ctx)?;
    q.add(&g.theta().mul(&g.inv()?)?)
}

/// Checks `N·Φ + θ(Φ) = Φ·σ(N)·(q + θ(g)/g)`, which is `q·Φ·σ(N)` for the
/// standard lift.
pub fn check_compatibility(m: &SigmaNablaModule) -> Result<IdentityCheck> {
    let lhs = m.nconn.mul(&m.phi)?.add(&m.phi.theta())?;
    let rhs = m
        .phi
        .mul(&m.nconn.frobenius_substitute(&m.frob)?)?
        .scale_series(&dlog_factor(m)?)?;
    IdentityCheck::of(&lhs.sub(&rhs)?)
}

/// Module in the basis `e' = e·V`: `Φ̃ = V^{-1}ΦV^σ`, `Ñ = V^{-1}NV + V^{-1}θ(V)`.
pub fn base_change(m: &SigmaNablaModule, v: &SeriesMatrix) -> Result<SigmaNablaModule> {
    let v_inv = v.inverse()?;
    let phi = v_inv.mul(&m.phi)?.mul(&v.frobenius_substitute(&m.frob)?)?;
    let nconn = v_inv.mul(&m.nconn)?.mul(v)?.add(&v_inv.mul(&v.theta())?)?;
    let ring = if m.ring == RingKind::Plus && phi.is_plus() && nconn.is_plus() { RingKind::Plus } else { RingKind::Full };
    Ok(SigmaNablaModule { phi, nconn, frob: m.frob.clone(), ring })
}

fn is_integral_constant_matrix(m: &SeriesMatrix) -> bool {
    m.entries()
        .iter()
        .all(|e| e.terms().all(|(i, c)| i == 0 && c.is_integral()))
}

/// `N` constant and strictly upper triangular in the given basis.
pub fn check_unipotent(m: &SigmaNablaModule) -> bool {
    let n = m.n();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let e = m.nconn.get(i, j);
            e.is_laurent_polynomial() && e.terms().all(|(k, _)| k == 0) && (j > i || e.num_terms() == 0)
        })
    })
}

/// Result of [`semistable_reduce`].
#[derive(Clone, Debug)]
pub struct Reduction {
    /// The log model, computed as `W(U^{-1}ΦU^σ)W^{-σ}` and
    /// `W(U^{-1}NU + U^{-1}θ(U))W^{-1} − θ(W)W^{-1}`.
    pub module: SigmaNablaModule,
    pub factorization: FullFactorization,
    /// Difference between the `V`-path and `W`-path values of `Φ̃` and `Ñ`.
    pub phi_agreement: GaussValue,
    pub nconn_agreement: GaussValue,
    pub compatibility: IdentityCheck,
    /// `Ñ(0)`.
    pub residue: SeriesMatrix,
    pub residue_nilpotent: bool,
}

/// `A^n` has no certified nonzero coefficient.
pub fn is_nilpotent(a: &SeriesMatrix) -> Result<bool> {
    let mut p = a.clone();
    for _ in 1..a.n() {
        p = p.mul(a)?;
    }
    Ok(p.num_terms() == 0)
}

/// Reduces `M` to a log model over `R⁺` using a unipotence witness `U`.
///
/// `U` is factored as `V·W` with `V` Laurent-polynomial and `W` plus. The new
/// structure matrices are computed both as `V^{-1}ΦV^σ`, `V^{-1}NV + V^{-1}θ(V)`
/// and through `W` and the constant matrices `U^{-1}ΦU^σ`, `U^{-1}NU + U^{-1}θ(U)`;
/// the two must agree on every certified coefficient. The `W`-path values are
/// returned since they are plus by construction.
pub fn semistable_reduce(m: &SigmaNablaModule, witness: &UnipotenceWitness, r: Q) -> Result<Reduction> {
    let u = &witness.u;
    if u.n() != m.n() {
        return Err(Error::Dimension("witness and module ranks differ".into()));
    }
    let frob = &m.frob;
    let u_inv = u.inverse()?;
    let phi_hat = u_inv.mul(&m.phi)?.mul(&u.frobenius_substitute(frob)?)?;
    let n_hat = u_inv.mul(&m.nconn)?.mul(u)?.add(&u_inv.mul(&u.theta())?)?;
    if !is_integral_constant_matrix(&phi_hat) || !is_integral_constant_matrix(&n_hat) {
        return Err(Error::Precondition("witness does not make Phi and N constant over O".into()));
    }
    if let Some((tp, tn)) = &witness.target {
        if phi_hat.sub(tp)?.num_terms() != 0 || n_hat.sub(tn)?.num_terms() != 0 {
            return Err(Error::Precondition("witness constants differ from the declared targets".into()));
        }
    }

    let factorization = factor_full(u, r)?;
    let v = &factorization.v;
    let w = &factorization.w;

    let v_inv = v.inverse()?;
    let phi_v = v_inv.mul(&m.phi)?.mul(&v.frobenius_substitute(frob)?)?;
    let n_v = v_inv.mul(&m.nconn)?.mul(v)?.add(&v_inv.mul(&v.theta())?)?;

    let w_inv = w.inverse()?;
    let phi_w = w.mul(&phi_hat)?.mul(&w_inv.frobenius_substitute(frob)?)?;
    let n_w = w.mul(&n_hat)?.mul(&w_inv)?.sub(&w.theta().mul(&w_inv)?)?;

    let phi_diff = phi_v.sub(&phi_w)?;
    let n_diff = n_v.sub(&n_w)?;
    if phi_diff.num_terms() != 0 || n_diff.num_terms() != 0 {
        return Err(Error::InconsistentReduction(format!(
            "V-path and W-path differ: w_r(dPhi) = {}, w_r(dN) = {}",
            phi_diff.gauss_norm_r()?,
            n_diff.gauss_norm_r()?
        )));
    }
    if !phi_w.is_plus() || !n_w.is_plus() {
        return Err(Error::InconsistentReduction("log model has entries outside R+".into()));
    }
    let module = SigmaNablaModule { phi: phi_w, nconn: n_w, frob: frob.clone(), ring: RingKind::Plus };
    let compatibility = check_compatibility(&module)?;
    let residue = module.residue()?;
    let residue_nilpotent = is_nilpotent(&residue)?;
    Ok(Reduction {
        module,
        factorization,
        phi_agreement: phi_diff.gauss_norm_r()?,
        nconn_agreement: n_diff.gauss_norm_r()?,
        compatibility,
        residue,
        residue_nilpotent,
    })
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

    fn scalar(c: &Arc<SeriesCtx>, terms: &[(i64, i64)]) -> SeriesMatrix {
        SeriesMatrix::from_int_terms(c, &[vec![terms.to_vec()]]).unwrap()
    }

    fn module(phi: SeriesMatrix, n: SeriesMatrix) -> SigmaNablaModule {
        SigmaNablaModule::new(phi, n, FrobeniusLift::standard(5), RingKind::Full).unwrap()
    }

    fn standard_pair(c: &Arc<SeriesCtx>) -> SigmaNablaModule {
        let phi = SeriesMatrix::from_int_terms(c, &[vec![vec![(0, 1)], vec![]], vec![vec![], vec![(0, 5)]]]).unwrap();
        let n = SeriesMatrix::from_int_terms(c, &[vec![vec![], vec![(0, 1)]], vec![vec![], vec![]]]).unwrap();
        module(phi, n)
    }

    #[test]
    fn trivial_module_is_compatible() {
        let c = ctx();
        let m = module(scalar(&c, &[(0, 1)]), scalar(&c, &[]));
        let check = check_compatibility(&m).unwrap();
        assert!(check.holds && check.residual.is_infinite());
    }

    #[test]
    fn rank_one_compatibility_by_hand() {
        let c = ctx();
        let m = module(scalar(&c, &[(4, 1)]), scalar(&c, &[(0, 1)]));
        assert!(check_compatibility(&m).unwrap().holds);
        let bad = module(scalar(&c, &[(4, 1)]), scalar(&c, &[(0, 2)]));
        assert!(!check_compatibility(&bad).unwrap().holds);
    }

    #[test]
    fn standard_unipotent_pair() {
        let c = ctx();
        let m = standard_pair(&c);
        assert!(check_compatibility(&m).unwrap().holds);
        assert!(check_unipotent(&m));
        let mut twisted = m.clone();
        twisted.nconn = SeriesMatrix::from_int_terms(&c, &[vec![vec![], vec![(1, 1)]], vec![vec![], vec![]]]).unwrap();
        assert!(!check_unipotent(&twisted));
    }

    #[test]
    fn base_change_by_u() {
        let c = ctx();
        let m = module(scalar(&c, &[(0, 1)]), scalar(&c, &[]));
        let b = base_change(&m, &scalar(&c, &[(1, 1)])).unwrap();
        assert!(b.phi.sub(&scalar(&c, &[(4, 1)])).unwrap().gauss_norm_r().unwrap().is_infinite());
        assert!(b.nconn.sub(&scalar(&c, &[(0, 1)])).unwrap().gauss_norm_r().unwrap().is_infinite());
        assert!(check_compatibility(&b).unwrap().holds);
    }

    #[test]
    fn general_lift_compatibility() {
        let c = ctx();
        // u^σ = u^5(1 + 5u): the trivial module stays compatible, and so does
        // its base change by u, which picks up the dσ correction
        let image = LaurentSeries::from_ints(&c, &[(5, 1), (6, 5)]);
        let frob = FrobeniusLift::with_image(5, image).unwrap();
        let m = SigmaNablaModule::new(scalar(&c, &[(0, 1)]), scalar(&c, &[]), frob, RingKind::Full).unwrap();
        let b = base_change(&m, &scalar(&c, &[(1, 1)])).unwrap();
        assert!(check_compatibility(&b).unwrap().holds);
    }

    #[test]
    fn rank_one_reduction() {
        let c = ctx();
        // Φ = 2u^{-4}, N = −1: the witness u makes both constant
        let m = module(scalar(&c, &[(-4, 2)]), scalar(&c, &[(0, -1)]));
        assert!(check_compatibility(&m).unwrap().holds);
        let witness = UnipotenceWitness { u: scalar(&c, &[(1, 1)]), target: None };
        let red = semistable_reduce(&m, &witness, Q::new(1, 2)).unwrap();
        assert!(red.module.is_log_model());
        assert!(red.module.nconn.num_terms() == 0);
        assert!(red.compatibility.holds);
    }

    #[test]
    fn twisted_standard_pair_reduces() {
        let c = ctx();
        let constants = standard_pair(&c);
        let t = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 1)], vec![(-1, 1)]], vec![vec![], vec![(0, 1)]]]).unwrap();
        let m = base_change(&constants, &t.inverse().unwrap()).unwrap();
        assert!(check_compatibility(&m).unwrap().holds);
        let witness = UnipotenceWitness { u: t, target: Some((constants.phi.clone(), constants.nconn.clone())) };
        let red = semistable_reduce(&m, &witness, Q::new(1, 2)).unwrap();
        assert!(red.module.phi.is_plus() && red.module.nconn.is_plus());
        assert!(red.residue_nilpotent);
        assert!(red.compatibility.holds);
    }

    #[test]
    fn log_model_with_identity_witness_is_unchanged() {
        let c = ctx();
        let m = standard_pair(&c);
        let witness = UnipotenceWitness { u: SeriesMatrix::identity(&c, 2), target: None };
        let red = semistable_reduce(&m, &witness, Q::new(1, 2)).unwrap();
        assert_eq!(red.module.phi.sub(&m.phi).unwrap().num_terms(), 0);
        assert_eq!(red.module.nconn.sub(&m.nconn).unwrap().num_terms(), 0);
    }
}
