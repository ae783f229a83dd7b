//! Bundled fixture corpus and a seeded property smoke suite.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::coeff::CoeffRing;
use crate::doc::to_canonical;
use crate::field::FiniteField;
use crate::fixtures::random_series_above;
use crate::pipeline::{run, Check, PipelineDoc, Report};
use crate::series::{FrobeniusLift, LaurentSeries, SeriesCtx, Q};
use crate::unitroot::{solve_artin_schreier, solve_lang_mult, ResidueMatrix};

/// `(name, document text)` pairs run by [`selfcheck`].
pub const CORPUS: &[(&str, &str)] = &[
    ("factor_identity", include_str!("../fixtures/factor_identity.json")),
    ("factor_generated", include_str!("../fixtures/factor_generated.json")),
    ("reduce_twisted", include_str!("../fixtures/reduce_twisted.json")),
    ("reduce_generated", include_str!("../fixtures/reduce_generated.json")),
    ("unitroot_lang", include_str!("../fixtures/unitroot_lang.json")),
    ("unitroot_two_adic", include_str!("../fixtures/unitroot_two_adic.json")),
    ("unitroot_generated", include_str!("../fixtures/unitroot_generated.json")),
    ("verify_standard_pair", include_str!("../fixtures/verify_standard_pair.json")),
];

/// Seed of the smoke suite.
pub const SMOKE_SEED: u64 = 0;

#[derive(Clone, Debug)]
pub enum FixtureOutcome {
    Ran(Box<Report>),
    Unparsed(String),
}

#[derive(Clone, Debug)]
pub struct SelfcheckReport {
    pub fixtures: Vec<(String, FixtureOutcome)>,
    pub smoke: Vec<Check>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.fixtures.iter().all(|(_, o)| matches!(o, FixtureOutcome::Ran(r) if r.passed()))
            && self.smoke.iter().all(|c| c.pass)
    }

    pub fn fixture(&self, name: &str) -> Option<&FixtureOutcome> {
        self.fixtures.iter().find(|(n, _)| n == name).map(|(_, o)| o)
    }

    pub fn to_value(&self) -> Value {
        let fixtures: Vec<Value> = self
            .fixtures
            .iter()
            .map(|(name, o)| match o {
                FixtureOutcome::Ran(r) => json!({"name": name, "report": r.to_value()}),
                FixtureOutcome::Unparsed(e) => json!({"error": e, "name": name, "status": "fail"}),
            })
            .collect();
        let smoke: Vec<Value> = self
            .smoke
            .iter()
            .map(|c| json!({"detail": c.detail, "name": c.name, "pass": c.pass}))
            .collect();
        let mut obj = Map::new();
        obj.insert("fixtures".into(), Value::Array(fixtures));
        obj.insert("smoke".into(), Value::Array(smoke));
        obj.insert("smoke_seed".into(), Value::String(SMOKE_SEED.to_string()));
        obj.insert("status".into(), Value::String(if self.passed() { "pass" } else { "fail" }.into()));
        Value::Object(obj)
    }

    pub fn to_json(&self) -> String {
        to_canonical(&self.to_value())
    }
}

pub fn selfcheck() -> SelfcheckReport {
    selfcheck_with(CORPUS)
}

/// Runs the given corpus and the smoke suite.
pub fn selfcheck_with(corpus: &[(&str, &str)]) -> SelfcheckReport {
    let fixtures = corpus
        .iter()
        .map(|(name, text)| {
            let outcome = match PipelineDoc::parse(text) {
                Ok(doc) => FixtureOutcome::Ran(Box::new(run(&doc))),
                Err(e) => FixtureOutcome::Unparsed(e.to_string()),
            };
            (name.to_string(), outcome)
        })
        .collect();
    SelfcheckReport { fixtures, smoke: smoke_suite() }
}

type Smoke = Result<String, String>;
type SmokeFn = fn(&mut ChaCha8Rng) -> Smoke;

fn smoke_ctx(prec: u32) -> Arc<SeriesCtx> {
    let ring = CoeffRing::new(5, 1, 1, prec).expect("valid ring");
    SeriesCtx::with_default_window(ring, Q::new(1, 2)).expect("valid window")
}

fn random_poly(ctx: &Arc<SeriesCtx>, rng: &mut ChaCha8Rng, span: i64) -> LaurentSeries {
    random_series_above(ctx, rng, Q::from_integer(-100), span, 5)
}

fn same(a: &LaurentSeries, b: &LaurentSeries) -> bool {
    a.sub(b).is_ok_and(|d| d.num_terms() == 0)
}

fn valuation_laws(rng: &mut ChaCha8Rng) -> Smoke {
    let ctx = smoke_ctx(20);
    for pair in 0..20 {
        let f = random_poly(&ctx, rng, 10);
        let g = random_poly(&ctx, rng, 10);
        let prod = f.mul(&g).map_err(|e| e.to_string())?;
        for s in [Q::new(1, 3), Q::new(1, 2), Q::from_integer(1), Q::from_integer(2)] {
            let (wf, wg, wp) = (f.gauss_norm(s), g.gauss_norm(s), prod.gauss_norm(s));
            let (wf, wg, wp) = (wf.map_err(|e| e.to_string())?, wg.map_err(|e| e.to_string())?, wp.map_err(|e| e.to_string())?);
            let expect = match (wf.w, wg.w) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
            if wp.w != expect {
                return Err(format!("pair {pair}, s = {s}: w(fg) = {wp}"));
            }
        }
    }
    Ok("20 pairs, s in {1/3, 1/2, 1, 2}".into())
}

fn split_recombines(rng: &mut ChaCha8Rng) -> Smoke {
    let ctx = smoke_ctx(12);
    for case in 0..20 {
        let f = random_poly(&ctx, rng, 10);
        let (minus, plus) = f.split_plus_minus();
        let back = minus.add(&plus).map_err(|e| e.to_string())?;
        if !same(&back, &f) || !plus.is_plus() || !minus.is_strict_minus() {
            return Err(format!("case {case}"));
        }
    }
    Ok("20 series".into())
}

fn theta_leibniz(rng: &mut ChaCha8Rng) -> Smoke {
    let ctx = smoke_ctx(12);
    for case in 0..20 {
        let f = random_poly(&ctx, rng, 10);
        let g = random_poly(&ctx, rng, 10);
        let lhs = f.mul(&g).map_err(|e| e.to_string())?.theta();
        let rhs = f.theta().mul(&g).and_then(|a| a.add(&f.mul(&g.theta())?)).map_err(|e| e.to_string())?;
        if !same(&lhs, &rhs) {
            return Err(format!("case {case}"));
        }
    }
    Ok("20 pairs".into())
}

fn sigma_multiplicative(rng: &mut ChaCha8Rng) -> Smoke {
    let ctx = smoke_ctx(12);
    let lift = FrobeniusLift::standard(5);
    for case in 0..20 {
        let f = random_poly(&ctx, rng, 4);
        let g = random_poly(&ctx, rng, 4);
        let sig = |s: &LaurentSeries| s.frobenius_substitute(&lift).map_err(|e| e.to_string());
        let lhs = sig(&f.mul(&g).map_err(|e| e.to_string())?)?;
        let rhs = sig(&f)?.mul(&sig(&g)?).map_err(|e| e.to_string())?;
        if !same(&lhs, &rhs) {
            return Err(format!("case {case}"));
        }
    }
    Ok("20 pairs".into())
}

fn inverse_multiplies_back(rng: &mut ChaCha8Rng) -> Smoke {
    let ctx = smoke_ctx(12);
    let one = LaurentSeries::one(&ctx);
    for case in 0..10 {
        let k = rng.gen_range(-3..=3);
        let c = ctx.ring().random_unit(rng);
        let e = random_series_above(&ctx, rng, Q::from_integer(k) + Q::new(1, 2), 6, 3);
        let f = LaurentSeries::monomial(&ctx, c, k).add(&e).map_err(|e| e.to_string())?;
        let inv = f.inv().map_err(|e| format!("case {case}: {e}"))?;
        let back = f.mul(&inv).map_err(|e| e.to_string())?;
        if !same(&back, &one) {
            return Err(format!("case {case}: f * f^-1 - 1 = {}", back.sub(&one).map_err(|e| e.to_string())?));
        }
    }
    Ok("10 units".into())
}

fn residue_examples(_: &mut ChaCha8Rng) -> Smoke {
    let f = FiniteField::new(5, 1).map_err(|e| e.to_string())?;
    let scalar = |c: u64| ResidueMatrix::from_fn(&f, 1, 10, |j, _, _| if j == 0 { f.from_prime(c) } else { f.zero() });
    let (ml, _) = solve_lang_mult(&scalar(2), 1, 8).map_err(|e| e.to_string())?;
    let (ma, _) = solve_artin_schreier(&scalar(1), 1, 8).map_err(|e| e.to_string())?;
    if (ml, ma) != (4, 5) {
        return Err(format!("Lang degree {ml}, Artin-Schreier degree {ma}"));
    }
    Ok("D = 2 D^tau needs m = 4, x^5 - x = 1 needs m = 5".into())
}

/// Property checks drawn from [`SMOKE_SEED`], one [`Check`] each.
pub fn smoke_suite() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SMOKE_SEED);
    let suite: [(&str, SmokeFn); 6] = [
        ("valuation_laws", valuation_laws),
        ("split_recombines", split_recombines),
        ("theta_leibniz", theta_leibniz),
        ("sigma_multiplicative", sigma_multiplicative),
        ("inverse_multiplies_back", inverse_multiplies_back),
        ("residue_examples", residue_examples),
    ];
    suite
        .iter()
        .map(|(name, f)| {
            let (pass, detail) = match f(&mut rng) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            Check { name: name.to_string(), pass, detail }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpus_passes() {
        let report = selfcheck();
        assert!(report.passed(), "{}", report.to_json());
    }
}
