//! JSON encodings of coefficients, series, matrices and modules.
//!
//! Integers are decimal strings and rationals `"num/den"` strings. Objects are
//! emitted with keys in byte order, which makes the emitted text canonical.
//!
//! | value | encoding |
//! |---|---|
//! | coefficient | `{"unit": ["u0", …], "val": "v"}`: `p^v · Σ u_k x^k`; inputs may also use `"num/den"` |
//! | series | `{"terms": [["exp", coeff], …], "lower": {"end", "floor"}, "upper": {"start", "floor"}}` |
//! | matrix | array of rows of series |
//! | lift | `{"q": "5"}` or `{"q": "5", "image_of_u": series}` |
//! | Birkhoff factorization | `{"Y": matrix, "Z": matrix, "r": "num/den", "floor": "num/den" \| "+inf"}` |
//! | module | `{"frob": lift, "nconn": matrix, "phi": matrix, "ring": "R" \| "R+" \| "loc"}` |
//! | residue matrix | `{"m", "T", "entries": [[{"j": coeff}]]}` |
//!
//! A missing `lower`/`upper` region means the series is exact on that side.

use std::sync::Arc;

use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::coeff::{CoeffElem, CoeffRing};
use crate::error::{Error, Result};
use crate::factor::BirkhoffFactorization;
use crate::field::FiniteField;
use crate::series::{fmt_q, parse_q, FrobeniusLift, LaurentSeries, SeriesCtx, SeriesMatrix, Tail, Q};
use crate::sigma_nabla::{RingKind, SigmaNablaModule};
use crate::unitroot::ResidueMatrix;

fn bad(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Document(format!("{path}: {msg}"))
}

/// Parses JSON text, reporting syntax errors with line and column.
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let msg = msg.strip_suffix(&suffix).unwrap_or(&msg).to_string();
        Error::Parse { line: e.line(), column: e.column(), msg }
    })
}

/// Canonical text: sorted keys, and any value whose compact form fits within
/// [`LINE_WIDTH`] columns at its indentation kept on one line.
pub fn to_canonical(v: &Value) -> String {
    let mut out = String::new();
    render(v, 0, 0, &mut out);
    out.push('\n');
    out
}

pub const LINE_WIDTH: usize = 100;

/// Writes `v` starting at column `col`, with nested lines indented past `indent`.
fn render(v: &Value, indent: usize, col: usize, out: &mut String) {
    let compact = serde_json::to_string(v).expect("values serialize");
    if col + compact.len() <= LINE_WIDTH {
        out.push_str(&compact);
        return;
    }
    let pad = " ".repeat(indent + 2);
    match v {
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                out.push('\n');
                out.push_str(&pad);
                render(item, indent + 2, indent + 2, out);
                if k + 1 < items.len() {
                    out.push(',');
                }
            }
            out.push('\n');
            out.push_str(&" ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                out.push('\n');
                out.push_str(&pad);
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push_str(": ");
                render(item, indent + 2, indent + key.len() + 6, out);
                if k + 1 < map.len() {
                    out.push(',');
                }
            }
            out.push('\n');
            out.push_str(&" ".repeat(indent));
            out.push('}');
        }
        _ => out.push_str(&compact),
    }
}

pub fn int(x: i64) -> Value {
    Value::String(x.to_string())
}

pub fn rational(x: Q) -> Value {
    if x.is_integer() {
        int(x.to_integer())
    } else {
        Value::String(fmt_q(x))
    }
}

pub fn get<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| bad(path, format!("missing key {key:?}")))
}

pub fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(path, "expected a string"))
}

pub fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| bad(path, "expected an array"))
}

pub fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(path, "expected an object"))
}

pub fn as_i64(v: &Value, path: &str) -> Result<i64> {
    as_str(v, path)?.trim().parse().map_err(|_| bad(path, "expected a decimal integer string"))
}

pub fn as_u64(v: &Value, path: &str) -> Result<u64> {
    as_str(v, path)?.trim().parse().map_err(|_| bad(path, "expected a nonnegative decimal integer string"))
}

pub fn as_q(v: &Value, path: &str) -> Result<Q> {
    parse_q(as_str(v, path)?).map_err(|e| bad(path, e))
}

/// Rejects keys outside `allowed`.
pub fn check_keys(v: &Value, allowed: &[&str], path: &str) -> Result<()> {
    for k in as_object(v, path)?.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(bad(path, format!("unexpected key {k:?}")));
        }
    }
    Ok(())
}

fn p_i64(ring: &CoeffRing) -> i64 {
    ring.p() as i64
}

/// Representative of `d mod p^rel` in `(−p^rel/2, p^rel/2]`.
fn balanced(d: u64, modulus: u64) -> i64 {
    if d > modulus / 2 {
        d as i64 - modulus as i64
    } else {
        d as i64
    }
}

fn pow_i64(p: i64, e: u32) -> Option<i64> {
    p.checked_pow(e)
}

/// `{"unit": [...], "val": "v"}` with balanced unit digits; zero is
/// `p^0 · 0`.
pub fn encode_coeff(ring: &CoeffRing, x: &CoeffElem) -> Value {
    let Some(val) = x.vp() else {
        return json!({"unit": vec![int(0); ring.m()], "val": int(0)});
    };
    let modulus = pow_i64(p_i64(ring), x.rel_precision()).expect("p^N fits") as u64;
    let unit: Vec<Value> = x.unit().iter().map(|&d| int(balanced(d, modulus))).collect();
    json!({"unit": unit, "val": int(val)})
}

/// `v_p` of a nonzero integer, and its prime-to-`p` part.
fn split_p(mut n: i64, p: i64) -> (i64, i64) {
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

/// Accepts the canonical object form, or a `"num/den"` string with a `p`-power
/// denominator standing for an element of `Q_p`.
pub fn decode_coeff(ring: &CoeffRing, v: &Value, path: &str) -> Result<CoeffElem> {
    if v.is_object() {
        check_keys(v, &["unit", "val"], path)?;
        let val = as_i64(get(v, "val", path)?, &format!("{path}.val"))?;
        let items = as_array(get(v, "unit", path)?, &format!("{path}.unit"))?;
        if items.is_empty() || items.len() > ring.m() {
            return Err(bad(path, format!("expected 1 to {} unit digits, found {}", ring.m(), items.len())));
        }
        let unit: Vec<i64> = items
            .iter()
            .enumerate()
            .map(|(k, d)| as_i64(d, &format!("{path}.unit[{k}]")))
            .collect::<Result<_>>()?;
        return ring.from_parts(val, &unit).map_err(|e| bad(path, e));
    }
    let x = as_q(v, path)?;
    let p = p_i64(ring);
    let (dv, rest) = split_p(*x.denom(), p);
    if rest != 1 {
        return Err(bad(path, format!("denominator of {x} is not a power of {p}")));
    }
    if x.is_zero() {
        return Ok(CoeffElem::zero());
    }
    let (nv, unit) = split_p(*x.numer(), p);
    ring.from_parts(nv - dv, &[unit]).map_err(|e| bad(path, e))
}

pub fn encode_series(s: &LaurentSeries) -> Value {
    let ring = s.ring();
    let terms: Vec<Value> = s.terms().map(|(i, c)| json!([int(i), encode_coeff(ring, c)])).collect();
    let mut obj = Map::new();
    obj.insert("terms".into(), Value::Array(terms));
    if let Tail::Truncated(f) = s.tail_lo() {
        obj.insert("lower".into(), json!({"end": int(s.lo_end()), "floor": rational(f)}));
    }
    if let Tail::Truncated(f) = s.tail_hi() {
        obj.insert("upper".into(), json!({"floor": rational(f), "start": int(s.hi_start())}));
    }
    Value::Object(obj)
}

pub fn decode_series(ctx: &Arc<SeriesCtx>, v: &Value, path: &str) -> Result<LaurentSeries> {
    check_keys(v, &["terms", "lower", "upper"], path)?;
    let ring = ctx.ring();
    let (lo, hi) = ctx.window();
    let mut terms = Vec::new();
    for (k, t) in as_array(get(v, "terms", path)?, path)?.iter().enumerate() {
        let tp = format!("{path}.terms[{k}]");
        let pair = as_array(t, &tp)?;
        if pair.len() != 2 {
            return Err(bad(&tp, "expected [exponent, coefficient]"));
        }
        let i = as_i64(&pair[0], &tp)?;
        if i < lo || i > hi {
            return Err(bad(&tp, format!("exponent {i} outside window [{lo}, {hi}]")));
        }
        terms.push((i, decode_coeff(ring, &pair[1], &tp)?));
    }
    let (tail_lo, lo_end) = match v.get("lower") {
        None => (Tail::Exact, lo - 1),
        Some(r) => {
            let rp = format!("{path}.lower");
            check_keys(r, &["end", "floor"], &rp)?;
            (Tail::Truncated(as_q(get(r, "floor", &rp)?, &rp)?), as_i64(get(r, "end", &rp)?, &rp)?)
        }
    };
    let (tail_hi, hi_start) = match v.get("upper") {
        None => (Tail::Exact, hi + 1),
        Some(r) => {
            let rp = format!("{path}.upper");
            check_keys(r, &["start", "floor"], &rp)?;
            (Tail::Truncated(as_q(get(r, "floor", &rp)?, &rp)?), as_i64(get(r, "start", &rp)?, &rp)?)
        }
    };
    LaurentSeries::from_parts(ctx, lo, hi, terms, tail_lo, tail_hi)
        .and_then(|s| s.with_error_regions(lo_end, hi_start))
        .map_err(|e| bad(path, e))
}

pub fn encode_matrix(m: &SeriesMatrix) -> Value {
    let n = m.n();
    Value::Array((0..n).map(|i| Value::Array((0..n).map(|k| encode_series(m.get(i, k))).collect())).collect())
}

pub fn decode_matrix(ctx: &Arc<SeriesCtx>, v: &Value, path: &str) -> Result<SeriesMatrix> {
    let rows = as_array(v, path)?;
    let n = rows.len();
    if n == 0 {
        return Err(bad(path, "empty matrix"));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let row = as_array(row, &rp)?;
        if row.len() != n {
            return Err(bad(&rp, format!("expected {n} entries, found {}", row.len())));
        }
        for (k, e) in row.iter().enumerate() {
            entries.push(decode_series(ctx, e, &format!("{rp}[{k}]"))?);
        }
    }
    SeriesMatrix::from_entries(n, entries).map_err(|e| bad(path, e))
}

pub fn encode_lift(l: &FrobeniusLift) -> Value {
    let mut obj = Map::new();
    obj.insert("q".into(), int(l.q as i64));
    if let Some(img) = &l.image_of_u {
        obj.insert("image_of_u".into(), encode_series(img));
    }
    Value::Object(obj)
}

pub fn decode_lift(ctx: &Arc<SeriesCtx>, v: &Value, path: &str) -> Result<FrobeniusLift> {
    check_keys(v, &["q", "image_of_u"], path)?;
    let q = as_u64(get(v, "q", path)?, path)?;
    if q != ctx.ring().q() {
        return Err(bad(path, format!("q = {q} but the ring has q = {}", ctx.ring().q())));
    }
    match v.get("image_of_u") {
        None => Ok(FrobeniusLift::standard(q)),
        Some(img) => {
            let s = decode_series(ctx, img, &format!("{path}.image_of_u"))?;
            FrobeniusLift::with_image(q, s).map_err(|e| bad(path, e))
        }
    }
}

/// `{"Y", "Z", "r", "floor"}`, with `floor` the certified `w_r(YZ − M)` or
/// `"+inf"`.
pub fn encode_birkhoff(b: &BirkhoffFactorization) -> Value {
    json!({
        "Y": encode_matrix(&b.y),
        "Z": encode_matrix(&b.z),
        "floor": b.achieved_floor.to_string(),
        "r": fmt_q(b.r),
    })
}

pub fn encode_module(m: &SigmaNablaModule) -> Value {
    json!({
        "frob": encode_lift(&m.frob),
        "nconn": encode_matrix(&m.nconn),
        "phi": encode_matrix(&m.phi),
        "ring": m.ring.as_str(),
    })
}

pub fn decode_module(ctx: &Arc<SeriesCtx>, v: &Value, path: &str) -> Result<SigmaNablaModule> {
    check_keys(v, &["frob", "nconn", "phi", "ring"], path)?;
    let phi = decode_matrix(ctx, get(v, "phi", path)?, &format!("{path}.phi"))?;
    let nconn = decode_matrix(ctx, get(v, "nconn", path)?, &format!("{path}.nconn"))?;
    let frob = match v.get("frob") {
        None => FrobeniusLift::standard(ctx.ring().q()),
        Some(f) => decode_lift(ctx, f, &format!("{path}.frob"))?,
    };
    let ring: RingKind = match v.get("ring") {
        None => RingKind::Full,
        Some(r) => as_str(r, path)?.parse().map_err(|e| bad(path, e))?,
    };
    SigmaNablaModule::new(phi, nconn, frob, ring).map_err(|e| bad(path, e))
}

fn encode_fq(f: &FiniteField, x: &[u64]) -> Value {
    if f.degree() == 1 {
        int(x[0] as i64)
    } else {
        Value::Array(x.iter().map(|&c| int(c as i64)).collect())
    }
}

pub fn encode_residue(r: &ResidueMatrix) -> Value {
    let f = r.field();
    let n = r.n();
    let entries: Vec<Value> = (0..n)
        .map(|i| {
            Value::Array(
                (0..n)
                    .map(|k| {
                        let mut obj = Map::new();
                        for j in 0..=r.degree() {
                            let x = r.get(j, i, k);
                            if !f.is_zero(x) {
                                obj.insert(j.to_string(), encode_fq(f, x));
                            }
                        }
                        Value::Object(obj)
                    })
                    .collect(),
            )
        })
        .collect();
    json!({"T": int(r.degree() as i64), "entries": entries, "m": int(f.degree() as i64)})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(m: usize) -> Arc<SeriesCtx> {
        SeriesCtx::with_default_window(CoeffRing::new(5, 1, m, 8).unwrap(), Q::new(1, 2)).unwrap()
    }

    fn cf(val: i64, unit: &[i64]) -> Value {
        json!({"unit": unit.iter().map(|&u| int(u)).collect::<Vec<_>>(), "val": int(val)})
    }

    #[test]
    fn coefficients_round_trip() {
        let c = ctx(1);
        let ring = c.ring();
        for v in [cf(0, &[0]), cf(0, &[1]), cf(0, &[-1]), cf(2, &[1]), cf(-2, &[-7]), cf(-1, &[3]), cf(0, &[195312])] {
            let x = decode_coeff(ring, &v, "x").unwrap();
            assert_eq!(encode_coeff(ring, &x), v, "{v}");
        }
        // 5^8 − 1 is −1 at precision 8
        let x = decode_coeff(ring, &json!("390624"), "x").unwrap();
        assert_eq!(encode_coeff(ring, &x), cf(0, &[-1]));
    }

    #[test]
    fn shorthand_strings_decode() {
        let c = ctx(1);
        let ring = c.ring();
        for (text, val, unit) in [("0", 0, 0), ("25", 2, 1), ("-7/25", -2, -7), ("50", 2, 2)] {
            let x = decode_coeff(ring, &json!(text), "x").unwrap();
            assert_eq!(encode_coeff(ring, &x), cf(val, &[unit]), "{text}");
        }
    }

    #[test]
    fn unit_digits_are_normalized() {
        let c = ctx(2);
        let ring = c.ring();
        let x = decode_coeff(ring, &cf(-2, &[5, 10]), "x").unwrap();
        assert_eq!(x.vp(), Some(-1));
        assert_eq!(encode_coeff(ring, &x), cf(-1, &[1, 2]));
        let y = decode_coeff(ring, &cf(0, &[3]), "y").unwrap();
        assert_eq!(encode_coeff(ring, &y), cf(0, &[3, 0]));
        assert!(decode_coeff(ring, &cf(0, &[1, 2, 3]), "z").is_err());
    }

    #[test]
    fn series_with_error_regions_round_trip() {
        let c = ctx(1);
        let v = json!({
            "terms": [["-2", cf(1, &[1])], ["0", cf(0, &[1])], ["3", cf(0, &[-4])]],
            "upper": {"floor": "21/2", "start": "10"}
        });
        let s = decode_series(&c, &v, "s").unwrap();
        assert_eq!(s.hi_start(), 10);
        assert_eq!(encode_series(&s), v);
    }

    #[test]
    fn rejects_non_p_power_denominator() {
        let c = ctx(1);
        let err = decode_coeff(c.ring(), &json!("1/3"), "inputs.U[0][0]").unwrap_err();
        assert!(err.to_string().contains("inputs.U[0][0]"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_json("{\n  \"a\": [1,\n}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn module_round_trip() {
        let c = ctx(1);
        let v = json!({
            "frob": {"q": "5"},
            "nconn": [[{"terms": []}, {"terms": [["0", cf(0, &[1])]]}], [{"terms": []}, {"terms": []}]],
            "phi": [[{"terms": [["0", cf(0, &[1])]]}, {"terms": []}], [{"terms": []}, {"terms": [["0", cf(1, &[1])]]}]],
            "ring": "R+"
        });
        let m = decode_module(&c, &v, "module").unwrap();
        assert_eq!(encode_module(&m), v);
    }
}
