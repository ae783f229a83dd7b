//! Pipeline documents and their execution into deterministic reports.
//!
//! A document names a ring, a task, options and inputs:
//!
//! ```json
//! {
//!   "ring": {"p": "5", "a": "1", "m": "1", "N": "12"},
//!   "task": "factor",
//!   "options": {"r": "1/2", "window": ["-40", "40"], "seed": "0"},
//!   "inputs": {"U": [[{"terms": [["0", {"unit": ["1"], "val": "0"}]]}]]}
//! }
//! ```
//!
//! Coefficients may also be written as `"num/den"` strings; emitted documents
//! always use the object form.
//!
//! Inputs per task: `factor` takes `U`, `unitroot` takes `Phi`, `verify` takes
//! `module`, `reduce` takes `module` and `witness` (`{"U": …, "target": {"phi",
//! "nconn"}}`). Any task may instead take `{"generate": {"kind", "n", "depth"}}`,
//! drawn from `options.seed`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::coeff::CoeffRing;
use crate::doc::{
    as_array, as_i64, as_q, as_str, as_u64, check_keys, decode_matrix, decode_module, encode_birkhoff, encode_matrix, encode_module,
    encode_residue, get, int, parse_json, rational, to_canonical,
};
use crate::error::{Error, Result};
use crate::factor::{approximate_inverse, factor_full_with};
use crate::fixtures;
use crate::series::{GaussValue, SeriesCtx, SeriesMatrix, Q};
use crate::sigma_nabla::{base_change, check_compatibility, is_nilpotent, semistable_reduce, RingKind, SigmaNablaModule, UnipotenceWitness};
use crate::unitroot::{steps_for, unit_root_reduce, verify_descent, ResidueMatrix, DEFAULT_MAX_DEGREE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Factor,
    Reduce,
    UnitRoot,
    Verify,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Factor => "factor",
            Task::Reduce => "reduce",
            Task::UnitRoot => "unitroot",
            Task::Verify => "verify",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "factor" => Ok(Task::Factor),
            "reduce" => Ok(Task::Reduce),
            "unitroot" => Ok(Task::UnitRoot),
            "verify" => Ok(Task::Verify),
            _ => Err(Error::Document(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingParams {
    pub p: u64,
    pub a: u32,
    pub m: usize,
    pub prec: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    pub r: Q,
    pub window: (i64, i64),
    pub max_iters: usize,
    /// `u`-degree the unit-root descent is carried to.
    pub degree: usize,
    /// Largest residue degree searched by the unit-root descent.
    pub max_m: usize,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            r: Q::new(1, 2),
            window: (-40, 40),
            max_iters: crate::factor::DEFAULT_MAX_ITERS,
            degree: 30,
            max_m: DEFAULT_MAX_DEGREE,
            seed: 0,
        }
    }
}

/// Seeded input generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    /// `I + E` with `w_r(E) ≥ r`.
    NearIdentity,
    /// Laurent-polynomial unit times plus unit.
    LaurentTimesPlus,
    /// Plus unit with integral coefficients, a unit-root Frobenius.
    PlusUnit,
    /// Constant unipotent module.
    UnipotentConstants,
    /// Constant unipotent module in a twisted basis, with its witness.
    TwistedUnipotent,
}

impl GenKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GenKind::NearIdentity => "near_identity",
            GenKind::LaurentTimesPlus => "laurent_times_plus",
            GenKind::PlusUnit => "plus_unit",
            GenKind::UnipotentConstants => "unipotent_constants",
            GenKind::TwistedUnipotent => "twisted_unipotent",
        }
    }

    fn parse(s: &str, path: &str) -> Result<Self> {
        Ok(match s {
            "near_identity" => GenKind::NearIdentity,
            "laurent_times_plus" => GenKind::LaurentTimesPlus,
            "plus_unit" => GenKind::PlusUnit,
            "unipotent_constants" => GenKind::UnipotentConstants,
            "twisted_unipotent" => GenKind::TwistedUnipotent,
            _ => return Err(Error::Document(format!("{path}: unknown generator {s:?}"))),
        })
    }

    fn fits(&self, task: Task) -> bool {
        matches!(
            (task, self),
            (Task::Factor, GenKind::NearIdentity | GenKind::LaurentTimesPlus)
                | (Task::UnitRoot, GenKind::PlusUnit)
                | (Task::Reduce, GenKind::TwistedUnipotent)
                | (Task::Verify, GenKind::UnipotentConstants | GenKind::TwistedUnipotent)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Generate {
    pub kind: GenKind,
    pub n: usize,
    pub depth: i64,
}

#[derive(Clone, Debug)]
pub enum Inputs {
    /// `U` for `factor`, `Phi` for `unitroot`.
    Matrix(SeriesMatrix),
    Module { module: Box<SigmaNablaModule>, witness: Option<UnipotenceWitness> },
    Generate(Generate),
}

#[derive(Clone, Debug)]
pub struct PipelineDoc {
    pub ring: RingParams,
    pub task: Task,
    pub options: Options,
    pub inputs: Inputs,
    ctx: Arc<SeriesCtx>,
}

fn doc_err(path: &str, msg: impl fmt::Display) -> Error {
    Error::Document(format!("{path}: {msg}"))
}

fn small<T: TryFrom<u64>>(v: &Value, path: &str) -> Result<T> {
    T::try_from(as_u64(v, path)?).map_err(|_| doc_err(path, "out of range"))
}

impl PipelineDoc {
    pub fn new(ring: RingParams, task: Task, options: Options, inputs: Inputs) -> Result<Self> {
        let ctx = make_ctx(&ring, &options)?;
        Ok(PipelineDoc { ring, task, options, inputs, ctx })
    }

    pub fn ctx(&self) -> &Arc<SeriesCtx> {
        &self.ctx
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_value(&parse_json(text)?)
    }

    /// Parses with the task and `options.seed` replaced before validation.
    pub fn parse_with(text: &str, task: Option<Task>, seed: Option<u64>) -> Result<Self> {
        let mut v = parse_json(text)?;
        if let Value::Object(obj) = &mut v {
            if let Some(t) = task {
                obj.insert("task".into(), Value::String(t.as_str().into()));
            }
            if let Some(s) = seed {
                let options = obj.entry("options").or_insert_with(|| Value::Object(Map::new()));
                if let Value::Object(o) = options {
                    o.insert("seed".into(), Value::String(s.to_string()));
                }
            }
        }
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        check_keys(v, &["ring", "task", "options", "inputs"], "document")?;
        let rv = get(v, "ring", "document")?;
        check_keys(rv, &["p", "a", "m", "N"], "ring")?;
        let ring = RingParams {
            p: as_u64(get(rv, "p", "ring")?, "ring.p")?,
            a: small(get(rv, "a", "ring")?, "ring.a")?,
            m: small(get(rv, "m", "ring")?, "ring.m")?,
            prec: small(get(rv, "N", "ring")?, "ring.N")?,
        };
        let task: Task = as_str(get(v, "task", "document")?, "task")?.parse()?;
        let mut options = Options::default();
        if let Some(ov) = v.get("options") {
            check_keys(ov, &["r", "window", "max_iters", "degree", "max_m", "seed"], "options")?;
            if let Some(x) = ov.get("r") {
                options.r = as_q(x, "options.r")?;
            }
            if let Some(x) = ov.get("window") {
                let w = as_array(x, "options.window")?;
                if w.len() != 2 {
                    return Err(doc_err("options.window", "expected [lo, hi]"));
                }
                options.window = (as_i64(&w[0], "options.window[0]")?, as_i64(&w[1], "options.window[1]")?);
            }
            if let Some(x) = ov.get("max_iters") {
                options.max_iters = small(x, "options.max_iters")?;
            }
            if let Some(x) = ov.get("degree") {
                options.degree = small(x, "options.degree")?;
            }
            if let Some(x) = ov.get("max_m") {
                options.max_m = small(x, "options.max_m")?;
            }
            if let Some(x) = ov.get("seed") {
                options.seed = as_u64(x, "options.seed")?;
            }
        }
        let ctx = make_ctx(&ring, &options)?;
        let inputs = parse_inputs(&ctx, task, get(v, "inputs", "document")?)?;
        Ok(PipelineDoc { ring, task, options, inputs, ctx })
    }

    pub fn to_value(&self) -> Value {
        let o = &self.options;
        let inputs = match &self.inputs {
            Inputs::Matrix(m) => {
                let key = if self.task == Task::UnitRoot { "Phi" } else { "U" };
                json!({ key: encode_matrix(m) })
            }
            Inputs::Module { module, witness } => {
                let mut obj = Map::new();
                obj.insert("module".into(), encode_module(module));
                if let Some(w) = witness {
                    let mut wo = Map::new();
                    wo.insert("U".into(), encode_matrix(&w.u));
                    if let Some((tp, tn)) = &w.target {
                        wo.insert("target".into(), json!({"nconn": encode_matrix(tn), "phi": encode_matrix(tp)}));
                    }
                    obj.insert("witness".into(), Value::Object(wo));
                }
                Value::Object(obj)
            }
            Inputs::Generate(g) => json!({"generate": {"depth": int(g.depth), "kind": g.kind.as_str(), "n": int(g.n as i64)}}),
        };
        json!({
            "inputs": inputs,
            "options": {
                "degree": int(o.degree as i64),
                "max_iters": int(o.max_iters as i64),
                "max_m": int(o.max_m as i64),
                "r": rational(o.r),
                "seed": o.seed.to_string(),
                "window": [int(o.window.0), int(o.window.1)],
            },
            "ring": {
                "N": int(self.ring.prec as i64),
                "a": int(self.ring.a as i64),
                "m": int(self.ring.m as i64),
                "p": self.ring.p.to_string(),
            },
            "task": self.task.as_str(),
        })
    }

    /// Canonical text of the document.
    pub fn emit(&self) -> String {
        to_canonical(&self.to_value())
    }
}

fn make_ctx(ring: &RingParams, options: &Options) -> Result<Arc<SeriesCtx>> {
    let cr = CoeffRing::new(ring.p, ring.a, ring.m, ring.prec)?;
    SeriesCtx::new(cr, options.r, options.window.0, options.window.1)
}

fn parse_witness(ctx: &Arc<SeriesCtx>, v: &Value) -> Result<UnipotenceWitness> {
    check_keys(v, &["U", "target"], "inputs.witness")?;
    let u = decode_matrix(ctx, get(v, "U", "inputs.witness")?, "inputs.witness.U")?;
    let target = match v.get("target") {
        None => None,
        Some(t) => {
            check_keys(t, &["phi", "nconn"], "inputs.witness.target")?;
            let tp = decode_matrix(ctx, get(t, "phi", "inputs.witness.target")?, "inputs.witness.target.phi")?;
            let tn = decode_matrix(ctx, get(t, "nconn", "inputs.witness.target")?, "inputs.witness.target.nconn")?;
            Some((tp, tn))
        }
    };
    Ok(UnipotenceWitness { u, target })
}

fn parse_inputs(ctx: &Arc<SeriesCtx>, task: Task, v: &Value) -> Result<Inputs> {
    if let Some(g) = v.get("generate") {
        check_keys(v, &["generate"], "inputs")?;
        check_keys(g, &["kind", "n", "depth"], "inputs.generate")?;
        let kind = GenKind::parse(as_str(get(g, "kind", "inputs.generate")?, "inputs.generate.kind")?, "inputs.generate.kind")?;
        if !kind.fits(task) {
            return Err(doc_err("inputs.generate.kind", format!("{} does not produce inputs for {task}", kind.as_str())));
        }
        let n: usize = small(get(g, "n", "inputs.generate")?, "inputs.generate.n")?;
        if n == 0 {
            return Err(doc_err("inputs.generate.n", "rank must be positive"));
        }
        let depth = match g.get("depth") {
            Some(d) => as_i64(d, "inputs.generate.depth")?,
            None => 2,
        };
        return Ok(Inputs::Generate(Generate { kind, n, depth }));
    }
    match task {
        Task::Factor => {
            check_keys(v, &["U"], "inputs")?;
            Ok(Inputs::Matrix(decode_matrix(ctx, get(v, "U", "inputs")?, "inputs.U")?))
        }
        Task::UnitRoot => {
            check_keys(v, &["Phi"], "inputs")?;
            Ok(Inputs::Matrix(decode_matrix(ctx, get(v, "Phi", "inputs")?, "inputs.Phi")?))
        }
        Task::Verify | Task::Reduce => {
            let allowed: &[&str] = if task == Task::Reduce { &["module", "witness"] } else { &["module"] };
            check_keys(v, allowed, "inputs")?;
            let module = decode_module(ctx, get(v, "module", "inputs")?, "inputs.module")?;
            let witness = match task {
                Task::Reduce => Some(parse_witness(ctx, get(v, "witness", "inputs")?)?),
                _ => None,
            };
            Ok(Inputs::Module { module: Box::new(module), witness })
        }
    }
}

/// One pass/fail line of a report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of [`run`]. Wall-clock timings are kept apart from the serialized
/// form so that reports are byte-identical across runs.
#[derive(Clone, Debug)]
pub struct Report {
    pub echo: Value,
    pub outputs: Map<String, Value>,
    /// Certified Gauss values and residuals, by name.
    pub values: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub timings: Vec<(String, Duration)>,
}

impl Report {
    fn new(echo: Value) -> Self {
        Report { echo, outputs: Map::new(), values: BTreeMap::new(), checks: Vec::new(), error: None, timings: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    fn value(&mut self, name: &str, v: impl fmt::Display) {
        self.values.insert(name.into(), v.to_string());
    }

    pub fn to_value(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({"detail": c.detail, "name": c.name, "pass": c.pass}))
            .collect();
        let mut obj = Map::new();
        obj.insert("checks".into(), Value::Array(checks));
        obj.insert("document".into(), self.echo.clone());
        if let Some(e) = &self.error {
            obj.insert("error".into(), Value::String(e.clone()));
        }
        obj.insert("outputs".into(), Value::Object(self.outputs.clone()));
        obj.insert("status".into(), Value::String(if self.passed() { "pass" } else { "fail" }.into()));
        obj.insert("values".into(), json!(self.values));
        Value::Object(obj)
    }

    pub fn to_json(&self) -> String {
        to_canonical(&self.to_value())
    }
}

/// Executes the document's task. Task failures are recorded in the report, not
/// returned as errors.
pub fn run(doc: &PipelineDoc) -> Report {
    let mut report = Report::new(doc.to_value());
    let start = Instant::now();
    let outcome = resolve(doc).and_then(|inputs| match doc.task {
        Task::Factor => run_factor(doc, &inputs, &mut report),
        Task::Reduce => run_reduce(doc, &inputs, &mut report),
        Task::UnitRoot => run_unitroot(doc, &inputs, &mut report),
        Task::Verify => run_verify(&inputs, &mut report),
    });
    if let Err(e) = outcome {
        report.error = Some(e.to_string());
    }
    report.timings.push((doc.task.as_str().into(), start.elapsed()));
    report
}

/// Inputs with any generator drawn from the seed.
fn resolve(doc: &PipelineDoc) -> Result<Inputs> {
    let Inputs::Generate(g) = &doc.inputs else {
        return Ok(doc.inputs.clone());
    };
    let ctx = &doc.ctx;
    let mut rng = ChaCha8Rng::seed_from_u64(doc.options.seed);
    let n = g.n;
    Ok(match g.kind {
        GenKind::NearIdentity => Inputs::Matrix(fixtures::random_near_identity(ctx, n, &mut rng, doc.options.r, g.depth)),
        GenKind::LaurentTimesPlus => {
            let v = fixtures::random_laurent_unit(ctx, n, &mut rng, g.depth);
            let w = fixtures::random_plus_unit(ctx, n, &mut rng, g.depth);
            Inputs::Matrix(v.mul(&w)?)
        }
        GenKind::PlusUnit => Inputs::Matrix(fixtures::random_plus_unit(ctx, n, &mut rng, g.depth)),
        GenKind::UnipotentConstants => {
            Inputs::Module { module: Box::new(fixtures::random_unipotent_constants(ctx, n, &mut rng)), witness: None }
        }
        GenKind::TwistedUnipotent => {
            let constants = fixtures::random_unipotent_constants(ctx, n, &mut rng);
            let t = fixtures::random_twist(ctx, n, &mut rng, g.depth);
            let module = base_change(&constants, &t.inverse()?)?;
            let witness = UnipotenceWitness { u: t, target: Some((constants.phi, constants.nconn)) };
            Inputs::Module { module: Box::new(module), witness: Some(witness) }
        }
    })
}

fn monotone(seq: &[GaussValue]) -> bool {
    seq.windows(2).all(|p| match (p[0].w, p[1].w) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => b > a,
    })
}

fn run_factor(doc: &PipelineDoc, inputs: &Inputs, report: &mut Report) -> Result<()> {
    let Inputs::Matrix(u) = inputs else {
        return Err(Error::Document("factor expects a matrix U".into()));
    };
    let r = doc.options.r;
    let id = SeriesMatrix::identity(&doc.ctx, u.n());
    if matches!(doc.inputs, Inputs::Generate(_)) {
        report.outputs.insert("U".into(), encode_matrix(u));
    }
    let x = approximate_inverse(u, r)?;
    let xu = x.mul(u)?.sub(&id)?.gauss_norm(r)?;
    report.value("w_r(XU - I)", xu);
    report.check("approximate_inverse.contracts", xu.exceeds(Q::from_integer(0)), format!("w_r(XU - I) = {xu}"));
    let f = factor_full_with(u, r, doc.options.max_iters)?;
    let b = &f.birkhoff;
    let seq: Vec<String> = b.contraction.iter().map(|g| g.to_string()).collect();
    report.value("birkhoff.contraction", seq.join(", "));
    report.value("birkhoff.w_r(YZ - XU)", b.achieved_floor);
    report.check("birkhoff.contraction_increasing", monotone(&b.contraction), seq.join(" -> "));
    let ym = b.y.sub(&id)?;
    report.check("birkhoff.y_strict_minus", ym.is_strict_minus(), "Y - I has only negative exponents");
    report.check("birkhoff.z_plus", b.z.is_plus(), "Z has only nonnegative exponents");
    report.check("v_laurent_polynomial", f.v.is_laurent_polynomial(), "V has no error regions");
    report.check("w_plus", f.w.is_plus(), "W has only nonnegative exponents");
    report.value("w_r(VW - U)", f.achieved_floor);
    report.check(
        "reconstruction",
        f.achieved_floor.exceeds(Q::from_integer(0)),
        format!("w_r(VW - U) = {}", f.achieved_floor),
    );
    report.outputs.insert("birkhoff".into(), encode_birkhoff(b));
    report.outputs.insert("V".into(), encode_matrix(&f.v));
    report.outputs.insert("W".into(), encode_matrix(&f.w));
    Ok(())
}

fn run_reduce(doc: &PipelineDoc, inputs: &Inputs, report: &mut Report) -> Result<()> {
    let Inputs::Module { module, witness: Some(witness) } = inputs else {
        return Err(Error::Document("reduce expects a module and a witness".into()));
    };
    if matches!(doc.inputs, Inputs::Generate(_)) {
        report.outputs.insert("module_in".into(), encode_module(module));
        report.outputs.insert("witness_U".into(), encode_matrix(&witness.u));
    }
    let before = check_compatibility(module)?;
    report.value("input compatibility residual", before.residual);
    report.check("input_compatibility", before.holds, format!("residual w_r = {}", before.residual));
    let red = semistable_reduce(module, witness, doc.options.r)?;
    report.check("witness_constants", true, "U^-1 Phi U^sigma and U^-1 N U + U^-1 theta(U) are integral constants");
    report.value("w_r(V_path - W_path) Phi", red.phi_agreement);
    report.value("w_r(V_path - W_path) N", red.nconn_agreement);
    report.check(
        "paths_agree",
        true,
        format!("Phi: {}, N: {}", red.phi_agreement, red.nconn_agreement),
    );
    report.value("w_r(VW - U)", red.factorization.achieved_floor);
    report.check(
        "factorization",
        red.factorization.achieved_floor.exceeds(Q::from_integer(0)),
        format!("w_r(VW - U) = {}", red.factorization.achieved_floor),
    );
    let plus = red.module.phi.is_plus() && red.module.nconn.is_plus();
    report.check("output_plus_only", plus, "Phi and N have only nonnegative exponents");
    report.value("output compatibility residual", red.compatibility.residual);
    report.check("output_compatibility", red.compatibility.holds, format!("residual w_r = {}", red.compatibility.residual));
    report.check("residue_nilpotent", red.residue_nilpotent, "N(0)^n has no certified nonzero term");
    report.outputs.insert("module".into(), encode_module(&red.module));
    report.outputs.insert("residue".into(), encode_matrix(&red.residue));
    report.outputs.insert("V".into(), encode_matrix(&red.factorization.v));
    report.outputs.insert("W".into(), encode_matrix(&red.factorization.w));
    Ok(())
}

fn run_unitroot(doc: &PipelineDoc, inputs: &Inputs, report: &mut Report) -> Result<()> {
    let Inputs::Matrix(phi) = inputs else {
        return Err(Error::Document("unitroot expects a matrix Phi".into()));
    };
    if matches!(doc.inputs, Inputs::Generate(_)) {
        report.outputs.insert("Phi".into(), encode_matrix(phi));
    }
    let desc = unit_root_reduce(phi, doc.options.degree, doc.options.max_m)?;
    let p = doc.ring.p;
    // d > 1/(p − 1) ≥ d − 1
    let bound = Q::new(1, p as i64 - 1);
    let d = Q::from_integer(desc.d as i64);
    report.check(
        "d_minimal",
        desc.d == steps_for(p) && d > bound && d - Q::from_integer(1) <= bound,
        format!("d = {} for p = {p}", desc.d),
    );
    let residual = desc.residual.map_or("+inf".to_string(), |v| v.to_string());
    report.value("v_p(C^-1 Phi C^sigma - I)", &residual);
    report.check(
        "residual_at_least_d",
        desc.residual.is_none_or(|v| v >= desc.d as i64),
        format!("v_p = {residual} through u^{}", desc.degree),
    );
    let back = verify_descent(phi, &desc);
    let back_text = match &back {
        Ok(v) => v.map_or("+inf".to_string(), |v| v.to_string()),
        Err(e) => e.to_string(),
    };
    report.value("v_p(Phi C^sigma - C)", &back_text);
    report.check(
        "substitute_back",
        matches!(back, Ok(v) if v.is_none_or(|v| v >= desc.d as i64)),
        format!("series recomputation gives v_p = {back_text}"),
    );
    let c0 = ResidueMatrix::from_fn(desc.c.ctx().ring().residue_field(), desc.c.n(), 0, |_, i, k| {
        let x = desc.c.get(i, k).coeff(0).unwrap_or_else(crate::coeff::CoeffElem::zero);
        desc.c.ctx().ring().residue(&x).unwrap_or_else(|_| desc.c.ctx().ring().residue_field().zero())
    });
    report.check("c_invertible", c0.is_invertible(), "C(0) invertible modulo p");
    report.outputs.insert("d".into(), int(desc.d as i64));
    report.outputs.insert("m".into(), int(desc.m as i64));
    report.outputs.insert("C".into(), encode_matrix(&desc.c));
    report.outputs.insert("C0_residue".into(), encode_residue(&c0));
    report.outputs.insert("transcript".into(), json!(desc.transcript));
    Ok(())
}

fn run_verify(inputs: &Inputs, report: &mut Report) -> Result<()> {
    let Inputs::Module { module, .. } = inputs else {
        return Err(Error::Document("verify expects a module".into()));
    };
    let check = check_compatibility(module)?;
    report.value("compatibility residual", check.residual);
    report.check("compatibility", check.holds, format!("residual w_r = {}", check.residual));
    let member = match module.ring {
        RingKind::Plus => module.phi.is_plus() && module.nconn.is_plus(),
        RingKind::Localization => module.phi.is_laurent_polynomial() && module.nconn.is_laurent_polynomial(),
        RingKind::Full => true,
    };
    report.check("ring_membership", member, format!("entries lie in {}", module.ring));
    if module.nconn.is_plus() {
        let nil = is_nilpotent(&module.residue()?)?;
        report.check("residue_nilpotent", nil, "N(0)^n has no certified nonzero term");
    }
    report.outputs.insert("module".into(), encode_module(module));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_doc() -> String {
        r#"{"inputs": {"U": [[{"terms": [["0", "1"]]}, {"terms": []}], [{"terms": []}, {"terms": [["0", "1"]]}]]},
            "ring": {"N": "12", "a": "1", "m": "1", "p": "5"}, "task": "factor"}"#
            .into()
    }

    #[test]
    fn emit_parse_round_trip() {
        let doc = PipelineDoc::parse(&identity_doc()).unwrap();
        let text = doc.emit();
        assert_eq!(PipelineDoc::parse(&text).unwrap().emit(), text);
    }

    #[test]
    fn factor_identity_passes() {
        let doc = PipelineDoc::parse(&identity_doc()).unwrap();
        let report = run(&doc);
        assert!(report.passed(), "{}", report.to_json());
        let id = encode_matrix(&SeriesMatrix::identity(doc.ctx(), 2));
        assert_eq!(report.outputs["V"], id);
        assert_eq!(report.outputs["W"], id);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = identity_doc().replace("\"task\"", "\"tsak\": \"x\", \"task\"");
        assert!(matches!(PipelineDoc::parse(&text), Err(Error::Document(_))));
    }

    #[test]
    fn generator_must_fit_task() {
        let text = r#"{"inputs": {"generate": {"kind": "plus_unit", "n": "2"}},
            "ring": {"N": "12", "a": "1", "m": "1", "p": "5"}, "task": "reduce"}"#;
        assert!(PipelineDoc::parse(text).is_err());
    }

    #[test]
    fn task_errors_are_embedded() {
        let text = r#"{"inputs": {"Phi": [[{"terms": [["0", "5"]]}]]},
            "ring": {"N": "12", "a": "1", "m": "1", "p": "5"}, "task": "unitroot"}"#;
        let report = run(&PipelineDoc::parse(text).unwrap());
        assert!(!report.passed());
        assert!(report.error.as_deref().unwrap().contains("unit-root"));
    }
}
