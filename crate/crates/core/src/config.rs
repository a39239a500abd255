//! Run configuration: strict TOML parsing that reports every violation.

use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use crate::energy::{CaseIISpec, CaseISpec, Nonlinearity};
use crate::error::{Result, SplError};
use crate::mesh::Domain;
use crate::weights::{check_s_range, default_s, embedding_exponents, EmbeddingExponents, Weight, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseKind {
    I,
    II,
}

impl std::str::FromStr for CaseKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "I" | "1" => Ok(CaseKind::I),
            "II" | "2" => Ok(CaseKind::II),
            other => Err(format!("case must be \"I\" or \"II\", got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant { value: f64 },
    Power { alpha: f64 },
    Table { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FSpec {
    Affine { c0: f64, c1: f64 },
    PowerShift { c0: f64, beta: f64 },
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpec {
    Absolute(f64),
    /// Multiple of the estimated Λ (Case II only).
    Relative(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub residual: f64,
    pub defect: f64,
    pub continuation: f64,
    pub barrier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub case: CaseKind,
    pub domain: Domain,
    pub resolution: usize,
    pub weight: WeightSpec,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub lambda: LambdaSpec,
    pub f: Option<FSpec>,
    pub r: Option<f64>,
    pub eps_floor: f64,
    pub k: f64,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub output: PathBuf,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub case: Option<CaseKind>,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub eps_floor: Option<f64>,
    pub k: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn f64(&mut self, t: &mut Table, key: &str, ctx: &str) -> Option<f64> {
        match t.remove(key)? {
            Value::Float(v) => Some(v),
            Value::Integer(v) => Some(v as f64),
            other => {
                self.errors.push(format!("{ctx}{key}: expected a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn string(&mut self, t: &mut Table, key: &str, ctx: &str) -> Option<String> {
        match t.remove(key)? {
            Value::String(v) => Some(v),
            other => {
                self.errors.push(format!("{ctx}{key}: expected a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn uint(&mut self, t: &mut Table, key: &str, ctx: &str) -> Option<u64> {
        match t.remove(key)? {
            Value::Integer(v) if v >= 0 => Some(v as u64),
            other => {
                self.errors.push(format!("{ctx}{key}: expected a nonnegative integer, got {other}"));
                None
            }
        }
    }

    fn table(&mut self, t: &mut Table, key: &str) -> Option<Table> {
        match t.remove(key)? {
            Value::Table(v) => Some(v),
            other => {
                self.errors.push(format!("{key}: expected a table, got {}", other.type_str()));
                None
            }
        }
    }

    fn require<T>(&mut self, v: Option<T>, what: &str) -> Option<T> {
        if v.is_none() {
            self.errors.push(format!("{what}: missing"));
        }
        v
    }

    fn leftovers(&mut self, t: Table, ctx: &str) {
        for key in t.keys() {
            self.errors.push(format!("unknown key `{ctx}{key}`"));
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }
}

fn resolve(base: &Path, p: String) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn parse_domain(rd: &mut Reader, t: Option<Table>) -> Option<Domain> {
    let Some(mut t) = t else {
        return Some(Domain::interval(-1.0, 1.0));
    };
    let kind = rd.string(&mut t, "kind", "domain.").unwrap_or_else(|| "interval".into());
    let d = match kind.as_str() {
        "interval" => {
            let a = rd.f64(&mut t, "a", "domain.").unwrap_or(-1.0);
            let b = rd.f64(&mut t, "b", "domain.").unwrap_or(1.0);
            Some(Domain::interval(a, b))
        }
        "rectangle" => {
            let mut g = |k: &str, d: f64| rd.f64(&mut t, k, "domain.").unwrap_or(d);
            let (x0, x1, y0, y1) = (g("x0", 0.0), g("x1", 1.0), g("y0", 0.0), g("y1", 1.0));
            Some(Domain::Rectangle { x0, x1, y0, y1 })
        }
        "disk" => {
            let radius = rd.f64(&mut t, "radius", "domain.").unwrap_or(1.0);
            Some(Domain::disk(radius))
        }
        other => {
            rd.errors.push(format!("domain.kind: expected \"interval\", \"rectangle\" or \"disk\", got {other:?}"));
            None
        }
    };
    rd.leftovers(t, "domain.");
    if let Some(d) = &d {
        if let Err(e) = d.validate() {
            rd.errors.push(format!("domain: {e}"));
        }
    }
    d
}

fn parse_weight(rd: &mut Reader, t: Option<Table>, base: &Path) -> Option<WeightSpec> {
    let Some(mut t) = t else {
        return Some(WeightSpec::Constant { value: 1.0 });
    };
    let kind = rd.string(&mut t, "kind", "weight.");
    let kind = rd.require(kind, "weight.kind")?;
    let w = match kind.as_str() {
        "constant" => {
            let value = rd.f64(&mut t, "value", "weight.").unwrap_or(1.0);
            rd.check(value > 0.0 && value.is_finite(), || format!("weight.value must be positive, got {value}"));
            Some(WeightSpec::Constant { value })
        }
        "power" => {
            let alpha = rd.f64(&mut t, "alpha", "weight.");
            rd.require(alpha, "weight.alpha").map(|alpha| WeightSpec::Power { alpha })
        }
        "table" => {
            let path = rd.string(&mut t, "path", "weight.");
            rd.require(path, "weight.path").map(|p| WeightSpec::Table { path: resolve(base, p) })
        }
        other => {
            rd.errors.push(format!("weight.kind: expected \"constant\", \"power\" or \"table\", got {other:?}"));
            None
        }
    };
    rd.leftovers(t, "weight.");
    w
}

fn parse_f(rd: &mut Reader, t: Option<Table>, base: &Path) -> Option<FSpec> {
    let Some(mut t) = t else {
        return Some(FSpec::Affine { c0: 1.0, c1: 1.0 });
    };
    let kind = rd.string(&mut t, "kind", "f.");
    let kind = rd.require(kind, "f.kind")?;
    let f = match kind.as_str() {
        "affine" => {
            let c0 = rd.f64(&mut t, "c0", "f.");
            let c1 = rd.f64(&mut t, "c1", "f.");
            match (rd.require(c0, "f.c0"), rd.require(c1, "f.c1")) {
                (Some(c0), Some(c1)) => Some(FSpec::Affine { c0, c1 }),
                _ => None,
            }
        }
        "power_shift" => {
            let c0 = rd.f64(&mut t, "c0", "f.");
            let beta = rd.f64(&mut t, "beta", "f.");
            match (rd.require(c0, "f.c0"), rd.require(beta, "f.beta")) {
                (Some(c0), Some(beta)) => Some(FSpec::PowerShift { c0, beta }),
                _ => None,
            }
        }
        "table" => {
            let path = rd.string(&mut t, "path", "f.");
            rd.require(path, "f.path").map(|p| FSpec::Table { path: resolve(base, p) })
        }
        other => {
            rd.errors.push(format!("f.kind: expected \"affine\", \"power_shift\" or \"table\", got {other:?}"));
            None
        }
    };
    rd.leftovers(t, "f.");
    f
}

impl WeightSpec {
    pub fn build(&self, n: usize, p: f64) -> Result<Weight> {
        match self {
            WeightSpec::Constant { value } => Weight::constant(*value, n, p),
            WeightSpec::Power { alpha } => Weight::power(*alpha, n, p),
            WeightSpec::Table { path } => Weight::table(WeightTable::from_csv(path)?, p),
        }
    }
}

impl FSpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        match self {
            FSpec::Affine { c0, c1 } => Ok(Nonlinearity::Affine { c0: *c0, c1: *c1 }),
            FSpec::PowerShift { c0, beta } => Ok(Nonlinearity::PowerShift { c0: *c0, beta: *beta }),
            FSpec::Table { path } => Nonlinearity::table_from_csv(path),
        }
    }
}

/// Default floor of the dyadic ε schedule.
pub const DEFAULT_EPS_FLOOR: f64 = 9.5367431640625e-7;

const TOP_KEYS: [&str; 15] = [
    "case", "domain", "resolution", "weight", "s", "p", "q", "lambda", "lambda_rel", "f", "r", "eps_floor", "k", "seed", "output",
];

impl RunConfig {
    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SplError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str_with(&text, base, overrides)
    }

    /// Parses `text`; relative table paths resolve against `base`.
    pub fn from_str_with(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let mut t: Table = text
            .parse()
            .map_err(|e: toml::de::Error| SplError::Config(vec![format!("syntax: {}", e.message())]))?;
        apply_overrides(&mut t, overrides);
        let mut rd = Reader { errors: Vec::new() };
        let case = match rd.string(&mut t, "case", "") {
            Some(s) => s.parse::<CaseKind>().map_err(|e| rd.errors.push(e)).ok(),
            None => {
                rd.errors.push("case: missing (\"I\" or \"II\")".into());
                None
            }
        };
        let domain_t = rd.table(&mut t, "domain");
        let domain = parse_domain(&mut rd, domain_t);
        let resolution = rd.uint(&mut t, "resolution", "").unwrap_or(512) as usize;
        rd.check(resolution >= 2, || format!("resolution must be at least 2, got {resolution}"));
        let weight_t = rd.table(&mut t, "weight");
        let weight = parse_weight(&mut rd, weight_t, base);
        let p = rd.f64(&mut t, "p", "").unwrap_or(2.0);
        let q = rd.f64(&mut t, "q", "").unwrap_or(0.5);
        rd.check(p > 1.0 && p.is_finite(), || format!("p must exceed 1, got {p}"));
        rd.check(q > 0.0 && q < 1.0, || format!("q must lie in (0,1), got {q}"));
        let s_given = rd.f64(&mut t, "s", "");
        let lambda_abs = rd.f64(&mut t, "lambda", "");
        let lambda_rel = rd.f64(&mut t, "lambda_rel", "");
        let f_t = rd.table(&mut t, "f");
        let r = rd.f64(&mut t, "r", "");
        let eps_floor = rd.f64(&mut t, "eps_floor", "");
        let k = rd.f64(&mut t, "k", "");
        let seed = rd.uint(&mut t, "seed", "").unwrap_or(0);
        let output = rd.string(&mut t, "output", "").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
        let tol_t = rd.table(&mut t, "tolerances");
        for key in t.keys() {
            let msg = if TOP_KEYS.contains(&key.as_str()) {
                format!("key `{key}` given twice")
            } else {
                format!("unknown key `{key}`")
            };
            rd.errors.push(msg);
        }
        let case = case.unwrap_or(CaseKind::I);
        let lambda = match (lambda_abs, lambda_rel) {
            (Some(_), Some(_)) => {
                rd.errors.push("lambda and lambda_rel are mutually exclusive".into());
                LambdaSpec::Absolute(1.0)
            }
            (Some(l), None) => {
                rd.check(l > 0.0 && l.is_finite(), || format!("lambda must be positive, got {l}"));
                LambdaSpec::Absolute(l)
            }
            (None, Some(l)) => {
                rd.check(case == CaseKind::II, || "lambda_rel applies to case II only".into());
                rd.check(l > 0.0 && l.is_finite(), || format!("lambda_rel must be positive, got {l}"));
                LambdaSpec::Relative(l)
            }
            (None, None) => match case {
                CaseKind::I => LambdaSpec::Absolute(1.0),
                CaseKind::II => LambdaSpec::Relative(0.1),
            },
        };
        let f = match case {
            CaseKind::I => parse_f(&mut rd, f_t, base),
            CaseKind::II => {
                if f_t.is_some() {
                    rd.errors.push("f applies to case I only".into());
                }
                None
            }
        };
        if case == CaseKind::I {
            for (key, given) in [("r", r.is_some()), ("eps_floor", eps_floor.is_some()), ("k", k.is_some())] {
                rd.check(!given, || format!("{key} applies to case II only"));
            }
        }
        let eps_floor = eps_floor.unwrap_or(DEFAULT_EPS_FLOOR);
        rd.check(eps_floor > 0.0 && eps_floor <= 0.5, || format!("eps_floor must lie in (0, 0.5], got {eps_floor}"));
        let k = k.unwrap_or(0.5);
        rd.check(k > 0.0 && k < 1.0, || format!("k must lie in (0,1), got {k}"));
        let tolerances = parse_tolerances(&mut rd, tol_t, case);
        // weight-dependent checks need a weight that can be built
        let n = domain.as_ref().map_or(1, Domain::dim);
        let built = match (&weight, p > 1.0 && p.is_finite()) {
            (Some(ws), true) => match ws.build(n, p) {
                Ok(w) => {
                    rd.check(w.dim() == n, || format!("weight dimension {} does not match the domain dimension {n}", w.dim()));
                    Some(w)
                }
                Err(e) => {
                    rd.errors.push(format!("weight: {e}"));
                    None
                }
            },
            _ => None,
        };
        let s = match (s_given, &built) {
            (Some(s), _) => s,
            (None, Some(w)) => default_s(w),
            (None, None) => 1.0 / (p - 1.0) + 0.5,
        };
        let exps = if p > 1.0 && p.is_finite() {
            match check_s_range(s, p, n).and_then(|_| embedding_exponents(p, s, n)) {
                Ok(e) => Some(e),
                Err(e) => {
                    rd.errors.push(format!("s: {e}"));
                    None
                }
            }
        } else {
            None
        };
        let r = match case {
            CaseKind::II => {
                let r = r.unwrap_or(3.0);
                if let Some(exps) = &exps {
                    check_r(&mut rd, p, q, r, exps);
                }
                Some(r)
            }
            CaseKind::I => None,
        };
        if let (CaseKind::I, Some(fs), LambdaSpec::Absolute(lambda)) = (case, &f, lambda) {
            if p > 1.0 && q > 0.0 && q < 1.0 && lambda > 0.0 {
                match fs.build() {
                    Ok(f) => {
                        if let Err(e) = (CaseISpec { p, q, lambda, f }).validate() {
                            rd.errors.push(format!("f: {e}"));
                        }
                    }
                    Err(e) => rd.errors.push(format!("f: {e}")),
                }
            }
        }
        if !rd.errors.is_empty() {
            return Err(SplError::Config(rd.errors));
        }
        Ok(RunConfig {
            case,
            domain: domain.expect("checked above"),
            resolution,
            weight: weight.expect("checked above"),
            s,
            p,
            q,
            lambda,
            f,
            r,
            eps_floor,
            k,
            seed,
            tolerances,
            output,
        })
    }

    pub fn exponents(&self) -> Result<EmbeddingExponents> {
        embedding_exponents(self.p, self.s, self.domain.dim())
    }

    /// Exponent j_max of the schedule 2^{-1}, ..., 2^{-j_max} ≥ eps_floor.
    pub fn schedule_floor(&self) -> u32 {
        (-self.eps_floor.log2() + 1e-12).floor().max(1.0) as u32
    }
}

fn check_r(rd: &mut Reader, p: f64, q: f64, r: f64, exps: &EmbeddingExponents) {
    let spec = CaseIISpec { p, q, r, lambda: 1.0, eps: 0.0 };
    if let Err(SplError::InvalidParameter { reason, .. }) = spec.check_r(exps) {
        rd.errors.push(reason);
    }
}

fn parse_tolerances(rd: &mut Reader, t: Option<Table>, case: CaseKind) -> Tolerances {
    let (res, cont) = match case {
        CaseKind::I => (1e-6, 1e-8),
        CaseKind::II => (1e-5, 1e-6),
    };
    let mut out = Tolerances {
        residual: res,
        defect: 1e-8,
        continuation: cont,
        barrier: 1e-8,
    };
    let Some(mut t) = t else {
        return out;
    };
    for (key, slot) in [
        ("residual", &mut out.residual),
        ("defect", &mut out.defect),
        ("continuation", &mut out.continuation),
        ("barrier", &mut out.barrier),
    ] {
        if let Some(v) = rd.f64(&mut t, key, "tolerances.") {
            if v > 0.0 && v.is_finite() {
                *slot = v;
            } else {
                rd.errors.push(format!("tolerances.{key} must be positive, got {v}"));
            }
        }
    }
    rd.leftovers(t, "tolerances.");
    out
}

fn apply_overrides(t: &mut Table, o: &Overrides) {
    let mut set = |k: &str, v: Value| {
        t.insert(k.to_string(), v);
    };
    if let Some(c) = o.case {
        set("case", Value::String(if c == CaseKind::I { "I" } else { "II" }.into()));
    }
    if let Some(l) = o.lambda {
        t.remove("lambda_rel");
        t.insert("lambda".into(), Value::Float(l));
    }
    let mut set = |k: &str, v: Value| {
        t.insert(k.to_string(), v);
    };
    for (k, v) in [("q", o.q), ("r", o.r), ("p", o.p), ("eps_floor", o.eps_floor), ("k", o.k)] {
        if let Some(v) = v {
            set(k, Value::Float(v));
        }
    }
    if let Some(s) = o.seed {
        set("seed", Value::Integer(s as i64));
    }
    if let Some(out) = &o.output {
        set("output", Value::String(out.to_string_lossy().into_owned()));
    }
}
