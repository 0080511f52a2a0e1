//! Named, parametrized example operators with machine-checked facts, the
//! Markov semigroup grid simulator, and the seeded property suites.
//!
//! Every case returns a [`CaseReport`] listing each checked fact with its
//! measured and expected values. Facts about infinite-dimensional objects
//! are checked on finite truncations and tagged `demonstration`.

pub mod cases;
pub mod compactification;
pub mod examples;
pub mod semigroup;
pub mod subgroup;
pub mod suites;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

pub type Params = Map<String, Value>;

#[derive(Debug, Error)]
pub enum GalleryError {
    #[error("unknown case: {0}")]
    UnknownCase(String),
    #[error("case {0} is registered but not implemented")]
    Unimplemented(String),
    #[error("unknown suite: {0}")]
    UnknownSuite(String),
    #[error("bad parameter {key}: {reason}")]
    BadParam { key: String, reason: String },
    #[error(transparent)]
    Core(#[from] perronlab_core::Error),
}

pub type Result<T> = std::result::Result<T, GalleryError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactStatus {
    Pass,
    Fail,
}

impl FactStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FactStatus::Pass => "pass",
            FactStatus::Fail => "fail",
        }
    }
}

/// How a fact is established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactTag {
    /// A value stated in closed form, compared directly.
    Exact,
    /// Compared against an independent computation.
    Oracle,
    /// Finite-truncation evidence for an infinite-dimensional statement.
    Demonstration,
}

impl FactTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FactTag::Exact => "exact",
            FactTag::Oracle => "oracle",
            FactTag::Demonstration => "demonstration",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fact {
    pub id: String,
    /// Which statement of the theory the fact reproduces.
    pub paper_ref: String,
    pub status: FactStatus,
    pub measured: Value,
    pub expected: Value,
    pub tag: FactTag,
}

impl Fact {
    pub fn new(
        id: &str,
        paper_ref: &str,
        tag: FactTag,
        pass: bool,
        measured: Value,
        expected: Value,
    ) -> Fact {
        Fact {
            id: id.to_string(),
            paper_ref: paper_ref.to_string(),
            status: if pass { FactStatus::Pass } else { FactStatus::Fail },
            measured,
            expected,
            tag,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == FactStatus::Pass
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "paper_ref": self.paper_ref,
            "status": self.status.as_str(),
            "measured": self.measured,
            "expected": self.expected,
            "tag": self.tag.as_str(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub name: String,
    pub params: Params,
    pub facts: Vec<Fact>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.facts.iter().all(Fact::passed)
    }

    pub fn fact(&self, id: &str) -> Option<&Fact> {
        self.facts.iter().find(|f| f.id == id)
    }

    pub fn failures(&self) -> Vec<&Fact> {
        self.facts.iter().filter(|f| !f.passed()).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "params": Value::Object(self.params.clone()),
            "facts": self.facts.iter().map(Fact::to_json).collect::<Vec<_>>(),
        })
    }

    /// One row per fact; `measured` and `expected` are JSON-encoded.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["case", "id", "status", "tag", "measured", "expected", "paper_ref"])
            .expect("in-memory write");
        for f in &self.facts {
            w.write_record([
                self.name.as_str(),
                f.id.as_str(),
                f.status.as_str(),
                f.tag.as_str(),
                &compact(&f.measured),
                &compact(&f.expected),
                f.paper_ref.as_str(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
    }
}

fn compact(v: &Value) -> String {
    perronlab_core::json::to_string_fixed(v).replace('\n', " ").trim().to_string()
}

type Runner = fn(&Params) -> Result<CaseReport>;

pub struct CaseInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub defaults: fn() -> Params,
    pub run: Option<Runner>,
}

pub fn registry() -> &'static [CaseInfo] {
    cases::REGISTRY
}

pub fn case_names() -> Vec<&'static str> {
    registry().iter().map(|c| c.name).collect()
}

/// Runs a case with its defaults overridden by `overrides`.
pub fn run_case(name: &str, overrides: &Params) -> Result<CaseReport> {
    let info = registry()
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| GalleryError::UnknownCase(name.to_string()))?;
    let run = info.run.ok_or_else(|| GalleryError::Unimplemented(name.to_string()))?;
    let mut params = (info.defaults)();
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(GalleryError::BadParam { key: k.clone(), reason: format!("not a parameter of {name}") });
        }
        params.insert(k.clone(), v.clone());
    }
    run(&params)
}

/// Runs several cases in parallel; results keep the order of `names`.
pub fn run_cases(names: &[&str], overrides: &Params) -> Vec<Result<CaseReport>> {
    with_pool(|| names.par_iter().map(|n| run_case(n, overrides)).collect())
}

/// Runs `f` on a pool capped by `PERRONLAB_THREADS` when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var("PERRONLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Parses `k=v`; `v` is read as JSON when possible, else as a string.
pub fn parse_param(kv: &str) -> Result<(String, Value)> {
    let (k, v) = kv.split_once('=').ok_or_else(|| GalleryError::BadParam {
        key: kv.to_string(),
        reason: "expected key=value".into(),
    })?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

pub(crate) fn get_f64(p: &Params, key: &str) -> Result<f64> {
    p.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| GalleryError::BadParam { key: key.into(), reason: "expected a number".into() })
}

pub(crate) fn get_usize(p: &Params, key: &str) -> Result<usize> {
    p.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| GalleryError::BadParam { key: key.into(), reason: "expected a nonnegative integer".into() })
}

pub(crate) fn get_list<T>(p: &Params, key: &str, conv: impl Fn(&Value) -> Option<T>) -> Result<Vec<T>> {
    let bad = || GalleryError::BadParam { key: key.into(), reason: "expected a list".into() };
    match p.get(key) {
        Some(Value::Array(items)) => items.iter().map(|v| conv(v).ok_or_else(bad)).collect(),
        Some(v) => conv(v).map(|x| vec![x]).ok_or_else(bad),
        None => Err(bad()),
    }
}
