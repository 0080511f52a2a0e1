//! Parsing of command-line values and input files.

use crate::Failure;
use perronlab_core::json::complex_vec_from_value;
use perronlab_core::operator::OperatorFile;
use perronlab_core::weights::{builtin_scheme, scheme_from_json, SchemeFamily, SchemeKind};
use perronlab_core::{OperatorMatrix, C64};
use perronlab_gallery::{parse_param, Params};
use serde_json::Value;
use std::path::Path;

pub type Constraints = Option<nalgebra::DMatrix<C64>>;

pub fn load_operator(path: &Path) -> Result<(OperatorMatrix, Constraints), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let file: OperatorFile =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    file.into_parts().map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// `1`, `-0.5`, `i`, `-i`, `2i`, `0.5-1.5i`, `1e-3+2e-1i`.
pub fn parse_complex(s: &str) -> Result<C64, Failure> {
    let bad = || Failure::Input(format!("not a complex number: {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(C64::new(re.parse::<f64>().map_err(|_| bad())?, im))
}

/// Semicolon-separated JSON arrays, e.g. `[1,0,-1];[-1,0,1]`. Entries may
/// be numbers or `{"re": .., "im": ..}` objects.
pub fn parse_vectors(s: &str) -> Result<Vec<Vec<C64>>, Failure> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let text = if p.starts_with('[') { p.to_string() } else { format!("[{p}]") };
            let v: Value =
                serde_json::from_str(&text).map_err(|e| Failure::Input(format!("vector {p:?}: {e}")))?;
            complex_vec_from_value(&v).map_err(|e| Failure::Input(format!("vector {p:?}: {e}")))
        })
        .collect()
}

/// Comma-separated reals.
pub fn parse_reals(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| Failure::Input(format!("not a number: {p:?}"))))
        .collect()
}

/// `lo:hi` or `lo..hi`, inclusive.
pub fn parse_range(s: &str) -> Result<(i64, i64), Failure> {
    let bad = || Failure::Input(format!("expected lo:hi, got {s:?}"));
    let (lo, hi) = s.split_once("..").or_else(|| s.split_once(':')).ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

pub fn parse_params(kvs: &[String]) -> Result<Params, Failure> {
    let mut p = Params::new();
    for kv in kvs {
        let (k, v) = parse_param(kv).map_err(|e| Failure::Input(e.to_string()))?;
        p.insert(k, v);
    }
    Ok(p)
}

/// A builtin scheme name (`cesaro`, `abel-net`, ...) or a scheme JSON file.
pub fn load_scheme(name: &str, params: &Params) -> Result<SchemeFamily, Failure> {
    let path = Path::new(name);
    if path.is_file() {
        if !params.is_empty() {
            return Err(Failure::Input("--param is not accepted with a scheme file".into()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{name}: {e}")))?;
        return scheme_from_json(&text).map_err(|e| Failure::Input(format!("{name}: {e}")));
    }
    let kind: SchemeKind = serde_json::from_value(Value::String(name.replace('-', "_")))
        .map_err(|_| Failure::Input(format!("unknown scheme {name:?}")))?;
    builtin_scheme(kind, &Value::Object(params.clone())).map_err(|e| Failure::Input(e.to_string()))
}
