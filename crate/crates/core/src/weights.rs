//! Weighting schemes: coefficient streams `f(z) = sum a_k z^k`, families
//! `(f_j)`, the WS1/WS2/WS3 checks, Cauchy products, truncated evaluation of
//! `f(T)` and the finite-prefix boundedness probes.

use crate::lattice::LatticeVector;
use crate::operator::OperatorMatrix;
use crate::spectral::{eigenvalue_clusters, pole_order_from_rank, spectral_radius, EigenOptions};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::sync::Arc;

type CoeffFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;
type TailFn = Arc<dyn Fn(usize) -> Option<f64> + Send + Sync>;

/// Power-series coefficients `a_k` with an optional bound on `sum_{k>K} a_k`.
#[derive(Clone)]
pub struct CoeffStream {
    coeff: CoeffFn,
    tail: Option<TailFn>,
    description: String,
    /// Number of leading coefficients outside of which all vanish.
    support: Option<usize>,
}

impl fmt::Debug for CoeffStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoeffStream")
            .field("description", &self.description)
            .field("support", &self.support)
            .finish()
    }
}

impl CoeffStream {
    pub fn new(
        coeff: impl Fn(usize) -> f64 + Send + Sync + 'static,
        tail: Option<Box<dyn Fn(usize) -> Option<f64> + Send + Sync>>,
        description: impl Into<String>,
    ) -> Self {
        CoeffStream {
            coeff: Arc::new(coeff),
            tail: tail.map(Arc::from),
            description: description.into(),
            support: None,
        }
    }

    /// Finitely supported stream; its tail bound is exact.
    pub fn finite(coeffs: Vec<f64>, description: impl Into<String>) -> Self {
        let support = coeffs.len();
        let c = Arc::new(coeffs);
        let c2 = Arc::clone(&c);
        CoeffStream {
            coeff: Arc::new(move |k| c.get(k).copied().unwrap_or(0.0)),
            tail: Some(Arc::new(move |kk| Some(c2.iter().skip(kk + 1).map(|a| a.abs()).sum()))),
            description: description.into(),
            support: Some(support),
        }
    }

    /// `z^j`.
    pub fn powers(j: usize) -> Self {
        let mut c = vec![0.0; j + 1];
        c[j] = 1.0;
        CoeffStream::finite(c, format!("powers j={j}"))
    }

    /// `(1/j) sum_{k<j} z^k`.
    pub fn cesaro(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidParameter("Cesaro index must be at least 1".into()));
        }
        Ok(CoeffStream::finite(vec![1.0 / j as f64; j], format!("cesaro j={j}")))
    }

    /// `(lambda - 1)/(lambda - z)`.
    pub fn abel_net(lambda: f64) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("Abel parameter {lambda} must exceed 1")));
        }
        let coeff = move |k: usize| (lambda - 1.0) * lambda.powf(-(k as f64) - 1.0);
        let tail = move |kk: usize| Some(lambda.powf(-(kk as f64) - 1.0));
        Ok(CoeffStream::new(coeff, Some(Box::new(tail)), format!("abel_net lambda={lambda}")))
    }

    /// `((lambda - 1)/(lambda - z))^j`.
    pub fn abel_powers(lambda: f64, j: usize) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() || j == 0 {
            return Err(Error::InvalidParameter(format!("abel_powers needs lambda > 1, j >= 1 (got {lambda}, {j})")));
        }
        // C(j+k-1, k) (lambda-1)^j / lambda^(j+k) by the ratio (j+k)/((k+1) lambda).
        let coeff = move |k: usize| {
            let mut a = ((lambda - 1.0) / lambda).powi(j as i32);
            for i in 0..k {
                a *= (j + i) as f64 / ((i + 1) as f64 * lambda);
            }
            a
        };
        let tail = move |kk: usize| {
            let rho = (j + kk + 1) as f64 / ((kk + 2) as f64 * lambda);
            (rho < 1.0).then(|| coeff(kk + 1) / (1.0 - rho))
        };
        Ok(CoeffStream::new(coeff, Some(Box::new(tail)), format!("abel_powers lambda={lambda} j={j}")))
    }

    /// `e^{t(z - 1)}`: Poisson weights.
    pub fn exponential(t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("exponential time {t} must be nonnegative")));
        }
        let coeff = move |k: usize| poisson(t, k);
        let tail = move |kk: usize| {
            let rho = t / (kk + 2) as f64;
            (rho < 1.0).then(|| poisson(t, kk + 1) / (1.0 - rho))
        };
        Ok(CoeffStream::new(coeff, Some(Box::new(tail)), format!("exponential t={t}")))
    }

    pub fn coeff(&self, k: usize) -> f64 {
        (self.coeff)(k)
    }

    /// `a_0, ..., a_K`.
    pub fn coeffs(&self, kk: usize) -> Vec<f64> {
        (0..=kk).map(|k| self.coeff(k)).collect()
    }

    pub fn tail_bound(&self, kk: usize) -> Option<f64> {
        self.tail.as_ref().and_then(|t| t(kk))
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn support(&self) -> Option<usize> {
        self.support
    }
}

fn poisson(t: f64, k: usize) -> f64 {
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (-t + k as f64 * t.ln() - ln_fact).exp()
}

/// Cauchy product: the coefficients of `f g`.
pub fn convolve(s: &CoeffStream, t: &CoeffStream) -> CoeffStream {
    let description = format!("({}) * ({})", s.description, t.description);
    if let (Some(a), Some(b)) = (s.support, t.support) {
        let sa = s.coeffs(a.saturating_sub(1));
        let tb = t.coeffs(b.saturating_sub(1));
        let mut c = vec![0.0; a + b - 1];
        for (i, x) in sa.iter().enumerate() {
            for (l, y) in tb.iter().enumerate() {
                c[i + l] += x * y;
            }
        }
        return CoeffStream::finite(c, description);
    }
    let (s1, t1) = (s.clone(), t.clone());
    let coeff = move |k: usize| (0..=k).map(|i| s1.coeff(i) * t1.coeff(k - i)).sum();
    let (s2, t2) = (s.clone(), t.clone());
    // i + l > K forces i > K/2 or l > K/2.
    let tail = move |kk: usize| {
        let h = kk / 2;
        let total = |x: &CoeffStream| Some(x.coeffs(h).iter().map(|a| a.abs()).sum::<f64>() + x.tail_bound(h)?);
        Some(s2.tail_bound(h)? * total(&t2)? + total(&s2)? * t2.tail_bound(h)?)
    };
    let mut out = CoeffStream::new(coeff, Some(Box::new(tail)), description);
    out.support = None;
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }
}

/// `|sum_{k<=K} a_k - 1| <= tol + tail_bound(K)`.
pub fn check_ws1(s: &CoeffStream, kk: usize, tol: f64) -> Verdict {
    let Some(tail) = s.tail_bound(kk) else {
        return Verdict::Inconclusive;
    };
    let partial: f64 = s.coeffs(kk).iter().sum();
    if (partial - 1.0).abs() <= tol + tail {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// `min_{k<=K} a_k >= -tol`.
pub fn check_ws2(s: &CoeffStream, kk: usize, tol: f64) -> Verdict {
    if s.coeffs(kk).iter().all(|&a| a >= -tol) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Powers,
    AbelNet,
    AbelPowers,
    Cesaro,
    Exponential,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    #[serde(default)]
    pub params: Value,
}

/// A finite prefix of a weighting scheme `(f_j)`.
#[derive(Debug, Clone)]
pub struct SchemeFamily {
    pub kind: SchemeKind,
    /// Parameter value of each member: `j`, `lambda_j` or `t_j`.
    pub index_set: Vec<f64>,
    pub streams: Vec<CoeffStream>,
}

impl SchemeFamily {
    pub fn new(kind: SchemeKind, index_set: Vec<f64>, streams: Vec<CoeffStream>) -> Result<Self> {
        if index_set.len() != streams.len() || streams.is_empty() {
            return Err(Error::InvalidParameter("family needs one stream per index".into()));
        }
        for s in &streams {
            if check_ws1(s, CONSTRUCTION_K, CONSTRUCTION_TOL) == Verdict::Fail
                || check_ws2(s, CONSTRUCTION_K, CONSTRUCTION_TOL) == Verdict::Fail
            {
                return Err(Error::InvalidParameter(format!("{} is not a WS1/WS2 stream", s.description)));
            }
        }
        Ok(SchemeFamily { kind, index_set, streams })
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn stream(&self, i: usize) -> &CoeffStream {
        &self.streams[i]
    }

    /// First `n` members.
    pub fn prefix(&self, n: usize) -> SchemeFamily {
        let n = n.min(self.len());
        SchemeFamily {
            kind: self.kind,
            index_set: self.index_set[..n].to_vec(),
            streams: self.streams[..n].to_vec(),
        }
    }
}

pub const CONSTRUCTION_K: usize = 200;
pub const CONSTRUCTION_TOL: f64 = 1e-10;

fn param_f64(p: &Value, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| Error::InvalidParameter(format!("{key} must be a number"))),
    }
}

fn param_usize(p: &Value, key: &str, default: usize) -> Result<usize> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| Error::InvalidParameter(format!("{key} must be a nonnegative integer"))),
    }
}

fn param_list(p: &Value, key: &str) -> Result<Option<Vec<f64>>> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| Error::InvalidParameter(format!("{key} must hold numbers"))))
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(_) => Err(Error::InvalidParameter(format!("{key} must be an array"))),
    }
}

pub const DEFAULT_FAMILY_LEN: usize = 20;

/// Builds a family from JSON parameters.
///
/// * `powers`, `cesaro`: `start` (default 1), `len` (default 20).
/// * `abel_net`: `lambdas`, or `lambda_j = 1 + scale/j` for `j = 1..=len`.
/// * `abel_powers`: `lambda` (default 2), `j = 1..=len`.
/// * `exponential`: `times`, or `t_j = rate * j` for `j = 1..=len`.
/// * `custom`: `coefficients`, one array or an array of arrays.
pub fn builtin_scheme(kind: SchemeKind, params: &Value) -> Result<SchemeFamily> {
    let len = param_usize(params, "len", DEFAULT_FAMILY_LEN)?;
    let start = param_usize(params, "start", 1)?;
    let ints = || (start..start + len).collect::<Vec<usize>>();
    let (index, streams): (Vec<f64>, Vec<CoeffStream>) = match kind {
        SchemeKind::Powers => ints().into_iter().map(|j| (j as f64, CoeffStream::powers(j))).unzip(),
        SchemeKind::Cesaro => {
            let mut out = (Vec::new(), Vec::new());
            for j in ints() {
                out.0.push(j as f64);
                out.1.push(CoeffStream::cesaro(j)?);
            }
            out
        }
        SchemeKind::AbelNet => {
            let lambdas = match param_list(params, "lambdas")? {
                Some(l) => l,
                None => {
                    let scale = param_f64(params, "scale", 1.0)?;
                    (1..=len).map(|j| 1.0 + scale / j as f64).collect()
                }
            };
            if lambdas.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::InvalidParameter("Abel parameters must decrease".into()));
            }
            let streams = lambdas.iter().map(|&l| CoeffStream::abel_net(l)).collect::<Result<Vec<_>>>()?;
            (lambdas, streams)
        }
        SchemeKind::AbelPowers => {
            let lambda = param_f64(params, "lambda", 2.0)?;
            let js: Vec<usize> = (1..=len).collect();
            let streams = js.iter().map(|&j| CoeffStream::abel_powers(lambda, j)).collect::<Result<Vec<_>>>()?;
            (js.into_iter().map(|j| j as f64).collect(), streams)
        }
        SchemeKind::Exponential => {
            let times = match param_list(params, "times")? {
                Some(t) => t,
                None => {
                    let rate = param_f64(params, "rate", 1.0)?;
                    (1..=len).map(|j| rate * j as f64).collect()
                }
            };
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter("exponential times must increase".into()));
            }
            let streams = times.iter().map(|&t| CoeffStream::exponential(t)).collect::<Result<Vec<_>>>()?;
            (times, streams)
        }
        SchemeKind::Custom => {
            let raw = params
                .get("coefficients")
                .ok_or_else(|| Error::InvalidParameter("custom scheme needs coefficients".into()))?;
            let lists: Vec<Value> = match raw {
                Value::Array(a) if a.iter().all(|v| v.is_array()) => a.clone(),
                Value::Array(_) => vec![raw.clone()],
                _ => return Err(Error::InvalidParameter("coefficients must be an array".into())),
            };
            let mut out = (Vec::new(), Vec::new());
            for (i, l) in lists.iter().enumerate() {
                let c = param_list(&serde_json::json!({ "c": l }), "c")?.unwrap_or_default();
                if c.is_empty() {
                    return Err(Error::InvalidParameter("empty coefficient list".into()));
                }
                out.0.push((i + 1) as f64);
                out.1.push(CoeffStream::finite(c, format!("custom #{}", i + 1)));
            }
            out
        }
    };
    if streams.is_empty() {
        return Err(Error::InvalidParameter("family is empty".into()));
    }
    SchemeFamily::new(kind, index, streams)
}

pub fn scheme_from_spec(spec: &SchemeSpec) -> Result<SchemeFamily> {
    builtin_scheme(spec.kind, &spec.params)
}

pub fn scheme_from_json(text: &str) -> Result<SchemeFamily> {
    let spec: SchemeSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    scheme_from_spec(&spec)
}

/// `a_{j,k} -> 0` along the family for each `k <= k_max`, judged on the
/// tail half of the available prefix.
pub fn check_ws3(fam: &SchemeFamily, k_max: usize, tol: f64) -> Verdict {
    if fam.len() < 3 {
        return Verdict::Inconclusive;
    }
    let mut verdict = Verdict::Pass;
    for k in 0..=k_max {
        let seq: Vec<f64> = fam.streams.iter().map(|s| s.coeff(k)).collect();
        let tail = &seq[seq.len() / 2..];
        let (first, last) = (tail[0], *tail.last().expect("nonempty"));
        let v = if last <= tol || (tail.windows(2).all(|w| w[1] <= w[0] + tol) && last < first) {
            Verdict::Pass
        } else if last >= first {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        verdict = verdict.and(v);
    }
    verdict
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    /// Highest power actually summed.
    pub k_used: usize,
    pub tail_bound: Option<f64>,
    /// `max_{k<=K} ||T^k||`.
    pub max_power_norm: f64,
    /// `tail_bound * max_power_norm`, a heuristic bound for the neglected terms.
    pub tail_proxy: Option<f64>,
    /// Set when the power norms grow over the summed range.
    pub growth_flag: bool,
}

/// `sum_{k<=K} a_k T^k`, cut at the support of finite streams.
pub fn apply_weight(t: &OperatorMatrix, s: &CoeffStream, kk: usize) -> Result<(OperatorMatrix, TailReport)> {
    let r = spectral_radius(t)?;
    if r > 1.0 + 1e-8 {
        return Err(Error::SpectralRadiusExceedsOne(r));
    }
    apply_weight_unchecked(t, s, kk)
}

fn apply_weight_unchecked(t: &OperatorMatrix, s: &CoeffStream, kk: usize) -> Result<(OperatorMatrix, TailReport)> {
    let k_used = match s.support() {
        Some(n) => kk.min(n.saturating_sub(1)),
        None => kk,
    };
    let n = t.dim();
    let tag = t.model().norm_tag();
    let mut power = DMatrix::<C64>::identity(n, n);
    let mut acc = DMatrix::<C64>::zeros(n, n);
    let mut norms = Vec::with_capacity(k_used + 1);
    for k in 0..=k_used {
        if k > 0 {
            power = &power * t.entries();
        }
        let a = s.coeff(k);
        if a != 0.0 {
            acc += &power * C64::new(a, 0.0);
        }
        norms.push(crate::operator::matrix_norm(&power, tag));
    }
    let max_power_norm = norms.iter().copied().fold(0.0, f64::max);
    let half = norms.len() / 2;
    let growth_flag = half > 0 && {
        let first = norms[..half].iter().copied().fold(0.0, f64::max);
        let second = norms[half..].iter().copied().fold(0.0, f64::max);
        second > 1.01 * first
    };
    let tail_bound = s.tail_bound(k_used);
    Ok((
        t.with_entries(acc)?,
        TailReport {
            k_used,
            tail_bound,
            max_power_norm,
            tail_proxy: tail_bound.map(|b| b * max_power_norm),
            growth_flag,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    BoundedEvidence,
    GrowthEvidence,
    Inconclusive,
}

impl ProbeVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeVerdict::BoundedEvidence => "bounded-evidence",
            ProbeVerdict::GrowthEvidence => "growth-evidence",
            ProbeVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub index: f64,
    pub norm: f64,
    pub tail_flag: bool,
}

/// Finite-prefix evidence about `sup_j ||f_j(T)||`; never a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub max_norm: f64,
    /// Norms non-decreasing over the whole prefix.
    pub monotone_growth: bool,
    /// Log-log slope of the norms against the member position over the
    /// tail half of the prefix.
    pub slope: f64,
    pub verdict: ProbeVerdict,
}

impl ProbeReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,norm,tail_flag\n");
        for r in &self.rows {
            s.push_str(&format!("{:.16e},{:.16e},{}\n", r.index, r.norm, r.tail_flag));
        }
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.max(1e-300).ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub const GROWTH_SLOPE: f64 = 0.5;
pub const GROWTH_RATIO: f64 = 1.2;
pub const BOUNDED_SLOPE: f64 = 0.25;

pub fn ws_bounded_probe(t: &OperatorMatrix, fam: &SchemeFamily, kk: usize, budget: usize) -> Result<ProbeReport> {
    let r = spectral_radius(t)?;
    if r > 1.0 + 1e-8 {
        return Err(Error::SpectralRadiusExceedsOne(r));
    }
    let count = budget.min(fam.len());
    if count == 0 {
        return Err(Error::InvalidParameter("probe budget is zero".into()));
    }
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let (m, tail) = apply_weight_unchecked(t, fam.stream(i), kk)?;
        let tail_flag = tail.growth_flag || tail.tail_proxy.is_none_or(|p| p > 1e-8);
        rows.push(ProbeRow { index: fam.index_set[i], norm: m.op_norm(), tail_flag });
    }
    let norms: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let monotone_growth = norms.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let half = count / 2;
    let positions: Vec<f64> = (half + 1..=count).map(|p| p as f64).collect();
    let tail = &norms[half..];
    let slope = loglog_slope(&positions, tail);
    let ratio = tail.last().copied().unwrap_or(0.0) / tail[0].max(1e-300);
    let verdict = if count < 3 {
        ProbeVerdict::Inconclusive
    } else if slope >= GROWTH_SLOPE && ratio > GROWTH_RATIO {
        ProbeVerdict::GrowthEvidence
    } else if slope < BOUNDED_SLOPE {
        ProbeVerdict::BoundedEvidence
    } else {
        ProbeVerdict::Inconclusive
    };
    Ok(ProbeReport { rows, max_norm, monotone_growth, slope, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSum {
    pub index: f64,
    pub sum: f64,
    /// Set when the neglected tail may be non-negligible.
    pub tail_flag: bool,
}

/// `sum_{k<=K} a_{j,k} r_k` for each member; `r_seq` must be nonnegative
/// and nondecreasing with at least `K + 1` entries used.
pub fn weighted_scalar_sum(fam: &SchemeFamily, r_seq: &[f64], kk: usize) -> Result<Vec<ScalarSum>> {
    if r_seq.is_empty() {
        return Err(Error::InvalidParameter("empty scalar sequence".into()));
    }
    if r_seq.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParameter("scalar sequence must be nonnegative".into()));
    }
    if r_seq.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("scalar sequence must be nondecreasing".into()));
    }
    let cap = kk.min(r_seq.len() - 1);
    Ok(fam
        .streams
        .iter()
        .zip(&fam.index_set)
        .map(|(s, &index)| {
            let k_used = s.support().map_or(cap, |n| cap.min(n.saturating_sub(1)));
            let sum = (0..=k_used).map(|k| s.coeff(k) * r_seq[k]).sum();
            let exact = s.support().is_some_and(|n| k_used + 1 >= n);
            let tail_flag = !exact && s.tail_bound(k_used).is_none_or(|b| b * r_seq[k_used].max(1.0) > 1e-10);
            ScalarSum { index, sum, tail_flag }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitReport {
    /// `||T^n x||` for `n = 0..=N`.
    pub norms: Vec<f64>,
    /// Largest `max_i (T^n x - T^{n+1} x)_i` seen; at most `tol` when monotone.
    pub max_decrease: f64,
    pub monotone: bool,
    pub growth_exponent: f64,
    pub bounded: bool,
}

pub fn monotone_orbit_report(t: &OperatorMatrix, x: &LatticeVector, n: usize, tol: f64) -> Result<OrbitReport> {
    if !t.is_positive(tol) {
        return Err(Error::NotNonnegative);
    }
    if !x.is_real(tol) || x.entries().iter().any(|z| z.re < -tol) {
        return Err(Error::NotNonnegative);
    }
    let mut cur = x.entries().map(|z| z.re);
    let treal = t.real_part();
    let first = &treal * &cur;
    if first.iter().zip(cur.iter()).any(|(a, b)| *a < b - tol) {
        return Err(Error::OrbitNotMonotone);
    }
    let norm = |v: &nalgebra::DVector<f64>| match t.model().norm_tag() {
        crate::NormTag::Sup => v.amax(),
        crate::NormTag::One => v.iter().map(|a| a.abs()).sum(),
    };
    let mut norms = vec![norm(&cur)];
    let mut max_decrease = 0.0f64;
    for _ in 0..n {
        let next = &treal * &cur;
        let dec = cur.iter().zip(next.iter()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        max_decrease = max_decrease.max(dec);
        norms.push(norm(&next));
        cur = next;
    }
    let half = norms.len() / 2;
    let xs: Vec<f64> = (half + 1..=norms.len()).map(|p| p as f64).collect();
    let growth_exponent = loglog_slope(&xs, &norms[half..]);
    Ok(OrbitReport {
        norms,
        max_decrease,
        monotone: max_decrease <= tol,
        growth_exponent,
        bounded: growth_exponent < BOUNDED_SLOPE,
    })
}

/// Size of the largest Jordan block at `lambda0`, which is its pole order
/// as a singularity of the resolvent.
pub fn pole_order_at(t: &OperatorMatrix, lambda0: C64, tol: f64) -> Result<usize> {
    let clusters = eigenvalue_clusters(t.entries(), &EigenOptions::default())?;
    let scale = lambda0.norm().max(1.0);
    let hit = clusters
        .iter()
        .filter(|c| (c.value - lambda0).norm() <= tol.max(1e-12) * scale)
        .min_by(|a, b| (a.value - lambda0).norm().total_cmp(&(b.value - lambda0).norm()))
        .ok_or_else(|| Error::NotAnEigenvalue(format!("{lambda0}")))?;
    Ok(pole_order_from_rank(t.entries(), lambda0, hit.size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sup_operator;
    use crate::SpaceModel;
    use approx::assert_abs_diff_eq;
    use serde_json::json;

    fn jordan() -> OperatorMatrix {
        sup_operator(&[vec![1.0, 1.0], vec![0.0, 1.0]])
    }

    #[test]
    fn builtin_coefficients() {
        let s = CoeffStream::abel_net(2.0).unwrap();
        for k in 0..20 {
            assert_abs_diff_eq!(s.coeff(k), 2f64.powi(-(k as i32) - 1), epsilon = 1e-16);
        }
        let s = CoeffStream::abel_powers(2.0, 2).unwrap();
        for k in 0..30 {
            assert_abs_diff_eq!(s.coeff(k), (k as f64 + 1.0) / 2f64.powi(k as i32 + 2), epsilon = 1e-15);
        }
        assert_eq!(CoeffStream::cesaro(3).unwrap().coeffs(4), vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]);
        assert!(CoeffStream::abel_net(1.0).is_err());
        assert!(CoeffStream::cesaro(0).is_err());
    }

    #[test]
    fn abel_powers_no_overflow_at_500() {
        let s = CoeffStream::abel_powers(1.5, 40).unwrap();
        let c = s.coeffs(500);
        assert!(c.iter().all(|a| a.is_finite() && *a >= 0.0));
        assert_eq!(check_ws1(&s, 500, 1e-10), Verdict::Pass);
    }

    #[test]
    fn ws1_ws2_examples() {
        let e = CoeffStream::exponential(1.0).unwrap();
        assert_eq!(check_ws1(&e, 200, 1e-10), Verdict::Pass);
        assert_eq!(check_ws2(&e, 200, 1e-10), Verdict::Pass);
        let bad = CoeffStream::finite(vec![0.5, 0.6], "bad");
        assert_eq!(check_ws1(&bad, 200, 1e-10), Verdict::Fail);
        let neg = CoeffStream::finite(vec![0.6, 0.5, -0.1], "neg");
        assert_eq!(check_ws2(&neg, 200, 1e-10), Verdict::Fail);
        let no_tail = CoeffStream::new(|k| if k == 0 { 1.0 } else { 0.0 }, None, "no tail");
        assert_eq!(check_ws1(&no_tail, 10, 1e-10), Verdict::Inconclusive);
    }

    #[test]
    fn ws3_examples() {
        let ces = builtin_scheme(SchemeKind::Cesaro, &json!({})).unwrap();
        assert_eq!(check_ws3(&ces, 8, 1e-10), Verdict::Pass);
        let pow = builtin_scheme(SchemeKind::Powers, &json!({})).unwrap();
        assert_eq!(check_ws3(&pow, 8, 1e-10), Verdict::Pass);
        let constant = builtin_scheme(SchemeKind::Custom, &json!({"coefficients": [[1.0], [1.0], [1.0], [1.0]]})).unwrap();
        assert_eq!(check_ws3(&constant, 8, 1e-10), Verdict::Fail);
        assert_eq!(check_ws3(&ces.prefix(2), 8, 1e-10), Verdict::Inconclusive);
    }

    #[test]
    fn convolution_examples() {
        let d1 = CoeffStream::powers(1);
        let d2 = convolve(&d1, &d1);
        assert_eq!(d2.coeffs(3), vec![0.0, 0.0, 1.0, 0.0]);
        let a = CoeffStream::abel_net(2.0).unwrap();
        let same = convolve(&a, &CoeffStream::powers(0));
        let sq = convolve(&a, &a);
        for k in 0..30 {
            assert_abs_diff_eq!(same.coeff(k), a.coeff(k), epsilon = 1e-16);
            assert_abs_diff_eq!(sq.coeff(k), (k as f64 + 1.0) / 2f64.powi(k as i32 + 2), epsilon = 1e-15);
        }
        assert_eq!(check_ws1(&sq, 200, 1e-10), Verdict::Pass);
    }

    #[test]
    fn apply_weight_examples() {
        let id = OperatorMatrix::identity(SpaceModel::sup(3));
        let (m, _) = apply_weight(&id, &CoeffStream::exponential(2.0).unwrap(), 200).unwrap();
        assert!((m.entries() - id.entries()).camax() < 1e-12);
        let swap = sup_operator(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (m, rep) = apply_weight(&swap, &CoeffStream::cesaro(2).unwrap(), 500).unwrap();
        assert_eq!(rep.k_used, 1);
        assert!(m.entries().iter().all(|z| (z.re - 0.5).abs() < 1e-15));
        let (m, _) = apply_weight(&jordan(), &CoeffStream::abel_net(2.0).unwrap(), 200).unwrap();
        let expect = [[1.0, 1.0], [0.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(m.entries()[(i, j)].re, expect[i][j], epsilon = 1e-12);
            }
        }
        let big = sup_operator(&[vec![2.0]]);
        assert!(matches!(apply_weight(&big, &CoeffStream::powers(1), 5), Err(Error::SpectralRadiusExceedsOne(_))));
    }

    #[test]
    fn probe_examples() {
        let markov = sup_operator(&[vec![0.5, 0.5], vec![0.2, 0.8]]);
        let ces = builtin_scheme(SchemeKind::Cesaro, &json!({})).unwrap();
        let rep = ws_bounded_probe(&markov, &ces, 200, 20).unwrap();
        assert_eq!(rep.verdict, ProbeVerdict::BoundedEvidence);
        assert_abs_diff_eq!(rep.max_norm, 1.0, epsilon = 1e-12);
        let rep = ws_bounded_probe(&jordan(), &ces, 200, 20).unwrap();
        assert_eq!(rep.verdict, ProbeVerdict::GrowthEvidence);
        for row in &rep.rows {
            // Cesaro mean of [[1,1],[0,1]] is [[1,(j-1)/2],[0,1]].
            assert_abs_diff_eq!(row.norm, 1.0 + (row.index - 1.0) / 2.0, epsilon = 1e-12);
        }
        let swap = sup_operator(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let pow = builtin_scheme(SchemeKind::Powers, &json!({})).unwrap();
        let rep = ws_bounded_probe(&swap, &pow, 200, 20).unwrap();
        assert!(rep.rows.iter().all(|r| (r.norm - 1.0).abs() < 1e-15));
    }

    #[test]
    fn scalar_sums() {
        let ces = builtin_scheme(SchemeKind::Cesaro, &json!({})).unwrap();
        let r: Vec<f64> = (0..=300).map(|k| k as f64).collect();
        for s in weighted_scalar_sum(&ces, &r, 300).unwrap() {
            assert_abs_diff_eq!(s.sum, (s.index - 1.0) / 2.0, epsilon = 1e-12);
            assert!(!s.tail_flag);
        }
        let exp = builtin_scheme(SchemeKind::Exponential, &json!({"len": 10})).unwrap();
        for s in weighted_scalar_sum(&exp, &r, 300).unwrap() {
            assert_abs_diff_eq!(s.sum, s.index, epsilon = 1e-10);
        }
        let ones = vec![1.0; 301];
        for s in weighted_scalar_sum(&exp, &ones, 300).unwrap() {
            assert_abs_diff_eq!(s.sum, 1.0, epsilon = 1e-10);
        }
        assert!(weighted_scalar_sum(&ces, &[2.0, 1.0], 1).is_err());
    }

    #[test]
    fn monotone_orbits() {
        let markov = sup_operator(&[vec![0.5, 0.5], vec![0.2, 0.8]]);
        let one = LatticeVector::from_real(&[1.0, 1.0], SpaceModel::sup(2)).unwrap();
        let rep = monotone_orbit_report(&markov, &one, 50, 1e-12).unwrap();
        assert!(rep.norms.iter().all(|n| (n - 1.0).abs() < 1e-12) && rep.bounded && rep.monotone);
        let x = LatticeVector::from_real(&[0.0, 1.0], SpaceModel::sup(2)).unwrap();
        let rep = monotone_orbit_report(&jordan(), &x, 50, 1e-12).unwrap();
        // T^n (0,1) = (n,1) and T^n (1,1) = (n+1,1).
        for (n, v) in rep.norms.iter().enumerate() {
            assert_abs_diff_eq!(*v, (n as f64).max(1.0), epsilon = 1e-12);
        }
        assert!(!rep.bounded);
        let ones = LatticeVector::from_real(&[1.0, 1.0], SpaceModel::sup(2)).unwrap();
        let rep = monotone_orbit_report(&jordan(), &ones, 50, 1e-12).unwrap();
        for (n, v) in rep.norms.iter().enumerate() {
            assert_abs_diff_eq!(*v, n as f64 + 1.0, epsilon = 1e-12);
        }
        let bad = LatticeVector::from_real(&[1.0, 0.0], SpaceModel::sup(2)).unwrap();
        assert_eq!(monotone_orbit_report(&markov, &bad, 5, 1e-12), Err(Error::OrbitNotMonotone));
    }

    #[test]
    fn pole_orders() {
        assert_eq!(pole_order_at(&jordan(), C64::new(1.0, 0.0), 1e-8).unwrap(), 2);
        let markov = sup_operator(&[vec![0.5, 0.5], vec![0.2, 0.8]]);
        assert_eq!(pole_order_at(&markov, C64::new(1.0, 0.0), 1e-8).unwrap(), 1);
        let t = sup_operator(&[
            vec![0.0, 1.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(pole_order_at(&t, C64::new(1.0, 0.0), 1e-8).unwrap(), 3);
        assert!(pole_order_at(&t, C64::new(0.5, 0.0), 1e-8).is_err());
    }

    #[test]
    fn scheme_json() {
        let fam = scheme_from_json(r#"{"kind": "abel_net", "params": {"lambdas": [2.0, 1.5, 1.1]}}"#).unwrap();
        assert_eq!(fam.len(), 3);
        assert!(scheme_from_json(r#"{"kind": "abel_net", "params": {"lambdas": [1.1, 1.5]}}"#).is_err());
        assert!(scheme_from_json(r#"{"kind": "nope"}"#).is_err());
        let fam = scheme_from_json(r#"{"kind": "custom", "params": {"coefficients": [0.25, 0.75]}}"#).unwrap();
        assert_eq!(fam.len(), 1);
        assert!(scheme_from_json(r#"{"kind": "custom", "params": {"coefficients": [0.5, 0.6]}}"#).is_err());
    }
}
