//! Coordinate lattices: moduli, order, suprema and signum lattice powers.

use crate::linalg::{numerical_rank, rref};
use crate::operator::OperatorMatrix;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormTag {
    /// `C(K)` model, norm `max |v_i|`.
    #[serde(rename = "sup")]
    Sup,
    /// `l^1` model, norm `sum |v_i|`.
    #[serde(rename = "one")]
    One,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct SpaceModel {
    dim: usize,
    norm: NormTag,
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    dim: usize,
    norm: NormTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl TryFrom<RawModel> for SpaceModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let model = SpaceModel::new(raw.dim, raw.norm)?;
        match raw.labels {
            Some(labels) => model.with_labels(labels),
            None => Ok(model),
        }
    }
}

impl From<SpaceModel> for RawModel {
    fn from(m: SpaceModel) -> Self {
        RawModel { dim: m.dim, norm: m.norm, labels: m.labels }
    }
}

impl SpaceModel {
    pub fn new(dim: usize, norm: NormTag) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        Ok(SpaceModel { dim, norm, labels: None })
    }

    /// Sup-norm model of dimension `dim`; panics on `dim == 0`.
    pub fn sup(dim: usize) -> Self {
        SpaceModel::new(dim, NormTag::Sup).expect("positive dimension")
    }

    /// 1-norm model of dimension `dim`; panics on `dim == 0`.
    pub fn one(dim: usize) -> Self {
        SpaceModel::new(dim, NormTag::One).expect("positive dimension")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim {
            return Err(Error::InvalidModel(format!(
                "{} labels for dimension {}",
                labels.len(),
                self.dim
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate label {l:?}")));
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Same model restricted to the coordinates in `keep`.
    pub fn restrict(&self, keep: &[usize], norm: NormTag) -> Result<Self> {
        let m = SpaceModel::new(keep.len(), norm)?;
        match &self.labels {
            Some(labels) => m.with_labels(keep.iter().map(|&i| labels[i].clone()).collect()),
            None => Ok(m),
        }
    }

    /// Dimension and norm agree (labels are cosmetic).
    pub fn compatible(&self, other: &SpaceModel) -> bool {
        self.dim == other.dim && self.norm == other.norm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector {
    entries: DVector<C64>,
    model: SpaceModel,
}

impl LatticeVector {
    pub fn new(entries: DVector<C64>, model: SpaceModel) -> Result<Self> {
        if entries.len() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: entries.len() });
        }
        Ok(LatticeVector { entries, model })
    }

    pub fn from_complex(entries: &[C64], model: SpaceModel) -> Result<Self> {
        LatticeVector::new(DVector::from_column_slice(entries), model)
    }

    pub fn from_real(entries: &[f64], model: SpaceModel) -> Result<Self> {
        LatticeVector::new(
            DVector::from_iterator(entries.len(), entries.iter().map(|&x| C64::new(x, 0.0))),
            model,
        )
    }

    pub fn entries(&self) -> &DVector<C64> {
        &self.entries
    }

    pub fn model(&self) -> &SpaceModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.entries.iter().all(|z| z.im.abs() <= tol)
    }

    /// Real parts of the entries.
    pub fn re(&self) -> Vec<f64> {
        self.entries.iter().map(|z| z.re).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    pub fn norm(&self) -> f64 {
        match self.model.norm_tag() {
            NormTag::Sup => self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max),
            NormTag::One => self.entries.iter().map(|z| z.norm()).sum(),
        }
    }

    pub fn map_entries(&self, f: impl Fn(C64) -> C64) -> LatticeVector {
        LatticeVector { entries: self.entries.map(f), model: self.model.clone() }
    }
}

fn require_same_model(a: &SpaceModel, b: &SpaceModel) -> Result<()> {
    if !a.compatible(b) {
        return Err(Error::ModelMismatch(format!(
            "dim {} / {:?} vs dim {} / {:?}",
            a.dim(),
            a.norm_tag(),
            b.dim(),
            b.norm_tag()
        )));
    }
    Ok(())
}

pub fn modulus(v: &LatticeVector) -> LatticeVector {
    v.map_entries(|z| C64::new(z.norm(), 0.0))
}

pub fn entrywise_sup(vs: &[LatticeVector]) -> Result<LatticeVector> {
    let first = vs.first().ok_or(Error::EmptySupremum)?;
    for v in vs {
        require_same_model(first.model(), v.model())?;
        if !v.is_real(0.0) {
            return Err(Error::NotReal);
        }
    }
    let n = first.len();
    let sup = DVector::from_fn(n, |i, _| {
        let m = vs.iter().map(|v| v.entries[i].re).fold(f64::NEG_INFINITY, f64::max);
        C64::new(m, 0.0)
    });
    LatticeVector::new(sup, first.model().clone())
}

/// `|z_i| <= x_i + tol` for every coordinate.
pub fn dominates(x: &LatticeVector, z: &LatticeVector, tol: f64) -> Result<bool> {
    require_same_model(x.model(), z.model())?;
    if !x.is_real(tol) {
        return Err(Error::NotReal);
    }
    Ok(x.entries.iter().zip(z.entries.iter()).all(|(xi, zi)| zi.norm() <= xi.re + tol))
}

/// Pointwise signum power `(f_i / |f_i|)^n |f_i|`, zero on the zero set.
pub fn lattice_power(f: &LatticeVector, n: i64) -> Result<LatticeVector> {
    if f.is_zero() {
        return Err(Error::ZeroLatticePower);
    }
    Ok(f.map_entries(|z| lattice_power_scalar(z, n)))
}

pub fn lattice_power_scalar(z: C64, n: i64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        return C64::new(0.0, 0.0);
    }
    match n {
        0 => C64::new(r, 0.0),
        1 => z,
        _ => C64::from_polar(r, n as f64 * z.arg()),
    }
}

/// Runs the pivot construction on `g` and reports whether the lattice powers
/// of the reduced basis span a space of dimension at least `rank(g)`.
pub fn independence_preserved(g: &[LatticeVector], n: i64) -> Result<bool> {
    let first = g.first().ok_or_else(|| Error::InvalidParameter("empty family".into()))?;
    for v in g {
        require_same_model(first.model(), v.model())?;
        if v.is_zero() {
            return Err(Error::InvalidParameter("zero vector in family".into()));
        }
    }
    let dim = first.len();
    let stacked = DMatrix::from_fn(dim, g.len(), |i, k| g[k].entries[i]);
    let r = numerical_rank(&stacked);
    // Reduced rows satisfy f_j(x_k) = delta_jk at the pivot coordinates x_k.
    let rows: Vec<Vec<C64>> = g.iter().map(|v| v.entries.iter().copied().collect()).collect();
    let (basis, pivots) = rref(&rows, 1e-10);
    if pivots.len() < r {
        return Ok(false);
    }
    let powered = DMatrix::from_fn(dim, basis.len(), |i, k| lattice_power_scalar(basis[k][i], n));
    Ok(numerical_rank(&powered) >= r)
}

/// A nonnegative matrix with at most one nonzero entry per row, which is
/// exactly when `|Tz| = T|z|` for all `z`.
pub fn is_lattice_homomorphism(t: &OperatorMatrix, tol: f64) -> bool {
    if !t.is_positive(tol) {
        return false;
    }
    t.entries().row_iter().all(|row| row.iter().filter(|z| z.norm() > tol).count() <= 1)
}
