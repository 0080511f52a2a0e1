//! Dense operators on coordinate lattices.

use crate::json::{ComplexInput, ComplexRepr};
use crate::lattice::{LatticeVector, NormTag, SpaceModel};
use crate::linalg::{matrix_power, rank_threshold, singular_values};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    model: SpaceModel,
}

/// Wire format: `{"model": .., "entries": [[..], ..], "constraints": [[..]]}`.
///
/// `constraints` is optional; when present its rows are linear conditions
/// `C f = 0` that restrict every kernel computation to a subspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorFile {
    pub model: SpaceModel,
    pub entries: Vec<Vec<ComplexInputRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<Vec<ComplexInputRepr>>>,
}

/// Accepts either a bare number or `{"re", "im"}` and writes the latter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(from = "ComplexInput", into = "ComplexRepr")]
pub struct ComplexInputRepr(pub C64);

impl From<ComplexInput> for ComplexInputRepr {
    fn from(c: ComplexInput) -> Self {
        ComplexInputRepr(c.into())
    }
}

impl From<ComplexInputRepr> for ComplexRepr {
    fn from(c: ComplexInputRepr) -> Self {
        c.0.into()
    }
}

fn rows_to_matrix(rows: &[Vec<ComplexInputRepr>], ncols: usize) -> Result<DMatrix<C64>> {
    for r in rows {
        if r.len() != ncols {
            return Err(Error::DimensionMismatch { expected: ncols, got: r.len() });
        }
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j].0))
}

fn matrix_to_rows(m: &DMatrix<C64>) -> Vec<Vec<ComplexInputRepr>> {
    m.row_iter().map(|r| r.iter().map(|z| ComplexInputRepr(*z)).collect()).collect()
}

impl OperatorFile {
    pub fn into_parts(self) -> Result<(OperatorMatrix, Option<DMatrix<C64>>)> {
        let n = self.model.dim();
        if self.entries.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.entries.len() });
        }
        let t = OperatorMatrix::new(rows_to_matrix(&self.entries, n)?, self.model)?;
        let c = match self.constraints {
            Some(rows) if !rows.is_empty() => Some(rows_to_matrix(&rows, n)?),
            _ => None,
        };
        Ok((t, c))
    }

    pub fn from_parts(t: &OperatorMatrix, constraints: Option<&DMatrix<C64>>) -> Self {
        OperatorFile {
            model: t.model.clone(),
            entries: matrix_to_rows(&t.entries),
            constraints: constraints.map(matrix_to_rows),
        }
    }
}

/// Resolvent together with its accuracy diagnostics.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub matrix: OperatorMatrix,
    /// `||(lambda - T) R - I||` in the model norm.
    pub residual: f64,
    /// Ratio of extreme singular values of `lambda - T`.
    pub condition: f64,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<C64>, model: SpaceModel) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidModel(format!(
                "matrix is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: entries.nrows() });
        }
        Ok(OperatorMatrix { entries, model })
    }

    pub fn from_real(m: &DMatrix<f64>, norm: NormTag) -> Result<Self> {
        let model = SpaceModel::new(m.nrows(), norm)?;
        OperatorMatrix::new(m.map(|x| C64::new(x, 0.0)), model)
    }

    pub fn from_real_rows(rows: &[Vec<f64>], norm: NormTag) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        OperatorMatrix::from_real(&DMatrix::from_fn(n, n, |i, j| rows[i][j]), norm)
    }

    pub fn identity(model: SpaceModel) -> Self {
        let n = model.dim();
        OperatorMatrix { entries: DMatrix::identity(n, n), model }
    }

    pub fn zeros(model: SpaceModel) -> Self {
        let n = model.dim();
        OperatorMatrix { entries: DMatrix::zeros(n, n), model }
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn model(&self) -> &SpaceModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn with_entries(&self, entries: DMatrix<C64>) -> Result<Self> {
        OperatorMatrix::new(entries, self.model.clone())
    }

    pub fn scaled(&self, s: C64) -> Self {
        OperatorMatrix { entries: &self.entries * s, model: self.model.clone() }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.entries.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.entries.map(|z| z.re)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.entries.iter().all(|z| z.im.abs() <= tol && z.re >= -tol)
    }

    pub fn is_markov(&self, tol: f64) -> Result<bool> {
        if self.model.norm_tag() != NormTag::Sup {
            return Err(Error::MarkovNeedsSupNorm);
        }
        Ok(self.is_positive(tol)
            && self.entries.row_iter().all(|r| (r.iter().map(|z| z.re).sum::<f64>() - 1.0).abs() <= tol))
    }

    /// Induced operator norm of the model.
    pub fn op_norm(&self) -> f64 {
        matrix_norm(&self.entries, self.model.norm_tag())
    }

    pub fn apply(&self, v: &LatticeVector) -> Result<LatticeVector> {
        if !self.model.compatible(v.model()) {
            return Err(Error::ModelMismatch("operator and vector models differ".into()));
        }
        LatticeVector::new(&self.entries * v.entries(), v.model().clone())
    }

    pub fn power(&self, n: u64) -> Self {
        OperatorMatrix { entries: matrix_power(&self.entries, n), model: self.model.clone() }
    }

    /// `(1/n) sum_{k<n} T^k`.
    pub fn cesaro_mean(&self, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Cesàro mean needs n >= 1".into()));
        }
        let dim = self.dim();
        let sum = if n <= 4096 {
            let mut acc = DMatrix::<C64>::zeros(dim, dim);
            let mut p = DMatrix::<C64>::identity(dim, dim);
            for _ in 0..n {
                acc += &p;
                p = &p * &self.entries;
            }
            acc
        } else {
            power_sum(&self.entries, n).0
        };
        Ok(OperatorMatrix { entries: sum / C64::new(n as f64, 0.0), model: self.model.clone() })
    }

    /// `(lambda I - T)^{-1}`; fails when `lambda - T` is numerically singular.
    pub fn resolvent(&self, lambda: C64) -> Result<Resolvent> {
        let n = self.dim();
        let a = DMatrix::<C64>::identity(n, n) * lambda - &self.entries;
        let sv = singular_values(&a);
        let (smax, smin) = (sv[0], *sv.last().expect("nonempty"));
        if smin <= rank_threshold(n, smax.max(1.0)) {
            return Err(Error::InSpectrum(format!("{lambda}")));
        }
        let mut inv = a
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::InSpectrum(format!("{lambda}")))?;
        // One step of iterative refinement.
        let defect = DMatrix::<C64>::identity(n, n) - &a * &inv;
        inv += &inv * defect;
        let residual =
            matrix_norm(&(&a * &inv - DMatrix::<C64>::identity(n, n)), self.model.norm_tag());
        Ok(Resolvent {
            matrix: OperatorMatrix { entries: inv, model: self.model.clone() },
            residual,
            condition: smax / smin,
        })
    }

    /// Restriction of `T` to the principal ideal generated by `x >= 0`.
    pub fn restrict_to_ideal(&self, x: &LatticeVector, tol: f64) -> Result<Self> {
        if !self.model.compatible(x.model()) {
            return Err(Error::ModelMismatch("operator and vector models differ".into()));
        }
        if !x.is_real(tol) || x.entries().iter().any(|z| z.re < -tol) {
            return Err(Error::NotNonnegative);
        }
        let support: Vec<usize> = (0..x.len()).filter(|&i| x.entries()[i].re > tol).collect();
        if support.is_empty() {
            return Err(Error::InvalidParameter("x must be nonzero".into()));
        }
        let inside: Vec<bool> = (0..x.len()).map(|i| support.contains(&i)).collect();
        // T e_j must stay in the support for every j in the support.
        for &j in &support {
            for i in 0..self.dim() {
                if !inside[i] && self.entries[(i, j)].norm() > tol {
                    return Err(Error::IdealNotInvariant);
                }
            }
        }
        let sub = DMatrix::from_fn(support.len(), support.len(), |a, b| {
            self.entries[(support[a], support[b])]
        });
        let model = self.model.restrict(&support, NormTag::Sup)?;
        OperatorMatrix::new(sub, model)
    }

    pub fn transpose(&self) -> Self {
        let norm = match self.model.norm_tag() {
            NormTag::Sup => NormTag::One,
            NormTag::One => NormTag::Sup,
        };
        let model = SpaceModel::new(self.dim(), norm).expect("positive dimension");
        let model = match self.model.labels() {
            Some(l) => model.with_labels(l.to_vec()).expect("labels already validated"),
            None => model,
        };
        OperatorMatrix { entries: self.entries.transpose(), model }
    }

    pub fn mul(&self, other: &OperatorMatrix) -> Result<Self> {
        if !self.model.compatible(&other.model) {
            return Err(Error::ModelMismatch("operator models differ".into()));
        }
        Ok(OperatorMatrix { entries: &self.entries * &other.entries, model: self.model.clone() })
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<Self> {
        if !self.model.compatible(&other.model) {
            return Err(Error::ModelMismatch("operator models differ".into()));
        }
        Ok(OperatorMatrix { entries: &self.entries - &other.entries, model: self.model.clone() })
    }

    pub fn apply_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.entries * v
    }
}

pub fn matrix_norm(m: &DMatrix<C64>, norm: NormTag) -> f64 {
    match norm {
        NormTag::Sup => m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max),
        NormTag::One => {
            m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
        }
    }
}

/// Returns `(sum_{k<n} A^k, A^n)` by binary splitting.
pub fn power_sum(a: &DMatrix<C64>, n: u64) -> (DMatrix<C64>, DMatrix<C64>) {
    let dim = a.nrows();
    if n == 0 {
        return (DMatrix::zeros(dim, dim), DMatrix::identity(dim, dim));
    }
    if n == 1 {
        return (DMatrix::identity(dim, dim), a.clone());
    }
    let (s, p) = power_sum(a, n / 2);
    // S(2m) = S(m) (I + A^m), A^{2m} = (A^m)^2
    let mut s2 = &s + &s * &p;
    let mut p2 = &p * &p;
    if n % 2 == 1 {
        s2 += &p2;
        p2 = &p2 * a;
    }
    (s2, p2)
}

pub fn direct_sum(blocks: &[OperatorMatrix]) -> Result<OperatorMatrix> {
    let first = blocks.first().ok_or_else(|| Error::InvalidParameter("no blocks".into()))?;
    let tag = first.model.norm_tag();
    if blocks.iter().any(|b| b.model.norm_tag() != tag) {
        return Err(Error::MixedNormTags);
    }
    let n: usize = blocks.iter().map(OperatorMatrix::dim).sum();
    let mut m = DMatrix::<C64>::zeros(n, n);
    let mut offset = 0;
    for b in blocks {
        let d = b.dim();
        m.view_mut((offset, offset), (d, d)).copy_from(&b.entries);
        offset += d;
    }
    OperatorMatrix::new(m, SpaceModel::new(n, tag)?)
}
