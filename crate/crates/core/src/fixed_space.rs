//! Suprema inside the fixed space `F = ker(1 - T)` of a Markov matrix.
//!
//! For real fixed vectors `G`, the entrywise supremum `h0` satisfies
//! `h0 <= T h0`, so `T^n h0` increases to a fixed vector bounded by
//! `max ||g|| 1`. Its limit is the supremum of `G` in `F`.

use crate::lattice::{entrywise_sup, LatticeVector, SpaceModel};
use crate::linalg::{kernel, min_weighted_upper_bound, real_span_basis, rref};
use crate::operator::OperatorMatrix;
use crate::spectral::mean_ergodic_projection;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

/// Membership tolerance for inputs claimed to be fixed.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
pub const DEFAULT_SUP_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedSpaceHandle {
    t: OperatorMatrix,
    /// Columns: reduced echelon basis of the real fixed space.
    basis: DMatrix<f64>,
    pivots: Vec<usize>,
    tol: f64,
}

impl FixedSpaceHandle {
    pub fn new(t: OperatorMatrix, tol: f64) -> Result<Self> {
        if !t.is_markov(tol.max(1e-12))? {
            return Err(Error::NotMarkov);
        }
        let n = t.dim();
        let a = DMatrix::<C64>::identity(n, n) - t.entries();
        let span = real_span_basis(&kernel(&a).basis);
        let rows: Vec<Vec<C64>> =
            span.column_iter().map(|c| c.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        let (reduced, pivots) = rref(&rows, 1e-10);
        // Snap round-off next to integers so that exact data stays exact.
        let basis = DMatrix::from_fn(n, reduced.len(), |i, k| {
            let x = reduced[k][i].re;
            if (x - x.round()).abs() <= 1e-12 { x.round() } else { x }
        });
        let handle = FixedSpaceHandle { t, basis, pivots, tol };
        let one = DVector::from_element(n, 1.0);
        if handle.residual(&one) > MEMBERSHIP_TOL || handle.span_residual(&one) > MEMBERSHIP_TOL {
            return Err(Error::InvalidModel("constant vector is not fixed".into()));
        }
        Ok(handle)
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.t
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<LatticeVector> {
        self.basis
            .column_iter()
            .map(|c| LatticeVector::from_real(c.as_slice(), self.model().clone()).expect("length matches"))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn model(&self) -> &SpaceModel {
        self.t.model()
    }

    fn treal(&self) -> DMatrix<f64> {
        self.t.real_part()
    }

    /// `||T v - v||_inf`.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (self.treal() * v - v).amax()
    }

    /// Distance of `v` from its echelon reconstruction `sum v[pivot_k] b_k`.
    fn span_residual(&self, v: &DVector<f64>) -> f64 {
        let c = DVector::from_iterator(self.pivots.len(), self.pivots.iter().map(|&p| v[p]));
        (&self.basis * c - v).amax()
    }

    fn require_fixed(&self, g: &LatticeVector) -> Result<DVector<f64>> {
        if g.len() != self.t.dim() {
            return Err(Error::DimensionMismatch { expected: self.t.dim(), got: g.len() });
        }
        if !g.is_real(MEMBERSHIP_TOL) {
            return Err(Error::NotReal);
        }
        let v = DVector::from_vec(g.re());
        let res = self.residual(&v);
        if res > MEMBERSHIP_TOL * v.amax().max(1.0) {
            return Err(Error::NotFixed(res));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupResult {
    pub value: LatticeVector,
    pub iterations: usize,
    /// `max_n max_i (T^n h0 - T^{n+1} h0)_i`; at most `tol` certifies monotonicity.
    pub max_decrease: f64,
    /// `||T h* - h*||_inf`.
    pub residual: f64,
    /// `||h* - P h0||_inf` with `P` the mean ergodic projection.
    pub projection_distance: Option<f64>,
}

/// Supremum of `g` in `F` by the monotone iteration `h <- T h`.
pub fn sup_in_fixed_space(
    h: &FixedSpaceHandle,
    g: &[LatticeVector],
    tol: f64,
    max_iter: usize,
) -> Result<SupResult> {
    if g.is_empty() {
        return Err(Error::EmptySupremum);
    }
    for v in g {
        h.require_fixed(v)?;
    }
    let h0 = DVector::from_vec(entrywise_sup(g)?.re());
    let t = h.treal();
    let stop = tol * h0.amax().max(1.0);
    let mut cur = h0.clone();
    let mut max_decrease = f64::NEG_INFINITY;
    let mut iterations = 0;
    loop {
        let next = &t * &cur;
        let diff = &next - &cur;
        max_decrease = max_decrease.max(-diff.min());
        if diff.amax() <= stop {
            cur = next;
            break;
        }
        iterations += 1;
        if iterations >= max_iter {
            return Err(Error::NoConvergence(max_iter));
        }
        cur = next;
    }
    let residual = h.residual(&cur);
    let projection_distance = mean_ergodic_projection(h.operator(), 1e-9)
        .ok()
        .and_then(|m| m.projection)
        .map(|p| (p.real_part() * &h0 - &cur).amax());
    Ok(SupResult {
        value: LatticeVector::from_real(cur.as_slice(), h.model().clone())?,
        iterations,
        max_decrease: max_decrease.max(0.0),
        residual,
        projection_distance,
    })
}

/// True when `sup <= k + tol` for each supplied fixed upper bound `k`.
pub fn below_all_upper_bounds(sup: &LatticeVector, uppers: &[LatticeVector], tol: f64) -> bool {
    let s = sup.re();
    uppers.iter().all(|k| k.re().iter().zip(&s).all(|(ki, si)| *si <= ki + tol))
}

/// A fixed upper bound of `g` minimizing `weights . k`, found by linear
/// programming over the echelon basis of `F`.
pub fn lp_upper_bound(h: &FixedSpaceHandle, g: &[LatticeVector], weights: &[f64]) -> Result<Option<LatticeVector>> {
    let lower = entrywise_sup(g)?.re();
    Ok(min_weighted_upper_bound(h.basis(), &lower, weights)
        .map(|v| LatticeVector::from_real(v.as_slice(), h.model().clone()).expect("length matches")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusResult {
    pub value: LatticeVector,
    /// `| || |f|_F || - ||f|| |`.
    pub norm_gap: f64,
    pub sup: SupResult,
}

/// `|f|_F = sup_F {f, -f}`.
pub fn f_modulus(h: &FixedSpaceHandle, f: &LatticeVector) -> Result<ModulusResult> {
    let neg = f.map_entries(|z| -z);
    let sup = sup_in_fixed_space(h, &[f.clone(), neg], DEFAULT_SUP_TOL, DEFAULT_MAX_ITER)?;
    let norm_gap = (sup.value.norm() - f.norm()).abs();
    Ok(ModulusResult { value: sup.value.clone(), norm_gap, sup })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmIdentity {
    pub join: LatticeVector,
    /// `||g1 v_F g2||`.
    pub join_norm: f64,
    /// `||g1 v g2||` (pointwise).
    pub pointwise_norm: f64,
    /// `max(||g1||, ||g2||)`.
    pub max_norm: f64,
    pub holds: bool,
}

pub fn am_identity_check(h: &FixedSpaceHandle, g1: &LatticeVector, g2: &LatticeVector, tol: f64) -> Result<AmIdentity> {
    for g in [g1, g2] {
        if g.entries().iter().any(|z| z.re < -tol || z.im.abs() > tol) {
            return Err(Error::NotNonnegative);
        }
    }
    let sup = sup_in_fixed_space(h, &[g1.clone(), g2.clone()], DEFAULT_SUP_TOL, DEFAULT_MAX_ITER)?;
    let join_norm = sup.value.norm();
    let pointwise_norm = entrywise_sup(&[g1.clone(), g2.clone()])?.norm();
    let max_norm = g1.norm().max(g2.norm());
    let holds = (join_norm - pointwise_norm).abs() <= tol && (pointwise_norm - max_norm).abs() <= tol;
    Ok(AmIdentity { join: sup.value, join_norm, pointwise_norm, max_norm, holds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SublatticeVerdict {
    pub is_sublattice: bool,
    /// A fixed vector whose modulus is not fixed.
    pub witness: Option<LatticeVector>,
    /// `||T|w| - |w|||_inf` for the witness.
    pub witness_residual: Option<f64>,
}

/// `F` is a sublattice exactly when its echelon basis consists of
/// nonnegative vectors with pairwise disjoint supports.
///
/// A basis vector with a negative entry is a witness: writing `|b|` in the
/// echelon basis only picks up `b` itself, so `|b| = b` would be forced.
/// For overlapping nonnegative `b_i, b_j` the combination vanishing on a
/// shared coordinate is a witness.
pub fn is_fixed_space_sublattice(h: &FixedSpaceHandle) -> SublatticeVerdict {
    let cut = 1e-10;
    let cols: Vec<DVector<f64>> = h.basis.column_iter().map(|c| c.into_owned()).collect();
    let make = |v: &DVector<f64>| {
        let w = LatticeVector::from_real(v.as_slice(), h.model().clone()).expect("length matches");
        let res = h.residual(&v.map(f64::abs));
        SublatticeVerdict { is_sublattice: false, witness: Some(w), witness_residual: Some(res) }
    };
    if let Some(b) = cols.iter().find(|b| b.iter().any(|&x| x < -cut)) {
        return make(b);
    }
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            if let Some(c) = (0..h.t.dim()).find(|&c| cols[i][c] > cut && cols[j][c] > cut) {
                let s = cols[i][c] / cols[j][c];
                return make(&(&cols[i] - &cols[j] * s));
            }
        }
    }
    SublatticeVerdict { is_sublattice: true, witness: None, witness_residual: None }
}

/// Truncation of the AM-space example `E = R^d x c x c` with
/// `S(f, g, h) = (T f, (f_2, g_1, ..., g_{N-1}), h)`; the limit coupling
/// `lim g = lim h` becomes the constraint row `g_N - h_N = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedExample {
    pub base: FixedSpaceHandle,
    pub n: usize,
    pub operator: OperatorMatrix,
    pub constraint: DMatrix<C64>,
}

impl ExtendedExample {
    pub fn new(base: FixedSpaceHandle, n: usize) -> Result<Self> {
        let d = base.t.dim();
        if d < 2 {
            return Err(Error::InvalidParameter("base space needs a second coordinate".into()));
        }
        if n == 0 {
            return Err(Error::TruncationTooSmall("N must be positive".into()));
        }
        let dim = d + 2 * n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        m.view_mut((0, 0), (d, d)).copy_from(base.t.entries());
        m[(d, 1)] = C64::new(1.0, 0.0);
        for k in 1..n {
            m[(d + k, d + k - 1)] = C64::new(1.0, 0.0);
        }
        for k in 0..n {
            m[(d + n + k, d + n + k)] = C64::new(1.0, 0.0);
        }
        let mut constraint = DMatrix::<C64>::zeros(1, dim);
        constraint[(0, d + n - 1)] = C64::new(1.0, 0.0);
        constraint[(0, dim - 1)] = C64::new(-1.0, 0.0);
        let operator = OperatorMatrix::new(m, SpaceModel::sup(dim))?;
        Ok(ExtendedExample { base, n, operator, constraint })
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    fn base_dim(&self) -> usize {
        self.base.t.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    pub bound: LatticeVector,
    /// `||S b - b||_inf`.
    pub fixed_residual: f64,
    /// `|g_N - h_N|`.
    pub constraint_residual: f64,
    /// `min_i (b - |(f, 0, 0)|)_i`; nonnegative for an upper bound.
    pub upper_margin: f64,
    /// Coordinate lowered relative to the previous bound.
    pub decreased: Option<usize>,
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessChain {
    pub steps: Vec<ChainStep>,
    pub truncation: usize,
}

impl WitnessChain {
    /// Every step is a fixed upper bound strictly below its predecessor.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.steps.iter().enumerate().all(|(i, s)| {
            s.fixed_residual <= tol
                && s.constraint_residual <= tol
                && s.upper_margin >= -tol
                && (i == 0 || s.decrease > tol)
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "label": format!("demonstration at truncation N = {}", self.truncation),
            "steps": self.steps.iter().map(|s| json!({
                "bound": s.bound.re(),
                "fixed_residual": s.fixed_residual,
                "constraint_residual": s.constraint_residual,
                "upper_margin": s.upper_margin,
                "decreased_coordinate": s.decreased,
                "decrease": s.decrease,
            })).collect::<Vec<_>>(),
        })
    }
}

/// A chain of `depth` fixed upper bounds of `+-(f, 0, 0)`, each strictly
/// below the previous: evidence that no least upper bound exists.
pub fn no_supremum_witness(ext: &ExtendedExample, f: &LatticeVector, depth: usize) -> Result<WitnessChain> {
    if depth > ext.n {
        return Err(Error::TruncationTooSmall(format!("depth {depth} exceeds N = {}", ext.n)));
    }
    let mut chain = WitnessChain { steps: Vec::new(), truncation: ext.n };
    if depth == 0 {
        return Ok(chain);
    }
    let (d, n) = (ext.base_dim(), ext.n);
    let fm = f_modulus(&ext.base, f)?.value.re();
    let level = fm[1];
    if level <= 1e-12 {
        return Err(Error::InvalidParameter("the bound has no positive tail to lower".into()));
    }
    let mut b = DVector::<f64>::zeros(d + 2 * n);
    b.rows_mut(0, d).copy_from(&DVector::from_vec(fm));
    b.rows_mut(d, 2 * n).fill(level);
    let mut lower = DVector::<f64>::zeros(d + 2 * n);
    for (i, x) in f.re().iter().enumerate() {
        lower[i] = x.abs();
    }
    let s = ext.operator.real_part();
    let c = ext.constraint.map(|z| z.re);
    let mut record = |b: &DVector<f64>, decreased: Option<usize>, decrease: f64| -> Result<()> {
        chain.steps.push(ChainStep {
            bound: LatticeVector::from_real(b.as_slice(), ext.operator.model().clone())?,
            fixed_residual: (&s * b - b).amax(),
            constraint_residual: (&c * b).amax(),
            upper_margin: (b - &lower).min(),
            decreased,
            decrease,
        });
        Ok(())
    };
    record(&b, None, 0.0)?;
    for k in 1..depth {
        let idx = d + n + k - 1;
        let old = b[idx];
        b[idx] = 0.0;
        record(&b, Some(idx), old)?;
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example() -> FixedSpaceHandle {
        let t = OperatorMatrix::from_real_rows(
            &[vec![1.0, 0.0, 0.0], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], vec![0.0, 0.0, 1.0]],
            crate::NormTag::Sup,
        )
        .unwrap();
        FixedSpaceHandle::new(t, 1e-12).unwrap()
    }

    fn v(x: &[f64]) -> LatticeVector {
        LatticeVector::from_real(x, SpaceModel::sup(x.len())).unwrap()
    }

    #[test]
    fn fixed_space_of_example() {
        let h = example();
        assert_eq!(h.dim(), 2);
        // Echelon basis of span{(1,1,1), (1,0,-1)}.
        let b = h.basis();
        let expect = [[1.0, 0.0, -1.0], [0.0, 1.0, 2.0]];
        for k in 0..2 {
            for i in 0..3 {
                assert_abs_diff_eq!(b[(i, k)], expect[k][i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn supremum_of_plus_minus_f() {
        let h = example();
        let r = f_modulus(&h, &v(&[1.0, 0.0, -1.0])).unwrap();
        for x in r.value.re() {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-10);
        }
        assert!(r.norm_gap < 1e-10);
        assert!(r.sup.max_decrease <= 1e-12);
        assert!(r.sup.projection_distance.unwrap() < 1e-10);
    }

    #[test]
    fn trivial_suprema() {
        let h = example();
        let f = v(&[1.0, 1.0, 1.0]);
        let r = sup_in_fixed_space(&h, &[f.clone()], 1e-12, 1000).unwrap();
        assert_eq!(r.value.re(), f.re());
        let zero = v(&[0.0; 3]);
        assert!(f_modulus(&h, &zero).unwrap().value.is_zero());
        let id = FixedSpaceHandle::new(OperatorMatrix::identity(SpaceModel::sup(3)), 1e-12).unwrap();
        let r = sup_in_fixed_space(&id, &[v(&[1.0, -2.0, 0.5]), v(&[0.0, 3.0, -1.0])], 1e-12, 10).unwrap();
        assert_eq!(r.value.re(), vec![1.0, 3.0, 0.5]);
        assert!(matches!(
            sup_in_fixed_space(&h, &[v(&[1.0, 0.0, 0.0])], 1e-12, 10),
            Err(Error::NotFixed(_))
        ));
        assert_eq!(sup_in_fixed_space(&h, &[], 1e-12, 10), Err(Error::EmptySupremum));
    }

    #[test]
    fn non_markov_rejected() {
        let t = OperatorMatrix::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 1.0]], crate::NormTag::Sup).unwrap();
        assert_eq!(FixedSpaceHandle::new(t, 1e-12), Err(Error::NotMarkov));
    }

    #[test]
    fn am_identity() {
        let h = example();
        let one = v(&[1.0, 1.0, 1.0]);
        let rep = am_identity_check(&h, &one, &one, 1e-10).unwrap();
        assert!(rep.holds);
        let g = v(&[2.0, 1.0, 0.0]);
        let rep = am_identity_check(&h, &g, &v(&[0.0; 3]), 1e-10).unwrap();
        assert!(rep.holds);
        for (a, b) in rep.join.re().iter().zip(g.re()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn sublattice_checks() {
        let rep = is_fixed_space_sublattice(&example());
        assert!(!rep.is_sublattice);
        assert_eq!(rep.witness.unwrap().re(), vec![1.0, 0.0, -1.0]);
        assert!(rep.witness_residual.unwrap() > 0.1);
        let id = FixedSpaceHandle::new(OperatorMatrix::identity(SpaceModel::sup(3)), 1e-12).unwrap();
        assert!(is_fixed_space_sublattice(&id).is_sublattice);
        let irr = OperatorMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.3, 0.7]], crate::NormTag::Sup).unwrap();
        assert!(is_fixed_space_sublattice(&FixedSpaceHandle::new(irr, 1e-12).unwrap()).is_sublattice);
    }

    #[test]
    fn overlapping_nonnegative_basis() {
        // F = span{(1,0,1/2), (0,1,1/2)}: nonnegative but overlapping.
        let t = OperatorMatrix::from_real_rows(
            &[
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.5, 0.5, 0.0],
            ],
            crate::NormTag::Sup,
        )
        .unwrap();
        let rep = is_fixed_space_sublattice(&FixedSpaceHandle::new(t, 1e-12).unwrap());
        assert!(!rep.is_sublattice);
        assert!(rep.witness_residual.unwrap() > 0.1);
    }

    #[test]
    fn witness_chain() {
        let ext = ExtendedExample::new(example(), 16).unwrap();
        let f = v(&[1.0, 0.0, -1.0]);
        let chain = no_supremum_witness(&ext, &f, 3).unwrap();
        assert_eq!(chain.steps.len(), 3);
        assert!(chain.is_valid(1e-9));
        let one = no_supremum_witness(&ext, &f, 1).unwrap();
        let b = one.steps[0].bound.re();
        assert!(b.iter().all(|x| (x - 1.0).abs() < 1e-10));
        assert!(no_supremum_witness(&ext, &f, 0).unwrap().steps.is_empty());
        assert!(matches!(no_supremum_witness(&ext, &f, 17), Err(Error::TruncationTooSmall(_))));
        assert!(ext.operator.is_markov(1e-12).unwrap());
    }
}
