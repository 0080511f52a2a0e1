//! Eigenstructure, peripheral spectra, cyclicity and dimension estimates,
//! mean ergodic projections, the dominated approximate eigenvector
//! condition (DAEC) and resolvent growth ratios.

use crate::json::complex_to_value;
use crate::lattice::{dominates, LatticeVector};
use crate::linalg::{
    kernel, least_singular_vector, nonneg_combination, nonneg_unit_in_span,
    power_rank, real_span_basis,
};
use crate::operator::{power_sum, OperatorMatrix};
use crate::rational::{recover_angle, Turn, DEFAULT_Q_MAX, DEFAULT_WINDOW};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::f64::consts::TAU;
use std::ops::RangeInclusive;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Eigenvalues closer than `cluster_tol * max(1, r)` are merged outright.
    pub cluster_tol: f64,
    /// Looser radius for merges that are confirmed by a rank test.
    pub merge_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { cluster_tol: 1e-7, merge_tol: 1e-3 }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        EigenOptions { cluster_tol: tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    pub value: C64,
    pub size: usize,
}

/// Eigenvalues with algebraic multiplicity, in solver order.
///
/// The QR iteration can stall on highly symmetric inputs such as cyclic
/// permutations; those are retried after a seeded unitary similarity.
pub fn raw_eigenvalues(t: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = t.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if let Some(ev) = schur_eigenvalues(t) {
        return Ok(ev);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..4 {
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = g.qr().q().map(|x| C64::new(x, 0.0));
        let rotated = q.transpose() * t * &q;
        if let Some(ev) = schur_eigenvalues(&rotated) {
            return Ok(ev);
        }
    }
    Err(Error::EigenSolverFailed)
}

fn schur_eigenvalues(t: &DMatrix<C64>) -> Option<Vec<C64>> {
    let max_iter = 10_000 * t.nrows();
    if t.iter().all(|z| z.im == 0.0) {
        let (_, tq) = t.map(|z| z.re).try_schur(f64::EPSILON, max_iter)?.unpack();
        Some(quasi_triangular_eigenvalues(&tq))
    } else {
        let schur = t.clone().try_schur(f64::EPSILON, max_iter)?;
        Some(schur.eigenvalues()?.iter().copied().collect())
    }
}

/// Eigenvalues of a real quasi-triangular Schur factor. The 2x2 blocks are
/// solved in complex arithmetic, so a block whose discriminant rounds to a
/// small positive value yields two real values instead of NaN.
fn quasi_triangular_eigenvalues(tq: &DMatrix<f64>) -> Vec<C64> {
    let n = tq.nrows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && tq[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (tq[(i, i)], tq[(i, i + 1)], tq[(i + 1, i)], tq[(i + 1, i + 1)]);
            let half = (a + d) / 2.0;
            let root = C64::new(((a - d) / 2.0).powi(2) + b * c, 0.0).sqrt();
            out.push(root + half);
            out.push(-root + half);
            i += 2;
        } else {
            out.push(C64::new(tq[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

fn single_linkage(points: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

/// `n - rank((mu - T)^k)`.
fn generalized_kernel_dim(t: &DMatrix<C64>, mu: C64, k: usize) -> usize {
    let n = t.nrows();
    let a = DMatrix::<C64>::identity(n, n) * mu - t;
    n - power_rank(&a, k)
}

fn weighted_centroid(clusters: &[Cluster]) -> Cluster {
    let size: usize = clusters.iter().map(|c| c.size).sum();
    let sum: C64 = clusters.iter().map(|c| c.value * c.size as f64).sum();
    Cluster { value: sum / size as f64, size }
}

fn merge_verified(t: &DMatrix<C64>, clusters: &[Cluster], radius: f64, floor: f64, out: &mut Vec<Cluster>) {
    if clusters.len() == 1 {
        out.push(clusters[0]);
        return;
    }
    let merged = weighted_centroid(clusters);
    if generalized_kernel_dim(t, merged.value, merged.size) == merged.size {
        out.push(merged);
        return;
    }
    let next = radius / 10.0;
    if next < floor {
        out.extend_from_slice(clusters);
        return;
    }
    let values: Vec<C64> = clusters.iter().map(|c| c.value).collect();
    for group in single_linkage(&values, next) {
        let sub: Vec<Cluster> = group.iter().map(|&i| clusters[i]).collect();
        merge_verified(t, &sub, next, floor, out);
    }
}

/// Clusters computed eigenvalues into distinct spectral values.
///
/// Tight clusters are accepted as they are. Looser groups (as produced by
/// Jordan blocks, whose eigenvalues scatter like `eps^(1/k)`) are merged
/// only when the generalized eigenspace at their centroid has exactly the
/// group's size; otherwise they are split again.
pub fn eigenvalue_clusters(t: &DMatrix<C64>, opts: &EigenOptions) -> Result<Vec<Cluster>> {
    let raw = raw_eigenvalues(t)?;
    let scale = raw.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let tight_r = opts.cluster_tol * scale;
    let tight: Vec<Cluster> = single_linkage(&raw, tight_r)
        .into_iter()
        .map(|g| {
            let members: Vec<Cluster> = g.iter().map(|&i| Cluster { value: raw[i], size: 1 }).collect();
            weighted_centroid(&members)
        })
        .collect();
    let loose_r = opts.merge_tol * scale;
    let values: Vec<C64> = tight.iter().map(|c| c.value).collect();
    let mut out = Vec::new();
    for group in single_linkage(&values, loose_r) {
        let sub: Vec<Cluster> = group.iter().map(|&i| tight[i]).collect();
        merge_verified(t, &sub, loose_r, tight_r, &mut out);
    }
    let real = t.iter().all(|z| z.im == 0.0);
    for c in &mut out {
        if real && c.value.im.abs() <= tight_r {
            c.value.im = 0.0;
        }
    }
    sort_values(&mut out, |c| c.value);
    Ok(out)
}

fn sort_values<T>(items: &mut [T], key: impl Fn(&T) -> C64) {
    items.sort_by(|a, b| {
        let (x, y) = (key(a), key(b));
        y.norm()
            .partial_cmp(&x.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(canonical_arg(x).total_cmp(&canonical_arg(y)))
    });
}

/// Argument in `[0, 2 pi)`.
pub fn canonical_arg(z: C64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Largest modulus among the clustered eigenvalues.
pub fn spectral_radius(t: &OperatorMatrix) -> Result<f64> {
    let clusters = eigenvalue_clusters(t.entries(), &EigenOptions::default())?;
    Ok(clusters.iter().map(|c| c.value.norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    pub alg_mult: usize,
    pub geo_mult: usize,
    pub basis: Vec<LatticeVector>,
    pub pole_order: usize,
    /// Largest `||(value - T) v||_2` over the (unit) basis vectors.
    pub residual: f64,
}

fn stacked(t: &DMatrix<C64>, mu: C64, constraints: Option<&DMatrix<C64>>) -> DMatrix<C64> {
    let n = t.nrows();
    let a = DMatrix::<C64>::identity(n, n) * mu - t;
    match constraints {
        None => a,
        Some(c) => {
            let mut s = DMatrix::<C64>::zeros(n + c.nrows(), n);
            s.rows_mut(0, n).copy_from(&a);
            s.rows_mut(n, c.nrows()).copy_from(c);
            s
        }
    }
}

/// Largest Jordan block size at `mu`: the first `m` with
/// `rank((mu - T)^m) = rank((mu - T)^(m+1))`.
pub fn pole_order_from_rank(t: &DMatrix<C64>, mu: C64, cap: usize) -> usize {
    let n = t.nrows();
    let a = DMatrix::<C64>::identity(n, n) * mu - t;
    let mut rank = power_rank(&a, 1);
    for m in 1..=cap.max(1) {
        let next_rank = power_rank(&a, m + 1);
        if next_rank == rank {
            return m;
        }
        rank = next_rank;
    }
    cap.max(1)
}

pub fn eigen(t: &OperatorMatrix, tol: f64) -> Result<Vec<EigenPair>> {
    eigen_with(t, None, &EigenOptions::with_tol(tol))
}

/// Eigenpairs with kernels restricted by the rows of `constraints`
/// (`C v = 0`). Constrained geometric multiplicities may be 0.
pub fn eigen_constrained(t: &OperatorMatrix, constraints: &DMatrix<C64>, tol: f64) -> Result<Vec<EigenPair>> {
    eigen_with(t, Some(constraints), &EigenOptions::with_tol(tol))
}

pub fn eigen_with(
    t: &OperatorMatrix,
    constraints: Option<&DMatrix<C64>>,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let m = t.entries();
    if let Some(c) = constraints {
        if c.ncols() != t.dim() {
            return Err(Error::DimensionMismatch { expected: t.dim(), got: c.ncols() });
        }
    }
    let clusters = eigenvalue_clusters(m, opts)?;
    let mut pairs = Vec::with_capacity(clusters.len());
    for cl in clusters {
        let ker = kernel(&stacked(m, cl.value, constraints));
        let mut vecs = ker.basis;
        if constraints.is_none() && vecs.is_empty() {
            vecs.push(least_singular_vector(&stacked(m, cl.value, None)));
        }
        vecs.truncate(cl.size);
        let a = DMatrix::<C64>::identity(t.dim(), t.dim()) * cl.value - m;
        let residual = vecs.iter().map(|v| (&a * v).norm()).fold(0.0, f64::max);
        let basis = vecs
            .into_iter()
            .map(|v| LatticeVector::new(v, t.model().clone()).expect("dimension matches"))
            .collect::<Vec<_>>();
        pairs.push(EigenPair {
            value: cl.value,
            alg_mult: cl.size,
            geo_mult: basis.len(),
            basis,
            pole_order: pole_order_from_rank(m, cl.value, cl.size),
            residual,
        });
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CyclicStatus {
    Cyclic,
    NotCyclic,
    Inconclusive,
}

impl CyclicStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CyclicStatus::Cyclic => "cyclic",
            CyclicStatus::NotCyclic => "not_cyclic",
            CyclicStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicWitness {
    /// Element whose power is missing.
    pub element: C64,
    pub n: i64,
    /// `r e^{i n theta}`, absent from the set.
    pub missing: C64,
    /// True when the element's angle had no rational match.
    pub irrational: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicityVerdict {
    pub status: CyclicStatus,
    pub witness: Option<CyclicWitness>,
}

/// Decides whether `s` (all of modulus `r`) is closed under
/// `r e^{i theta} -> r e^{i n theta}`.
pub fn is_cyclic(s: &[C64], r: f64, tol: f64, q_max: u64) -> Result<CyclicityVerdict> {
    if q_max < 1 {
        return Err(Error::InvalidParameter("q_max must be at least 1".into()));
    }
    if r <= 0.0 {
        return Ok(CyclicityVerdict { status: CyclicStatus::Inconclusive, witness: None });
    }
    let scale = r.max(1.0);
    if let Some(bad) = s.iter().find(|z| (z.norm() - r).abs() > tol * scale) {
        return Err(Error::InvalidParameter(format!("|{bad}| differs from r = {r}")));
    }
    let present = |target: C64| s.iter().any(|z| (z - target).norm() <= tol * scale);
    let window = tol.max(DEFAULT_WINDOW);
    for &z in s {
        let theta = z.arg();
        let power = |n: i64| C64::from_polar(r, n as f64 * theta);
        match recover_angle(z, q_max, window) {
            Some(turn) => {
                for n in 2..=turn.q as i64 {
                    let target = C64::from_polar(r, turn.times(n).angle());
                    if !present(target) {
                        return Ok(not_cyclic(z, n, target, false));
                    }
                }
            }
            None => {
                // Powers of an irrational rotation are pairwise distinct.
                let n = (2..=s.len() as i64 + 2).find(|&n| !present(power(n))).unwrap_or(2);
                return Ok(not_cyclic(z, n, power(n), true));
            }
        }
    }
    Ok(CyclicityVerdict { status: CyclicStatus::Cyclic, witness: None })
}

fn not_cyclic(element: C64, n: i64, missing: C64, irrational: bool) -> CyclicityVerdict {
    CyclicityVerdict {
        status: CyclicStatus::NotCyclic,
        witness: Some(CyclicWitness { element, n, missing, irrational }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimVerdict {
    pub value: C64,
    pub theta: f64,
    pub n: i64,
    pub target: C64,
    /// `dim ker(r e^{i theta} - T)`.
    pub lhs: usize,
    /// `dim ker(r e^{i n theta} - T)`, 0 when absent.
    pub rhs: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub eigen: EigenOptions,
    /// Peripheral band, relative to `max(1, r)`.
    pub band_tol: f64,
    /// Matching radius for targets such as `r e^{i n theta}`, relative.
    pub match_tol: f64,
    pub q_max: u64,
    pub n_range: Option<(i64, i64)>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            eigen: EigenOptions::default(),
            band_tol: 1e-8,
            match_tol: 1e-6,
            q_max: DEFAULT_Q_MAX,
            n_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub pairs: Vec<EigenPair>,
    pub spectral_radius: f64,
    /// Pairs with `|lambda| >= r - band`, including constrained ones of
    /// geometric multiplicity 0.
    pub peripheral: Vec<EigenPair>,
    pub cyclic: CyclicityVerdict,
    pub dim_checks: Vec<DimVerdict>,
    pub band_tol: f64,
    pub constrained: bool,
}

pub fn spectral_report(
    t: &OperatorMatrix,
    constraints: Option<&DMatrix<C64>>,
    opts: &ReportOptions,
) -> Result<SpectralReport> {
    let pairs = eigen_with(t, constraints, &opts.eigen)?;
    let r = pairs.iter().map(|p| p.value.norm()).fold(0.0, f64::max);
    let band = opts.band_tol * r.max(1.0);
    let peripheral: Vec<EigenPair> =
        pairs.iter().filter(|p| p.value.norm() >= r - band).cloned().collect();
    let point: Vec<C64> = peripheral.iter().filter(|p| p.geo_mult > 0).map(|p| p.value).collect();
    let cyclic = if r == 0.0 {
        CyclicityVerdict { status: CyclicStatus::Inconclusive, witness: None }
    } else {
        // Moduli in the band may differ from r by up to `band`.
        is_cyclic(&point, r, opts.match_tol.max(opts.band_tol), opts.q_max)?
    };
    let dim_checks = match opts.n_range {
        Some((lo, hi)) => dims_from_pairs(&pairs, r, band, opts.match_tol, lo..=hi),
        None => Vec::new(),
    };
    Ok(SpectralReport {
        pairs,
        spectral_radius: r,
        peripheral,
        cyclic,
        dim_checks,
        band_tol: opts.band_tol,
        constrained: constraints.is_some(),
    })
}

fn dims_from_pairs(
    pairs: &[EigenPair],
    r: f64,
    band: f64,
    match_tol: f64,
    n_range: RangeInclusive<i64>,
) -> Vec<DimVerdict> {
    let radius = match_tol * r.max(1.0);
    let dim_at = |target: C64| {
        pairs
            .iter()
            .filter(|p| (p.value - target).norm() <= radius)
            .min_by(|a, b| (a.value - target).norm().total_cmp(&(b.value - target).norm()))
            .map_or(0, |p| p.geo_mult)
    };
    let mut out = Vec::new();
    for p in pairs.iter().filter(|p| p.geo_mult > 0 && p.value.norm() >= r - band) {
        let theta = canonical_arg(p.value);
        for n in n_range.clone() {
            let target = C64::from_polar(r, n as f64 * theta);
            let rhs = dim_at(target);
            out.push(DimVerdict {
                value: p.value,
                theta,
                n,
                target,
                lhs: p.geo_mult,
                rhs,
                pass: p.geo_mult <= rhs,
            });
        }
    }
    out
}

impl SpectralReport {
    pub fn peripheral_spectrum(&self) -> Vec<C64> {
        self.peripheral.iter().map(|p| p.value).collect()
    }

    /// Peripheral values with a nonzero (possibly constrained) eigenvector.
    pub fn peripheral_point_spectrum(&self) -> Vec<C64> {
        self.peripheral.iter().filter(|p| p.geo_mult > 0).map(|p| p.value).collect()
    }

    pub fn dim_violations(&self) -> Vec<&DimVerdict> {
        self.dim_checks.iter().filter(|d| !d.pass).collect()
    }

    pub fn to_json(&self) -> Value {
        let pairs: Vec<Value> = self
            .pairs
            .iter()
            .map(|p| {
                json!({
                    "value": complex_to_value(p.value),
                    "modulus": p.value.norm(),
                    "alg_mult": p.alg_mult,
                    "geo_mult": p.geo_mult,
                    "pole_order": p.pole_order,
                    "residual": p.residual,
                    "peripheral": self.peripheral.iter().any(|q| q.value == p.value),
                    "basis": p.basis.iter().map(|v| {
                        Value::Array(v.entries().iter().map(|z| complex_to_value(*z)).collect())
                    }).collect::<Vec<_>>(),
                })
            })
            .collect();
        let witness = self.cyclic.witness.map(|w| {
            json!({
                "element": complex_to_value(w.element),
                "n": w.n,
                "missing": complex_to_value(w.missing),
                "irrational": w.irrational,
            })
        });
        let dims: Vec<Value> = self
            .dim_checks
            .iter()
            .map(|d| {
                json!({
                    "value": complex_to_value(d.value),
                    "theta": d.theta,
                    "n": d.n,
                    "lhs": d.lhs,
                    "rhs": d.rhs,
                    "pass": d.pass,
                })
            })
            .collect();
        json!({
            "spectral_radius": self.spectral_radius,
            "constrained": self.constrained,
            "band_tol": self.band_tol,
            "eigenpairs": pairs,
            "peripheral": self.peripheral_spectrum().into_iter().map(complex_to_value).collect::<Vec<_>>(),
            "cyclic": {"verdict": self.cyclic.status.as_str(), "witness": witness},
            "dim_estimates": dims,
        })
    }

    /// One row per eigenvalue: `re,im,modulus,alg_mult,geo_mult,pole_order,peripheral`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,modulus,alg_mult,geo_mult,pole_order,peripheral\n");
        for p in &self.pairs {
            let per = self.peripheral.iter().any(|q| q.value == p.value);
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{},{},{},{}\n",
                p.value.re,
                p.value.im,
                p.value.norm(),
                p.alg_mult,
                p.geo_mult,
                p.pole_order,
                per
            ));
        }
        s
    }
}

/// `dim ker(r e^{i theta} - T) <= dim ker(r e^{i n theta} - T)` for every
/// peripheral eigenvalue and every `n` in `n_range`.
pub fn dim_estimate_check(
    t: &OperatorMatrix,
    constraints: Option<&DMatrix<C64>>,
    tol: f64,
    n_range: RangeInclusive<i64>,
) -> Result<Vec<DimVerdict>> {
    let opts = ReportOptions {
        eigen: EigenOptions::with_tol(tol.min(1e-7)),
        n_range: Some((*n_range.start(), *n_range.end())),
        ..Default::default()
    };
    let report = spectral_report(t, constraints, &opts)?;
    if report.spectral_radius == 0.0 {
        return Err(Error::ZeroSpectralRadius);
    }
    Ok(report.dim_checks)
}

/// The dimension estimate on the principal ideal generated by a positive
/// fixed vector `x` of `T` (for the eigenvalue `r(T)`).
pub fn dim_estimate_check_in_ideal(
    t: &OperatorMatrix,
    x: &LatticeVector,
    tol: f64,
    n_range: RangeInclusive<i64>,
) -> Result<Vec<DimVerdict>> {
    let r = spectral_radius(t)?;
    if r == 0.0 {
        return Err(Error::ZeroSpectralRadius);
    }
    let tx = t.apply(x)?;
    let scale = x.entries().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let res = (tx.entries() - x.entries() * C64::new(r, 0.0)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if res > tol.max(1e-9) * scale * r.max(1.0) {
        return Err(Error::NotAFixedVector(res));
    }
    let sub = t.restrict_to_ideal(x, tol.max(1e-12) * scale)?;
    dim_estimate_check(&sub, None, tol, n_range)
}

/// Peripheral eigenvalues whose angle is `2 pi p/q` with `q <= q_max`.
pub fn rational_peripheral_point_spectrum(report: &SpectralReport, q_max: u64) -> Vec<(C64, Turn)> {
    report
        .peripheral_point_spectrum()
        .into_iter()
        .filter_map(|z| recover_angle(z, q_max, DEFAULT_WINDOW).map(|t| (z, t)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanErgodicReport {
    pub projection: Option<OperatorMatrix>,
    pub diagnostic: String,
    /// `||P - (1/N) sum_{k<N} T^k||` at `N = 2^24`.
    pub cesaro_distance: Option<f64>,
}

pub const MEAN_ERGODIC_CHECK_N: u64 = 1 << 24;

/// Limit of the Cesàro means: the projection onto `ker(1 - T)` along
/// `range(1 - T)` when every peripheral eigenvalue is semisimple.
pub fn mean_ergodic_projection(t: &OperatorMatrix, tol: f64) -> Result<MeanErgodicReport> {
    let pairs = eigen(t, 1e-7)?;
    let r = pairs.iter().map(|p| p.value.norm()).fold(0.0, f64::max);
    let absent = |diagnostic: String| MeanErgodicReport { projection: None, diagnostic, cesaro_distance: None };
    if r > 1.0 + tol {
        return Ok(absent(format!("spectral radius {r} exceeds 1")));
    }
    if let Some(p) = pairs.iter().find(|p| p.value.norm() >= 1.0 - tol && p.pole_order > 1) {
        return Ok(absent(format!(
            "peripheral eigenvalue {} has pole order {}",
            p.value, p.pole_order
        )));
    }
    let n = t.dim();
    let a = DMatrix::<C64>::identity(n, n) - t.entries();
    let right = kernel(&a).basis;
    let p_mat = if right.is_empty() {
        DMatrix::<C64>::zeros(n, n)
    } else {
        let left = kernel(&a.adjoint()).basis;
        if left.len() != right.len() {
            return Ok(absent("left and right fixed spaces differ in dimension".into()));
        }
        let v = DMatrix::from_columns(&right);
        let w = DMatrix::from_columns(&left);
        let gram = w.adjoint() * &v;
        let inv = gram.try_inverse().ok_or(Error::EigenSolverFailed)?;
        &v * inv * w.adjoint()
    };
    let p_mat = if t.is_real(0.0) { p_mat.map(|z| C64::new(z.re, 0.0)) } else { p_mat };
    let (sum, _) = power_sum(t.entries(), MEAN_ERGODIC_CHECK_N);
    let cesaro = sum / C64::new(MEAN_ERGODIC_CHECK_N as f64, 0.0);
    let dist = crate::operator::matrix_norm(&(&p_mat - cesaro), t.model().norm_tag());
    Ok(MeanErgodicReport {
        projection: Some(t.with_entries(p_mat)?),
        diagnostic: "all peripheral eigenvalues are semisimple".into(),
        cesaro_distance: Some(dist),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaecStatus {
    Holds,
    Fails,
    Inconclusive,
}

impl DaecStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DaecStatus::Holds => "holds",
            DaecStatus::Fails => "fails",
            DaecStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaecReport {
    pub status: DaecStatus,
    /// True when a `Fails` verdict is exact rather than a search outcome.
    pub provable: bool,
    /// `(z, x)` with `T z = r e^{i theta} z`, `T x = r x`, `|z| <= x`.
    pub witness: Option<(LatticeVector, LatticeVector)>,
    pub reason: String,
    pub trials: usize,
}

fn eigenspace_near(t: &OperatorMatrix, target: C64, match_tol: f64) -> Result<Vec<DVector<C64>>> {
    let clusters = eigenvalue_clusters(t.entries(), &EigenOptions::default())?;
    let scale = clusters.iter().map(|c| c.value.norm()).fold(1.0f64, f64::max);
    let nearest = clusters
        .iter()
        .min_by(|a, b| (a.value - target).norm().total_cmp(&(b.value - target).norm()))
        .filter(|c| (c.value - target).norm() <= match_tol * scale)
        .ok_or_else(|| Error::NotAnEigenvalue(format!("{target}")))?;
    let m = t.entries();
    let at_target = kernel(&stacked(m, target, None)).basis;
    if !at_target.is_empty() {
        return Ok(at_target);
    }
    let at_centroid = kernel(&stacked(m, nearest.value, None)).basis;
    if !at_centroid.is_empty() {
        return Ok(at_centroid);
    }
    Ok(vec![least_singular_vector(&stacked(m, nearest.value, None))])
}

/// Phase-normalizes `v` so that its largest entry is real and positive.
fn phase_normalize(v: &DVector<C64>) -> DVector<C64> {
    let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(C64::new(1.0, 0.0));
    if big.norm() == 0.0 {
        return v.clone();
    }
    v * (big.conj() / big.norm())
}

pub const DEFAULT_DAEC_BUDGET: usize = 200;

/// Searches for `z in ker(r e^{i theta} - T)`, `x in ker(r - T)` with
/// `x >= 0` and `0 != |z| <= x`.
///
/// With a one-dimensional `ker(r - T)` the answer is exact. Otherwise a
/// seeded randomized search with an LP domination test is run and failure
/// to find a pair is reported as inconclusive.
pub fn daec_check(
    t: &OperatorMatrix,
    r: f64,
    theta: f64,
    tol: f64,
    search_budget: usize,
    seed: u64,
) -> Result<DaecReport> {
    let match_tol = tol.max(1e-6);
    let zs = eigenspace_near(t, C64::from_polar(r, theta), match_tol)?;
    let xs = eigenspace_near(t, C64::new(r, 0.0), match_tol)?;
    let model = t.model().clone();
    let wrap = |v: DVector<C64>| LatticeVector::new(v, model.clone()).expect("dimension matches");
    let n = t.dim();
    if xs.len() == 1 {
        let x = phase_normalize(&xs[0]);
        let xmax = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = 1e-9 * xmax;
        if x.iter().any(|c| c.im.abs() > cut || c.re < -cut) {
            return Ok(DaecReport {
                status: DaecStatus::Fails,
                provable: true,
                witness: None,
                reason: "ker(r - T) contains no nonnegative vector".into(),
                trials: 0,
            });
        }
        let x = x.map(|c| C64::new(c.re.max(0.0), 0.0));
        let off: Vec<usize> = (0..n).filter(|&i| x[i].re <= cut).collect();
        let zmat = DMatrix::from_columns(&zs);
        let restricted = DMatrix::from_fn(off.len(), zs.len(), |a, k| zmat[(off[a], k)]);
        let coeffs = kernel(&restricted).basis;
        let Some(c) = coeffs.first() else {
            return Ok(DaecReport {
                status: DaecStatus::Fails,
                provable: true,
                witness: None,
                reason: "no eigenvector for r e^{i theta} vanishes off supp(x)".into(),
                trials: 0,
            });
        };
        let mut z = &zmat * c;
        for &i in &off {
            z[i] = C64::new(0.0, 0.0);
        }
        let beta = (0..n)
            .filter(|&i| z[i].norm() > 0.0)
            .map(|i| x[i].re / z[i].norm())
            .fold(f64::INFINITY, f64::min);
        let z = z * C64::new(beta, 0.0);
        return Ok(DaecReport {
            status: DaecStatus::Holds,
            provable: true,
            witness: Some((wrap(z), wrap(x))),
            reason: "eigenvector supported in supp(x)".into(),
            trials: 0,
        });
    }
    if !t.is_real(0.0) {
        return Ok(DaecReport {
            status: DaecStatus::Inconclusive,
            provable: false,
            witness: None,
            reason: "multi-dimensional ker(r - T) of a non-real operator".into(),
            trials: 0,
        });
    }
    let vr = real_span_basis(&xs);
    if nonneg_unit_in_span(&vr).is_none() {
        return Ok(DaecReport {
            status: DaecStatus::Fails,
            provable: true,
            witness: None,
            reason: "ker(r - T) contains no nonnegative vector".into(),
            trials: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = 0;
    while trials < search_budget {
        let z: DVector<C64> = if trials < zs.len() {
            zs[trials].clone()
        } else {
            let mut acc = DVector::<C64>::zeros(n);
            for b in &zs {
                let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                acc += b * c;
            }
            acc
        };
        trials += 1;
        let zmax = z.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if zmax == 0.0 {
            continue;
        }
        let z = z / C64::new(zmax, 0.0);
        let lower: Vec<f64> = z.iter().map(|c| c.norm()).collect();
        if let Some(c) = nonneg_combination(&vr, &lower) {
            let x = (&vr * c).map(|v| C64::new(v.max(0.0), 0.0));
            let (zl, xl) = (wrap(z), wrap(x));
            if dominates(&xl, &zl, 1e-9)? {
                return Ok(DaecReport {
                    status: DaecStatus::Holds,
                    provable: true,
                    witness: Some((zl, xl)),
                    reason: "dominating fixed vector found by LP".into(),
                    trials,
                });
            }
        }
    }
    Ok(DaecReport {
        status: DaecStatus::Inconclusive,
        provable: false,
        witness: None,
        reason: format!("no dominated pair found in {trials} trials"),
        trials,
    })
}

/// [`daec_check`] for the transpose, the finite-dimensional adjoint.
pub fn daec_check_adjoint(
    t: &OperatorMatrix,
    r: f64,
    theta: f64,
    tol: f64,
    search_budget: usize,
    seed: u64,
) -> Result<DaecReport> {
    daec_check(&t.transpose(), r, theta, tol, search_budget, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    /// `(r, ||R(r e^{i theta}, T)|| / ||R(r, T)||)`.
    pub points: Vec<(f64, f64)>,
    /// Maximum ratio over the second half of the schedule.
    pub limsup_estimate: f64,
}

/// `r = 1 + 2^-k` for `k = 1..=k_max`.
pub fn default_schedule(k_max: u32) -> Vec<f64> {
    (1..=k_max).map(|k| 1.0 + 2f64.powi(-(k as i32))).collect()
}

pub fn resolvent_growth_ratio(t: &OperatorMatrix, theta: f64, schedule: &[f64]) -> Result<RatioReport> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty schedule".into()));
    }
    if schedule.iter().any(|&r| r <= 1.0) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("schedule must decrease strictly and stay above 1".into()));
    }
    let rho = spectral_radius(t)?;
    if (rho - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!("spectral radius {rho} is not 1")));
    }
    let mut points = Vec::with_capacity(schedule.len());
    for &r in schedule {
        let rot = t.resolvent(C64::from_polar(r, theta))?.matrix.op_norm();
        let real = t.resolvent(C64::new(r, 0.0))?.matrix.op_norm();
        points.push((r, rot / real));
    }
    let limsup_estimate = points[points.len() / 2..].iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(RatioReport { points, limsup_estimate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronCheck {
    pub spectral_radius: f64,
    /// Eigenvalue closest to `r`.
    pub value: C64,
    /// A nonnegative eigenvector for `value`, if one exists.
    pub vector: Option<DVector<f64>>,
}

/// Locates `r(T)` in the spectrum and a nonnegative eigenvector for it.
pub fn perron_check(t: &OperatorMatrix, tol: f64) -> Result<PerronCheck> {
    let clusters = eigenvalue_clusters(t.entries(), &EigenOptions::default())?;
    let r = clusters.iter().map(|c| c.value.norm()).fold(0.0, f64::max);
    let target = C64::new(r, 0.0);
    let best = clusters
        .iter()
        .min_by(|a, b| (a.value - target).norm().total_cmp(&(b.value - target).norm()))
        .ok_or(Error::EigenSolverFailed)?;
    let value = best.value;
    if (value - target).norm() > tol * r.max(1.0) {
        return Ok(PerronCheck { spectral_radius: r, value, vector: None });
    }
    let basis = kernel(&stacked(t.entries(), value, None)).basis;
    let basis = if basis.is_empty() {
        vec![least_singular_vector(&stacked(t.entries(), value, None))]
    } else {
        basis
    };
    let vector = if basis.len() == 1 {
        let v = phase_normalize(&basis[0]);
        let vmax = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if v.iter().all(|c| c.re >= -tol * vmax && c.im.abs() <= tol * vmax) {
            Some(v.map(|c| c.re.max(0.0) / vmax))
        } else {
            None
        }
    } else {
        nonneg_unit_in_span(&real_span_basis(&basis))
    };
    Ok(PerronCheck { spectral_radius: r, value, vector })
}

/// Real operator in the sup-norm model, from rows.
pub fn sup_operator(rows: &[Vec<f64>]) -> OperatorMatrix {
    OperatorMatrix::from_real_rows(rows, crate::NormTag::Sup).expect("square rows")
}
