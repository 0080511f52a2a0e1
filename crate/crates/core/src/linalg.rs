//! Dense numerical helpers: sorted singular values, numerical rank, kernels,
//! row echelon forms and a small LP feasibility wrapper.

use crate::C64;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

/// Relative factor applied on top of `dimension * eps * sigma_max`.
pub const RANK_SAFETY: f64 = 1e3;

pub fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Zero threshold for singular values: `dim * eps * sigma_max * 1e3`.
pub fn rank_threshold(dim: usize, sigma_max: f64) -> f64 {
    dim.max(1) as f64 * f64::EPSILON * sigma_max * RANK_SAFETY
}

pub fn numerical_rank(a: &DMatrix<C64>) -> usize {
    let sv = singular_values(a);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    let thr = rank_threshold(a.nrows().max(a.ncols()), smax);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Rank of `a^k`, with the zero threshold scaled by `sigma_max(a)^k`.
///
/// Scaling by the largest singular value of the power itself fails when
/// the power is nearly zero, as for a matrix that is one Jordan block.
pub fn power_rank(a: &DMatrix<C64>, k: usize) -> usize {
    let Some(&s1) = singular_values(a).first() else { return 0 };
    if s1 == 0.0 {
        return 0;
    }
    let thr = rank_threshold(a.nrows(), s1.powi(k as i32));
    singular_values(&matrix_power(a, k as u64)).iter().filter(|&&s| s > thr).count()
}

/// Orthonormal kernel basis together with the full singular spectrum.
pub struct Kernel {
    pub basis: Vec<DVector<C64>>,
    pub singular_values: Vec<f64>,
}

impl Kernel {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }
}

/// Numerical kernel of `a` (works for any shape).
pub fn kernel(a: &DMatrix<C64>) -> Kernel {
    let n = a.ncols();
    if n == 0 {
        return Kernel { basis: Vec::new(), singular_values: Vec::new() };
    }
    // Pad to at least n rows so that the SVD returns a full right basis.
    let padded = if a.nrows() < n {
        let mut p = DMatrix::<C64>::zeros(n, n);
        p.rows_mut(0, a.nrows()).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    // Singular values belonging to padding rows are genuine zeros of `a`.
    let smax = sorted.first().copied().unwrap_or(0.0);
    let thr = rank_threshold(a.nrows().max(n), smax);
    let basis = order
        .iter()
        .filter(|&&i| smax == 0.0 || svd.singular_values[i] <= thr)
        .map(|&i| v_t.row(i).transpose().map(|z| z.conj()))
        .collect();
    let reported = sorted.into_iter().take(a.nrows().min(n).max(1)).collect::<Vec<_>>();
    Kernel { basis, singular_values: pad_spectrum(reported, a.nrows(), n) }
}

fn pad_spectrum(mut sv: Vec<f64>, rows: usize, cols: usize) -> Vec<f64> {
    // A wide matrix has at least cols - rows exact zero singular directions.
    if rows < cols {
        sv.truncate(rows);
        sv.resize(cols, 0.0);
    }
    sv
}

/// The smallest right singular vector (direction of least amplification).
pub fn least_singular_vector(a: &DMatrix<C64>) -> DVector<C64> {
    let n = a.ncols();
    let padded = if a.nrows() < n {
        let mut p = DMatrix::<C64>::zeros(n, n);
        p.rows_mut(0, a.nrows()).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    v_t.row(idx).transpose().map(|z| z.conj())
}

pub fn matrix_power(a: &DMatrix<C64>, mut n: u64) -> DMatrix<C64> {
    let dim = a.nrows();
    let mut result = DMatrix::<C64>::identity(dim, dim);
    let mut base = a.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Reduced row echelon form of the rows in `rows` (partial pivoting).
///
/// Returns the nonzero reduced rows and their pivot columns. Each returned
/// row has a 1 in its own pivot column and 0 in every other pivot column.
pub fn rref(rows: &[Vec<C64>], tol: f64) -> (Vec<Vec<C64>>, Vec<usize>) {
    let mut m: Vec<Vec<C64>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let scale = m
        .iter()
        .flat_map(|r| r.iter().map(|z| z.norm()))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == m.len() {
            break;
        }
        let (best, best_abs) = (row..m.len())
            .map(|r| (r, m[r][col].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty range");
        if best_abs <= tol * scale {
            for r in row..m.len() {
                m[r][col] = C64::new(0.0, 0.0);
            }
            continue;
        }
        m.swap(row, best);
        let p = m[row][col];
        for z in m[row].iter_mut() {
            *z /= p;
        }
        m[row][col] = C64::new(1.0, 0.0);
        for r in 0..m.len() {
            if r != row {
                let factor = m[r][col];
                if factor != C64::new(0.0, 0.0) {
                    for c in 0..ncols {
                        let v = m[row][c];
                        m[r][c] -= factor * v;
                    }
                    m[r][col] = C64::new(0.0, 0.0);
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    m.truncate(row);
    (m, pivots)
}

/// Finds `c` with `basis * c >= lower` entrywise (real data), minimizing the
/// entry sum of `basis * c`. Returns `None` if infeasible.
pub fn nonneg_combination(basis: &DMatrix<f64>, lower: &[f64]) -> Option<DVector<f64>> {
    let (n, g) = basis.shape();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..g)
        .map(|k| {
            let weight: f64 = basis.column(k).sum();
            problem.add_var(weight, (f64::NEG_INFINITY, f64::INFINITY))
        })
        .collect();
    for i in 0..n {
        let terms: Vec<_> = (0..g)
            .filter(|&k| basis[(i, k)] != 0.0)
            .map(|k| (vars[k], basis[(i, k)]))
            .collect();
        if terms.is_empty() {
            if lower[i] > 0.0 {
                return None;
            }
            continue;
        }
        problem.add_constraint(&terms[..], ComparisonOp::Ge, lower[i]);
    }
    let solution = problem.solve().ok()?;
    Some(DVector::from_iterator(g, vars.iter().map(|v| solution[*v])))
}

/// Minimizes `weights . (basis * c)` subject to `basis * c >= lower`.
pub fn min_weighted_upper_bound(
    basis: &DMatrix<f64>,
    lower: &[f64],
    weights: &[f64],
) -> Option<DVector<f64>> {
    let (n, g) = basis.shape();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..g)
        .map(|k| {
            let obj: f64 = (0..n).map(|i| weights[i] * basis[(i, k)]).sum();
            problem.add_var(obj, (f64::NEG_INFINITY, f64::INFINITY))
        })
        .collect();
    for i in 0..n {
        let terms: Vec<_> = (0..g)
            .filter(|&k| basis[(i, k)] != 0.0)
            .map(|k| (vars[k], basis[(i, k)]))
            .collect();
        if terms.is_empty() {
            if lower[i] > 0.0 {
                return None;
            }
            continue;
        }
        problem.add_constraint(&terms[..], ComparisonOp::Ge, lower[i]);
    }
    let solution = problem.solve().ok()?;
    let c = DVector::from_iterator(g, vars.iter().map(|v| solution[*v]));
    Some(basis * c)
}

/// A vector `basis * c >= 0` with entry sum 1, if the span has one.
pub fn nonneg_unit_in_span(basis: &DMatrix<f64>) -> Option<DVector<f64>> {
    let (n, g) = basis.shape();
    if g == 0 {
        return None;
    }
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> =
        (0..g).map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for i in 0..n {
        let terms: Vec<_> = (0..g)
            .filter(|&k| basis[(i, k)] != 0.0)
            .map(|k| (vars[k], basis[(i, k)]))
            .collect();
        if !terms.is_empty() {
            problem.add_constraint(&terms[..], ComparisonOp::Ge, 0.0);
        }
    }
    let sums: Vec<_> = (0..g).map(|k| (vars[k], basis.column(k).sum())).collect();
    problem.add_constraint(&sums[..], ComparisonOp::Eq, 1.0);
    let solution = problem.solve().ok()?;
    let c = DVector::from_iterator(g, vars.iter().map(|v| solution[*v]));
    Some(basis * c)
}

/// Real basis of the real span of complex vectors (real and imaginary parts).
pub fn real_span_basis(vectors: &[DVector<C64>]) -> DMatrix<f64> {
    let n = vectors.first().map_or(0, |v| v.len());
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        cols.push(v.iter().map(|z| C64::new(z.re, 0.0)).collect());
        cols.push(v.iter().map(|z| C64::new(z.im, 0.0)).collect());
    }
    let (reduced, _) = rref(&cols, 1e-10);
    DMatrix::from_fn(n, reduced.len(), |i, k| reduced[k][i].re)
}
