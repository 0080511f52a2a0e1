//! The averaged-tail Markov operator on `l^∞(Z_q) × l^∞(N)`:
//! `f' = S f` with `(S f)(k) = f(k + 1)` and
//! `g'_n = n/(n+1) g_{n+1} + f(σ0)/(n+1)`, `σ0 = 1`.
//!
//! Truncated to `g_1..g_N`, the last row reads `g'_N = N/(N+1) g_N +
//! f(σ0)/(N+1)` so that the matrix stays Markov.

use nalgebra::{DMatrix, DVector};
use perronlab_core::{Error, OperatorMatrix, Result, SpaceModel, C64};

pub const SIGMA0: usize = 1;

/// Terms summed when evaluating the tail series.
pub const SERIES_TERMS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupOperator {
    pub q: usize,
    pub n: usize,
    pub operator: OperatorMatrix,
}

impl SubgroupOperator {
    pub fn new(q: usize, n: usize) -> Result<Self> {
        if ![2, 3, 4, 6].contains(&q) {
            return Err(Error::InvalidParameter(format!("q = {q} is not one of 2, 3, 4, 6")));
        }
        if n < 2 {
            return Err(Error::TruncationTooSmall("N must be at least 2".into()));
        }
        let dim = q + n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for k in 0..q {
            m[(k, (k + 1) % q)] = C64::new(1.0, 0.0);
        }
        for i in 1..=n {
            let row = q + i - 1;
            let nf = i as f64;
            let next = if i < n { row + 1 } else { row };
            m[(row, next)] += C64::new(nf / (nf + 1.0), 0.0);
            m[(row, SIGMA0)] += C64::new(1.0 / (nf + 1.0), 0.0);
        }
        Ok(SubgroupOperator { q, n, operator: OperatorMatrix::new(m, SpaceModel::sup(dim))? })
    }

    /// `e^{2 pi i p / q}`.
    pub fn root(&self, p: usize) -> C64 {
        C64::from_polar(1.0, 2.0 * std::f64::consts::PI * p as f64 / self.q as f64)
    }
}

/// `S_n = sum_{k > n} z^k / (k (k-1))` for `n = 1..=n_max`, by backward
/// summation over `SERIES_TERMS` terms, and a bound on the neglected part.
///
/// For `z != 1` the partial sums of `z^k` stay below `2/|1 - z|`, so by
/// summation by parts the neglected tail is at most
/// `2 / (|1 - z| K (K + 1))`. For `z = 1` the tail `1/K` is added exactly.
pub fn tail_sums(z: C64, n_max: usize) -> (Vec<C64>, f64) {
    let kk = SERIES_TERMS.max(4 * n_max);
    let exact_one = (z - C64::new(1.0, 0.0)).norm() < 1e-15;
    let (mut acc, bound) = if exact_one {
        (C64::new(1.0 / kk as f64, 0.0), 0.0)
    } else {
        (C64::new(0.0, 0.0), 2.0 / ((C64::new(1.0, 0.0) - z).norm() * kk as f64 * (kk as f64 + 1.0)))
    };
    let mut out = vec![C64::new(0.0, 0.0); n_max];
    // Powers by squaring: a running product would drift over 10^6 steps.
    for k in (2..=kk).rev() {
        if k <= n_max {
            out[k - 1] = acc;
        }
        let kf = k as f64;
        acc += z.powu(k as u32) / (kf * (kf - 1.0));
    }
    out[0] = acc;
    (out, bound)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupEigen {
    pub lambda: C64,
    pub vector: DVector<C64>,
    /// Bound on the error of each `g_n` from truncating the series.
    pub series_bound: f64,
}

/// `f(k) = λ^k` and `g_n = λ^n n f(σ0) S_n(λ̄)`; for `n = 1` this is
/// `g_1 = λ f(σ0) sum_{k >= 2} λ̄^k / (k (k-1))`.
pub fn eigenvector(op: &SubgroupOperator, lambda: C64) -> SubgroupEigen {
    let (q, n) = (op.q, op.n);
    let (s, bound) = tail_sums(lambda.conj(), n);
    let f_sigma0 = lambda.powu(SIGMA0 as u32);
    let mut v = DVector::<C64>::zeros(q + n);
    for k in 0..q {
        v[k] = lambda.powu(k as u32);
    }
    for i in 1..=n {
        v[q + i - 1] = lambda.powu(i as u32) * i as f64 * f_sigma0 * s[i - 1];
    }
    SubgroupEigen { lambda, vector: v, series_bound: bound * n as f64 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupMeasure {
    pub lambda: C64,
    /// `||T_N v - λ v||_∞ / ||v||_∞`.
    pub residual: f64,
    /// `max_{n > N/2} |g_n|`.
    pub tail_max: f64,
    /// `min_{n > N/2} |g_n|`.
    pub tail_min: f64,
    pub series_bound: f64,
}

pub fn measure(op: &SubgroupOperator, lambda: C64) -> SubgroupMeasure {
    let e = eigenvector(op, lambda);
    let v = &e.vector;
    let r = op.operator.apply_vec(v) - v * lambda;
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let residual = r.iter().map(|z| z.norm()).fold(0.0, f64::max) / vmax;
    let tail: Vec<f64> = (op.n / 2 + 1..=op.n).map(|i| v[op.q + i - 1].norm()).collect();
    SubgroupMeasure {
        lambda,
        residual,
        tail_max: tail.iter().copied().fold(0.0, f64::max),
        tail_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
        series_bound: e.series_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `sum_{k >= 2} z^k / (k (k-1)) = (1 - z) ln(1 - z) + z` for `|z| <= 1`, `z != 1`.
    fn closed_form_total(z: C64) -> C64 {
        let w = C64::new(1.0, 0.0) - z;
        w * w.ln() + z
    }

    #[test]
    fn series_matches_closed_form() {
        for z in [C64::i(), C64::new(-1.0, 0.0), -C64::i(), C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0)] {
            let (s, bound) = tail_sums(z, 5);
            let total = closed_form_total(z);
            assert!((s[0] - total).norm() < 1e-11, "{z}: {} vs {}", s[0], total);
            // S_3 = total - z^2/2 - z^3/6.
            let s3 = total - z.powu(2) / 2.0 - z.powu(3) / 6.0;
            assert!((s[2] - s3).norm() < 1e-11);
            assert!(bound < 1e-11);
        }
        let (s, bound) = tail_sums(C64::new(1.0, 0.0), 10);
        assert_eq!(bound, 0.0);
        for (i, x) in s.iter().enumerate() {
            assert!((x.re - 1.0 / (i + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_is_markov() {
        let op = SubgroupOperator::new(4, 32).unwrap();
        assert!(op.operator.is_markov(1e-14).unwrap());
        assert!(SubgroupOperator::new(5, 32).is_err());
    }

    #[test]
    fn lambda_one_gives_the_constant_vector() {
        let op = SubgroupOperator::new(4, 64).unwrap();
        let m = measure(&op, C64::new(1.0, 0.0));
        assert!(m.residual < 1e-12);
        assert!((m.tail_min - 1.0).abs() < 1e-10 && (m.tail_max - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nontrivial_roots_have_small_tails() {
        let op = SubgroupOperator::new(4, 256).unwrap();
        for p in 1..4 {
            let m = measure(&op, op.root(p));
            assert!(m.residual <= 0.05 && m.tail_max <= 0.05, "{m:?}");
        }
    }
}
