//! The Markov operator on `K = Z_4 ⊔ {0, 1, ..., N, ∞}`.
//!
//! `(Tf)(j) = f(j - 1)` on `Z_4`, `(Tf)(0) = (f(1) + f(3))/2` feeds the
//! chain from `Z_4`, `(Tf)(k) = f(k - 1)` moves along the chain and `∞` is
//! fixed. Continuity at `∞` becomes the constraint row `f(N) - f(∞) = 0`.
//! Without the `∞` node the constraint `f(N) = 0` models the restriction to
//! functions vanishing at infinity.

use nalgebra::{DMatrix, DVector};
use perronlab_core::linalg::{kernel, singular_values, Kernel};
use perronlab_core::{Error, OperatorMatrix, Result, SpaceModel, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Compactification {
    pub n: usize,
    pub with_infinity: bool,
    pub operator: OperatorMatrix,
    /// One row.
    pub constraint: DMatrix<C64>,
}

const Z4: usize = 4;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

impl Compactification {
    /// With the `∞` node and the continuity row.
    pub fn one_point(n: usize) -> Result<Self> {
        Self::build(n, true)
    }

    /// Without `∞`; the chain must vanish at `N`.
    pub fn vanishing(n: usize) -> Result<Self> {
        Self::build(n, false)
    }

    fn build(n: usize, with_infinity: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::TruncationTooSmall("chain length N must be positive".into()));
        }
        let dim = Z4 + n + 1 + usize::from(with_infinity);
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for j in 0..Z4 {
            m[(j, (j + Z4 - 1) % Z4)] = one();
        }
        m[(Z4, 1)] = C64::new(0.5, 0.0);
        m[(Z4, 3)] = C64::new(0.5, 0.0);
        for k in 1..=n {
            m[(Z4 + k, Z4 + k - 1)] = one();
        }
        let mut constraint = DMatrix::<C64>::zeros(1, dim);
        constraint[(0, Z4 + n)] = one();
        if with_infinity {
            m[(dim - 1, dim - 1)] = one();
            constraint[(0, dim - 1)] = -one();
        }
        let mut labels: Vec<String> = (0..Z4).map(|j| format!("z{j}")).collect();
        labels.extend((0..=n).map(|k| format!("c{k}")));
        if with_infinity {
            labels.push("inf".into());
        }
        let model = SpaceModel::sup(dim).with_labels(labels)?;
        Ok(Compactification { n, with_infinity, operator: OperatorMatrix::new(m, model)?, constraint })
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// `[mu - T; C]`.
    pub fn stacked(&self, mu: C64) -> DMatrix<C64> {
        let n = self.dim();
        let mut s = DMatrix::<C64>::zeros(n + 1, n);
        s.rows_mut(0, n).copy_from(&(DMatrix::<C64>::identity(n, n) * mu - self.operator.entries()));
        s.rows_mut(n, 1).copy_from(&self.constraint);
        s
    }

    pub fn constrained_kernel(&self, mu: C64) -> Kernel {
        kernel(&self.stacked(mu))
    }

    /// `g(j) = (-i)^j` on `Z_4`, zero elsewhere: an eigenvector for `i`.
    pub fn eigenvector_i(&self) -> DVector<C64> {
        let mut g = DVector::<C64>::zeros(self.dim());
        let mut p = one();
        for j in 0..Z4 {
            g[j] = p;
            p *= -C64::i();
        }
        g
    }

    /// The kernel equations at `mu` (`|mu| = 1`, `mu != 1`) after solving
    /// the chain and `∞` rows exactly: `f(k) = mu^-k f(0)` and `f(∞) = 0`.
    /// Unknowns are `(f|Z_4, f(0))`; rows are `(mu - S) f|Z_4`, the feed
    /// equation at `0` and the constraint. The kernel is isomorphic to the
    /// constrained kernel of `mu - T`, but the singular values no longer
    /// shrink with the chain length.
    pub fn reduced_system(&self, mu: C64) -> Result<DMatrix<C64>> {
        if (mu.norm() - 1.0).abs() > 1e-12 || (mu - one()).norm() < 1e-12 {
            return Err(Error::InvalidParameter("reduction needs |mu| = 1 and mu != 1".into()));
        }
        let mut a = DMatrix::<C64>::zeros(Z4 + 2, Z4 + 1);
        for j in 0..Z4 {
            a[(j, j)] = mu;
            a[(j, (j + Z4 - 1) % Z4)] -= one();
        }
        a[(Z4, Z4)] = mu;
        a[(Z4, 1)] = C64::new(-0.5, 0.0);
        a[(Z4, 3)] = C64::new(-0.5, 0.0);
        // f(N) - f(∞) = mu^-N f(0) - 0, and likewise without ∞.
        a[(Z4 + 1, Z4)] = mu.powi(-(self.n as i32));
        Ok(a)
    }

    pub fn reduced_min_singular_value(&self, mu: C64) -> Result<f64> {
        let s = singular_values(&self.reduced_system(mu)?);
        Ok(s.iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn stacked_min_singular_value(&self, mu: C64) -> f64 {
        singular_values(&self.stacked(mu)).iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_is_markov() {
        let c = Compactification::one_point(8).unwrap();
        assert!(c.operator.is_markov(1e-15).unwrap());
        assert_eq!(c.dim(), 4 + 9 + 1);
    }

    #[test]
    fn g_is_an_exact_eigenvector() {
        let c = Compactification::one_point(16).unwrap();
        let g = c.eigenvector_i();
        let r = c.stacked(C64::i()) * &g;
        assert!(r.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn constrained_kernels() {
        let c = Compactification::one_point(64).unwrap();
        assert_eq!(c.constrained_kernel(C64::i()).dim(), 1);
        assert_eq!(c.constrained_kernel(C64::new(-1.0, 0.0)).dim(), 0);
        // Without the constraint -1 has the spurious alternating eigenvector.
        let unconstrained = kernel(&(DMatrix::<C64>::identity(c.dim(), c.dim()) * C64::new(-1.0, 0.0)
            - c.operator.entries()));
        assert_eq!(unconstrained.dim(), 1);
    }

    #[test]
    fn reduced_system_matches_the_full_kernel() {
        for n in [3, 8, 64] {
            let c = Compactification::one_point(n).unwrap();
            for mu in [C64::i(), C64::new(-1.0, 0.0), -C64::i()] {
                let full = c.constrained_kernel(mu).dim();
                let red = kernel(&c.reduced_system(mu).unwrap()).dim();
                assert_eq!(full, red, "n = {n}, mu = {mu}");
            }
        }
        let c = Compactification::one_point(64).unwrap();
        assert!(c.reduced_system(C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn reduced_singular_value_is_independent_of_n() {
        let m1 = Compactification::one_point(8).unwrap().reduced_min_singular_value(C64::new(-1.0, 0.0)).unwrap();
        let m2 = Compactification::one_point(64).unwrap().reduced_min_singular_value(C64::new(-1.0, 0.0)).unwrap();
        assert!((m1 - m2).abs() < 1e-12);
        assert!(m1 > 0.1);
    }
}
