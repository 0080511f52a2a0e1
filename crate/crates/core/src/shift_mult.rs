//! Weighted right shifts `T_m = S M_m` on `l^1`, truncated to `N` coordinates.
//!
//! The symbol `a^(m)` equals `2^(1/(m-1)!)` below `m!`, `2^-m` at `m!` and 1
//! beyond. Powers are again weighted shifts, `T_m^j e_l = a~_l e_{l+j}`.

use crate::lattice::{LatticeVector, SpaceModel};
use crate::operator::OperatorMatrix;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftMultSpec {
    pub m: u32,
    pub n: usize,
}

pub fn factorial(k: u32) -> u64 {
    (1..=k as u64).product()
}

impl ShiftMultSpec {
    pub fn new(m: u32, n: usize) -> Result<Self> {
        if m == 0 || m > 12 {
            return Err(Error::InvalidParameter(format!("block index m = {m} out of range 1..=12")));
        }
        let need = factorial(m) as usize + 1;
        if n < need {
            return Err(Error::TruncationTooSmall(format!("N = {n} < m!+1 = {need}")));
        }
        Ok(ShiftMultSpec { m, n })
    }

    /// Default truncation `(m+1)!`.
    pub fn with_default_truncation(m: u32) -> Result<Self> {
        ShiftMultSpec::new(m, factorial(m + 1) as usize)
    }
}

/// `a_l^(m)` for `l >= 1`.
pub fn symbol(m: u32, l: u64) -> f64 {
    let mf = factorial(m);
    if l < mf {
        2f64.powf(1.0 / factorial(m - 1) as f64)
    } else if l == mf {
        2f64.powi(-(m as i32))
    } else {
        1.0
    }
}

/// Closed form of `a~_l^(m,j)`, the symbol of `S^-j T_m^j`.
pub fn symbol_power_entry(m: u32, j: u64, l: u64) -> f64 {
    let mf = factorial(m);
    let step = 1.0 / factorial(m - 1) as f64;
    if j == 0 || l > mf {
        1.0
    } else if l + j <= mf {
        2f64.powf(j as f64 * step)
    } else {
        2f64.powf((mf - l) as f64 * step - m as f64)
    }
}

/// Truncated matrix of `S M_m`: column `l` carries `a_l` one row below.
pub fn shift_mult_block(spec: &ShiftMultSpec) -> OperatorMatrix {
    let n = spec.n;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n - 1 {
        m[(i + 1, i)] = C64::new(symbol(spec.m, i as u64 + 1), 0.0);
    }
    OperatorMatrix::new(m, SpaceModel::one(n)).expect("square by construction")
}

/// `a~^(m,j)` on the first `N` coordinates.
pub fn symbol_power(spec: &ShiftMultSpec, j: u64) -> LatticeVector {
    let v: Vec<f64> = (1..=spec.n as u64).map(|l| symbol_power_entry(spec.m, j, l)).collect();
    LatticeVector::from_real(&v, SpaceModel::one(spec.n)).expect("length matches")
}

/// `||T_m^j|| = sup_l a~_l^(m,j)` on the untruncated `l^1`.
pub fn symbol_power_sup(m: u32, j: u64) -> f64 {
    let mf = factorial(m);
    let mut best = 1.0f64;
    if j > 0 && j < mf {
        best = best.max(symbol_power_entry(m, j, 1));
    }
    let first_second = mf.saturating_sub(j) + 1;
    if j > 0 && first_second <= mf {
        best = best.max(symbol_power_entry(m, j, first_second.max(1)));
    }
    best
}

/// Reads `a~` off a computed power: entry `(l-1+j, l-1)` for `l <= N - j`.
pub fn symbol_from_matrix(power: &OperatorMatrix, j: usize) -> Vec<f64> {
    let n = power.dim();
    (0..n.saturating_sub(j)).map(|i| power.entries()[(i + j, i)].re).collect()
}

/// `c(m)` in closed form.
pub fn cesaro_lower_bound(m: u32) -> f64 {
    let mm = m as f64;
    let step = 1.0 / factorial(m - 1) as f64;
    (2f64.powi(m as i32) - 1.0) / ((mm + 1.0) * mm) / (factorial(m - 1) as f64 * (2f64.powf(step) - 1.0))
}

/// `c(m)` by summing `(1/(m+1)!) sum_{k<m!} 2^(k/(m-1)!)` term by term.
pub fn cesaro_lower_bound_direct(m: u32) -> f64 {
    let step = 1.0 / factorial(m - 1) as f64;
    let s: f64 = (0..factorial(m)).map(|k| 2f64.powf(k as f64 * step)).sum();
    s / factorial(m + 1) as f64
}

/// `|| (1/j) sum_{k<j} T_m^k e_1 ||_1` on the truncated block.
pub fn cesaro_orbit_norm(spec: &ShiftMultSpec, j: u64) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("j must be positive".into()));
    }
    let n = spec.n;
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    let mut acc = vec![0.0; n];
    for _ in 0..j {
        for (a, v) in acc.iter_mut().zip(&x) {
            *a += v;
        }
        let mut next = vec![0.0; n];
        for i in 0..n - 1 {
            next[i + 1] = symbol(spec.m, i as u64 + 1) * x[i];
        }
        x = next;
    }
    Ok(acc.iter().sum::<f64>() / j as f64)
}

impl ShiftMultSpec {
    /// Sup of the untruncated symbol `a~^(m,j)`.
    pub fn power_norm(&self, j: u64) -> f64 {
        symbol_power_sup(self.m, j)
    }

    /// Leading coordinates whose power symbol is unaffected by truncation.
    pub fn clean_prefix(&self, j: u64) -> usize {
        self.n.saturating_sub(j as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn m2_examples() {
        let spec = ShiftMultSpec::new(2, 8).unwrap();
        let s = symbol_power(&spec, 2).re();
        assert_abs_diff_eq!(s[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 0.25, epsilon = 1e-15);
        assert!(s[2..].iter().all(|&x| x == 1.0));
        assert_eq!(symbol_power_sup(2, 2), 1.0);
        let s1 = symbol_power(&spec, 1).re();
        assert_abs_diff_eq!(s1[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(symbol_power_sup(2, 1), 2.0, epsilon = 1e-15);
        assert!(symbol_power(&spec, 0).re().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn truncation_guard() {
        assert!(matches!(ShiftMultSpec::new(3, 6), Err(Error::TruncationTooSmall(_))));
        assert!(ShiftMultSpec::new(3, 7).is_ok());
    }

    #[test]
    fn closed_form_matches_matrix_powers() {
        for m in [2u32, 3] {
            let spec = ShiftMultSpec::with_default_truncation(m).unwrap();
            let t = shift_mult_block(&spec);
            for j in 0..=6u64 {
                let brute = symbol_from_matrix(&t.power(j), j as usize);
                let closed = symbol_power(&spec, j).re();
                for (b, c) in brute.iter().zip(&closed) {
                    assert!((b - c).abs() <= 1e-12, "m={m} j={j}: {b} vs {c}");
                }
            }
        }
    }

    #[test]
    fn cesaro_constant() {
        assert_abs_diff_eq!(cesaro_lower_bound(2), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(cesaro_lower_bound_direct(2), 0.5, epsilon = 1e-14);
        for m in 2..=6 {
            assert_abs_diff_eq!(cesaro_lower_bound(m), cesaro_lower_bound_direct(m), epsilon = 1e-10);
        }
        let spec = ShiftMultSpec::with_default_truncation(3).unwrap();
        assert!(cesaro_orbit_norm(&spec, 6).unwrap() >= cesaro_lower_bound(3) - 1e-12);
    }

    #[test]
    fn factorial_powers_bounded() {
        for m in 1..=6 {
            for h in 1..=6 {
                assert!(symbol_power_sup(m, factorial(h)) <= 2.0 + 1e-12);
            }
        }
    }
}
