//! Rational angle recovery by continued fractions.

use crate::C64;
use std::f64::consts::TAU;

pub const DEFAULT_Q_MAX: u64 = 64;
pub const DEFAULT_WINDOW: f64 = 1e-9;

/// A rational turn `p/q` with `0 <= p < q` and `gcd(p, q) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Turn {
    pub p: u64,
    pub q: u64,
}

impl Turn {
    pub fn angle(&self) -> f64 {
        TAU * self.p as f64 / self.q as f64
    }

    /// `n * p/q` reduced mod 1 (not lowest terms).
    pub fn times(&self, n: i64) -> Turn {
        let q = self.q as i64;
        let p = (n % q * self.p as i64).rem_euclid(q);
        Turn { p: p as u64, q: self.q }
    }
}

/// Convergents `p_k / q_k` of `x` while `q_k <= q_max`.
pub fn convergents(x: f64, q_max: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1u64, 1i64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let p2 = ai * p1 + p0;
        let q2 = ai as u64 * q1 + q0;
        if q2 > q_max {
            break;
        }
        out.push((p2, q2));
        let frac = r - a;
        if frac < 1e-15 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        r = 1.0 / frac;
    }
    out
}

/// Recovers `x mod 1` as `p/q` with `q <= q_max` and `|x - p/q| < window`.
pub fn recover_turn(x: f64, q_max: u64, window: f64) -> Option<Turn> {
    let y = x.rem_euclid(1.0);
    // Values within the window of 1 are the turn 0/1.
    if y < window || 1.0 - y < window {
        return Some(Turn { p: 0, q: 1 });
    }
    convergents(y, q_max)
        .into_iter()
        .find(|&(p, q)| q > 0 && (y - p as f64 / q as f64).abs() < window)
        .map(|(p, q)| Turn { p: p.rem_euclid(q as i64) as u64, q })
}

/// Rational angle of a complex number (its argument over a full turn).
pub fn recover_angle(z: C64, q_max: u64, window: f64) -> Option<Turn> {
    recover_turn(z.arg() / TAU, q_max, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_roots_of_unity() {
        for q in 1..=12u64 {
            for p in 0..q {
                let z = C64::from_polar(1.0, TAU * p as f64 / q as f64);
                let t = recover_angle(z, 64, 1e-9).unwrap();
                assert_eq!(t.p * q, p * t.q, "{p}/{q} gave {t:?}");
            }
        }
        assert_eq!(recover_angle(-C64::i(), 64, 1e-9), Some(Turn { p: 3, q: 4 }));
    }

    #[test]
    fn irrational_has_no_small_denominator() {
        let x = 2f64.sqrt() - 1.0;
        assert_eq!(recover_turn(x, 50, 1e-9), None);
        // Oracle: convergents of sqrt(2)-1 = [0; 2, 2, 2, ...] are Pell ratios.
        let c = convergents(x, 50);
        assert_eq!(c, vec![(0, 1), (1, 2), (2, 5), (5, 12), (12, 29)]);
    }

    #[test]
    fn turn_multiples() {
        let t = Turn { p: 1, q: 4 };
        assert_eq!(t.times(2), Turn { p: 2, q: 4 });
        assert_eq!(t.times(-1), Turn { p: 3, q: 4 });
        assert_eq!(t.times(0), Turn { p: 0, q: 4 });
    }
}
