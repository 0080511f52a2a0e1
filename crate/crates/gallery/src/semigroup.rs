//! Grid simulator for the Markov semigroup on `K = T ⊔ [0, ∞]`:
//!
//! * `(T(t) f)(x) = f(e^{-it} x)` on the circle,
//! * `(T(t) f)(x) = f(x - t)` on the ray for `x >= t`,
//! * `(T(t) f)(x) = e^{-(t-x)} f(0) + e^{-(t-x)} ∫_0^{t-x} e^s <μ, R(s) f|_T> ds`
//!   for `x < t`, where `<μ, h> = (h(i) + h(-i))/2` and `R(s)` rotates by `-s`,
//! * `∞` is fixed.
//!
//! Time is exact; only space is discretized: `M` equispaced angles (`4 | M`
//! so that `±i` are grid points) and `N` equispaced points on `[0, L]`.

use perronlab_core::{Error, Result, C64};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleInterp {
    Linear,
    /// Trigonometric interpolation through all `M` samples.
    Trigonometric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupGrid {
    pub m: usize,
    pub n: usize,
    pub l: f64,
    pub interp: CircleInterp,
}

/// Values at the circle angles `2 pi j / M`, the ray points and `∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub circle: Vec<C64>,
    pub ray: Vec<C64>,
    pub infinity: C64,
}

impl GridFunction {
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        let c = self.circle.iter().zip(&other.circle).map(|(a, b)| (a - b).norm());
        let r = self.ray.iter().zip(&other.ray).map(|(a, b)| (a - b).norm());
        c.chain(r).fold((self.infinity - other.infinity).norm(), f64::max)
    }

    pub fn values(&self) -> impl Iterator<Item = &C64> {
        self.circle.iter().chain(self.ray.iter()).chain(std::iter::once(&self.infinity))
    }
}

struct CircleEval<'a> {
    values: &'a [C64],
    /// `(k, c_k)` for the trigonometric interpolant.
    coeffs: Option<Vec<(f64, C64)>>,
}

impl<'a> CircleEval<'a> {
    fn new(values: &'a [C64], interp: CircleInterp) -> Self {
        let coeffs = match interp {
            CircleInterp::Linear => None,
            CircleInterp::Trigonometric => Some(trig_coefficients(values)),
        };
        CircleEval { values, coeffs }
    }

    fn eval(&self, psi: f64) -> C64 {
        match &self.coeffs {
            None => {
                let m = self.values.len();
                let u = (psi / TAU * m as f64).rem_euclid(m as f64);
                let i0 = (u.floor() as usize) % m;
                let frac = u - u.floor();
                if frac == 0.0 {
                    self.values[i0]
                } else {
                    self.values[i0] * (1.0 - frac) + self.values[(i0 + 1) % m] * frac
                }
            }
            Some(cs) => cs.iter().map(|(k, c)| c * C64::from_polar(1.0, k * psi)).sum(),
        }
    }
}

/// Coefficients of the interpolant `sum c_k e^{i k psi}` with
/// `|k| <= M/2`; the Nyquist mode is split evenly between `±M/2`.
fn trig_coefficients(values: &[C64]) -> Vec<(f64, C64)> {
    let m = values.len();
    let half = (m / 2) as i64;
    let mut out = Vec::with_capacity(m + 1);
    for k in -half..=half {
        let mut c = C64::new(0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            // Reduce k j mod M before forming the angle.
            let kj = (k * j as i64).rem_euclid(m as i64) as f64;
            c += v * C64::from_polar(1.0, -TAU * kj / m as f64);
        }
        c /= m as f64;
        if k.abs() == half && m.is_multiple_of(2) {
            c *= 0.5;
        }
        out.push((k as f64, c));
    }
    out
}

impl SemigroupGrid {
    pub fn new(m: usize, n: usize, l: f64) -> Result<Self> {
        if m == 0 || !m.is_multiple_of(4) {
            return Err(Error::InvalidParameter(format!("M = {m} must be a positive multiple of 4")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter("N must be at least 2".into()));
        }
        if !(l > 0.0) {
            return Err(Error::InvalidParameter("L must be positive".into()));
        }
        Ok(SemigroupGrid { m, n, l, interp: CircleInterp::Linear })
    }

    pub fn with_interp(mut self, interp: CircleInterp) -> Self {
        self.interp = interp;
        self
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.m as f64
    }

    pub fn ray_step(&self) -> f64 {
        self.l / (self.n - 1) as f64
    }

    pub fn ray_point(&self, k: usize) -> f64 {
        k as f64 * self.ray_step()
    }

    /// Quadrature panel width for the memory integral.
    pub fn quad_step(&self) -> f64 {
        TAU / self.m as f64
    }

    /// Samples `on_circle(x)` at `x = e^{i angle}` and `on_ray(x)`.
    pub fn sample(
        &self,
        on_circle: impl Fn(C64) -> C64,
        on_ray: impl Fn(f64) -> C64,
        at_infinity: C64,
    ) -> GridFunction {
        GridFunction {
            circle: (0..self.m).map(|j| on_circle(C64::from_polar(1.0, self.angle(j)))).collect(),
            ray: (0..self.n).map(|k| on_ray(self.ray_point(k))).collect(),
            infinity: at_infinity,
        }
    }

    pub fn constant(&self, c: f64) -> GridFunction {
        let c = C64::new(c, 0.0);
        self.sample(|_| c, |_| c, c)
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.circle.len() != self.m || f.ray.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.m + self.n, got: f.circle.len() + f.ray.len() });
        }
        Ok(())
    }

    /// `<μ, f|_T> = (f(i) + f(-i))/2`; `±i` are the grid points `M/4`, `3M/4`.
    pub fn mu(&self, f: &GridFunction) -> C64 {
        (f.circle[self.m / 4] + f.circle[3 * self.m / 4]) * 0.5
    }

    fn ray_eval(&self, ray: &[C64], y: f64) -> C64 {
        let u = y / self.ray_step();
        let k = (u.floor() as usize).min(self.n - 2);
        let frac = u - k as f64;
        if frac == 0.0 {
            ray[k]
        } else {
            ray[k] * (1.0 - frac) + ray[k + 1] * frac
        }
    }

    /// `T(t) f` on the grid.
    pub fn apply(&self, t: f64, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        if !(0.0..=self.l).contains(&t) {
            return Err(Error::InvalidParameter(format!("t = {t} outside [0, L = {}]", self.l)));
        }
        if t == 0.0 {
            return Ok(f.clone());
        }
        let circ = CircleEval::new(&f.circle, self.interp);
        let circle = (0..self.m).map(|j| circ.eval(self.angle(j) - t)).collect();
        // e^s <μ, R(s) f>: R(s) f evaluated at ±i is f at angles π/2 - s, 3π/2 - s.
        let feed = |s: f64| (circ.eval(FRAC_PI_2 - s) + circ.eval(FRAC_PI_2 + PI - s)) * (0.5 * s.exp());
        let ray = (0..self.n)
            .map(|k| {
                let x = self.ray_point(k);
                if x >= t {
                    self.ray_eval(&f.ray, x - t)
                } else {
                    let tau = t - x;
                    let panels = (tau / self.quad_step()).ceil().max(1.0) as usize;
                    let h = tau / panels as f64;
                    let mut integral = (feed(0.0) + feed(tau)) * 0.5;
                    for p in 1..panels {
                        integral += feed(p as f64 * h);
                    }
                    (f.ray[0] + integral * h) * (-tau).exp()
                }
            })
            .collect();
        Ok(GridFunction { circle, ray, infinity: f.infinity })
    }

    /// `||(T(h) f - f)/h - λ f||_∞` over all grid values.
    pub fn generator_residual(&self, f: &GridFunction, lambda: C64, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter("h must be positive".into()));
        }
        let th = self.apply(h, f)?;
        Ok(th
            .values()
            .zip(f.values())
            .map(|(a, b)| ((a - b) / h - lambda * b).norm())
            .fold(0.0, f64::max))
    }

    /// `|f'(0) - f(0) + <μ, f|_T>|`, with `f'(0)` a one-sided difference.
    /// Every function in the generator domain satisfies the boundary relation
    /// `f'(0) = f(0) - <μ, f|_T>`.
    pub fn boundary_defect(&self, f: &GridFunction) -> f64 {
        let d = (f.ray[1] - f.ray[0]) / self.ray_step();
        (d - f.ray[0] + self.mu(f)).norm()
    }

    /// `||T(t) 1 - 1||_∞`.
    pub fn markov_defect(&self, t: f64) -> Result<f64> {
        let one = self.constant(1.0);
        Ok(self.apply(t, &one)?.sup_distance(&one))
    }

    /// `||T(t) T(s) f - T(t + s) f||_∞`.
    pub fn semigroup_defect(&self, t: f64, s: f64, f: &GridFunction) -> Result<f64> {
        let ts = self.apply(t, &self.apply(s, f)?)?;
        Ok(ts.sup_distance(&self.apply(t + s, f)?))
    }
}

/// `x^{-k}` on the circle, zero on the ray and at `∞`.
pub fn circle_power(grid: &SemigroupGrid, k: i32) -> GridFunction {
    grid.sample(|x| x.powi(-k), |_| C64::new(0.0, 0.0), C64::new(0.0, 0.0))
}

/// Smooth test functions: `Re x` and `(Re x)^2` extended by zero, and `1`.
pub fn test_dictionary(grid: &SemigroupGrid) -> Vec<(&'static str, GridFunction)> {
    let zero = C64::new(0.0, 0.0);
    vec![
        ("re_x", grid.sample(|x| C64::new(x.re, 0.0), |_| zero, zero)),
        ("re_x_squared", grid.sample(|x| C64::new(x.re * x.re, 0.0), |_| zero, zero)),
        ("one", grid.constant(1.0)),
    ]
}
