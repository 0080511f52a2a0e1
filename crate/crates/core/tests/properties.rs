//! Property tests over randomly generated nonnegative and Markov matrices.

use nalgebra::{DMatrix, DVector};
use perronlab_core::fixed_space::{lp_upper_bound, sup_in_fixed_space, FixedSpaceHandle};
use perronlab_core::lattice::{entrywise_sup, lattice_power, modulus};
use perronlab_core::spectral::{
    daec_check, dim_estimate_check, eigen, mean_ergodic_projection, perron_check, spectral_report, CyclicStatus,
    DaecStatus, ReportOptions,
};
use perronlab_core::weights::{apply_weight, check_ws1, convolve, CoeffStream, Verdict};
use perronlab_core::{LatticeVector, NormTag, OperatorMatrix, SpaceModel, C64};
use proptest::prelude::*;

/// Irreducible block: random pattern plus a full cycle through all states.
fn irreducible(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (
        prop::collection::vec(prop_oneof![2 => Just(0.0), 3 => 0.05..1.0f64], n * n),
        prop::collection::vec(0.2..1.0f64, n),
        Just(n).prop_shuffle_perm(),
    )
        .prop_map(move |(vals, cyc, perm)| {
            let mut m = DMatrix::from_row_slice(n, n, &vals);
            for k in 0..n {
                m[(perm[k], perm[(k + 1) % n])] += cyc[k];
            }
            m
        })
}

/// Weighted cyclic permutation: period `n`.
fn periodic(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (prop::collection::vec(0.2..2.0f64, n), Just(n).prop_shuffle_perm()).prop_map(move |(w, perm)| {
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(perm[k], perm[(k + 1) % n])] = w[k];
        }
        m
    })
}

trait ShufflePerm {
    fn prop_shuffle_perm(self) -> BoxedStrategy<Vec<usize>>;
}

impl ShufflePerm for Just<usize> {
    fn prop_shuffle_perm(self) -> BoxedStrategy<Vec<usize>> {
        Just((0..self.0).collect::<Vec<_>>()).prop_shuffle().boxed()
    }
}

fn block(n: usize) -> BoxedStrategy<DMatrix<f64>> {
    prop_oneof![irreducible(n), periodic(n)].boxed()
}

fn direct_sum(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        m.view_mut((at, at), (b.nrows(), b.nrows())).copy_from(b);
        at += b.nrows();
    }
    m
}

/// One or two uncoupled irreducible blocks, dimension at most 6.
fn nonnegative() -> impl Strategy<Value = OperatorMatrix> {
    prop_oneof![
        (1usize..=6).prop_flat_map(block).prop_map(|m| vec![m]),
        ((1usize..=3).prop_flat_map(block), (1usize..=3).prop_flat_map(block)).prop_map(|(a, b)| vec![a, b]),
    ]
    .prop_map(|bs| OperatorMatrix::from_real(&direct_sum(&bs), NormTag::Sup).unwrap())
}

fn row_normalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let s: f64 = row.sum();
        row /= s;
    }
    out
}

/// Closed classes from [`nonnegative`] plus an optional transient state
/// feeding into them.
fn markov() -> impl Strategy<Value = OperatorMatrix> {
    (nonnegative(), prop::option::of(prop::collection::vec(0.0..1.0f64, 1..=7))).prop_map(|(t, transient)| {
        let closed = row_normalize(&t.real_part());
        let n = closed.nrows();
        let m = match transient {
            None => closed,
            Some(w) => {
                let mut m = DMatrix::zeros(n + 1, n + 1);
                m.view_mut((0, 0), (n, n)).copy_from(&closed);
                for j in 0..=n {
                    m[(n, j)] = w[j % w.len()];
                }
                m[(n, 0)] += 0.5;
                let s: f64 = m.row(n).sum();
                m.row_mut(n).scale_mut(1.0 / s);
                m
            }
        };
        OperatorMatrix::from_real(&m, NormTag::Sup).unwrap()
    })
}

fn complex_vector(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(
        prop_oneof![1 => Just(C64::new(0.0, 0.0)), 4 => (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))],
        n,
    )
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spectral_radius_is_an_eigenvalue_with_nonnegative_eigenvector(t in nonnegative()) {
        let pc = perron_check(&t, 1e-8).unwrap();
        let r = pc.spectral_radius;
        prop_assert!((pc.value - C64::new(r, 0.0)).norm() <= 1e-8 * r.max(1.0));
        let v = pc.vector.expect("nonnegative eigenvector");
        prop_assert!(v.min() >= 0.0 && v.amax() > 0.0);
        let tv = t.real_part() * &v;
        prop_assert!((tv - &v * r).amax() <= 1e-8 * r.max(1.0) * v.amax());
    }

    #[test]
    fn peripheral_point_spectrum_is_cyclic(t in nonnegative()) {
        let opts = ReportOptions { band_tol: 1e-8, q_max: 64, ..Default::default() };
        let rep = spectral_report(&t, None, &opts).unwrap();
        prop_assert_eq!(rep.cyclic.status, CyclicStatus::Cyclic);
    }

    #[test]
    fn markov_dimension_estimates_hold(t in markov()) {
        prop_assert!(t.is_markov(1e-12).unwrap());
        let checks = dim_estimate_check(&t, None, 1e-8, -6..=6).unwrap();
        prop_assert!(!checks.is_empty());
        prop_assert!(checks.iter().all(|c| c.pass));
    }

    #[test]
    fn eigenpairs_are_consistent(t in nonnegative()) {
        let pairs = eigen(&t, 1e-7).unwrap();
        let total: usize = pairs.iter().map(|p| p.alg_mult).sum();
        prop_assert_eq!(total, t.dim());
        let scale = t.op_norm().max(1.0);
        for p in &pairs {
            prop_assert!(p.geo_mult >= 1 && p.geo_mult <= p.alg_mult);
            prop_assert!(p.pole_order >= 1 && p.pole_order <= p.alg_mult - p.geo_mult + 1);
            for v in &p.basis {
                let tv = t.apply(v).unwrap();
                let res = tv.entries() - v.entries() * p.value;
                prop_assert!(res.norm() <= 1e-7 * scale * v.entries().norm());
            }
        }
    }

    #[test]
    fn daec_implies_cyclic_orbit(t in nonnegative()) {
        let rep = spectral_report(&t, None, &ReportOptions::default()).unwrap();
        let r = rep.spectral_radius;
        for z in rep.peripheral_point_spectrum() {
            let theta = z.arg();
            let d = daec_check(&t, r, theta, 1e-9, 50, 7).unwrap();
            if d.status != DaecStatus::Holds {
                continue;
            }
            for n in -6i64..=6 {
                let target = C64::from_polar(r, n as f64 * theta);
                let near = rep.pairs.iter().any(|p| (p.value - target).norm() <= 1e-8 * r.max(1.0));
                prop_assert!(near, "r e^(i n theta) missing for n = {}", n);
            }
        }
    }

    #[test]
    fn mean_ergodic_projection_is_idempotent(t in markov()) {
        let rep = mean_ergodic_projection(&t, 1e-9).unwrap();
        let p = rep.projection.expect("Markov matrices are mean ergodic").entries().clone();
        prop_assert!(max_abs(&(&p * &p - &p)) <= 1e-8);
        prop_assert!(max_abs(&(t.entries() * &p - &p)) <= 1e-8);
        prop_assert!(max_abs(&(&p * t.entries() - &p)) <= 1e-8);
        let ones = DVector::from_element(t.dim(), C64::new(1.0, 0.0));
        prop_assert!((&p * &ones - &ones).camax() <= 1e-8);
    }

    #[test]
    fn cesaro_weight_equals_cesaro_mean(t in markov(), j in 1usize..40) {
        let (w, _) = apply_weight(&t, &CoeffStream::cesaro(j).unwrap(), 1000).unwrap();
        let c = t.cesaro_mean(j as u64).unwrap();
        prop_assert!(max_abs(&(w.entries() - c.entries())) <= 1e-12);
    }

    #[test]
    fn abel_weight_equals_scaled_resolvent(t in markov(), lambda in 1.5..4.0f64) {
        let (w, tail) = apply_weight(&t, &CoeffStream::abel_net(lambda).unwrap(), 200).unwrap();
        let res = t.resolvent(C64::new(lambda, 0.0)).unwrap().matrix;
        let expect = res.entries() * C64::new(lambda - 1.0, 0.0);
        prop_assert!(tail.tail_bound.unwrap() < 1e-30);
        prop_assert!(max_abs(&(w.entries() - expect)) <= 1e-10);
    }

    #[test]
    fn convolution_keeps_unit_mass(a in 1usize..30, lambda in 1.2..5.0f64, s in 0.0..6.0f64) {
        let ces = CoeffStream::cesaro(a).unwrap();
        let abel = CoeffStream::abel_net(lambda).unwrap();
        let exp = CoeffStream::exponential(s).unwrap();
        for (x, y) in [(&ces, &ces), (&ces, &abel), (&abel, &exp), (&exp, &exp)] {
            let c = convolve(x, y);
            prop_assert_eq!(check_ws1(&c, 400, 1e-10), Verdict::Pass);
            for k in 0..20 {
                let naive: f64 = (0..=k).map(|i| x.coeff(i) * y.coeff(k - i)).sum();
                prop_assert!((c.coeff(k) - naive).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn lattice_power_identities(v in (1usize..=6).prop_flat_map(complex_vector), n in -6i64..=6, m in -6i64..=6) {
        let f = LatticeVector::from_complex(&v, SpaceModel::sup(v.len())).unwrap();
        prop_assume!(!f.is_zero());
        let fn_ = lattice_power(&f, n).unwrap();
        let mods = (modulus(&fn_).entries() - modulus(&f).entries()).camax();
        prop_assert!(mods <= 1e-12);
        // (f/|f|)^(n+m) |f| = (f^[n] / |f|) (f/|f|)^m |f| on the support.
        let fnm = lattice_power(&f, n + m).unwrap();
        let fm = lattice_power(&f, m).unwrap();
        for i in 0..v.len() {
            let a = v[i].norm();
            if a == 0.0 {
                prop_assert_eq!(fnm.entries()[i], C64::new(0.0, 0.0));
            } else {
                let prod = fn_.entries()[i] * fm.entries()[i] / a;
                prop_assert!((fnm.entries()[i] - prod).norm() <= 1e-12 * a.max(1.0));
            }
        }
    }

    #[test]
    fn fixed_space_sup_is_least_fixed_upper_bound(
        t in markov(),
        coeffs in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 8), 1..=3),
        weights in prop::collection::vec(prop::collection::vec(0.1..1.0f64, 8), 3),
    ) {
        let h = FixedSpaceHandle::new(t.clone(), 1e-12).unwrap();
        let b = h.basis().clone();
        let n = t.dim();
        let g: Vec<LatticeVector> = coeffs
            .iter()
            .map(|c| {
                let v = &b * DVector::from_iterator(b.ncols(), c.iter().take(b.ncols()).copied());
                LatticeVector::from_real(v.as_slice(), h.model().clone()).unwrap()
            })
            .collect();
        let scale = g.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let tol = 1e-8 * scale;
        let sup = sup_in_fixed_space(&h, &g, 1e-13, 1_000_000).unwrap();
        let s = sup.value.re();
        prop_assert!(sup.residual <= tol);
        // Upper bound of every g.
        let lower = entrywise_sup(&g).unwrap().re();
        prop_assert!(s.iter().zip(&lower).all(|(a, b)| *a >= b - tol));
        // Below every fixed upper bound found by the LP.
        for w in &weights {
            if let Some(k) = lp_upper_bound(&h, &g, &w[..n]).unwrap() {
                prop_assert!(s.iter().zip(k.re()).all(|(a, b)| *a <= b + tol));
            }
        }
        // Idempotent.
        let again = sup_in_fixed_space(&h, &[sup.value.clone()], 1e-13, 1_000_000).unwrap().value.re();
        prop_assert!(again.iter().zip(&s).all(|(a, b)| (a - b).abs() <= tol));
    }
}
