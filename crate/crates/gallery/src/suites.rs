//! Seeded property suites.
//!
//! Trial `i` of a suite draws from `ChaCha8(seed)` on stream `i`, so a
//! trial is reproducible on its own and the report does not depend on how
//! trials are spread over threads.

use crate::{GalleryError, Result};
use nalgebra::{DMatrix, DVector};
use perronlab_core::fixed_space::{
    f_modulus, lp_upper_bound, sup_in_fixed_space, FixedSpaceHandle, DEFAULT_MAX_ITER, DEFAULT_SUP_TOL,
};
use perronlab_core::lattice::{independence_preserved, lattice_power, modulus};
use perronlab_core::linalg::numerical_rank;
use perronlab_core::spectral::{
    daec_check, dim_estimate_check, eigenvalue_clusters, perron_check, spectral_radius, spectral_report,
    CyclicStatus, DaecStatus, EigenOptions, ReportOptions,
};
use perronlab_core::weights::{
    builtin_scheme, check_ws1, check_ws2, check_ws3, convolve, loglog_slope, pole_order_at, ws_bounded_probe,
    CoeffStream, ProbeVerdict, SchemeKind, Verdict,
};
use perronlab_core::{LatticeVector, NormTag, OperatorMatrix, SpaceModel, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

pub const SUITES: &[&str] = &[
    "perron",
    "cyclicity",
    "markov-dim",
    "daec-implies-cyclic",
    "fixed-space",
    "ws-coeffs",
    "lattice-powers",
    "pole-order",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub trials: usize,
    pub seed: u64,
    /// Largest dimension drawn.
    pub n: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { trials: 1000, seed: 42, n: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub passed: usize,
    /// `{"trial": i, ...}` for each failing trial.
    pub failures: Vec<Value>,
    pub extra: Value,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite,
            "trials": self.trials,
            "passed": self.passed,
            "failed": self.trials - self.passed,
            "failures": self.failures,
            "extra": self.extra,
        })
    }
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

type Outcome = perronlab_core::Result<(bool, Value)>;

fn collect(suite: &str, opts: &SuiteOptions, f: impl Fn(usize, &mut ChaCha8Rng) -> Outcome + Sync) -> SuiteReport {
    let results: Vec<(bool, Value)> = (0..opts.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(opts.seed, i);
            match f(i, &mut rng) {
                Ok(r) => r,
                Err(e) => (false, json!({ "error": e.to_string() })),
            }
        })
        .collect();
    summarize(suite, results, Value::Null)
}

fn summarize(suite: &str, results: Vec<(bool, Value)>, extra: Value) -> SuiteReport {
    let passed = results.iter().filter(|r| r.0).count();
    let failures = results
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.0)
        .map(|(i, r)| json!({ "trial": i, "detail": r.1 }))
        .collect();
    SuiteReport { suite: suite.into(), trials: results.len(), passed, failures, extra }
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteReport> {
    if opts.n == 0 {
        return Err(GalleryError::BadParam { key: "n".into(), reason: "must be positive".into() });
    }
    Ok(match name {
        "perron" => collect(name, opts, |_, rng| perron_trial(rng, opts.n)),
        "cyclicity" => collect(name, opts, |_, rng| cyclicity_trial(rng, opts.n)),
        "markov-dim" => collect(name, opts, |_, rng| markov_dim_trial(rng, opts.n)),
        "daec-implies-cyclic" => collect(name, opts, |i, rng| daec_trial(i, rng, opts.n, opts.seed)),
        "fixed-space" => collect(name, opts, |_, rng| fixed_space_trial(rng, opts.n)),
        "ws-coeffs" => ws_coeffs_suite(),
        "lattice-powers" => lattice_powers_suite(opts),
        "pole-order" => pole_order_suite(opts)?,
        _ => return Err(GalleryError::UnknownSuite(name.into())),
    })
}

// ---- random matrices -------------------------------------------------------

fn to_operator(m: &DMatrix<f64>) -> OperatorMatrix {
    OperatorMatrix::from_real(m, NormTag::Sup).expect("square")
}

fn permute(m: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = m.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    DMatrix::from_fn(n, n, |i, j| m[(perm[i], perm[j])])
}

/// Splits `0..n` into `p` nonempty groups.
fn groups(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut g: Vec<usize> = (0..n).map(|i| if i < p { i } else { rng.gen_range(0..p) }).collect();
    g.shuffle(rng);
    g
}

fn sparse_entry(rng: &mut ChaCha8Rng, density: f64) -> f64 {
    if rng.gen_bool(density) {
        rng.gen_range(0.05..1.0)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonnegClass {
    Dense,
    Sparse,
    BlockCyclic,
    Reducible,
    WeightedPermutation,
}

impl NonnegClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            NonnegClass::Dense => "dense",
            NonnegClass::Sparse => "sparse",
            NonnegClass::BlockCyclic => "block_cyclic",
            NonnegClass::Reducible => "reducible",
            NonnegClass::WeightedPermutation => "weighted_permutation",
        }
    }
}

fn nonneg_of_class(class: NonnegClass, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    match class {
        NonnegClass::Dense => DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>()),
        NonnegClass::Sparse => DMatrix::from_fn(n, n, |_, _| sparse_entry(rng, 0.35)),
        NonnegClass::BlockCyclic => {
            let p = rng.gen_range(2..=n.min(4));
            let g = groups(n, p, rng);
            DMatrix::from_fn(n, n, |i, j| if g[j] == (g[i] + 1) % p { sparse_entry(rng, 0.8) } else { 0.0 })
        }
        NonnegClass::Reducible => {
            let k = rng.gen_range(1..n);
            let mut m = DMatrix::from_fn(n, n, |_, _| sparse_entry(rng, 0.6));
            for i in k..n {
                for j in 0..k {
                    m[(i, j)] = 0.0;
                }
            }
            permute(&m, rng)
        }
        NonnegClass::WeightedPermutation => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            let mut m = DMatrix::zeros(n, n);
            for (i, &j) in perm.iter().enumerate() {
                m[(i, j)] = rng.gen_range(0.5..1.5);
            }
            m
        }
    }
}

/// A random nonnegative matrix of dimension `1..=n_max` whose spectral
/// radius is not negligible against its norm.
pub fn random_nonnegative(rng: &mut ChaCha8Rng, n_max: usize) -> (NonnegClass, OperatorMatrix) {
    loop {
        let n = rng.gen_range(1..=n_max);
        let classes: &[NonnegClass] = if n == 1 {
            &[NonnegClass::Dense]
        } else {
            &[
                NonnegClass::Dense,
                NonnegClass::Sparse,
                NonnegClass::BlockCyclic,
                NonnegClass::Reducible,
                NonnegClass::WeightedPermutation,
            ]
        };
        let class = *classes.choose(rng).expect("nonempty");
        let t = to_operator(&nonneg_of_class(class, n, rng));
        let norm = t.op_norm();
        match spectral_radius(&t) {
            Ok(r) if norm > 0.0 && r >= 0.05 * norm => return (class, t),
            _ => continue,
        }
    }
}

/// Irreducible nonnegative block with period `p` (1 for aperiodic).
fn irreducible_block(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if p <= 1 {
        let mut m = DMatrix::from_fn(n, n, |_, _| sparse_entry(rng, 0.5));
        // A Hamiltonian cycle with a self-loop keeps it irreducible and aperiodic.
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for w in 0..n {
            m[(order[w], order[(w + 1) % n])] += rng.gen_range(0.1..1.0);
        }
        m[(order[0], order[0])] += rng.gen_range(0.1..1.0);
        m
    } else {
        let g = groups(n, p, rng);
        DMatrix::from_fn(n, n, |i, j| if g[j] == (g[i] + 1) % p { rng.gen_range(0.1..1.0) } else { 0.0 })
    }
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let s: f64 = row.iter().sum();
        row /= s;
    }
}

/// A random row-stochastic matrix of dimension `1..=n_max`: up to three
/// closed classes, each irreducible and possibly periodic, plus transient
/// states sending at least a fifth of their mass into the closed classes.
pub fn random_markov(rng: &mut ChaCha8Rng, n_max: usize, allow_periodic: bool) -> OperatorMatrix {
    let n = rng.gen_range(1..=n_max);
    let classes = rng.gen_range(1..=n.min(3));
    let closed_total = rng.gen_range(classes..=n);
    let mut sizes = vec![1usize; classes];
    for _ in classes..closed_total {
        sizes[rng.gen_range(0..classes)] += 1;
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut start = 0;
    for &s in &sizes {
        let p = if allow_periodic && s >= 2 && rng.gen_bool(0.5) { rng.gen_range(2..=s.min(4)) } else { 1 };
        let mut b = irreducible_block(s, p, rng);
        normalize_rows(&mut b);
        m.view_mut((start, start), (s, s)).copy_from(&b);
        start += s;
    }
    for i in closed_total..n {
        let mut closed: Vec<f64> = (0..closed_total).map(|_| sparse_entry(rng, 0.5)).collect();
        closed[rng.gen_range(0..closed_total)] += 0.1;
        let cs: f64 = closed.iter().sum();
        let share = rng.gen_range(0.2..1.0);
        let transient: Vec<f64> = (closed_total..n).map(|_| sparse_entry(rng, 0.5)).collect();
        let ts: f64 = transient.iter().sum();
        let share = if ts == 0.0 { 1.0 } else { share };
        for (j, c) in closed.iter().enumerate() {
            m[(i, j)] = share * c / cs;
        }
        for (k, v) in transient.iter().enumerate() {
            if ts > 0.0 {
                m[(i, closed_total + k)] = (1.0 - share) * v / ts;
            }
        }
    }
    to_operator(&permute(&m, rng))
}

// ---- spectral suites -------------------------------------------------------

fn perron_trial(rng: &mut ChaCha8Rng, n_max: usize) -> Outcome {
    let (class, t) = random_nonnegative(rng, n_max);
    let pc = perron_check(&t, 1e-8)?;
    let r = pc.spectral_radius;
    let scale = r.max(1.0);
    let value_ok = (pc.value - C64::new(r, 0.0)).norm() <= 1e-8 * scale;
    let vector_ok = pc.vector.as_ref().is_some_and(|v| {
        let tv = t.real_part() * v;
        v.min() >= 0.0 && v.amax() > 0.0 && (tv - v * r).amax() <= 1e-8 * scale * v.amax()
    });
    Ok((value_ok && vector_ok, json!({ "class": class.as_str(), "r": r, "value": pc.value.to_string() })))
}

fn cyclicity_trial(rng: &mut ChaCha8Rng, n_max: usize) -> Outcome {
    let (class, t) = random_nonnegative(rng, n_max);
    let opts = ReportOptions { band_tol: 1e-8, q_max: 64, ..Default::default() };
    let rep = spectral_report(&t, None, &opts)?;
    let per: Vec<String> = rep.peripheral_point_spectrum().iter().map(|z| z.to_string()).collect();
    Ok((
        rep.cyclic.status == CyclicStatus::Cyclic,
        json!({ "class": class.as_str(), "verdict": rep.cyclic.status.as_str(), "peripheral": per }),
    ))
}

fn markov_dim_trial(rng: &mut ChaCha8Rng, n_max: usize) -> Outcome {
    let t = random_markov(rng, n_max, true);
    let checks = dim_estimate_check(&t, None, 1e-8, -6..=6)?;
    let bad: Vec<Value> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| json!({ "value": c.value.to_string(), "n": c.n, "lhs": c.lhs, "rhs": c.rhs }))
        .collect();
    Ok((bad.is_empty() && !checks.is_empty(), json!({ "dim": t.dim(), "checks": checks.len(), "violations": bad })))
}

fn daec_trial(i: usize, rng: &mut ChaCha8Rng, n_max: usize, seed: u64) -> Outcome {
    let t = if i.is_multiple_of(2) { random_nonnegative(rng, n_max).1 } else { random_markov(rng, n_max, true) };
    let rep = spectral_report(&t, None, &ReportOptions::default())?;
    let r = rep.spectral_radius;
    let values: Vec<C64> = eigenvalue_clusters(t.entries(), &EigenOptions::default())?.iter().map(|c| c.value).collect();
    let scale = r.max(1.0);
    let mut holds = 0;
    let mut missing = Vec::new();
    for z in rep.peripheral_point_spectrum() {
        let theta = z.arg();
        let d = daec_check(&t, r, theta, 1e-8, 200, seed ^ i as u64)?;
        if d.status != DaecStatus::Holds {
            continue;
        }
        holds += 1;
        for n in -6..=6i64 {
            let target = C64::from_polar(r, n as f64 * theta);
            if !values.iter().any(|v| (v - target).norm() <= 1e-8 * scale) {
                missing.push(json!({ "theta": theta, "n": n }));
            }
        }
    }
    Ok((missing.is_empty(), json!({ "dim": t.dim(), "holds": holds, "missing": missing })))
}

// ---- fixed spaces ----------------------------------------------------------

fn random_fixed_vector(h: &FixedSpaceHandle, rng: &mut ChaCha8Rng) -> perronlab_core::Result<LatticeVector> {
    let b = h.basis();
    let c = DVector::from_fn(b.ncols(), |_, _| rng.gen_range(-1.0..1.0));
    LatticeVector::from_real((b * c).as_slice(), h.model().clone())
}

/// Tolerances are relative to the largest input entry: the echelon basis
/// may pivot on transient states, which makes fixed vectors large and the
/// LP bounds accurate only to about `1e-9` relative.
fn fixed_space_trial(rng: &mut ChaCha8Rng, n_max: usize) -> Outcome {
    const TOL: f64 = 1e-8;
    let t = random_markov(rng, n_max.max(1), false);
    let h = FixedSpaceHandle::new(t, 1e-10)?;
    let count = rng.gen_range(2..=3);
    let g: Vec<LatticeVector> = (0..count).map(|_| random_fixed_vector(&h, rng)).collect::<perronlab_core::Result<_>>()?;
    let scale = g.iter().flat_map(|v| v.re()).fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = TOL * scale;
    let sup = sup_in_fixed_space(&h, &g, DEFAULT_SUP_TOL, DEFAULT_MAX_ITER)?;
    let s = sup.value.re();
    let above_inputs = g.iter().all(|v| v.re().iter().zip(&s).all(|(gi, si)| *si >= gi - tol));
    let mut below_bounds = true;
    let mut bounds = 0;
    for _ in 0..5 {
        let w: Vec<f64> = (0..h.model().dim()).map(|_| rng.gen_range(0.1..1.0)).collect();
        if let Some(k) = lp_upper_bound(&h, &g, &w)? {
            bounds += 1;
            below_bounds &= k.re().iter().zip(&s).all(|(ki, si)| *si <= ki + tol);
        }
    }
    let again = sup_in_fixed_space(&h, std::slice::from_ref(&sup.value), DEFAULT_SUP_TOL, DEFAULT_MAX_ITER)?;
    let idempotent = again.value.re().iter().zip(&s).all(|(a, b)| (a - b).abs() <= tol);
    let modulus_gap = f_modulus(&h, &g[0])?.norm_gap;
    let monotone = sup.max_decrease <= tol;
    Ok((
        above_inputs && below_bounds && bounds > 0 && idempotent && modulus_gap <= tol && monotone
            && sup.residual <= tol,
        json!({
            "dim": h.model().dim(), "fixed_dim": h.dim(), "scale": scale, "above_inputs": above_inputs,
            "lp_bounds": bounds, "below_bounds": below_bounds, "idempotent": idempotent,
            "modulus_gap": modulus_gap, "max_decrease": sup.max_decrease, "residual": sup.residual,
        }),
    ))
}

// ---- weighting schemes -----------------------------------------------------

fn builtin_families() -> Vec<(&'static str, SchemeKind, Value)> {
    vec![
        ("powers", SchemeKind::Powers, json!({})),
        ("cesaro", SchemeKind::Cesaro, json!({})),
        ("abel_net", SchemeKind::AbelNet, json!({})),
        ("abel_powers", SchemeKind::AbelPowers, json!({ "lambda": 2.0 })),
        ("exponential", SchemeKind::Exponential, json!({})),
    ]
}

/// Coefficient indices checked for decay along a 20-member prefix; later
/// coefficients have not started to decay that early in the family.
pub const WS3_K: usize = 8;

fn ws_coeffs_suite() -> SuiteReport {
    const K: usize = 200;
    const TOL: f64 = 1e-10;
    let mut results = Vec::new();
    let mut streams: Vec<(String, CoeffStream)> = Vec::new();
    for (name, kind, params) in builtin_families() {
        match builtin_scheme(kind, &params) {
            Ok(fam) => {
                let ws3 = check_ws3(&fam.prefix(20), WS3_K, TOL);
                results.push((ws3 == Verdict::Pass, json!({ "family": name, "ws3": ws3.as_str() })));
                for i in 0..fam.len() {
                    let s = fam.stream(i);
                    let (v1, v2) = (check_ws1(s, K, TOL), check_ws2(s, K, TOL));
                    results.push((
                        v1 == Verdict::Pass && v2 == Verdict::Pass,
                        json!({ "family": name, "index": fam.index_set[i], "ws1": v1.as_str(), "ws2": v2.as_str() }),
                    ));
                }
                streams.push((format!("{name}[0]"), fam.stream(0).clone()));
                streams.push((format!("{name}[{}]", fam.len() - 1), fam.stream(fam.len() - 1).clone()));
            }
            Err(e) => results.push((false, json!({ "family": name, "error": e.to_string() }))),
        }
    }
    for (a, sa) in &streams {
        for (b, sb) in &streams {
            let c = convolve(sa, sb);
            let (v1, v2) = (check_ws1(&c, K, TOL), check_ws2(&c, K, TOL));
            results.push((
                v1 == Verdict::Pass && v2 == Verdict::Pass,
                json!({ "convolution": [a, b], "ws1": v1.as_str(), "ws2": v2.as_str() }),
            ));
        }
    }
    summarize("ws-coeffs", results, Value::Null)
}

// ---- lattice powers --------------------------------------------------------

fn random_complex_vector(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n)
            .map(|_| {
                if rng.gen_bool(zero_prob) {
                    C64::new(0.0, 0.0)
                } else if rng.gen_bool(0.3) {
                    C64::new(rng.gen_range(-2.0..2.0), 0.0)
                } else {
                    C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
                }
            })
            .collect();
        if v.iter().any(|z| z.norm() > 0.0) {
            return v;
        }
    }
}

fn lattice_vector_trial(rng: &mut ChaCha8Rng, n_max: usize) -> Outcome {
    const TOL: f64 = 1e-12;
    let n = rng.gen_range(1..=n_max);
    let f = LatticeVector::from_complex(&random_complex_vector(rng, n, 0.2), SpaceModel::sup(n))?;
    let (a, b) = (rng.gen_range(-6..=6i64), rng.gen_range(-6..=6i64));
    let (fa, fb, fab) = (lattice_power(&f, a)?, lattice_power(&f, b)?, lattice_power(&f, a + b)?);
    let m = modulus(&f);
    let mut modulus_err = 0.0f64;
    let mut additivity_err = 0.0f64;
    for (k, p) in [&fa, &fb, &fab].iter().enumerate() {
        let mp = modulus(p);
        for i in 0..n {
            let scale = m.entries()[i].re.max(1.0);
            modulus_err = modulus_err.max((mp.entries()[i].re - m.entries()[i].re).abs() / scale);
            if k == 0 {
                let fi = f.entries()[i];
                if fi.norm() > 0.0 {
                    let lhs = fa.entries()[i] * fb.entries()[i] / fi.norm();
                    additivity_err = additivity_err.max((lhs - fab.entries()[i]).norm() / fi.norm().max(1.0));
                }
            }
        }
    }
    Ok((
        modulus_err <= TOL && additivity_err <= TOL,
        json!({ "n": n, "exponents": [a, b], "modulus_err": modulus_err, "additivity_err": additivity_err }),
    ))
}

fn independence_trial(rng: &mut ChaCha8Rng, n_max: usize) -> Outcome {
    let n = rng.gen_range(1..=n_max.min(6));
    let k = rng.gen_range(1..=n.min(4));
    let model = SpaceModel::sup(n);
    loop {
        let vs: Vec<Vec<C64>> = (0..k).map(|_| random_complex_vector(rng, n, 0.25)).collect();
        let m = DMatrix::from_fn(n, k, |i, j| vs[j][i]);
        if numerical_rank(&m) < k {
            continue;
        }
        let g: Vec<LatticeVector> =
            vs.iter().map(|v| LatticeVector::from_complex(v, model.clone())).collect::<perronlab_core::Result<_>>()?;
        let e = rng.gen_range(-6..=6i64);
        let ok = independence_preserved(&g, e)?;
        return Ok((ok, json!({ "n": n, "family": k, "exponent": e })));
    }
}

fn lattice_powers_suite(opts: &SuiteOptions) -> SuiteReport {
    let families = opts.trials / 2;
    let results: Vec<(bool, Value)> = (0..opts.trials + families)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(opts.seed, i);
            let out = if i < opts.trials {
                lattice_vector_trial(&mut rng, opts.n)
            } else {
                independence_trial(&mut rng, opts.n)
            };
            out.unwrap_or_else(|e| (false, json!({ "error": e.to_string() })))
        })
        .collect();
    summarize("lattice-powers", results, json!({ "vectors": opts.trials, "families": families }))
}

// ---- pole order ------------------------------------------------------------

pub const POLE_PROBE_LEN: usize = 50;
pub const POLE_PROBE_K: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleClass {
    Irreducible,
    Coupled(usize),
    Uncoupled,
    Subdominant,
}

impl PoleClass {
    pub fn label(&self) -> String {
        match self {
            PoleClass::Irreducible => "irreducible".into(),
            PoleClass::Coupled(k) => format!("coupled_{k}"),
            PoleClass::Uncoupled => "uncoupled".into(),
            PoleClass::Subdominant => "subdominant".into(),
        }
    }
}

fn unit_radius_block(n: usize, rng: &mut ChaCha8Rng) -> perronlab_core::Result<DMatrix<f64>> {
    let b = irreducible_block(n, 1, rng);
    let r = spectral_radius(&to_operator(&b))?;
    Ok(b / r)
}

fn block_upper(blocks: &[DMatrix<f64>], coupled: bool, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut offs = Vec::new();
    let mut start = 0;
    for b in blocks {
        m.view_mut((start, start), b.shape()).copy_from(b);
        offs.push(start);
        start += b.nrows();
    }
    if coupled {
        for w in 0..blocks.len().saturating_sub(1) {
            let (r0, c0) = (offs[w], offs[w + 1]);
            for i in 0..blocks[w].nrows() {
                for j in 0..blocks[w + 1].nrows() {
                    m[(r0 + i, c0 + j)] = rng.gen_range(0.5..1.5);
                }
            }
        }
    }
    m
}

fn sizes_summing_to(n: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut s = vec![1; parts];
    for _ in parts..n {
        s[rng.gen_range(0..parts)] += 1;
    }
    s
}

/// Radius of the subdominant block. Near 1 the Cesàro norms settle so
/// slowly that 50 indices no longer separate them from growth.
pub const SUBDOMINANT_RADIUS: std::ops::Range<f64> = 0.2..0.7;

/// A nonnegative matrix with `r(T) = 1` and a known pole order at 1.
pub fn random_pole_matrix(rng: &mut ChaCha8Rng, n_max: usize, trial: usize) -> perronlab_core::Result<(PoleClass, OperatorMatrix)> {
    let n = rng.gen_range(1..=n_max);
    let class = match (trial % 4, n) {
        (_, 1) => PoleClass::Irreducible,
        (0, _) => PoleClass::Irreducible,
        (1, _) => PoleClass::Coupled(if n >= 3 && rng.gen_bool(0.5) { 3 } else { 2 }),
        (2, _) => PoleClass::Uncoupled,
        _ => PoleClass::Subdominant,
    };
    let m = match class {
        PoleClass::Irreducible => unit_radius_block(n, rng)?,
        PoleClass::Coupled(_) | PoleClass::Uncoupled => {
            let k = if let PoleClass::Coupled(k) = class { k } else { 2 };
            let blocks = sizes_summing_to(n, k, rng)
                .into_iter()
                .map(|s| unit_radius_block(s, rng))
                .collect::<perronlab_core::Result<Vec<_>>>()?;
            block_upper(&blocks, class != PoleClass::Uncoupled, rng)
        }
        PoleClass::Subdominant => {
            let s = sizes_summing_to(n, 2, rng);
            let top = unit_radius_block(s[0], rng)?;
            let sub = unit_radius_block(s[1], rng)? * rng.gen_range(SUBDOMINANT_RADIUS);
            let blocks = if rng.gen_bool(0.5) { vec![top, sub] } else { vec![sub, top] };
            block_upper(&blocks, true, rng)
        }
    };
    Ok((class, to_operator(&permute(&m, rng))))
}

fn pole_trial(rng: &mut ChaCha8Rng, n_max: usize, trial: usize) -> Outcome {
    let (class, t) = random_pole_matrix(rng, n_max, trial)?;
    let fam = builtin_scheme(SchemeKind::Cesaro, &json!({ "len": POLE_PROBE_LEN }))?;
    let probe = ws_bounded_probe(&t, &fam, POLE_PROBE_K, POLE_PROBE_LEN)?;
    let pole = pole_order_at(&t, C64::new(1.0, 0.0), 1e-6)?;
    let bounded = probe.verdict == ProbeVerdict::BoundedEvidence;
    Ok((
        bounded == (pole == 1),
        json!({
            "class": class.label(), "dim": t.dim(), "pole_order": pole, "verdict": probe.verdict.as_str(),
            "slope": probe.slope,
        }),
    ))
}

/// `diag(J_m(1), B)` under a random permutation, with `B >= 0` and
/// `||B||_inf <= 0.9`.
pub fn planted_jordan(m: usize, extra: usize, rng: &mut ChaCha8Rng) -> OperatorMatrix {
    let n = m + extra;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..m {
        a[(i, i)] = 1.0;
        if i + 1 < m {
            a[(i, i + 1)] = 1.0;
        }
    }
    if extra > 0 {
        let mut b = DMatrix::from_fn(extra, extra, |_, _| rng.gen::<f64>());
        normalize_rows(&mut b);
        b *= rng.gen_range(0.1..0.9);
        a.view_mut((m, m), (extra, extra)).copy_from(&b);
    }
    to_operator(&permute(&a, rng))
}

/// Log-log slope of `||(1/j) sum_{k<j} T^k||` over `j = 10..=50`.
pub fn cesaro_growth_exponent(t: &OperatorMatrix) -> perronlab_core::Result<f64> {
    let fam = builtin_scheme(SchemeKind::Cesaro, &json!({ "start": 10, "len": 41 }))?;
    let probe = ws_bounded_probe(t, &fam, POLE_PROBE_K, fam.len())?;
    let xs: Vec<f64> = probe.rows.iter().map(|r| r.index).collect();
    let ys: Vec<f64> = probe.rows.iter().map(|r| r.norm).collect();
    Ok(loglog_slope(&xs, &ys))
}

fn pole_order_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let results: Vec<(bool, Value)> = (0..opts.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(opts.seed, i);
            pole_trial(&mut rng, opts.n, i).unwrap_or_else(|e| (false, json!({ "error": e.to_string() })))
        })
        .collect();
    let mut planted = Vec::new();
    let mut planted_ok = true;
    for m in [2usize, 3] {
        let mut rng = trial_rng(opts.seed ^ 0x9e37_79b9, m);
        let extra = rng.gen_range(0..=opts.n.saturating_sub(m).min(4));
        let slope = cesaro_growth_exponent(&planted_jordan(m, extra, &mut rng))?;
        let ok = (slope - (m as f64 - 1.0)).abs() <= 0.2;
        planted_ok &= ok;
        planted.push(json!({ "m": m, "extra": extra, "exponent": slope, "expected": m - 1, "pass": ok }));
    }
    let mut report = summarize("pole-order", results, json!({ "planted_jordan": planted }));
    if !planted_ok {
        report.failures.push(json!({ "planted_jordan": report.extra["planted_jordan"].clone() }));
        report.trials += 1;
    } else {
        report.trials += 1;
        report.passed += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> SuiteOptions {
        SuiteOptions { trials, seed: 7, n: 6 }
    }

    #[test]
    fn streams_are_independent_of_scheduling() {
        let a: f64 = trial_rng(1, 5).gen();
        let b: f64 = trial_rng(1, 5).gen();
        let c: f64 = trial_rng(1, 6).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_markov_is_markov() {
        let mut rng = trial_rng(3, 0);
        for _ in 0..50 {
            assert!(random_markov(&mut rng, 8, true).is_markov(1e-12).unwrap());
        }
    }

    #[test]
    fn random_nonnegative_is_nonnegative() {
        let mut rng = trial_rng(3, 1);
        for _ in 0..50 {
            let (_, t) = random_nonnegative(&mut rng, 8);
            assert!(t.is_positive(0.0));
        }
    }

    #[test]
    fn every_suite_passes_on_a_small_run() {
        for name in SUITES {
            let r = run_suite(name, &small(40)).unwrap();
            assert!(r.all_passed(), "{}", perronlab_core::json::to_string_fixed(&r.to_json()));
        }
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", &small(1)), Err(GalleryError::UnknownSuite(_))));
    }

    #[test]
    fn planted_jordan_exponents() {
        let mut rng = trial_rng(11, 0);
        let s2 = cesaro_growth_exponent(&planted_jordan(2, 3, &mut rng)).unwrap();
        let s3 = cesaro_growth_exponent(&planted_jordan(3, 2, &mut rng)).unwrap();
        assert!((s2 - 1.0).abs() < 0.2 && (s3 - 2.0).abs() < 0.2, "{s2} {s3}");
    }
}
