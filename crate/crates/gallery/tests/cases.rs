use perronlab_core::json::to_string_fixed;
use perronlab_gallery::{case_names, registry, run_case, run_cases, GalleryError, Params};
use serde_json::{json, Value};

fn params(v: Value) -> Params {
    v.as_object().cloned().unwrap_or_default()
}

#[test]
fn every_implemented_case_passes_at_defaults() {
    let names: Vec<&str> = registry().iter().filter(|c| c.run.is_some()).map(|c| c.name).collect();
    assert_eq!(names.len(), 9);
    for (name, r) in names.iter().zip(run_cases(&names, &Params::new())) {
        let r = r.unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(r.passed(), "{}", to_string_fixed(&r.to_json()));
        assert!(!r.facts.is_empty());
    }
}

#[test]
fn c0_case_is_registered_without_a_construction() {
    assert!(case_names().contains(&"power_bounded_c0"));
    assert!(matches!(run_case("power_bounded_c0", &Params::new()), Err(GalleryError::Unimplemented(_))));
}

#[test]
fn reports_are_deterministic() {
    let a = run_case("no_daec_4x4", &Params::new()).unwrap();
    let b = run_case("no_daec_4x4", &Params::new()).unwrap();
    assert_eq!(to_string_fixed(&a.to_json()), to_string_fixed(&b.to_json()));
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn fixed_space_sup_is_the_constant_vector() {
    let r = run_case("fixed_space_3x3", &Params::new()).unwrap();
    let sup = &r.fact("sup_of_plus_minus_f").unwrap().measured["sup"];
    for x in sup.as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn cesaro_case_on_a_smaller_block_list() {
    let r = run_case("cesaro_unbounded_shift", &params(json!({ "m_list": [2, 3] }))).unwrap();
    assert!(r.passed(), "{}", to_string_fixed(&r.to_json()));
    let c2 = r.fact("cesaro_constant_m2").unwrap().measured.as_f64().unwrap();
    assert!((c2 - 0.5).abs() < 1e-12);
}

#[test]
fn vanishing_case_reports_the_violation() {
    let r = run_case("vanishing_at_infinity", &Params::new()).unwrap();
    let v = &r.fact("dimension_estimate_violated").unwrap().measured;
    assert_eq!(v["n"], json!(2));
    assert_eq!(v["rhs"], json!(0));
}

#[test]
fn larger_chain_keeps_minus_one_out() {
    for n in [16, 128] {
        let r = run_case("one_point_compactification", &params(json!({ "n": n }))).unwrap();
        assert!(r.passed(), "{}", to_string_fixed(&r.to_json()));
    }
}
