use perronlab_core::json::to_string_fixed;
use perronlab_core::operator::OperatorFile;
use perronlab_core::spectral::{spectral_report, ReportOptions};
use perronlab_core::weights::{scheme_from_json, SchemeKind};
use perronlab_core::{NormTag, C64};

#[test]
fn operator_file_with_bare_and_complex_entries() {
    let text = r#"{
        "model": {"dim": 2, "norm": "one", "labels": ["a", "b"]},
        "entries": [[0, 1], [{"re": 0.5, "im": -0.5}, 0]]
    }"#;
    let (t, c) = serde_json::from_str::<OperatorFile>(text).unwrap().into_parts().unwrap();
    assert!(c.is_none());
    assert_eq!(t.model().norm_tag(), NormTag::One);
    assert_eq!(t.model().labels().unwrap(), ["a", "b"]);
    assert_eq!(t.entries()[(1, 0)], C64::new(0.5, -0.5));

    let back = serde_json::to_string(&OperatorFile::from_parts(&t, None)).unwrap();
    let (t2, _) = serde_json::from_str::<OperatorFile>(&back).unwrap().into_parts().unwrap();
    assert_eq!(t, t2);
}

#[test]
fn constraints_restrict_the_kernel() {
    // Identity on C^2 constrained to x_1 = x_2: one fixed direction survives.
    let text = r#"{"model": {"dim": 2, "norm": "sup"}, "entries": [[1, 0], [0, 1]], "constraints": [[1, -1]]}"#;
    let (t, c) = serde_json::from_str::<OperatorFile>(text).unwrap().into_parts().unwrap();
    let c = c.expect("constraint rows");
    let rep = spectral_report(&t, Some(&c), &ReportOptions::default()).unwrap();
    assert_eq!(rep.pairs.len(), 1);
    assert_eq!(rep.pairs[0].geo_mult, 1);
    assert!(rep.constrained);
}

#[test]
fn malformed_operator_files_are_rejected() {
    for text in [
        r#"{"model": {"dim": 2, "norm": "sup"}, "entries": [[1, 0]]}"#,
        r#"{"model": {"dim": 2, "norm": "sup"}, "entries": [[1, 0], [0]]}"#,
        r#"{"model": {"dim": 2, "norm": "sup"}, "entries": [[1, 0], [0, 1]], "constraints": [[1]]}"#,
    ] {
        let parsed = serde_json::from_str::<OperatorFile>(text).unwrap();
        assert!(parsed.into_parts().is_err(), "{text}");
    }
    assert!(serde_json::from_str::<OperatorFile>(r#"{"model": {"dim": 2, "norm": "l2"}, "entries": []}"#).is_err());
    assert!(serde_json::from_str::<OperatorFile>(r#"{"model": {"dim": 0, "norm": "sup"}, "entries": []}"#).is_err());
}

#[test]
fn scheme_files() {
    let fam = scheme_from_json(r#"{"kind": "abel_net", "params": {"lambdas": [2.0, 1.5, 1.1]}}"#).unwrap();
    assert_eq!(fam.kind, SchemeKind::AbelNet);
    assert_eq!(fam.index_set, vec![2.0, 1.5, 1.1]);
    let fam = scheme_from_json(r#"{"kind": "custom", "params": {"coefficients": [[0.5, 0.5], [0.25, 0.75]]}}"#).unwrap();
    assert_eq!(fam.len(), 2);
    assert!(scheme_from_json(r#"{"kind": "abel_net", "params": {"lambdas": [1.1, 2.0]}}"#).is_err());
    assert!(scheme_from_json(r#"{"kind": "custom", "params": {"coefficients": [0.5, 0.6]}}"#).is_err());
    assert!(scheme_from_json(r#"{"kind": "nope"}"#).is_err());
}

#[test]
fn reports_serialize_identically() {
    let text = r#"{"model": {"dim": 3, "norm": "sup"}, "entries": [[0, 1, 0], [0, 0, 1], [1, 0, 0]]}"#;
    let (t, _) = serde_json::from_str::<OperatorFile>(text).unwrap().into_parts().unwrap();
    let opts = ReportOptions { n_range: Some((-3, 3)), ..Default::default() };
    let a = to_string_fixed(&spectral_report(&t, None, &opts).unwrap().to_json());
    let b = to_string_fixed(&spectral_report(&t, None, &opts).unwrap().to_json());
    assert_eq!(a, b);
    assert!(a.contains("\"verdict\": \"cyclic\""));
}
