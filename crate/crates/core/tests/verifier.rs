use tractor_calculus::verifier::*;
use tractor_calculus::Error;

fn quick(suites: &[&str]) -> SuiteConfig {
    SuiteConfig {
        points: 4,
        suites: suites.iter().map(|s| s.to_string()).collect(),
        ..SuiteConfig::default()
    }
}

#[test]
fn fixed_seed_gives_identical_json() {
    let c = quick(&["prolongation", "sphere_model", "negative_controls"]);
    let a = render_json(&run(&c).unwrap());
    let b = render_json(&run(&c).unwrap());
    assert_eq!(a, b);
    let mut other = c.clone();
    other.seed = 99;
    assert_ne!(a, render_json(&run(&other).unwrap()));
}

#[test]
fn json_schema() {
    let reports = run(&quick(&["yangmills_d4"])).unwrap();
    let v: serde_json::Value = serde_json::from_str(&render_json(&reports)).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 3);
    let mut keys: Vec<&str> = arr[0].as_object().unwrap().keys().map(|k| k.as_str()).collect();
    keys.sort();
    assert_eq!(
        keys,
        ["anchor", "id", "max_residual", "mean_residual", "millis", "model", "points", "seed", "tolerance", "verdict"]
    );
    assert_eq!(arr[0]["verdict"], "pass");
    assert_eq!(arr[0]["millis"], 0);
    let back: Vec<CheckReport> = serde_json::from_value(v).unwrap();
    assert_eq!(back, reports);
}

#[test]
fn reports_are_sorted_and_anchored() {
    let reports = run(&quick(&["bianchi", "aesum"])).unwrap();
    for w in reports.windows(2) {
        assert!(w[0].id < w[1].id);
    }
    let text = render_text(&reports);
    for r in &reports {
        assert!(!r.anchor.is_empty());
        assert!(text.contains(&r.anchor));
    }
}

#[test]
fn negative_controls_are_expected_failures() {
    let reports = run(&quick(&["negative_controls"])).unwrap();
    assert!(!reports.is_empty());
    assert!(reports.iter().all(|r| r.verdict == Verdict::ExpectedFail), "{reports:#?}");
    assert_eq!(exit_status(&reports), 0);
}

#[test]
fn tightened_tolerance_fails() {
    let mut c = quick(&["fg_normal_form"]);
    c.tol_scale = 1e-12;
    let reports = run(&c).unwrap();
    assert_eq!(reports[0].verdict, Verdict::Fail);
    assert_eq!(exit_status(&reports), 1);
}

#[test]
fn user_models_are_checked() {
    let text = r#"{
        "points": 3,
        "suites": ["prolongation", "classification"],
        "models": [
            {"name": "hyperbolic", "chart": {"family": "euclidean", "dim": 3},
             "sigma": {"kind": "quadric", "a": 0.5, "b": [0, 0, 0], "c": -0.5}},
            {"name": "wrong", "chart": {"family": "round_sphere_stereo", "dim": 3},
             "sigma": {"kind": "coordinate", "index": 0}}
        ]
    }"#;
    let c = SuiteConfig::from_json(text).unwrap();
    let reports = run(&c).unwrap();
    let get = |id: &str| reports.iter().find(|r| r.id == id).unwrap();
    assert_eq!(get("prolongation.parallel[hyperbolic]").verdict, Verdict::Pass);
    assert_eq!(get("classification.einstein[hyperbolic]").verdict, Verdict::Pass);
    assert_eq!(get("prolongation.parallel[wrong]").verdict, Verdict::Fail);
    assert_eq!(exit_status(&reports), 1);
}

#[test]
fn malformed_configs() {
    match SuiteConfig::from_json("{\"seed\": 3,\n \"points\": [}") {
        Err(Error::Config(m)) => assert!(m.contains("line 2"), "{m}"),
        other => panic!("{other:?}"),
    }
    assert!(SuiteConfig::from_json(r#"{"models": [{"chart": {"family": "euclidean", "dim": 2}}]}"#).is_err());
}

#[test]
fn catalog() {
    let c = list_models();
    assert!(c.contains("quadric(a,b,c)"));
    assert!(c.contains("fg_hyperbolic_normal_form"));
    let families = c.lines().take_while(|l| !l.starts_with("Scale")).filter(|l| l.starts_with("  ")).count();
    assert!(families >= 7);
}
