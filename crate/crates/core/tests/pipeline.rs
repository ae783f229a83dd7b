use serde_json::Value;

use robba::pipeline::{run, PipelineDoc, Report};
use robba::selfcheck::{selfcheck_with, FixtureOutcome, CORPUS};

fn fixture(name: &str) -> &'static str {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).expect("bundled fixture")
}

fn run_text(text: &str) -> Report {
    run(&PipelineDoc::parse(text).expect("document parses"))
}

fn output<'a>(r: &'a Report, key: &str) -> &'a Value {
    r.outputs.get(key).unwrap_or_else(|| panic!("missing output {key}"))
}

#[test]
fn every_fixture_round_trips_through_emit() {
    for (name, text) in CORPUS {
        let doc = PipelineDoc::parse(text).unwrap();
        let emitted = doc.emit();
        let again = PipelineDoc::parse(&emitted).unwrap();
        assert_eq!(again.emit(), emitted, "{name}");
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for (name, text) in CORPUS {
        assert_eq!(run_text(text).to_json(), run_text(text).to_json(), "{name}");
    }
}

#[test]
fn mutated_frobenius_fails_only_compatibility() {
    let original = fixture("verify_standard_pair");
    // Phi[1][1] = 5 becomes 10
    let entry = r#"[{"terms":[]},{"terms":[["0",{"unit":["1"],"val":"1"}]]}]"#;
    assert_eq!(original.matches(entry).count(), 1);
    let mutated = original.replace(entry, &entry.replace(r#"["1"]"#, r#"["2"]"#));
    assert!(run_text(original).passed());
    let report = run_text(&mutated);
    assert_eq!(report.error, None);
    assert_eq!(report.failed_checks(), vec!["compatibility"]);
}

#[test]
fn factoring_the_identity_gives_identities() {
    let report = run_text(fixture("factor_identity"));
    assert!(report.passed(), "{}", report.to_json());
    let c = serde_json::json!({"terms": [["0", {"unit": ["1"], "val": "0"}]]});
    let one = serde_json::json!([[c, {"terms": []}], [{"terms": []}, c]]);
    assert_eq!(output(&report, "V"), &one);
    assert_eq!(output(&report, "W"), &one);
}

#[test]
fn twisted_pair_reduces_to_plus_nilpotent_model() {
    let report = run_text(fixture("reduce_twisted"));
    assert!(report.passed(), "{}", report.to_json());
    let module = output(&report, "module");
    assert_eq!(module["ring"], "R+");
    for key in ["phi", "nconn"] {
        for entry in module[key].as_array().unwrap().iter().flat_map(|row| row.as_array().unwrap()) {
            for term in entry["terms"].as_array().unwrap() {
                let exp: i64 = term[0].as_str().unwrap().parse().unwrap();
                assert!(exp >= 0, "{key} has exponent {exp}");
            }
        }
    }
}

#[test]
fn lang_fixture_reports_degree_four() {
    let report = run_text(fixture("unitroot_lang"));
    assert!(report.passed(), "{}", report.to_json());
    assert_eq!(output(&report, "d"), "1");
    assert_eq!(output(&report, "m"), "4");
}

#[test]
fn two_adic_fixture_needs_two_steps() {
    let report = run_text(fixture("unitroot_two_adic"));
    assert!(report.passed(), "{}", report.to_json());
    assert_eq!(output(&report, "d"), "2");
}

#[test]
fn broken_fixture_is_reported_not_fatal() {
    let corpus = [("broken", "{\"task\": \"factor\",\n  oops}"), ("identity", fixture("factor_identity"))];
    let report = selfcheck_with(&corpus);
    assert!(!report.passed());
    match report.fixture("broken") {
        Some(FixtureOutcome::Unparsed(e)) => assert!(e.contains("line 2"), "{e}"),
        other => panic!("unexpected outcome {other:?}"),
    }
    assert!(matches!(report.fixture("identity"), Some(FixtureOutcome::Ran(r)) if r.passed()));
}
