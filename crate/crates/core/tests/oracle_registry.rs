//! Every registered closed-form prediction must agree with the explicit-loss
//! verification engine on its parameter grid.

use singlerail::oracle::{formula_ids, verify_formula};

#[test]
fn every_registered_formula_check_passes() {
    let mut failures = Vec::new();
    for id in formula_ids() {
        let report = verify_formula(id).expect("verification engine must run");
        println!("{report}");
        assert!(report.points > 0, "{id} checked no points");
        if !report.passed {
            failures.push(report);
        }
    }
    assert!(
        failures.is_empty(),
        "formula checks failed:\n{}",
        failures.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("\n")
    );
}
