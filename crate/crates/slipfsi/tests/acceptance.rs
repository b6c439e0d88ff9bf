//! Acceptance criteria 1 to 9, one pass/fail line each.

use slipfsi::verify::criterion;

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for n in 1..=9u8 {
        let checks = criterion(n).unwrap_or_else(|e| panic!("criterion {n} could not run: {e}"));
        let passed = checks.iter().all(|c| c.passed);
        let worst = checks.iter().find(|c| !c.passed).unwrap_or(&checks[0]);
        println!(
            "criterion {n}: {} ({} checks{})",
            if passed { "PASS" } else { "FAIL" },
            checks.len(),
            if passed { String::new() } else { format!("; {worst}") }
        );
        for c in &checks {
            println!("    {c}");
        }
        if !passed {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
