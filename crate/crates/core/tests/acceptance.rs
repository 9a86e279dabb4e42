//! Prints one PASS/FAIL line per acceptance criterion.
//!
//! `LENTIL_CRITERIA=3,5` restricts the run; `LENTIL_QUICK=1` shrinks it.

use lentil_core::acceptance::{run_criterion, AcceptanceConfig};

#[test]
fn acceptance_criteria() {
    let ids: Vec<u8> = match std::env::var("LENTIL_CRITERIA") {
        Ok(v) => v.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
        Err(_) => (1..=10).collect(),
    };
    let cfg = AcceptanceConfig {
        quick: std::env::var("LENTIL_QUICK").is_ok_and(|v| v == "1"),
        ..AcceptanceConfig::default()
    };
    let mut failed = Vec::new();
    println!();
    for id in ids {
        let outcome = run_criterion(id, &cfg);
        println!("{outcome}");
        if !outcome.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
