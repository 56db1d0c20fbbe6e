use qgt::lattice::QParams;
use qgt::validation::{run_criterion, Level, CRITERIA};
use std::io::Write;

#[test]
fn acceptance() {
    let params = QParams::canonical();
    let mut failed = Vec::new();
    // straight to the process stdout so the lines show without --nocapture
    let mut out = std::io::stdout();
    for id in 1..=CRITERIA.len() {
        let outcome = run_criterion(id, Level::Full, &params);
        writeln!(out, "{outcome}").unwrap();
        out.flush().unwrap();
        if !outcome.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
