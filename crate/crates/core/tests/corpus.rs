use std::path::Path;
use std::time::Instant;

use stratum::corpus::{fixtures_in, run_file};

#[test]
fn every_fixture_passes() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let files = fixtures_in(&dir).unwrap();
    assert!(files.len() >= 6);
    let mut failed = Vec::new();
    for f in files {
        let start = Instant::now();
        let report = run_file(&f).unwrap();
        for e in &report.entries {
            println!("{} [{}] {}", if e.passed { "ok  " } else { "FAIL" }, report.fixture, e.command);
            if !e.passed {
                println!("      {}", e.detail);
                failed.push(e.command.clone());
            }
        }
        println!("     {} took {:?}", report.fixture, start.elapsed());
    }
    assert!(failed.is_empty(), "failed: {failed:#?}");
}
