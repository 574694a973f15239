use std::path::PathBuf;

use kinshock::acceptance::{run_all, AcceptanceContext};

#[test]
fn acceptance_criteria() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("kinshock-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let results = run_all(&AcceptanceContext::new(&dir));
    for r in &results {
        println!("{}", r.summary());
        for c in &r.checks {
            println!("       {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.label, c.detail);
        }
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
