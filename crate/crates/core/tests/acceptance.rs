//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let start = Instant::now();
    let mut failed = 0;
    let mut ran = 0;
    for (id, _) in qbat::acceptance::CRITERIA {
        let key = id.trim_start_matches("AC-");
        if !filter.is_empty() && !filter.iter().any(|f| f.trim_start_matches("AC-") == key) {
            continue;
        }
        let o = qbat::acceptance::run(id).expect("known id");
        println!("{o}");
        ran += 1;
        if !o.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        ran - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
