//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Runs the full suite by default. `QASSIGN_SUITE=fast` selects the quick
//! variant and `QASSIGN_SEED` overrides the seed.

use std::process::ExitCode;

use qassign_core::validation::{run_criterion, Context, Suite, DEFAULT_SEED, TIME_LIMITS_S};

fn main() -> ExitCode {
    // libtest-style flags (e.g. --nocapture, filters) are accepted and ignored
    let suite: Suite = std::env::var("QASSIGN_SUITE")
        .ok()
        .map(|s| s.parse().expect("QASSIGN_SUITE is fast or full"))
        .unwrap_or(Suite::Full);
    let seed = std::env::var("QASSIGN_SEED")
        .ok()
        .map(|s| s.parse().expect("QASSIGN_SEED is an integer"))
        .unwrap_or(DEFAULT_SEED);
    let ctx = Context::new(suite, seed);
    println!("acceptance suite {suite:?}, seed {seed}");
    let mut failed = 0;
    for id in 1..=10u8 {
        let c = run_criterion(id, &ctx);
        let secs = c.elapsed.as_secs_f64();
        let limit = TIME_LIMITS_S[id as usize - 1];
        let in_time = suite == Suite::Fast || secs <= limit;
        let ok = c.passed && in_time;
        failed += usize::from(!ok);
        let mut line = c.line();
        if !c.passed || ok {
            line.push_str(&format!(" [{secs:.1}s of {limit:.0}s]"));
        } else {
            line = line.replacen("PASS", "FAIL", 1) + &format!(" [FAILED time {secs:.1}s over {limit:.0}s]");
        }
        println!("{line}");
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
