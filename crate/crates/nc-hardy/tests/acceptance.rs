//! Runs every acceptance criterion and prints one PASS/FAIL line for each.

use std::process::ExitCode;

use nc_hardy::acceptance::{self, Settings};
use nc_hardy::parallel::Rayon;
use nc_hardy_core::haar::DEFAULT_SEED;
use nc_hardy_core::weingarten::WeingartenTable;

fn main() -> ExitCode {
    let settings = Settings::standard(WeingartenTable::global(), &Rayon, DEFAULT_SEED);
    let mut failed = 0;
    for id in 1..=10 {
        let outcome = acceptance::run_criterion(id, &settings);
        println!("{}", outcome.line());
        for note in outcome.exact.iter().chain(&outcome.sampled) {
            println!("    {note}");
        }
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("\nacceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
