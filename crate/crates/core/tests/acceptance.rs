//! Acceptance criteria 1–10: one PASS/FAIL line each, non-zero exit if any fails.

use xyff_core::checks::{CheckSettings, Checker};

fn main() {
    let mut checker = Checker::new(CheckSettings::default());
    let mut failed = Vec::new();
    for id in 1..=10u8 {
        let rep = checker.run(id);
        println!("{}", rep.line());
        for (k, v) in &rep.details {
            println!("    {k}: {v:.3e}");
        }
        for note in &rep.notes {
            println!("    note: {note}");
        }
        if !rep.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
