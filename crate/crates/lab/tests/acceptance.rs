//! Acceptance criteria; prints one line per criterion and fails the target
//! if any criterion fails.

use std::process::ExitCode;

use muskat_lab::criteria;

fn main() -> ExitCode {
    let mut failed = 0;
    for o in criteria::run(&[]) {
        println!("{}", criteria::format_outcome(&o));
        if !o.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
