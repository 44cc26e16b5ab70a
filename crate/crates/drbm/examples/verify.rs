//! Runs the fast analytic acceptance criteria and prints their verdicts.

use drbm::acceptance::{run_criterion, SuiteOptions, SUITE_SEED};

fn main() {
    let opts = SuiteOptions::quick(SUITE_SEED);
    for id in [1, 2, 3, 5, 7, 12, 13] {
        println!("{}", run_criterion(id, &opts).line());
    }
}
