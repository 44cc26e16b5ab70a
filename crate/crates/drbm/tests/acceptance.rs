//! Acceptance criteria 1 to 14 at full Monte Carlo scale with the pinned
//! seed. Tolerances live in `drbm::acceptance`; each test prints its
//! pass/fail line with the measured value and the bound.

use drbm::acceptance::{run_criterion, SuiteOptions, SUITE_SEED};

fn criterion(id: u8) {
    let result = run_criterion(id, &SuiteOptions::full(SUITE_SEED));
    println!("{}", result.line());
    for check in &result.checks {
        let verdict = if check.passed { "ok  " } else { "FAIL" };
        println!("    {verdict} {}: measured {:.9e}, bound {:.9e}", check.label, check.measured, check.bound);
    }
    for note in &result.notes {
        println!("    note: {note}");
    }
    assert!(result.passed, "{}", result.line());
}

macro_rules! criteria {
    ($($name:ident => $id:expr),* $(,)?) => {
        $(#[test]
        fn $name() {
            criterion($id);
        })*
    };
}

criteria! {
    criterion_01_algebraic_identities => 1,
    criterion_02_compensation_recursion => 2,
    criterion_03_cross_formula_consistency => 3,
    criterion_04_closed_value_phi2_p0 => 4,
    criterion_05_pole_criterion => 5,
    criterion_06_harmonicity => 6,
    criterion_07_truncated_boundary_conditions => 7,
    criterion_08_green_dual_oracle => 8,
    criterion_09_decay_rate_fits => 9,
    criterion_10_boundary_density_identity => 10,
    criterion_11_mean_value_property => 11,
    criterion_12_martin_kernel_scan => 12,
    criterion_13_convergence_exponent => 13,
    criterion_14_general_case_reduction => 14,
}
