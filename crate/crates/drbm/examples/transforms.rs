//! Boundary Laplace transforms by compensation series on the valid window.

use drbm::compensation::{valid_window, Transforms};
use drbm::model::NormalizedModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = NormalizedModel::new(0.5, 0.0, 0.0)?;
    let tr = Transforms::new(m, (1.0, 1.0));
    let (lo, hi) = valid_window(&m);
    println!("valid window ({lo:.4}, {hi:.4})");
    for k in 1..=5 {
        let s = lo + (hi - lo) * k as f64 / 6.0;
        let f2 = tr.phi2_series(s)?;
        let f1 = tr.phi1_series(s)?;
        println!(
            "s = {s:+.4}  x = {:+.6}  phi2 = {:.12} ({} terms)  phi1 = {:.12} ({} terms)",
            m.x_of_s(s),
            f2.re(),
            f2.n_terms,
            f1.re(),
            f1.n_terms
        );
    }
    let at_zero = tr.phi2_series(0.0)?.re();
    println!("phi2(0) = {at_zero:.15}, e^-1 = {:.15}", (-1.0f64).exp());
    Ok(())
}
