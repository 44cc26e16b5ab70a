//! Monte Carlo oracle: occupation density, harmonicity and arc mean value.

use drbm::compensation::Harmonic;
use drbm::greens::{Greens, QuadratureSpec};
use drbm::model::NormalizedModel;
use drbm::montecarlo::{
    check_harmonic, estimate_green_box, hitting_distribution_arc, Dynamics, McConfig, Rect, Simulator,
};
use std::f64::consts::FRAC_PI_3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = NormalizedModel::new(0.5, 0.5, 0.5)?;
    let sim = Simulator::new(Dynamics::normalized(&m), McConfig::new(20_000, 1e-3, 40.0, 7))?;
    let z0 = (1.0, 1.0);

    let rect = Rect::centered((3.0, 2.0), 0.5);
    let box_mean = estimate_green_box(&sim, z0, rect)?.scaled(1.0 / rect.area());
    let g = Greens::new(m).green_numeric(z0, 3.0, 2.0, &QuadratureSpec::auto(&m, z0, 3.0, 2.0)?)?;
    println!("box density {:.5} +- {:.5}, contour g(3, 2) = {:.5}", box_mean.mean, box_mean.std_error, g.value);

    let h = Harmonic::new(m);
    let f = |z: (f64, f64)| h.h_alpha(z, FRAC_PI_3).map_or(f64::NAN, |e| e.value);
    let ratio = check_harmonic(&sim, &f, z0, 1.0)?;
    println!("E h(Z_1) / h(z0) = {:.5} +- {:.5}", ratio.mean, ratio.std_error);

    let start = (0.3, 0.4);
    let arc = hitting_distribution_arc(&sim, start)?.average(f)?;
    println!("arc mean of h = {:.5} +- {:.5}, h(z0) = {:.5}", arc.mean, arc.std_error, f(start));
    Ok(())
}
