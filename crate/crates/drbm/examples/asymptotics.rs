//! Directional asymptotics of the Green density across the regimes.

use drbm::greens::Greens;
use drbm::model::NormalizedModel;
use std::f64::consts::FRAC_PI_2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = NormalizedModel::new(0.2, 0.0, 2.0)?;
    let gr = Greens::new(m);
    let cd = m.critical_points();
    for alpha in [0.0, 0.5 * cd.alpha_star, cd.alpha_star, 0.6, 1.2, cd.alpha_mu, FRAC_PI_2] {
        let a = gr.asymptotic_g((1.0, 1.0), alpha)?;
        println!(
            "alpha = {alpha:.4}  {:<22} rho = {:.6}  power = {:+.2}  constant = {:.6}",
            a.regime.as_str(),
            a.decay_rate,
            a.power,
            a.constant
        );
    }
    Ok(())
}
