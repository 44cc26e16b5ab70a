//! Green density by contour inversion, compared with its asymptotics.

use drbm::greens::{Greens, QuadratureSpec};
use drbm::model::NormalizedModel;
use std::f64::consts::FRAC_PI_3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = NormalizedModel::new(0.5, 0.5, 0.5)?;
    let gr = Greens::new(m);
    let z0 = (1.0, 1.0);
    let alpha = FRAC_PI_3;
    let asym = gr.asymptotic_g(z0, alpha)?;
    for r in [4.0, 8.0, 16.0, 32.0] {
        let (a, b) = (r * alpha.cos(), r * alpha.sin());
        let spec = QuadratureSpec::auto(&m, z0, a, b)?;
        let g = gr.green_numeric(z0, a, b, &spec)?;
        println!(
            "r = {r:>4}  g = {:.6e} (err {:.1e})  asymptotic = {:.6e}  ratio = {:.6}",
            g.value,
            g.error,
            asym.value_at(r),
            g.value / asym.value_at(r)
        );
    }
    Ok(())
}
