//! Martin kernel limits K(z0, alpha) = h_alpha(z0) / h_alpha(0).

use drbm::greens::Greens;
use drbm::model::NormalizedModel;
use std::f64::consts::FRAC_PI_2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = NormalizedModel::new(0.2, 0.0, 2.0)?;
    let gr = Greens::new(m);
    for k in 0..=8 {
        let alpha = FRAC_PI_2 * k as f64 / 8.0;
        println!("alpha = {alpha:.4}  K = {:.10}", gr.martin_kernel_limit((1.0, 1.0), alpha)?);
    }
    Ok(())
}
