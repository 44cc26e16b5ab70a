//! Martin harmonic functions h_alpha across all cases of the angle.

use drbm::compensation::Harmonic;
use drbm::model::NormalizedModel;
use std::f64::consts::FRAC_PI_2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = NormalizedModel::new(0.2, 0.0, 2.0)?;
    let cd = m.critical_points();
    let h = Harmonic::new(m);
    let z0 = (1.0, 1.0);
    let mid = 0.5 * (cd.alpha_star + cd.alpha_star2);
    for alpha in [cd.alpha_star, 0.5 * (cd.alpha_star + mid), mid, cd.alpha_mu, FRAC_PI_2] {
        let ev = h.h_alpha(z0, alpha)?;
        println!(
            "alpha = {alpha:.6}  h = {:.12}  case = {}  terms = {}",
            ev.value,
            ev.case_tag.as_str(),
            ev.series.n_terms
        );
    }
    Ok(())
}
