//! Reduces a raw model to normalized form and prints its critical data.

use drbm::model::{normalize, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = ModelParams::new(2.0, 1.0, 0.4, 1.6, 0.0, 1.0);
    let (m, map) = normalize(&raw)?;
    println!("normalized: mu = ({:.6}, {:.6}), r = ({:.6}, {:.6})", m.mu1, m.mu2, m.r1, m.r2);
    println!("map: lambda = {:.6}, scale = ({:.6}, {:.6})", map.lambda, map.scale_x, map.scale_y);
    let cd = m.critical_points();
    println!("s* = {:.6}, x* = {:.6}, y* = {:.6}, pole in phi2: {}", cd.s_star, cd.x_star, cd.y_star, cd.pole_phi2);
    println!("alpha* = {:.6}, alpha_mu = {:.6}, alpha** = {:.6}", cd.alpha_star, cd.alpha_mu, cd.alpha_star2);
    for s in [-0.5, 0.0, 0.5] {
        let p = m.parabola(s);
        println!(
            "parabola s = {s:+.1}: (x, y) = ({:.6}, {:.6}), |gamma| = {:.1e}",
            p.x,
            p.y,
            m.gamma(p.x.into(), p.y.into()).norm()
        );
    }
    Ok(())
}
