//! Closed-form conditioned pointer averages for Hermite-Gauss detector modes,
//! tracing the weak-to-strong transition.

use std::f64::consts::PI;

use nalgebra::DVector;

use condmeas::hilbert::{SystemOperator, SystemState};
use condmeas::weakvalue::{hg_closed_forms, real_projector};
use condmeas::C64;

fn main() -> condmeas::Result<()> {
    let t = 7.0 * PI / 8.0;
    let rho = SystemState::pure(&DVector::from_vec(vec![C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)]))?;
    let post = real_projector(&[1.0, 1.0])?;
    let z = SystemOperator::pauli_z();
    let sigma = 2.0;

    println!("{:>8} {:>4} {:>10} {:>12} {:>12}", "g/σ", "m", "prob_f", "f⟨x⟩/g", "Δ_m");
    for &ratio in &[1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
        for mode in 0..=2 {
            let g = ratio * sigma;
            let hg = hg_closed_forms(&rho, &z, g, sigma, mode, &post, 1.0)?;
            println!(
                "{ratio:>8} {mode:>4} {:>10.6} {:>12.6} {:>12.6}",
                hg.prob_f,
                hg.mean_x / g,
                hg.delta.re
            );
        }
    }
    Ok(())
}
