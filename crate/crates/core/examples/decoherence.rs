//! Reduced qubit states after the interaction: Bloch-vector shrinkage for
//! single modes and for an equal superposition of the two lowest modes.

use std::f64::consts::FRAC_1_SQRT_2;

use condmeas::detector::{decoherence_kernel, DetectorGrid, DetectorState};
use condmeas::hilbert::{SystemOperator, SystemState};
use condmeas::weakvalue::{hg_closed_forms, reduced_state, superposition_reduced_state};
use condmeas::C64;

fn main() -> condmeas::Result<()> {
    let rho = SystemState::from_bloch([FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2])?;
    let z = SystemOperator::pauli_z();
    let id = SystemOperator::identity(2);
    let sigma = 1.0;
    let coeffs = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)];

    println!("{:>5} {:>10} {:>10} {:>10} {:>22}", "g/σ", "r₁ (m=0)", "r₁ (m=1)", "r₁ (m=2)", "r₁, r₂ (h₀+h₁)/√2");
    for step in 0..=10 {
        let g = 0.4 * step as f64 * sigma;
        let r1: Vec<f64> = (0..=2)
            .map(|m| hg_closed_forms(&rho, &z, g, sigma, m, &id, 1.0).map(|h| h.reduced.bloch().unwrap()[0]))
            .collect::<condmeas::Result<_>>()?;
        let sup = superposition_reduced_state(&rho, &z, g, sigma, &coeffs)?.bloch().unwrap();
        println!(
            "{:>5.1} {:>10.6} {:>10.6} {:>10.6} {:>10.6}, {:>10.6}",
            g / sigma,
            r1[0],
            r1[1],
            r1[2],
            sup[0],
            sup[1]
        );
    }

    // The same map from a tabulated decoherence kernel of a sampled pointer.
    let g = 1.2;
    let grid = DetectorGrid::for_coupling(2048, sigma, g, 1.0, 1.0)?;
    let pointer = DetectorState::superposition(&grid, sigma, coeffs.to_vec())?;
    let kernel = decoherence_kernel(&pointer)?;
    let from_kernel = reduced_state(&rho, &z, g, &kernel)?;
    let closed = superposition_reduced_state(&rho, &z, g, sigma, &coeffs)?;
    println!("\ng = {g}: kernel {:?}\n        closed {:?}", from_kernel.bloch().unwrap(), closed.bloch().unwrap());
    Ok(())
}
