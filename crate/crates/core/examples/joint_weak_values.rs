//! Conditioned pointer moments assembled from joint weak values, for an
//! arbitrary (non-Gaussian) detector wavefunction.

use condmeas::detector::{DetectorGrid, DetectorState};
use condmeas::hilbert::{SystemOperator, SystemState};
use condmeas::vonneumann::{conditioned_averages_grid, CouplingConfig};
use condmeas::weakvalue::{conditioned_averages_from_weak_values, joint_weak_values, real_projector};
use condmeas::C64;

fn main() -> condmeas::Result<()> {
    let rho = SystemState::from_bloch([0.1, 0.7, -0.4])?;
    let post = real_projector(&[1.0, -0.5])?;
    let g = 0.8;
    let cfg = CouplingConfig::new(g, SystemOperator::pauli_z())?;

    // A skewed, chirped pointer: no closed form applies.
    let grid = DetectorGrid::symmetric(4096, 30.0, 1.0)?;
    let samples: Vec<C64> = grid
        .positions()
        .iter()
        .map(|&x| C64::from_polar((-(x - 0.3).powi(2) / 2.0).exp() * (1.0 + 0.4 * x.tanh()), 0.2 * x * x))
        .collect();
    let norm = (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
    let samples = samples.into_iter().map(|z| z / norm).collect();
    let detector = DetectorState::wavefunction(&grid, samples)?;

    let jwv = joint_weak_values(&rho, &detector, &cfg, &post)?;
    println!("⟨A⟩^w = {:.6}  x_w = {:.6}  p_w = {:.6}", jwv.a_w, jwv.x_w, jwv.p_w);
    println!("x²_w = {:.6}  (Ax)_w = {:.6}  A²_w = {:.6}  p²_w = {:.6}", jwv.x2_w, jwv.ax_w, jwv.a2_w, jwv.p2_w);

    let assembled = conditioned_averages_from_weak_values(&jwv, g);
    let sim = conditioned_averages_grid(&rho, &detector, &cfg, &post, 2)?;
    for (name, a, b) in [
        ("f⟨x⟩ ", assembled.mean_x, sim.mean_x),
        ("f⟨p⟩ ", assembled.mean_p, sim.mean_p),
        ("f⟨x²⟩", assembled.moments_x[1], sim.moments_x[1]),
        ("f⟨p²⟩", assembled.moments_p[1], sim.moments_p[1]),
    ] {
        println!("{name} weak values {a:.12}  grid {b:.12}");
    }
    Ok(())
}
