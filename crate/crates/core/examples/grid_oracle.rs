//! Brute-force simulation of the impulsive coupling on a position grid,
//! compared against the closed forms.

use condmeas::detector::{DetectorGrid, DetectorState};
use condmeas::hilbert::{SystemOperator, SystemState};
use condmeas::vonneumann::{conditioned_averages_grid, CouplingConfig};
use condmeas::weakvalue::{hg_closed_forms, real_projector, second_moment_closed_form};

fn main() -> condmeas::Result<()> {
    let rho = SystemState::from_bloch([0.6, -0.3, 0.2])?;
    let post = real_projector(&[0.8, 0.6])?;
    let a = SystemOperator::pauli_x();
    let (sigma, g, mode) = (1.0, 1.5, 2);

    let cfg = CouplingConfig::new(g, a.clone())?;
    let grid = DetectorGrid::for_coupling(4096, sigma, g, cfg.max_shift(), 1.0)?;
    let detector = DetectorState::hermite_gauss(&grid, sigma, mode)?;
    let sim = conditioned_averages_grid(&rho, &detector, &cfg, &post, 4)?;

    let hg = hg_closed_forms(&rho, &a, g, sigma, mode, &post, 1.0)?;
    let (x2, p2) = second_moment_closed_form(&rho, &a, g, sigma, mode, &post, 1.0)?;

    println!("prob_f   grid {:.12}  closed {:.12}", sim.prob_f, hg.prob_f);
    println!("f⟨x⟩     grid {:.12}  closed {:.12}", sim.mean_x, hg.mean_x);
    println!("f⟨p⟩     grid {:.12}  closed {:.12}", sim.mean_p, hg.mean_p);
    println!("f⟨x²⟩    grid {:.12}  closed {:.12}", sim.moments_x[1], x2);
    println!("f⟨p²⟩    grid {:.12}  closed {:.12}", sim.moments_p[1], p2);
    println!("f⟨x³⟩, f⟨x⁴⟩ (grid only): {:.6}, {:.6}", sim.moments_x[2], sim.moments_x[3]);
    Ok(())
}
