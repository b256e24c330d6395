//! A generalized weak value outside the eigenvalue range of the observable.

use std::f64::consts::PI;

use nalgebra::DVector;

use condmeas::hilbert::{SystemOperator, SystemState};
use condmeas::weakvalue::{generalized_weak_value, real_projector};
use condmeas::C64;

fn main() -> condmeas::Result<()> {
    let t = 7.0 * PI / 8.0;
    let rho = SystemState::pure(&DVector::from_vec(vec![C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)]))?;
    let post = real_projector(&[1.0, 1.0])?;
    let z = SystemOperator::pauli_z();

    let wv = generalized_weak_value(&post, &z, &rho)?;
    println!("Tr[P_f ρ]      = {:.6}", wv.denominator);
    println!("⟨σ₃⟩^w         = {:.6} (eigenvalues are ±1)", wv.value);

    let expectation = generalized_weak_value(&SystemOperator::identity(2), &z, &rho)?;
    println!("⟨σ₃⟩ (P_f = 1) = {:.6}", expectation.value.re);
    Ok(())
}
