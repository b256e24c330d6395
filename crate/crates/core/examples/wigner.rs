//! Hermite-Gauss Wigner functions: closed form against the grid transform,
//! printed along the position axis.

use condmeas::detector::{hg_wavefunction, hg_wigner_closed, wigner_rows, DetectorGrid};

fn main() -> condmeas::Result<()> {
    let sigma = 1.0;
    let grid = DetectorGrid::symmetric(512, 16.0, 1.0)?;
    let rows: Vec<usize> = (224..=288).step_by(8).collect();
    for mode in 0..=3 {
        let state = hg_wavefunction(mode, sigma, &grid)?;
        let table = wigner_rows(&state, &rows)?;
        let p0 = table.ps.iter().position(|&p| p == 0.0).expect("p = 0 column");
        println!("m = {mode}: W(x, 0)");
        for (r, &x) in table.xs.iter().enumerate() {
            let closed = hg_wigner_closed(mode, sigma, 1.0, x, 0.0);
            println!("  x = {x:>6.2}  grid {:>+.10}  closed {closed:>+.10}", table.at(r, p0));
        }
    }
    Ok(())
}
