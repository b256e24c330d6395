//! Building a scenario in code, sweeping the coupling, and printing the CSV
//! that `condmeas sweep` would write.

use condmeas::cli::{sweep_csv, sweep_rows, RunOptions};
use condmeas::scenario::Scenario;

fn main() -> condmeas::Result<()> {
    let mut scenario = Scenario::fig1_preset(9);
    scenario.detector.grid_points = Some(2048);
    println!("{}", scenario.to_toml_string()?);
    let rows = sweep_rows(&scenario, &RunOptions::default())?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
