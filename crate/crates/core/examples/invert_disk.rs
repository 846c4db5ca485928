//! Runs the ε-continuation for a disk target and prints the stage trace and
//! how the optimized mask prints compared with using the target itself.

use phaselitho::fields::ScalarField;
use phaselitho::geometry::Shape;
use phaselitho::imaging::{Imager, OpticsConfig, PsfModel};
use phaselitho::optimize::{gamma_sweep, Objective, ObjectiveConfig};

fn main() -> phaselitho::Result<()> {
    let n = 64;
    let grid = ScalarField::centered(n, 2.0 / n as f64)?;
    let imager = Imager::new(&OpticsConfig::with_scale(1.0, PsfModel::default()), &grid)?;
    let target = Shape::disk(0.0, 0.0, 0.4).pattern(&grid);
    let mut cfg = ObjectiveConfig::default();
    cfg.step.max_iterations = 300;
    let obj = Objective::new(&imager, &target, &cfg)?;
    let trace = gamma_sweep(&obj)?;
    print!("{}", trace.to_csv());
    println!("F0 of the result: {}", trace.f_zero);
    println!("printed vs target   {}", trace.final_report.csv_row());
    println!("target used as mask {}", trace.identity_report.csv_row());
    if trace.stalled {
        println!("line search stalled in at least one stage");
    }
    Ok(())
}
