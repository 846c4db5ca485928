//! Builds the smoothed point-spread function for a few target deviations and
//! reports what the search settled on.

use phaselitho::kernels::{build_smoothed_psf, PsfSearch};

fn main() -> phaselitho::Result<()> {
    let search = PsfSearch::default();
    println!("{:>8} {:>10} {:>8} {:>12} {:>10}", "delta", "s0", "b", "deviation", "l1");
    for delta in [0.2, 0.1, 0.05] {
        let psf = build_smoothed_psf(delta, &search)?;
        println!(
            "{delta:>8} {:>10.6} {:>8} {:>12.6} {:>10.6}",
            psf.s0(),
            psf.b(),
            psf.deviation(),
            psf.l1_norm()
        );
    }
    Ok(())
}
