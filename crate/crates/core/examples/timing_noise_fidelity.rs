//! Monte-Carlo fidelity of the periodic switch when each switching interval
//! is jittered by Gaussian noise, next to the first-order estimate.

use superlattice::vbs::fidelity_under_timing_noise;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>3} {:>6} {:>10} {:>10} {:>9}", "n", "δt", "MC mean", "estimate", "stderr");
    for n in 1..=3 {
        for dt in [0.05, 0.1] {
            let f = fidelity_under_timing_noise(n, 4, dt, 200, 42)?;
            println!("{n:3} {dt:6.2} {:10.6} {:10.6} {:9.2e}", f.mean, f.analytic, f.stderr);
        }
    }
    Ok(())
}
