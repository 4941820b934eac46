//! One purification step on Werner pairs using the CNOT compiled from the
//! Ising interaction, iterated from F = 0.75.

use superlattice::purification::{compiled_cnot, purification_step, PairDensityMatrix};
use superlattice::spin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cnot = ndarray::Array2::zeros((4, 4));
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        cnot[(r, c)] = num_complex::Complex64::new(1.0, 0.0);
    }
    println!("compiled gate vs CNOT (up to phase): {:.1e}", spin::phase_insensitive_distance(&compiled_cnot(), &cnot));

    let mut pair = PairDensityMatrix::werner(0.75);
    for round in 1..=5 {
        let out = purification_step(&pair, &pair)?;
        println!(
            "round {round}: F {:.6} -> {:.6}, success probability {:.4}",
            pair.fidelity(),
            out.purified.fidelity(),
            out.success_probability
        );
        // re-twirl to a Werner pair, as the recurrence protocol does between rounds
        pair = PairDensityMatrix::werner(out.purified.fidelity());
    }
    Ok(())
}
