//! Noise correlations Δ(q) of valence-bond states with uniform pair length
//! on the momentum grid q = 2πk/(2Na). The exact finite-chain sum equals the
//! closed form (1 + cos(qal))/(4N) shifted down by a uniform 1/(2N).

use std::f64::consts::PI;

use superlattice::model::{BondLabel, LatticeSpec};
use superlattice::observables::uniform_q_grid;
use superlattice::vbs::{self, VbsState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_sites = 24;
    let lattice = LatticeSpec::finite(n_sites)?;
    let q = uniform_q_grid(n_sites, 1.0);
    for l in [1usize, 3] {
        let mut pairs = Vec::new();
        for block in (0..n_sites).step_by(2 * l) {
            for k in 0..l {
                pairs.push((block + k, block + k + l, BondLabel::TripletZ));
            }
        }
        let state = VbsState::new(&lattice, &pairs)?;
        let delta = vbs::vbs_noise_profile(&state, &q, 1.0);
        println!("pair length {l}");
        for (qk, d) in q.iter().zip(&delta).take(n_sites / 2 + 1) {
            let closed = (1.0 + (qk * l as f64).cos()) / (2.0 * n_sites as f64);
            println!("  qa/π {:5.3}  Δ {:+.5}  closed form {:+.5}  shift {:+.5}", qk / PI, d, closed, d - closed);
        }
    }
    Ok(())
}
