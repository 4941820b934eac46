//! Noise correlations deep in the Mott regime,
//!
//! ```text
//! G(q) = 1/(2N²) Σ_{i≠j} e^{iqa(i-j)} (1/4 + ⟨S_i·S_j⟩) = δ_{q,0}/2 + Δ(q).
//! ```
//!
//! On the grid `q = 2πk/(2Na)` the `1/4` term contributes `-1/(4N)` to `Δ`
//! for every `k`. For a uniform valence-bond state of length `l` the exact sum
//! is therefore `Δ(q) = (cos(qal) - 1)/(4N)`, which is the familiar
//! `(1 + cos(qal))/(4N)` shifted by the constant `-1/(2N)`.
//!
//! The infinite chain reports the size-independent `N·Δ(q)`,
//!
//! ```text
//! N·Δ(q) = -1/4 + 2·avg_{i ∈ cell} Σ_{d ≥ 1} cos(qad) ⟨S_i·S_{i+d}⟩,
//! ```
//!
//! which is the `N → ∞` limit of the finite expression on its grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::correlations::PairTable;
use super::{ObservableResult, StateQuery};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseOptions {
    /// Largest pair distance summed on the infinite chain.
    pub max_distance: usize,
}

impl Default for NoiseOptions {
    fn default() -> Self {
        Self { max_distance: 48 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    pub q: Vec<f64>,
    /// Full `G(q)`; absent for the infinite chain where it is a δ-peak plus
    /// `Δ`.
    pub g: Option<Vec<f64>>,
    /// `Δ(q)` on finite chains, `N·Δ(q)` on the infinite chain.
    pub delta: Vec<f64>,
    /// `true` when `delta` holds `N·Δ(q)`.
    pub scaled_per_well: bool,
}

/// `q_k = 2πk/(n·a)` for `k = 0..n`.
pub fn uniform_q_grid(num_points: usize, spacing: f64) -> Vec<f64> {
    (0..num_points).map(|k| 2.0 * PI * k as f64 / (num_points as f64 * spacing)).collect()
}

/// Whether `qa` sits on a reciprocal lattice vector.
pub(crate) fn is_bragg_point(q: f64, spacing: f64) -> bool {
    let x = (q * spacing / (2.0 * PI)).rem_euclid(1.0);
    x < 1e-9 || x > 1.0 - 1e-9
}

pub fn noise_correlations<Q: StateQuery + ?Sized>(
    state: &Q,
    q_grid: &[f64],
    spacing: f64,
    options: NoiseOptions,
) -> ObservableResult<NoiseSpectrum> {
    let reach = state.num_sites().map_or(options.max_distance, |n| n.saturating_sub(1));
    let table = PairTable::build(state, reach)?;
    Ok(noise_from_table(&table, q_grid, spacing))
}

pub(crate) fn noise_from_table(table: &PairTable, q_grid: &[f64], spacing: f64) -> NoiseSpectrum {
    match table.num_sites {
        Some(num_sites) => {
            let n_wells = num_sites as f64 / 2.0;
            let prefactor = 1.0 / (2.0 * n_wells * n_wells);
            let mut g = Vec::with_capacity(q_grid.len());
            let mut delta = Vec::with_capacity(q_grid.len());
            for &q in q_grid {
                let (mut re, mut im) = (0.0, 0.0);
                for i in 0..num_sites {
                    let phase = q * spacing * i as f64;
                    re += phase.cos();
                    im += phase.sin();
                }
                let background = 0.25 * (re * re + im * im - num_sites as f64);
                let correlated: f64 = table
                    .rows
                    .iter()
                    .flat_map(|row| row.iter().enumerate())
                    .map(|(d, &(sd, _))| 2.0 * (q * spacing * (d + 1) as f64).cos() * sd)
                    .sum();
                let gq = prefactor * (background + correlated);
                g.push(gq);
                delta.push(if is_bragg_point(q, spacing) { gq - 0.5 } else { gq });
            }
            NoiseSpectrum { q: q_grid.to_vec(), g: Some(g), delta, scaled_per_well: false }
        }
        None => {
            let cells = table.rows.len() as f64;
            let delta = q_grid
                .iter()
                .map(|&q| {
                    let s: f64 = table
                        .rows
                        .iter()
                        .flat_map(|row| row.iter().enumerate())
                        .map(|(d, &(sd, _))| (q * spacing * (d + 1) as f64).cos() * sd)
                        .sum();
                    -0.25 + 2.0 * s / cells
                })
                .collect();
            NoiseSpectrum { q: q_grid.to_vec(), g: None, delta, scaled_per_well: true }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bragg_points() {
        assert!(is_bragg_point(0.0, 1.0));
        assert!(is_bragg_point(2.0 * PI, 1.0));
        assert!(is_bragg_point(PI, 2.0));
        assert!(!is_bragg_point(PI, 1.0));
    }

    #[test]
    fn grid_spacing() {
        let g = uniform_q_grid(4, 1.0);
        assert_eq!(g.len(), 4);
        assert!((g[2] - PI).abs() < 1e-15);
    }
}
