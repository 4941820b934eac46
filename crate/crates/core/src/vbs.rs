//! Valence-bond states under swap layers, closed-form single-switch
//! populations, switching-noise fidelity and spin transport.
//!
//! Evolving a bond for `t_s = π/|J|` swaps its two spins up to a global
//! phase, so a periodic switch maps valence-bond states to valence-bond
//! states. The tracker relabels sites through each layer and drops phases.
//! Sites not covered by a bond of the active parity (the chain ends during
//! odd layers) stay put, which is what reflects bonds at the boundaries.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ed::{self, EdError, KrylovOptions};
use crate::model::{
    self, BondLabel, BondParity, CouplingSchedule, Geometry, InitialStateSpec, LatticeSpec, ModelError,
};
use crate::observables::{self, NoiseOptions, ObservableError, ObservableResult, StateQuery, TwoSiteRdm};
use crate::spin::{self, BondState};

#[derive(Debug, Error)]
pub enum VbsError {
    #[error("valence-bond tracking needs a finite chain")]
    InfiniteLattice,
    #[error("initial state is not a valence-bond state")]
    NotValenceBond,
    #[error("{0} sites exceed the exact engine used for sampling")]
    TooLarge(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ed(#[from] EdError),
}

pub type VbsResult<T> = Result<T, VbsError>;

/// Image of `site` under one swap layer. Works on the infinite chain
/// (`num_sites = None`) with signed site labels.
pub fn swap_partner(parity: BondParity, site: i64, num_sites: Option<usize>) -> i64 {
    let image = match parity {
        BondParity::Even => site ^ 1,
        BondParity::Odd => {
            if site.rem_euclid(2) == 1 {
                site + 1
            } else {
                site - 1
            }
        }
    };
    match num_sites {
        Some(n) if image < 0 || image >= n as i64 => site,
        _ => image,
    }
}

/// Parity of the `n`-th layer (1-based) of a periodic switch: the sequence
/// starts with the inter-well coupling on.
pub fn layer_parity(n: usize) -> BondParity {
    if n % 2 == 1 {
        BondParity::Odd
    } else {
        BondParity::Even
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VbsState {
    num_sites: usize,
    partner: Vec<usize>,
    /// Label of the bond through each site (equal on both ends).
    label: Vec<BondLabel>,
}

impl VbsState {
    pub fn new(lattice: &LatticeSpec, pairs: &[(usize, usize, BondLabel)]) -> VbsResult<Self> {
        let n = lattice.num_sites().ok_or(VbsError::InfiniteLattice)?;
        let bonds: Vec<(usize, usize)> = pairs.iter().map(|p| (p.0, p.1)).collect();
        model::check_perfect_matching(&bonds, n)?;
        let mut partner = vec![0; n];
        let mut label = vec![BondLabel::TripletZ; n];
        for &(a, b, l) in pairs {
            partner[a] = b;
            partner[b] = a;
            label[a] = l;
            label[b] = l;
        }
        Ok(Self { num_sites: n, partner, label })
    }

    pub fn from_spec(spec: &InitialStateSpec, lattice: &LatticeSpec) -> VbsResult<Self> {
        let n = lattice.num_sites().ok_or(VbsError::InfiniteLattice)?;
        spec.validate(lattice)?;
        let pairs = spec.pairs(n).ok_or(VbsError::NotValenceBond)?;
        Self::new(lattice, &pairs)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec::finite(self.num_sites).expect("validated on construction")
    }

    pub fn partner(&self, site: usize) -> usize {
        self.partner[site]
    }

    /// Sorted pair list `(lower, higher, label)`.
    pub fn bonds(&self) -> Vec<(usize, usize, BondLabel)> {
        (0..self.num_sites).filter(|&a| a < self.partner[a]).map(|a| (a, self.partner[a], self.label[a])).collect()
    }

    /// Matching only, without labels.
    pub fn matching(&self) -> Vec<(usize, usize)> {
        self.bonds().into_iter().map(|(a, b, _)| (a, b)).collect()
    }

    pub fn bond_lengths(&self) -> Vec<usize> {
        self.bonds().into_iter().map(|(a, b, _)| b - a).collect()
    }

    /// The state as an exact vector (global phase dropped).
    pub fn to_state_vector(&self) -> VbsResult<ed::StateVector> {
        Ok(ed::valence_bond_state(&self.lattice(), &self.bonds())?)
    }
}

/// Swaps the spins of every bond of `parity`.
pub fn apply_switch_layer(state: &VbsState, parity: BondParity) -> VbsState {
    let n = state.num_sites;
    let image = |s: usize| swap_partner(parity, s as i64, Some(n)) as usize;
    let mut partner = vec![0; n];
    let mut label = vec![BondLabel::TripletZ; n];
    for s in 0..n {
        partner[image(s)] = image(state.partner[s]);
        label[image(s)] = state.label[s];
    }
    VbsState { num_sites: n, partner, label }
}

/// State after the first `n` layers of a periodic switch.
pub fn apply_switches(state: &VbsState, n: usize) -> VbsState {
    (1..=n).fold(state.clone(), |s, k| apply_switch_layer(&s, layer_parity(k)))
}

/// Number of bonds crossing the cut between sites `cut - 1` and `cut`,
/// which is the entanglement entropy in bits.
pub fn vbs_cut_entropy(state: &VbsState, cut: usize) -> usize {
    (0..cut.min(state.num_sites)).filter(|&a| state.partner[a] >= cut).count()
}

impl StateQuery for VbsState {
    fn num_sites(&self) -> Option<usize> {
        Some(self.num_sites)
    }

    /// Bond projector for paired sites, `1/4` otherwise.
    fn two_site_rdm(&self, i: usize, j: usize) -> ObservableResult<TwoSiteRdm> {
        if i == j || i >= self.num_sites || j >= self.num_sites {
            return Err(ObservableError::SitesOutOfRange(i, j));
        }
        let m: Array2<_> = if self.partner[i] == j {
            match self.label[i] {
                BondLabel::TripletZ => BondState::TripletZ.projector(),
                BondLabel::Singlet => BondState::Singlet.projector(),
            }
        } else {
            spin::identity(4).mapv(|x| x * 0.25)
        };
        Ok(TwoSiteRdm::from_matrix_unchecked(m))
    }

    fn cut_entropy(&self, cut: usize) -> ObservableResult<f64> {
        if cut == 0 || cut >= self.num_sites {
            return Err(ObservableError::CutOutOfRange(cut));
        }
        Ok(vbs_cut_entropy(self, cut) as f64)
    }
}

/// Exact `Δ(q)` of a valence-bond state from its pair correlators.
pub fn vbs_noise_profile(state: &VbsState, q_grid: &[f64], spacing: f64) -> Vec<f64> {
    observables::noise_correlations(state, q_grid, spacing, NoiseOptions::default())
        .expect("valence-bond states expose every pair")
        .delta
}

/// Closed-form populations after a single switch at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleSwitchPopulations {
    pub tz_even: f64,
    /// `t^x_even = t^y_even`
    pub txy_even: f64,
    pub s_even: f64,
    /// Every odd-bond population.
    pub odd: f64,
    /// Approximate odd-cut entropy `2(1 - cos⁴(Jt/2))`.
    pub s_odd_approx: f64,
}

pub fn single_switch_observables(t: f64, coupling: f64) -> SingleSwitchPopulations {
    let c4 = (coupling * t / 2.0).cos().powi(4);
    SingleSwitchPopulations {
        tz_even: (1.0 + 3.0 * c4) / 4.0,
        txy_even: (1.0 - c4) / 4.0,
        s_even: (1.0 - c4) / 4.0,
        odd: 0.25,
        s_odd_approx: 2.0 * (1.0 - c4),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    /// `1 - n·N·δt²/4`
    pub analytic: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Fidelity of a periodic switch of `n_switches` layers on `2N` sites when
/// every switching interval is `t_s + δ` with independent `δ ~ N(0, δt²)`.
///
/// Times are in units of `ħ/J` with `J = 1`. Sample `k` draws from its own
/// ChaCha stream `k` of `rng_seed`, so results do not depend on scheduling.
pub fn fidelity_under_timing_noise(
    n_switches: usize,
    num_wells: usize,
    delta_t_std: f64,
    num_samples: usize,
    rng_seed: u64,
) -> VbsResult<FidelityEstimate> {
    let num_sites = 2 * num_wells;
    if num_sites > ed::MAX_SITES {
        return Err(VbsError::TooLarge(num_sites));
    }
    let analytic = 1.0 - n_switches as f64 * num_wells as f64 * delta_t_std * delta_t_std / 4.0;
    if delta_t_std == 0.0 || n_switches == 0 {
        return Ok(FidelityEstimate { analytic, mean: 1.0, stderr: 0.0, samples: num_samples });
    }
    let lattice = LatticeSpec::finite(num_sites)?;
    let initial = ed::encode_product_state(&InitialStateSpec::TripletProduct, &lattice)?;
    let ts = PI;
    let options = KrylovOptions { tol: 1e-12, ..Default::default() };
    let evolve = |intervals: &[f64]| -> VbsResult<ed::StateVector> {
        let schedule = CouplingSchedule::alternating(1.0, intervals)?;
        let mut psi = initial.clone();
        psi.evolve(&schedule, 0.0, schedule.total_time(), &options)?;
        Ok(psi)
    };
    let ideal = evolve(&vec![ts; n_switches])?;
    let normal = Normal::new(0.0, delta_t_std).map_err(|e| ModelError::InvalidSchedule(e.to_string()))?;
    let fidelities = (0..num_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(k as u64);
            let intervals: Vec<f64> = (0..n_switches).map(|_| ts + normal.sample(&mut rng)).collect();
            Ok(ideal.fidelity(&evolve(&intervals)?)?)
        })
        .collect::<VbsResult<Vec<f64>>>()?;
    let m = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / m;
    let var = fidelities.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / (m - 1.0).max(1.0);
    Ok(FidelityEstimate { analytic, mean, stderr: (var / m).sqrt(), samples: num_samples })
}

/// Position of a flipped spin after `n_switches` layers of a periodic switch.
/// Finite chains reflect at the ends.
pub fn transport_site(initial_site: i64, n_switches: usize, lattice: &LatticeSpec) -> i64 {
    let num_sites = match lattice.geometry() {
        Geometry::Finite { num_sites } => Some(num_sites),
        Geometry::Infinite => None,
    };
    (1..=n_switches).fold(initial_site, |s, k| swap_partner(layer_parity(k), s, num_sites))
}
