//! Engine-agnostic measurements.
//!
//! Every engine exposes its state through [`StateQuery`]: two-site reduced
//! density matrices and bipartition entropies. All observables in this module
//! are built from those two primitives only, so the same code measures exact
//! state vectors, matrix-product states and valence-bond states.

mod analysis;
mod correlations;
mod noise;
mod series;

pub use analysis::{
    crossover_time, horizon_front, locate_peak, max_abs_deviation, quasistationary_average, FrontAnalysis,
};
pub use correlations::{transverse_correlations, TransverseCorrelation};
pub use noise::{noise_correlations, uniform_q_grid, NoiseOptions, NoiseSpectrum};
pub use series::{ObservableSeries, SeriesMetadata, TrustFlag, SERIES_SCHEMA_VERSION};

pub(crate) use correlations::{transverse_from_table, PairTable};
pub(crate) use noise::noise_from_table;

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::BondParity;
use crate::spin::{self, BondState};

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("site pair ({0}, {1}) is out of range or degenerate")]
    SitesOutOfRange(usize, usize),
    #[error("cut position {0} is out of range")]
    CutOutOfRange(usize),
    #[error("operation not supported by this state: {0}")]
    Unsupported(String),
    #[error("channel `{0}` is missing from the series")]
    MissingChannel(String),
    #[error("time window [{0}, {1}] is not inside the series support")]
    WindowOutsideSeries(f64, f64),
    #[error("series is malformed: {0}")]
    MalformedSeries(String),
    #[error("invalid reduced density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type ObservableResult<T> = Result<T, ObservableError>;

/// Uniform access to a many-body state for measurements.
///
/// Finite chains index sites `0..num_sites`. Infinite chains accept any site
/// index and repeat with the two-site unit cell.
pub trait StateQuery {
    /// `Some(2N)` for finite chains, `None` for the infinite chain.
    fn num_sites(&self) -> Option<usize>;

    fn two_site_rdm(&self, i: usize, j: usize) -> ObservableResult<TwoSiteRdm>;

    /// Reduced density matrices of `(i, i+1), ..., (i, i+max_distance)`.
    /// Engines override this when a sweep is cheaper than independent calls.
    fn rdm_row(&self, i: usize, max_distance: usize) -> ObservableResult<Vec<TwoSiteRdm>> {
        (1..=max_distance).map(|d| self.two_site_rdm(i, i + d)).collect()
    }

    /// `(⟨S_i·S_{i+d}⟩, ⟨S^+_i S^-_{i+d}⟩)` for `d = 1..=max_distance`.
    fn correlation_row(&self, i: usize, max_distance: usize) -> ObservableResult<Vec<(f64, C64)>> {
        Ok(self.rdm_row(i, max_distance)?.iter().map(|r| (r.spin_dot(), r.raise_lower())).collect())
    }

    /// Entanglement entropy (bits) of the bipartition between sites `cut - 1`
    /// and `cut`. On finite chains this is the entropy of the edge block of
    /// `cut` sites.
    fn cut_entropy(&self, cut: usize) -> ObservableResult<f64>;
}

/// A 4×4 two-site density matrix in the basis `(↑↑, ↑↓, ↓↑, ↓↓)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSiteRdm {
    matrix: Array2<C64>,
}

impl TwoSiteRdm {
    /// Wraps a matrix produced by an engine without checking it.
    pub(crate) fn from_matrix_unchecked(matrix: Array2<C64>) -> Self {
        debug_assert_eq!(matrix.dim(), (4, 4));
        Self { matrix }
    }

    /// Checked constructor: Hermitian, unit trace and PSD within `1e-10`.
    pub fn new(matrix: Array2<C64>) -> ObservableResult<Self> {
        let rdm = Self { matrix };
        rdm.validate(1e-10)?;
        Ok(rdm)
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn validate(&self, tol: f64) -> ObservableResult<()> {
        if self.matrix.dim() != (4, 4) {
            return Err(ObservableError::InvalidDensityMatrix("not 4x4".into()));
        }
        let herm = self
            .matrix
            .indexed_iter()
            .map(|((i, j), x)| (x - self.matrix[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if herm > tol {
            return Err(ObservableError::InvalidDensityMatrix(format!("hermiticity violated by {herm:e}")));
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > tol {
            return Err(ObservableError::InvalidDensityMatrix(format!("trace is {trace}")));
        }
        let min_eig = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -tol {
            return Err(ObservableError::InvalidDensityMatrix(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|k| self.matrix[(k, k)].re).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let (vals, _) = self.matrix.eigh(UPLO::Lower).expect("4x4 Hermitian eigendecomposition");
        vals.to_vec()
    }

    /// `Tr(ρ O)`
    pub fn expectation(&self, op: &Array2<C64>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..4 {
            for b in 0..4 {
                acc += self.matrix[(a, b)] * op[(b, a)];
            }
        }
        acc
    }

    /// `⟨b|ρ|b⟩` for a bond state `b`.
    pub fn population(&self, state: BondState) -> f64 {
        let v = state.vector();
        let rv = self.matrix.dot(&v);
        v.iter().zip(rv.iter()).map(|(x, y)| x.conj() * y).sum::<C64>().re
    }

    /// `⟨S_i·S_j⟩`
    pub fn spin_dot(&self) -> f64 {
        let m = &self.matrix;
        0.25 * (m[(0, 0)].re - m[(1, 1)].re - m[(2, 2)].re + m[(3, 3)].re) + m[(1, 2)].re
    }

    /// `⟨S^+_i S^-_j⟩`
    pub fn raise_lower(&self) -> C64 {
        self.matrix[(2, 1)]
    }

    /// Entropy (bits) of the two-site state itself.
    pub fn entropy(&self) -> f64 {
        spin::entropy_bits(self.eigenvalues())
    }
}

/// Averaged bond populations of one bond parity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondPopulations {
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    pub s: f64,
}

impl BondPopulations {
    pub fn total(&self) -> f64 {
        self.tx + self.ty + self.tz + self.s
    }

    pub fn get(&self, state: BondState) -> f64 {
        match state {
            BondState::TripletX => self.tx,
            BondState::TripletY => self.ty,
            BondState::TripletZ => self.tz,
            BondState::Singlet => self.s,
        }
    }

    fn from_rdm(rdm: &TwoSiteRdm) -> Self {
        Self {
            tx: rdm.population(BondState::TripletX),
            ty: rdm.population(BondState::TripletY),
            tz: rdm.population(BondState::TripletZ),
            s: rdm.population(BondState::Singlet),
        }
    }
}

/// Left sites of the bonds of `parity` that a state exposes: every bond of
/// that parity on a finite chain, or the single unit-cell bond when infinite.
pub fn parity_bond_sites(num_sites: Option<usize>, parity: BondParity) -> Vec<usize> {
    match num_sites {
        Some(n) => parity.bond_sites(n).collect(),
        None => vec![match parity {
            BondParity::Even => 0,
            BondParity::Odd => 1,
        }],
    }
}

/// Singlet/triplet populations averaged over all bonds of one parity.
pub fn bond_populations<Q: StateQuery + ?Sized>(state: &Q, parity: BondParity) -> ObservableResult<BondPopulations> {
    average_populations(state, parity, &parity_bond_sites(state.num_sites(), parity))
}

/// Like [`bond_populations`] but skipping bonds that touch a chain end. On
/// an open chain the end bonds see only one neighbouring bond, so this is
/// the average that follows bulk (infinite-chain) behaviour.
pub fn bulk_bond_populations<Q: StateQuery + ?Sized>(state: &Q, parity: BondParity) -> ObservableResult<BondPopulations> {
    let n = state.num_sites();
    let sites: Vec<usize> = parity_bond_sites(n, parity)
        .into_iter()
        .filter(|&i| n.map_or(true, |n| i > 0 && i + 2 < n))
        .collect();
    average_populations(state, parity, &sites)
}

fn average_populations<Q: StateQuery + ?Sized>(
    state: &Q,
    parity: BondParity,
    sites: &[usize],
) -> ObservableResult<BondPopulations> {
    if sites.is_empty() {
        return Err(ObservableError::Unsupported(format!("chain has no matching {} bonds", parity.label())));
    }
    let mut acc = BondPopulations { tx: 0.0, ty: 0.0, tz: 0.0, s: 0.0 };
    for &i in sites {
        let p = BondPopulations::from_rdm(&state.two_site_rdm(i, i + 1)?);
        acc.tx += p.tx;
        acc.ty += p.ty;
        acc.tz += p.tz;
        acc.s += p.s;
    }
    let n = sites.len() as f64;
    Ok(BondPopulations { tx: acc.tx / n, ty: acc.ty / n, tz: acc.tz / n, s: acc.s / n })
}

/// Energy per site `⟨H⟩/2N` for couplings `(J1, J2)`; per unit-cell site on
/// the infinite chain.
pub fn energy_per_site<Q: StateQuery + ?Sized>(state: &Q, j_even: f64, j_odd: f64) -> ObservableResult<f64> {
    let mut total = 0.0;
    for (parity, j) in [(BondParity::Even, j_even), (BondParity::Odd, j_odd)] {
        if j == 0.0 {
            continue;
        }
        for i in parity_bond_sites(state.num_sites(), parity) {
            total -= j * state.two_site_rdm(i, i + 1)?.spin_dot();
        }
    }
    Ok(total / state.num_sites().unwrap_or(2) as f64)
}

/// Named entropy channels of a state.
///
/// Finite chains report the edge-block entropies `S_l` for each requested `l`.
/// Infinite chains report `S_even` (cut through a double well) and `S_odd`
/// (cut between double wells).
pub fn entropy_channels<Q: StateQuery + ?Sized>(state: &Q, blocks: &[usize]) -> ObservableResult<Vec<(String, f64)>> {
    match state.num_sites() {
        Some(_) => blocks.iter().map(|&l| Ok((format!("S_{l}"), state.cut_entropy(l)?))).collect(),
        None => Ok(vec![
            ("S_even".to_string(), state.cut_entropy(1)?),
            ("S_odd".to_string(), state.cut_entropy(2)?),
        ]),
    }
}

/// `ΔS_l = S∞ - S_l`, comparing the edge block with the infinite-chain cut of
/// the same type: odd `l` cuts through a double well, even `l` between wells.
pub fn entropy_deficit(block_len: usize, s_block: f64, s_inf_even: f64, s_inf_odd: f64) -> f64 {
    let s_inf = if block_len % 2 == 1 { s_inf_even } else { s_inf_odd };
    s_inf - s_block
}
