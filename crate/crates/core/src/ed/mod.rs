//! Exact state vectors and Krylov time evolution for finite chains
//! (`2N ≤ 24`).
//!
//! The basis is the computational one, site 0 in the least significant bit
//! and a set bit meaning spin up. States built from valence bonds or a single
//! flip live in a fixed total-`S^z` sector and only that sector is stored.

mod basis;
mod hamiltonian;
mod io;
mod krylov;

pub use basis::Basis;
pub use hamiltonian::BondHamiltonian;
pub use krylov::{expm_apply, KrylovOptions, KrylovStats};

use std::f64::consts::FRAC_1_SQRT_2;
#[cfg(test)]
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use ndarray_linalg::SVD;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{BondLabel, CouplingSchedule, InitialStateSpec, LatticeSpec, ModelError};
use crate::observables::{ObservableError, ObservableResult, StateQuery, TwoSiteRdm};
use crate::spin;

pub const MAX_SITES: usize = 24;

#[derive(Debug, Error)]
pub enum EdError {
    #[error("exact engine needs a finite chain of at most {MAX_SITES} sites")]
    UnsupportedLattice,
    #[error("Krylov propagation did not converge in a {dim}-dimensional subspace (residual estimate {residual:e})")]
    KrylovConvergence { residual: f64, dim: usize },
    #[error("interval [{0}, {1}] is outside the schedule")]
    OutsideSchedule(f64, f64),
    #[error("states live in different spaces")]
    BasisMismatch,
    #[error("malformed state dump: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type EdResult<T> = Result<T, EdError>;

#[derive(Clone, Debug)]
pub struct StateVector {
    lattice: LatticeSpec,
    basis: Arc<Basis>,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes given in the order of `basis`, normalizing them.
    pub fn from_amplitudes(lattice: LatticeSpec, basis: Arc<Basis>, amplitudes: Vec<C64>) -> EdResult<Self> {
        if lattice.num_sites() != Some(basis.num_sites()) || amplitudes.len() != basis.dim() {
            return Err(EdError::BasisMismatch);
        }
        let mut s = Self { lattice, basis, amplitudes };
        s.normalize();
        Ok(s)
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn num_sites(&self) -> usize {
        self.basis.num_sites()
    }

    /// Total `S^z` when sector-restricted.
    pub fn sz_sector(&self) -> Option<i32> {
        self.basis.sz()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// Amplitude of a computational basis state (zero outside the sector).
    pub fn amplitude(&self, bits: u32) -> C64 {
        self.basis.index(bits).map_or(C64::new(0.0, 0.0), |k| self.amplitudes[k])
    }

    /// `⟨self|other⟩`, with either state allowed to be sector-restricted.
    pub fn overlap(&self, other: &StateVector) -> EdResult<C64> {
        if self.num_sites() != other.num_sites() {
            return Err(EdError::BasisMismatch);
        }
        Ok(self.basis.states().iter().zip(&self.amplitudes).map(|(&s, a)| a.conj() * other.amplitude(s)).sum())
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &StateVector) -> EdResult<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// `⟨S^z_j⟩` for every site.
    pub fn sz_profile(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_sites()];
        for (&s, a) in self.basis.states().iter().zip(&self.amplitudes) {
            let p = a.norm_sqr();
            for (j, o) in out.iter_mut().enumerate() {
                *o += if (s >> j) & 1 == 1 { 0.5 * p } else { -0.5 * p };
            }
        }
        out
    }

    pub fn total_sz(&self) -> f64 {
        self.sz_profile().iter().sum()
    }

    /// `⟨H⟩` for couplings `(J1, J2)`.
    pub fn energy(&self, j_even: f64, j_odd: f64) -> f64 {
        BondHamiltonian::chain(self.num_sites(), j_even, j_odd).expectation(&self.basis, &self.amplitudes)
    }

    /// Evolves under `schedule` from `t_from` to `t_to` (either direction),
    /// piecewise over its segments.
    pub fn evolve(
        &mut self,
        schedule: &CouplingSchedule,
        t_from: f64,
        t_to: f64,
        options: &KrylovOptions,
    ) -> EdResult<KrylovStats> {
        let end = schedule.total_time();
        let slack = 1e-12 * end.max(1.0);
        if t_from.min(t_to) < -slack || t_from.max(t_to) > end + slack {
            return Err(EdError::OutsideSchedule(t_from, t_to));
        }
        let sign = if t_to >= t_from { 1.0 } else { -1.0 };
        let mut stats = KrylovStats::default();
        for piece in schedule.pieces(t_from, t_to) {
            let h = BondHamiltonian::chain(self.num_sites(), piece.j_even, piece.j_odd);
            stats.merge(expm_apply(&h, &self.basis, &mut self.amplitudes, sign * piece.duration(), options)?);
        }
        self.normalize();
        Ok(stats)
    }

    /// Reduced density matrix of sites `i ≠ j`, basis `(↑↑, ↑↓, ↓↑, ↓↓)`
    /// with `i` the first factor.
    pub fn two_site_rdm(&self, i: usize, j: usize) -> ObservableResult<TwoSiteRdm> {
        let n = self.num_sites();
        if i == j || i >= n || j >= n {
            return Err(ObservableError::SitesOutOfRange(i, j));
        }
        let mut rho = Array2::<C64>::zeros((4, 4));
        for (&s, a) in self.basis.states().iter().zip(&self.amplitudes) {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let row = 2 * basis::local(s, i) + basis::local(s, j);
            for col in 0..4 {
                let t = basis::with_local(basis::with_local(s, i, col / 2), j, col % 2);
                if let Some(k) = self.basis.index(t) {
                    rho[(row, col)] += a * self.amplitudes[k].conj();
                }
            }
        }
        Ok(TwoSiteRdm::from_matrix_unchecked(rho))
    }

    /// Von Neumann entropy (bits) of the edge block of sites `0..l`.
    pub fn block_rdm_entropy(&self, l: usize) -> ObservableResult<f64> {
        let n = self.num_sites();
        if l == 0 || l >= n {
            return Err(ObservableError::CutOutOfRange(l));
        }
        let left_mask = (1u32 << l) - 1;
        // position of each half-bitstring inside its popcount class
        let position = |bits: usize| -> (Vec<usize>, Vec<usize>) {
            let mut counts = vec![0usize; bits + 1];
            let pos = (0..1usize << bits)
                .map(|x| {
                    let c = x.count_ones() as usize;
                    counts[c] += 1;
                    counts[c] - 1
                })
                .collect();
            (pos, counts)
        };
        let (left_pos, left_counts) = position(l);
        let (right_pos, right_counts) = position(n - l);
        let mut blocks: Vec<Option<Array2<C64>>> = vec![None; l + 1];
        for (&s, a) in self.basis.states().iter().zip(&self.amplitudes) {
            let left = (s & left_mask) as usize;
            let right = (s >> l) as usize;
            match self.basis.up_count() {
                Some(up) => {
                    let p = left.count_ones() as usize;
                    let block =
                        blocks[p].get_or_insert_with(|| Array2::zeros((left_counts[p], right_counts[up - p])));
                    block[(left_pos[left], right_pos[right])] = *a;
                }
                None => {
                    let block = blocks[0].get_or_insert_with(|| Array2::zeros((1 << l, 1 << (n - l))));
                    block[(left, right)] = *a;
                }
            }
        }
        let mut probabilities = Vec::new();
        for block in blocks.into_iter().flatten() {
            let (_, sv, _) = block
                .svd(false, false)
                .map_err(|e| ObservableError::Unsupported(format!("SVD failed: {e}")))?;
            probabilities.extend(sv.iter().map(|x| x * x));
        }
        Ok(spin::entropy_bits(probabilities))
    }

    pub fn dump(&self, path: &Path) -> EdResult<()> {
        let raw = io::RawDump { num_sites: self.num_sites(), sz: self.sz_sector(), amplitudes: self.amplitudes.clone() };
        let mut w = BufWriter::new(File::create(path)?);
        io::write_dump(&mut w, &raw)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }

    pub fn load(path: &Path) -> EdResult<Self> {
        let raw = io::read_dump(&mut BufReader::new(File::open(path)?))?;
        let lattice = LatticeSpec::finite(raw.num_sites)?;
        let basis = match raw.sz {
            Some(sz) => Basis::with_sz(raw.num_sites, sz).ok_or_else(|| EdError::Format(format!("no sector {sz}")))?,
            None => Basis::full(raw.num_sites),
        };
        if basis.dim() != raw.amplitudes.len() {
            return Err(EdError::Format("amplitude count does not match the sector".into()));
        }
        Ok(Self { lattice, basis: Arc::new(basis), amplitudes: raw.amplitudes })
    }
}

impl StateQuery for StateVector {
    fn num_sites(&self) -> Option<usize> {
        Some(self.basis.num_sites())
    }

    fn two_site_rdm(&self, i: usize, j: usize) -> ObservableResult<TwoSiteRdm> {
        StateVector::two_site_rdm(self, i, j)
    }

    fn cut_entropy(&self, cut: usize) -> ObservableResult<f64> {
        self.block_rdm_entropy(cut)
    }
}

fn finite_sites(lattice: &LatticeSpec) -> EdResult<usize> {
    match lattice.num_sites() {
        Some(n) if n <= MAX_SITES => Ok(n),
        _ => Err(EdError::UnsupportedLattice),
    }
}

/// Product of valence bonds on `pairs` as a vector in the `S^z = 0` sector.
pub fn valence_bond_state(lattice: &LatticeSpec, pairs: &[(usize, usize, BondLabel)]) -> EdResult<StateVector> {
    let n = finite_sites(lattice)?;
    let bonds: Vec<(usize, usize)> = pairs.iter().map(|p| (p.0, p.1)).collect();
    crate::model::check_perfect_matching(&bonds, n)?;
    let basis = Arc::new(Basis::sector(n, n / 2));
    let weight = FRAC_1_SQRT_2.powi((n / 2) as i32);
    let amplitudes = basis
        .states()
        .iter()
        .map(|&s| {
            let mut sign = 1.0;
            for &(lo, hi, label) in pairs {
                let (up_lo, up_hi) = ((s >> lo) & 1 == 1, (s >> hi) & 1 == 1);
                if up_lo == up_hi {
                    return C64::new(0.0, 0.0);
                }
                if label == BondLabel::Singlet && up_hi {
                    sign = -sign;
                }
            }
            C64::new(sign * weight, 0.0)
        })
        .collect();
    Ok(StateVector { lattice: lattice.clone(), basis, amplitudes })
}

pub fn encode_product_state(spec: &InitialStateSpec, lattice: &LatticeSpec) -> EdResult<StateVector> {
    let n = finite_sites(lattice)?;
    spec.validate(lattice)?;
    match spec {
        InitialStateSpec::SingleFlip { site } => {
            let basis = Arc::new(Basis::sector(n, 1));
            let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
            amplitudes[basis.index(1 << site).expect("one-up sector contains every flip")] = C64::new(1.0, 0.0);
            Ok(StateVector { lattice: lattice.clone(), basis, amplitudes })
        }
        _ => valence_bond_state(lattice, &spec.pairs(n).expect("valence-bond spec has pairs")),
    }
}

/// `exp(-iH(t)…)|ψ⟩` from `t_from` to `t_to`.
pub fn propagate(
    state: &StateVector,
    schedule: &CouplingSchedule,
    t_from: f64,
    t_to: f64,
    krylov_tol: f64,
) -> EdResult<StateVector> {
    let mut out = state.clone();
    out.evolve(schedule, t_from, t_to, &KrylovOptions { tol: krylov_tol, ..Default::default() })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_schedule, ProtocolSpec};
    use crate::spin::BondState;

    fn r() -> f64 {
        FRAC_1_SQRT_2
    }

    fn full_vector(s: &StateVector) -> Vec<C64> {
        (0..1u32 << s.num_sites()).map(|b| s.amplitude(b)).collect()
    }

    /// Amplitude in site order `(s_0 s_1)` with `0 = ↑`.
    fn two_site(s: &StateVector) -> [C64; 4] {
        let v = full_vector(s);
        // index 2·s_0 + s_1 ↔ bitstring with bit0 = site 0 up
        [v[0b11], v[0b01], v[0b10], v[0b00]]
    }

    #[test]
    fn product_states_on_two_sites() {
        let lat = LatticeSpec::finite(2).unwrap();
        let t = two_site(&encode_product_state(&InitialStateSpec::TripletProduct, &lat).unwrap());
        let expect = [0.0, r(), r(), 0.0];
        assert!(t.iter().zip(expect).all(|(a, b)| (a - C64::new(b, 0.0)).norm() < 1e-15));
        let s = two_site(&encode_product_state(&InitialStateSpec::SingletProduct, &lat).unwrap());
        let expect = [0.0, r(), -r(), 0.0];
        assert!(s.iter().zip(expect).all(|(a, b)| (a - C64::new(b, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn four_site_triplet_is_tensor_product() {
        let lat = LatticeSpec::finite(4).unwrap();
        let psi = encode_product_state(&InitialStateSpec::TripletProduct, &lat).unwrap();
        assert_eq!(psi.sz_sector(), Some(0));
        let tz = BondState::TripletZ.vector();
        for bits in 0..16u32 {
            let loc = |k| basis::local(bits, k);
            let expect = tz[2 * loc(0) + loc(1)] * tz[2 * loc(2) + loc(3)];
            assert!((psi.amplitude(bits) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn single_flip_sector() {
        let lat = LatticeSpec::finite(6).unwrap();
        let psi = encode_product_state(&InitialStateSpec::SingleFlip { site: 4 }, &lat).unwrap();
        assert_eq!(psi.sz_sector(), Some(-2));
        let p = psi.sz_profile();
        assert!((p[4] - 0.5).abs() < 1e-15 && (p[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn rdm_of_triplet_product() {
        let lat = LatticeSpec::finite(8).unwrap();
        let psi = encode_product_state(&InitialStateSpec::TripletProduct, &lat).unwrap();
        let on = psi.two_site_rdm(0, 1).unwrap();
        assert!((on.matrix() - &BondState::TripletZ.projector()).iter().all(|x| x.norm() < 1e-14));
        let across = psi.two_site_rdm(1, 2).unwrap();
        assert!((across.matrix() - &spin::identity(4).mapv(|x| x * 0.25)).iter().all(|x| x.norm() < 1e-14));
        assert!(psi.two_site_rdm(3, 3).is_err());
        assert!(psi.two_site_rdm(0, 8).is_err());
    }

    #[test]
    fn rdm_orientation_for_singlet() {
        let lat = LatticeSpec::finite(4).unwrap();
        let psi = encode_product_state(&InitialStateSpec::SingletProduct, &lat).unwrap();
        let rho = psi.two_site_rdm(2, 3).unwrap();
        assert!((rho.population(BondState::Singlet) - 1.0).abs() < 1e-14);
        let flipped = psi.two_site_rdm(3, 2).unwrap();
        assert!((flipped.population(BondState::Singlet) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn block_entropies_of_dimers() {
        let lat = LatticeSpec::finite(8).unwrap();
        let psi = encode_product_state(&InitialStateSpec::TripletProduct, &lat).unwrap();
        assert!((psi.block_rdm_entropy(1).unwrap() - 1.0).abs() < 1e-12);
        assert!(psi.block_rdm_entropy(2).unwrap().abs() < 1e-12);
        assert!((psi.block_rdm_entropy(3).unwrap() - 1.0).abs() < 1e-12);
        assert!(psi.block_rdm_entropy(8).is_err());
    }

    #[test]
    fn triplet_dimer_is_stationary() {
        let lat = LatticeSpec::finite(2).unwrap();
        let psi = encode_product_state(&InitialStateSpec::TripletProduct, &lat).unwrap();
        let sched = build_schedule(&ProtocolSpec::homogeneous(1.3, 4.0).unwrap()).unwrap();
        let out = propagate(&psi, &sched, 0.0, 3.7, 1e-12).unwrap();
        assert!((out.fidelity(&psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.bin");
        let lat = LatticeSpec::finite(6).unwrap();
        let psi = encode_product_state(&InitialStateSpec::SingletProduct, &lat).unwrap();
        let sched = build_schedule(&ProtocolSpec::homogeneous(1.0, 1.0).unwrap()).unwrap();
        let psi = propagate(&psi, &sched, 0.0, 1.0, 1e-12).unwrap();
        psi.dump(&path).unwrap();
        let back = StateVector::load(&path).unwrap();
        assert_eq!(back.amplitudes(), psi.amplitudes());
        assert_eq!(back.sz_sector(), Some(0));
        std::fs::write(&path, b"nope").unwrap();
        assert!(StateVector::load(&path).is_err());
    }

    #[test]
    fn infinite_lattice_is_rejected() {
        let err = encode_product_state(&InitialStateSpec::TripletProduct, &LatticeSpec::infinite()).unwrap_err();
        assert!(matches!(err, EdError::UnsupportedLattice));
    }

    #[test]
    fn commensurate_long_step_matches_fine_steps() {
        // at τ = π the odd-layer spectrum is commensurate; one long step
        // must agree with many short ones
        let lattice = LatticeSpec::finite(12).unwrap();
        let sched = build_schedule(&ProtocolSpec::periodic(1.0, 1).unwrap()).unwrap();
        let psi0 = encode_product_state(&InitialStateSpec::TripletProduct, &lattice).unwrap();
        let opts = KrylovOptions::default();
        let mut long = psi0.clone();
        long.evolve(&sched, 0.0, PI, &opts).unwrap();
        let mut short = psi0;
        for k in 0..64 {
            short.evolve(&sched, k as f64 * PI / 64.0, (k + 1) as f64 * PI / 64.0, &opts).unwrap();
        }
        assert!(long.fidelity(&short).unwrap() > 1.0 - 1e-10);
    }
}
