//! One recurrence step of entanglement purification with the controlled-NOT
//! compiled from an Ising interaction and single-qubit rotations.
//!
//! Qubit basis states `|0⟩, |1⟩` are identified with `|↑⟩, |↓⟩`, so the target
//! Bell state is the singlet `(|01⟩ - |10⟩)/√2`. The bilateral CNOT preserves
//! `Φ⁺`, not the singlet, so Bob rotates both his qubits by `Y` before the
//! gates (`(1 ⊗ Y)|s⟩ ∝ |Φ⁺⟩`) and undoes it on the kept pair. To target a
//! different Bell state replace `Y` by the Pauli mapping it to `Φ⁺`: `1` for
//! `Φ⁺`, `Z` for `Φ⁻`, `X` for `Ψ⁺`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use ndarray::{array, Array2};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::observables::TwoSiteRdm;
use crate::spin::{self, BondState};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Error)]
pub enum PurificationError {
    #[error("invalid pair density matrix: {0}")]
    InvalidState(String),
    #[error("post-selection has zero success probability")]
    ZeroSuccess,
}

pub type PurificationResult<T> = Result<T, PurificationError>;

/// Two-qubit density matrix of one shared pair (Alice's qubit first).
#[derive(Clone, Debug, PartialEq)]
pub struct PairDensityMatrix {
    matrix: Array2<C64>,
}

impl PairDensityMatrix {
    pub fn new(matrix: Array2<C64>) -> PurificationResult<Self> {
        TwoSiteRdm::new(matrix.clone()).map_err(|e| PurificationError::InvalidState(e.to_string()))?;
        Ok(Self { matrix })
    }

    /// `F|s⟩⟨s| + (1-F)/3 (1 - |s⟩⟨s|)`
    pub fn werner(fidelity: f64) -> Self {
        let ps = BondState::Singlet.projector();
        let rest = spin::identity(4) - &ps;
        Self { matrix: ps.mapv(|x| x * fidelity) + rest.mapv(|x| x * ((1.0 - fidelity) / 3.0)) }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// Overlap with the singlet.
    pub fn fidelity(&self) -> f64 {
        TwoSiteRdm::from_matrix_unchecked(self.matrix.clone()).population(BondState::Singlet)
    }

    pub fn validate(&self, tol: f64) -> PurificationResult<()> {
        TwoSiteRdm::from_matrix_unchecked(self.matrix.clone())
            .validate(tol)
            .map_err(|e| PurificationError::InvalidState(e.to_string()))
    }
}

pub fn hadamard() -> Array2<C64> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    array![[h, h], [h, -h]]
}

/// `exp(-iθZ/2)`
pub fn rz(theta: f64) -> Array2<C64> {
    array![[C64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, C64::from_polar(1.0, theta / 2.0)]]
}

pub fn pauli_y() -> Array2<C64> {
    array![[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]]
}

/// `exp(-iφ Z⊗Z)`
pub fn ising_gate(phase: f64) -> Array2<C64> {
    let d = |s: f64| C64::from_polar(1.0, -phase * s);
    let mut m = Array2::zeros((4, 4));
    for (k, s) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
        m[(k, k)] = d(s);
    }
    m
}

/// Single-qubit rotations around the Ising step, `[control, target]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalRotations {
    pub before: [Array2<C64>; 2],
    pub after: [Array2<C64>; 2],
}

impl LocalRotations {
    pub fn identity() -> Self {
        Self { before: [spin::identity(2), spin::identity(2)], after: [spin::identity(2), spin::identity(2)] }
    }

    /// `(Rz(-π/2) ⊗ H·Rz(-π/2)) · exp(-iπ/4 Z⊗Z) · (1 ⊗ H)` is a CNOT up to
    /// the phase `e^{iπ/4}`.
    pub fn cnot_recipe() -> Self {
        Self {
            before: [spin::identity(2), hadamard()],
            after: [rz(-FRAC_PI_2), hadamard().dot(&rz(-FRAC_PI_2))],
        }
    }
}

/// `(A' ⊗ B') exp(-iφ Z⊗Z) (A ⊗ B)` on (control, target).
pub fn cnot_from_ising(ising_phase: f64, rotations: &LocalRotations) -> Array2<C64> {
    let before = spin::kron(&rotations.before[0], &rotations.before[1]);
    let after = spin::kron(&rotations.after[0], &rotations.after[1]);
    after.dot(&ising_gate(ising_phase)).dot(&before)
}

/// The compiled gate with the phase `π/4`.
pub fn compiled_cnot() -> Array2<C64> {
    cnot_from_ising(FRAC_PI_4, &LocalRotations::cnot_recipe())
}

/// Embeds a two-qubit gate acting on qubits `(q1, q2)` of an `n`-qubit
/// register (qubit 0 most significant).
fn embed_two(gate: &Array2<C64>, q1: usize, q2: usize, n: usize) -> Array2<C64> {
    let dim = 1 << n;
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    let mask = (1 << (n - 1 - q1)) | (1 << (n - 1 - q2));
    Array2::from_shape_fn((dim, dim), |(r, c)| {
        if r & !mask != c & !mask {
            return ZERO;
        }
        gate[(2 * bit(r, q1) + bit(r, q2), 2 * bit(c, q1) + bit(c, q2))]
    })
}

fn embed_one(op: &Array2<C64>, q: usize, n: usize) -> Array2<C64> {
    (0..n).fold(Array2::from_elem((1, 1), ONE), |acc, k| {
        spin::kron(&acc, &if k == q { op.clone() } else { spin::identity(2) })
    })
}

fn conjugate(u: &Array2<C64>, rho: &Array2<C64>) -> Array2<C64> {
    u.dot(rho).dot(&spin::adjoint(u))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PurificationOutcome {
    pub success_probability: f64,
    pub purified: PairDensityMatrix,
}

// register order: a_alice, a_bob, b_alice, b_bob
const A_ALICE: usize = 0;
const A_BOB: usize = 1;
const B_ALICE: usize = 2;
const B_BOB: usize = 3;

/// One recurrence step: bilateral CNOT with `pair_b` as control, `pair_a`
/// measured in `Z`, `pair_b` kept when the outcomes are parallel. All
/// measurement branches are summed exactly.
pub fn purification_step(
    pair_a: &PairDensityMatrix,
    pair_b: &PairDensityMatrix,
) -> PurificationResult<PurificationOutcome> {
    pair_a.validate(1e-10)?;
    pair_b.validate(1e-10)?;
    let mut rho = spin::kron(pair_a.matrix(), pair_b.matrix());
    let y = pauli_y();
    for q in [A_BOB, B_BOB] {
        rho = conjugate(&embed_one(&y, q, 4), &rho);
    }
    let cnot = compiled_cnot();
    rho = conjugate(&embed_two(&cnot, B_ALICE, A_ALICE, 4), &rho);
    rho = conjugate(&embed_two(&cnot, B_BOB, A_BOB, 4), &rho);

    // keep |00⟩ and |11⟩ on pair a, trace it out
    let mut kept = Array2::<C64>::zeros((4, 4));
    for a in [0b00usize, 0b11] {
        for r in 0..4 {
            for c in 0..4 {
                kept[(r, c)] += rho[(4 * a + r, 4 * a + c)];
            }
        }
    }
    let p: f64 = (0..4).map(|k| kept[(k, k)].re).sum();
    if p <= 1e-14 {
        return Err(PurificationError::ZeroSuccess);
    }
    let undo = spin::kron(&spin::identity(2), &spin::adjoint(&y));
    let purified = conjugate(&undo, &kept).mapv(|x| x / p);
    Ok(PurificationOutcome { success_probability: p, purified: PairDensityMatrix { matrix: purified } })
}
