//! Two-site operator algebra in the basis `(↑↑, ↑↓, ↓↑, ↓↓)`.
//!
//! Local index convention: `0 = ↑`, `1 = ↓`, and a two-site index is
//! `2·s_i + s_j`.

use ndarray::{array, Array1, Array2};
use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_1_SQRT_2;

pub const UP: usize = 0;
pub const DOWN: usize = 1;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// The four bond states created by the singlet/triplet bond operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BondState {
    TripletX,
    TripletY,
    TripletZ,
    Singlet,
}

impl BondState {
    pub const ALL: [BondState; 4] = [Self::TripletX, Self::TripletY, Self::TripletZ, Self::Singlet];

    pub fn vector(self) -> Array1<C64> {
        let h = FRAC_1_SQRT_2;
        let r = |x: f64| C64::new(x, 0.0);
        match self {
            Self::TripletX => array![r(h), ZERO, ZERO, r(-h)],
            Self::TripletY => array![C64::new(0.0, h), ZERO, ZERO, C64::new(0.0, h)],
            Self::TripletZ => array![ZERO, r(h), r(h), ZERO],
            Self::Singlet => array![ZERO, r(h), r(-h), ZERO],
        }
    }

    pub fn projector(self) -> Array2<C64> {
        outer(&self.vector(), &self.vector())
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::TripletX => "tx",
            Self::TripletY => "ty",
            Self::TripletZ => "tz",
            Self::Singlet => "s",
        }
    }
}

/// `|a⟩⟨b|`
pub fn outer(a: &Array1<C64>, b: &Array1<C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j].conj())
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { ONE } else { ZERO })
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|x| x.conj())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `S_i·S_j` on two spins.
pub fn spin_dot() -> Array2<C64> {
    let q = C64::new(0.25, 0.0);
    let h = C64::new(0.5, 0.0);
    array![[q, ZERO, ZERO, ZERO], [ZERO, -q, h, ZERO], [ZERO, h, -q, ZERO], [ZERO, ZERO, ZERO, q]]
}

/// Swap operator `P = 1/2 + 2 S_i·S_j`.
pub fn swap() -> Array2<C64> {
    let mut p = Array2::from_elem((4, 4), ZERO);
    p[(0, 0)] = ONE;
    p[(1, 2)] = ONE;
    p[(2, 1)] = ONE;
    p[(3, 3)] = ONE;
    p
}

/// `S^+_i S^-_j`, which maps `|↓↑⟩` to `|↑↓⟩`.
pub fn raise_lower() -> Array2<C64> {
    let mut m = Array2::from_elem((4, 4), ZERO);
    m[(1, 2)] = ONE;
    m
}

/// Frobenius distance between two operators after removing the best global
/// phase, i.e. `min_φ ‖a - e^{iφ} b‖`.
pub fn phase_insensitive_distance(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    a.iter().zip(b.iter()).map(|(x, y)| (x - phase * y).norm_sqr()).sum::<f64>().sqrt()
}

/// Von Neumann entropy in bits of a probability distribution. Non-positive
/// entries (numerical noise) are skipped.
pub fn entropy_bits<I: IntoIterator<Item = f64>>(probabilities: I) -> f64 {
    let s: f64 = probabilities.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
    // rounding in p ≈ 1 can leave a tiny negative value
    s.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Array2<C64>, b: &Array2<C64>, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn bond_states_are_orthonormal_and_complete() {
        let mut sum = Array2::from_elem((4, 4), ZERO);
        for a in BondState::ALL {
            for b in BondState::ALL {
                let ov: C64 = a.vector().iter().zip(b.vector().iter()).map(|(x, y)| x.conj() * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ov - C64::new(expect, 0.0)).norm() < 1e-15);
            }
            sum = sum + a.projector();
        }
        assert!(close(&sum, &identity(4), 1e-15));
    }

    #[test]
    fn swap_matches_spin_dot_identity() {
        let p = identity(4).mapv(|x| x * 0.5) + spin_dot().mapv(|x| x * 2.0);
        assert!(close(&p, &swap(), 1e-15));
    }

    #[test]
    fn spin_dot_eigenvalues() {
        let sd = spin_dot();
        for b in BondState::ALL {
            let v = b.vector();
            let hv = sd.dot(&v);
            let e = if b == BondState::Singlet { -0.75 } else { 0.25 };
            assert!(hv.iter().zip(v.iter()).all(|(x, y)| (x - y * e).norm() < 1e-15));
        }
    }

    #[test]
    fn entropy_of_uniform_distribution() {
        assert!((entropy_bits([0.25; 4]) - 2.0).abs() < 1e-15);
        assert_eq!(entropy_bits([1.0, 0.0, -1e-18]), 0.0);
    }
}
