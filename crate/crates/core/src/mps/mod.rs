//! Matrix-product states: TEBD on finite open chains and iTEBD on the
//! infinite chain with a two-site unit cell.
//!
//! States are kept in right-canonical form with explicit Schmidt spectra:
//! every site tensor `B[k]` (shape `χ_left × 2 × χ_right`) satisfies
//! `Σ_s B^s B^s† = 1`, and `lambdas[k]` holds the Schmidt values of the cut
//! left of site `k`. A two-site update contracts `Λ_k B_k B_{k+1}`,
//! decomposes it, and rebuilds `B_k` from the unnormalized two-site tensor, so
//! no Schmidt value is ever inverted.
//!
//! On the infinite chain sites and cuts are taken mod 2: `lambdas[0]` sits on
//! the odd (inter-well) cut left of the A site and `lambdas[1]` on the even
//! (intra-well) cut between A and B.

mod io;

use ndarray::{s, Array1, Array2, Array3, Axis};
use ndarray_linalg::{JobSvd, SVDDC, SVD};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{BondLabel, BondParity, CouplingSchedule, Geometry, InitialStateSpec, LatticeSpec, ModelError};
use crate::observables::{ObservableError, ObservableResult, StateQuery, TwoSiteRdm};
use crate::spin::{self, BondState};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("unsupported for matrix-product states: {0}")]
    Unsupported(String),
    #[error("cumulative truncation error {error:e} exceeds the budget {budget:e} at t = {time}")]
    TruncationBudget { error: f64, budget: f64, time: f64 },
    #[error("singular value decomposition failed: {0}")]
    Svd(String),
    #[error("interval [{0}, {1}] is outside the schedule")]
    OutsideSchedule(f64, f64),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type MpsResult<T> = Result<T, MpsError>;

/// Numerical parameters of a TEBD/iTEBD evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TebdOptions {
    pub dt: f64,
    pub chi_max: usize,
    /// Schmidt values below this are discarded.
    pub sv_cutoff: f64,
    /// Allowed cumulative truncation error per unit of evolved time.
    pub truncation_budget_rate: f64,
}

impl Default for TebdOptions {
    fn default() -> Self {
        Self { dt: 0.02, chi_max: 64, sv_cutoff: 1e-10, truncation_budget_rate: 1e-6 }
    }
}

/// `exp(-iH_b dt)` for `H_b = -J S_i·S_j`: phase `e^{iJdt/4}` on the triplets
/// and `e^{-3iJdt/4}` on the singlet.
pub fn bond_gate(coupling: f64, dt: f64) -> Array2<C64> {
    let triplet = C64::from_polar(1.0, 0.25 * coupling * dt);
    let singlet = C64::from_polar(1.0, -0.75 * coupling * dt);
    let ps = BondState::Singlet.projector();
    (spin::identity(4) - &ps).mapv(|x| x * triplet) + ps.mapv(|x| x * singlet)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    geometry: Geometry,
    tensors: Vec<Array3<C64>>,
    lambdas: Vec<Array1<f64>>,
    chi_max: usize,
    sv_cutoff: f64,
    truncation_error: f64,
    evolved_time: f64,
}

impl MpsState {
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.geometry, Geometry::Infinite)
    }

    /// Number of stored tensors: `2N`, or 2 for the unit cell.
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn chi_max(&self) -> usize {
        self.chi_max
    }

    pub fn set_chi_max(&mut self, chi_max: usize) {
        self.chi_max = chi_max;
    }

    /// Discarded weight summed over all truncations.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    /// Total `|Δt|` evolved so far.
    pub fn evolved_time(&self) -> f64 {
        self.evolved_time
    }

    pub fn tensor(&self, site: usize) -> &Array3<C64> {
        &self.tensors[self.wrap(site)]
    }

    /// Schmidt values of the cut left of `site`. Finite chains accept
    /// `0..=2N`; the infinite chain any index (mod 2).
    pub fn schmidt_values(&self, cut: usize) -> &Array1<f64> {
        &self.lambdas[self.wrap_cut(cut)]
    }

    pub fn bond_dimensions(&self) -> Vec<usize> {
        self.lambdas.iter().map(|l| l.len()).collect()
    }

    fn wrap(&self, site: usize) -> usize {
        if self.is_infinite() {
            site % 2
        } else {
            site
        }
    }

    fn wrap_cut(&self, cut: usize) -> usize {
        if self.is_infinite() {
            cut % 2
        } else {
            cut
        }
    }

    /// Cuts carrying a Schmidt spectrum that can be non-trivial.
    fn internal_cuts(&self) -> std::ops::Range<usize> {
        if self.is_infinite() {
            0..2
        } else {
            1..self.tensors.len()
        }
    }

    /// Entanglement entropy (bits) across cut `bond`.
    pub fn schmidt_entropy(&self, bond: usize) -> f64 {
        spin::entropy_bits(self.schmidt_values(bond).iter().map(|l| l * l))
    }

    pub fn max_bond_entropy(&self) -> f64 {
        self.internal_cuts().map(|c| self.schmidt_entropy(c)).fold(0.0, f64::max)
    }

    /// Results are trusted while every bond entropy stays below
    /// `log2(χ_max) - 1`.
    pub fn trust_threshold(&self) -> f64 {
        (self.chi_max as f64).log2() - 1.0
    }

    pub fn is_trusted(&self) -> bool {
        self.max_bond_entropy() < self.trust_threshold()
    }

    /// Largest deviation from the canonical conditions: right-orthonormality
    /// `Σ_s B^s B^s† = 1` and the left fixed point
    /// `Σ_s B^s† Λ² B^s = Λ'²`.
    pub fn canonical_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        let sites = if self.is_infinite() { 2 } else { self.tensors.len() };
        for k in 0..sites {
            let b = &self.tensors[k];
            let (dl, _, dr) = b.dim();
            let left = &self.lambdas[self.wrap_cut(k)];
            let right = &self.lambdas[self.wrap_cut(k + 1)];
            let mut rr = Array2::<C64>::zeros((dl, dl));
            let mut ll = Array2::<C64>::zeros((dr, dr));
            for s in 0..2 {
                let m = b.index_axis(Axis(1), s);
                rr = rr + m.dot(&m.t().mapv(|x| x.conj()));
                let weighted = Array2::from_shape_fn((dl, dr), |(a, c)| m[(a, c)] * left[a] * left[a]);
                ll = ll + m.t().mapv(|x| x.conj()).dot(&weighted);
            }
            for ((i, j), x) in rr.indexed_iter() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - C64::new(target, 0.0)).norm());
            }
            for ((i, j), x) in ll.indexed_iter() {
                let target = if i == j { right[i] * right[i] } else { 0.0 };
                worst = worst.max((x - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Two-site update on sites `(k, k+1)`.
    fn apply_two_site(&mut self, k: usize, gate: &Array2<C64>) -> MpsResult<()> {
        let (i, j) = (self.wrap(k), self.wrap(k + 1));
        let (cut_left, cut_mid) = (self.wrap_cut(k), self.wrap_cut(k + 1));
        let (bi, bj) = (&self.tensors[i], &self.tensors[j]);
        let (dl, _, dm) = bi.dim();
        let dr = bj.dim().2;
        debug_assert_eq!(bj.dim().0, dm);

        // θ[a, s1, s2, c] with the gate applied to (s1, s2)
        let bi2 = bi.to_shape((dl * 2, dm)).expect("contiguous tensor").to_owned();
        let bj2 = bj.to_shape((dm, 2 * dr)).expect("contiguous tensor").to_owned();
        let theta = bi2.dot(&bj2).into_shape_with_order((dl, 4, dr)).expect("shape");
        let mut gated = Array3::<C64>::zeros((dl, 4, dr));
        for a in 0..dl {
            let t = theta.slice(s![a, .., ..]);
            gated.slice_mut(s![a, .., ..]).assign(&gate.dot(&t));
        }
        let gated = gated.into_shape_with_order((dl * 2, 2 * dr)).expect("shape");
        let lam = &self.lambdas[cut_left];
        let weighted = Array2::from_shape_fn((dl * 2, 2 * dr), |(r, c)| gated[(r, c)] * lam[r / 2]);

        let (vt, sv) = right_singular(&weighted)?;
        let total: f64 = sv.iter().map(|x| x * x).sum();
        let mut keep = sv.iter().take(self.chi_max).take_while(|&&x| x >= self.sv_cutoff).count();
        keep = keep.max(1);
        let kept: f64 = sv.iter().take(keep).map(|x| x * x).sum();
        self.truncation_error += ((total - kept) / total).max(0.0);
        let norm = kept.sqrt();

        let vt = vt.slice(s![..keep, ..]).to_owned();
        let new_bi = gated.dot(&vt.t().mapv(|x| x.conj())).mapv(|x| x / norm);
        self.tensors[i] = new_bi.into_shape_with_order((dl, 2, keep)).expect("shape");
        self.tensors[j] = vt.into_shape_with_order((keep, 2, dr)).expect("shape");
        self.lambdas[cut_mid] = sv.slice(s![..keep]).mapv(|x| x / norm);
        Ok(())
    }

    /// Applies `gate` to every bond of `parity`.
    fn apply_layer(&mut self, parity: BondParity, gate: &Array2<C64>) -> MpsResult<()> {
        if self.is_infinite() {
            let k = match parity {
                BondParity::Even => 0,
                BondParity::Odd => 1,
            };
            return self.apply_two_site(k, gate);
        }
        for k in parity.bond_sites(self.tensors.len()).collect::<Vec<_>>() {
            self.apply_two_site(k, gate)?;
        }
        Ok(())
    }

    /// Second-order Trotter evolution from `t_from` to `t_to`.
    ///
    /// Each schedule piece of length `T` is split into `n = ⌈T/dt⌉` equal
    /// steps; consecutive even half-steps are merged. Pieces where only one
    /// parity is coupled are applied exactly in a single layer.
    pub fn evolve(
        &mut self,
        schedule: &CouplingSchedule,
        t_from: f64,
        t_to: f64,
        options: &TebdOptions,
    ) -> MpsResult<()> {
        let end = schedule.total_time();
        let slack = 1e-12 * end.max(1.0);
        if t_from.min(t_to) < -slack || t_from.max(t_to) > end + slack {
            return Err(MpsError::OutsideSchedule(t_from, t_to));
        }
        self.chi_max = options.chi_max;
        let sign = if t_to >= t_from { 1.0 } else { -1.0 };
        self.sv_cutoff = options.sv_cutoff;
        for piece in schedule.pieces(t_from, t_to) {
            let duration = piece.duration();
            match (piece.j_even != 0.0, piece.j_odd != 0.0) {
                (false, false) => {}
                (true, false) => self.apply_layer(BondParity::Even, &bond_gate(piece.j_even, sign * duration))?,
                (false, true) => self.apply_layer(BondParity::Odd, &bond_gate(piece.j_odd, sign * duration))?,
                (true, true) => {
                    let steps = (duration / options.dt - 1e-9).ceil().max(1.0) as usize;
                    let h = sign * duration / steps as f64;
                    let half_even = bond_gate(piece.j_even, 0.5 * h);
                    let full_even = bond_gate(piece.j_even, h);
                    let full_odd = bond_gate(piece.j_odd, h);
                    self.apply_layer(BondParity::Even, &half_even)?;
                    for step in 0..steps {
                        self.apply_layer(BondParity::Odd, &full_odd)?;
                        let closing = if step + 1 == steps { &half_even } else { &full_even };
                        self.apply_layer(BondParity::Even, closing)?;
                    }
                }
            }
            self.evolved_time += duration;
            let budget = options.truncation_budget_rate * self.evolved_time;
            if self.truncation_error > budget {
                return Err(MpsError::TruncationBudget {
                    error: self.truncation_error,
                    budget,
                    time: piece.end,
                });
            }
        }
        Ok(())
    }

    /// `X[s][s'][b, b'] = Σ_a λ_a² B[a, s, b] B*[a, s', b']`: the open
    /// physical index of site `i` carried across the cut to its right.
    fn open_left(&self, i: usize) -> [[Array2<C64>; 2]; 2] {
        let b = self.tensor(i);
        let lam = self.schmidt_values(i);
        let dr = b.dim().2;
        let weighted: Vec<Array2<C64>> = (0..2)
            .map(|s| {
                let m = b.index_axis(Axis(1), s);
                Array2::from_shape_fn(m.dim(), |(a, c)| m[(a, c)] * lam[a] * lam[a])
            })
            .collect();
        let conj: Vec<Array2<C64>> = (0..2).map(|s| b.index_axis(Axis(1), s).mapv(|x| x.conj())).collect();
        let mut out: [[Array2<C64>; 2]; 2] = Default::default();
        for s in 0..2 {
            for sp in 0..2 {
                out[s][sp] = weighted[s].t().dot(&conj[sp]);
                debug_assert_eq!(out[s][sp].dim(), (dr, dr));
            }
        }
        out
    }

    /// Contracts an open block with the traced tensor of `site`.
    fn transfer(&self, x: &Array2<C64>, site: usize) -> Array2<C64> {
        let b = self.tensor(site);
        let mut out = Array2::<C64>::zeros((b.dim().2, b.dim().2));
        for t in 0..2 {
            let m = b.index_axis(Axis(1), t);
            out = out + m.t().dot(&x.dot(&m.mapv(|z| z.conj())));
        }
        out
    }

    /// Closes an open block with the open physical index of `site`.
    fn close_right(&self, x: &[[Array2<C64>; 2]; 2], site: usize) -> TwoSiteRdm {
        let b = self.tensor(site);
        let mut rho = Array2::<C64>::zeros((4, 4));
        let mats: Vec<_> = (0..2).map(|s| b.index_axis(Axis(1), s).to_owned()).collect();
        for si in 0..2 {
            for sip in 0..2 {
                for sj in 0..2 {
                    for sjp in 0..2 {
                        // Σ_{b,b',c} X[b,b'] B[b,sj,c] B*[b',sjp,c]
                        let m = x[si][sip].dot(&mats[sjp].mapv(|z| z.conj()));
                        let v: C64 = mats[sj].iter().zip(m.iter()).map(|(a, c)| a * c).sum();
                        rho[(2 * si + sj, 2 * sip + sjp)] = v;
                    }
                }
            }
        }
        TwoSiteRdm::from_matrix_unchecked(rho)
    }

    /// `Σ_{b,b',c} Y[b,b'] B[b,s,c] B*[b',s',c]` at `site`.
    fn close_string(&self, y: &Array2<C64>, site: usize, s: usize, sp: usize) -> C64 {
        let b = self.tensor(site);
        let m = y.dot(&b.index_axis(Axis(1), sp).mapv(|z| z.conj()));
        b.index_axis(Axis(1), s).iter().zip(m.iter()).map(|(a, c)| a * c).sum()
    }

    fn check_sites(&self, i: usize, j: usize) -> ObservableResult<()> {
        if i == j || (!self.is_infinite() && (i >= self.tensors.len() || j >= self.tensors.len())) {
            return Err(ObservableError::SitesOutOfRange(i, j));
        }
        Ok(())
    }

    /// Dense amplitudes over all `2^L` bitstrings (site 0 = least significant
    /// bit, set = up). Finite chains of at most 20 sites.
    pub fn to_amplitudes(&self) -> MpsResult<Vec<C64>> {
        let n = match self.geometry {
            Geometry::Finite { num_sites } if num_sites <= 20 => num_sites,
            _ => return Err(MpsError::Unsupported("dense conversion needs a finite chain of <= 20 sites".into())),
        };
        // rows: local configurations of sites 0..k in order s_0 s_1 ...
        let mut acc = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        for k in 0..n {
            let b = &self.tensors[k];
            let (dl, _, dr) = b.dim();
            let b2 = b.to_shape((dl, 2 * dr)).expect("contiguous").to_owned();
            let next = acc.dot(&b2);
            acc = next.into_shape_with_order((acc.nrows() * 2, dr)).expect("shape");
        }
        let mut out = vec![ZERO; 1 << n];
        for (row, amp) in acc.column(0).iter().enumerate() {
            // row encodes s_0 as the most significant of n local digits
            let mut bits = 0u32;
            for k in 0..n {
                let s = (row >> (n - 1 - k)) & 1;
                if s == 0 {
                    bits |= 1 << k;
                }
            }
            out[bits as usize] = *amp;
        }
        Ok(out)
    }
}

/// Right singular vectors and singular values, with a fallback driver.
fn right_singular(m: &Array2<C64>) -> MpsResult<(Array2<C64>, Array1<f64>)> {
    match m.svddc(JobSvd::Some) {
        Ok((_, s, Some(vt))) => Ok((vt, s)),
        _ => match m.svd(false, true) {
            Ok((_, s, Some(vt))) => {
                let k = s.len();
                Ok((vt.slice(s![..k, ..]).to_owned(), s))
            }
            Ok(_) => Err(MpsError::Svd("missing right singular vectors".into())),
            Err(e) => Err(MpsError::Svd(e.to_string())),
        },
    }
}

impl StateQuery for MpsState {
    fn num_sites(&self) -> Option<usize> {
        match self.geometry {
            Geometry::Finite { num_sites } => Some(num_sites),
            Geometry::Infinite => None,
        }
    }

    fn two_site_rdm(&self, i: usize, j: usize) -> ObservableResult<TwoSiteRdm> {
        self.check_sites(i, j)?;
        if i > j {
            let rho = self.two_site_rdm(j, i)?;
            let perm = [0, 2, 1, 3];
            let m = Array2::from_shape_fn((4, 4), |(r, c)| rho.matrix()[(perm[r], perm[c])]);
            return Ok(TwoSiteRdm::from_matrix_unchecked(m));
        }
        Ok(self.rdm_row(i, j - i)?.pop().expect("non-empty row"))
    }

    fn rdm_row(&self, i: usize, max_distance: usize) -> ObservableResult<Vec<TwoSiteRdm>> {
        if max_distance == 0 {
            return Ok(Vec::new());
        }
        self.check_sites(i, i + max_distance)?;
        let mut x = self.open_left(i);
        let mut out = Vec::with_capacity(max_distance);
        for d in 1..=max_distance {
            out.push(self.close_right(&x, i + d));
            if d < max_distance {
                for row in x.iter_mut() {
                    for e in row.iter_mut() {
                        *e = self.transfer(e, i + d);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Carries only the `S^z_i` and `S^+_i` strings, half the work of full
    /// density matrices. Physical index 0 is up.
    fn correlation_row(&self, i: usize, max_distance: usize) -> ObservableResult<Vec<(f64, C64)>> {
        if max_distance == 0 {
            return Ok(Vec::new());
        }
        self.check_sites(i, i + max_distance)?;
        let x = self.open_left(i);
        let mut z = (&x[0][0] - &x[1][1]).mapv(|v| v * 0.5);
        let [[_, _], [raise, _]] = x;
        let mut p = raise;
        let mut out = Vec::with_capacity(max_distance);
        for d in 1..=max_distance {
            let site = i + d;
            let zz = 0.5 * (self.close_string(&z, site, 0, 0) - self.close_string(&z, site, 1, 1)).re;
            let pm = self.close_string(&p, site, 0, 1);
            // S·S = SzSz + (S+S- + S-S+)/2 and the two flip terms are conjugate
            out.push((zz + pm.re, pm));
            if d < max_distance {
                z = self.transfer(&z, site);
                p = self.transfer(&p, site);
            }
        }
        Ok(out)
    }

    fn cut_entropy(&self, cut: usize) -> ObservableResult<f64> {
        if !self.is_infinite() && (cut == 0 || cut >= self.tensors.len()) {
            return Err(ObservableError::CutOutOfRange(cut));
        }
        Ok(self.schmidt_entropy(cut))
    }
}

/// Tensors of one valence bond: `(B_lo, λ_mid, B_hi)`.
fn dimer_tensors(label: BondLabel) -> (Array3<C64>, Array1<f64>, Array3<C64>) {
    let v = match label {
        BondLabel::TripletZ => BondState::TripletZ.vector(),
        BondLabel::Singlet => BondState::Singlet.vector(),
    };
    let psi = Array2::from_shape_fn((2, 2), |(a, b)| v[2 * a + b]);
    let (u, s, vt) = psi.svd(true, true).expect("2x2 SVD");
    let (u, vt) = (u.expect("U"), vt.expect("Vt"));
    let keep = s.iter().filter(|&&x| x > 1e-14).count();
    let b_lo = Array3::from_shape_fn((1, 2, keep), |(_, sp, k)| u[(sp, k)] * s[k]);
    let b_hi = Array3::from_shape_fn((keep, 2, 1), |(k, sp, _)| vt[(k, sp)]);
    (b_lo, s.slice(s![..keep]).to_owned(), b_hi)
}

fn product_site(up: bool) -> Array3<C64> {
    let mut t = Array3::zeros((1, 2, 1));
    t[(0, if up { 0 } else { 1 }, 0)] = C64::new(1.0, 0.0);
    t
}

/// Exact bond-dimension ≤ 2 MPS of a product of one- or two-site factors.
pub fn mps_from_product(spec: &InitialStateSpec, lattice: &LatticeSpec, chi_max: usize) -> MpsResult<MpsState> {
    spec.validate(lattice)?;
    let trivial = || Array1::from_elem(1, 1.0);
    let (geometry, tensors, lambdas) = match (lattice.geometry(), spec) {
        (Geometry::Finite { num_sites }, InitialStateSpec::SingleFlip { site }) => {
            let tensors = (0..num_sites).map(|k| product_site(k == *site)).collect();
            (lattice.geometry(), tensors, vec![trivial(); num_sites + 1])
        }
        (Geometry::Finite { num_sites }, _) => {
            let pairs = spec.pairs(num_sites).expect("valence-bond spec");
            let mut tensors = vec![Array3::zeros((1, 2, 1)); num_sites];
            let mut lambdas = vec![trivial(); num_sites + 1];
            for (lo, hi, label) in pairs {
                if hi != lo + 1 || lo % 2 != 0 {
                    return Err(MpsError::Unsupported(format!(
                        "pair ({lo}, {hi}) is not an intra-well bond; only dimer products are exact"
                    )));
                }
                let (b_lo, lam, b_hi) = dimer_tensors(label);
                tensors[lo] = b_lo;
                tensors[hi] = b_hi;
                lambdas[hi] = lam;
            }
            (lattice.geometry(), tensors, lambdas)
        }
        (Geometry::Infinite, InitialStateSpec::TripletProduct | InitialStateSpec::SingletProduct) => {
            let label =
                if matches!(spec, InitialStateSpec::TripletProduct) { BondLabel::TripletZ } else { BondLabel::Singlet };
            let (b_lo, lam, b_hi) = dimer_tensors(label);
            (Geometry::Infinite, vec![b_lo, b_hi], vec![trivial(), lam])
        }
        (Geometry::Infinite, _) => {
            return Err(MpsError::Unsupported("infinite chains start from a uniform dimer product".into()))
        }
    };
    Ok(MpsState { geometry, tensors, lambdas, chi_max, sv_cutoff: 1e-10, truncation_error: 0.0, evolved_time: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_schedule, ProtocolSpec};

    fn close(a: &Array2<C64>, b: &Array2<C64>, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn gate_limits() {
        assert!(close(&bond_gate(0.0, 0.7), &spin::identity(4), 1e-15));
        let g = bond_gate(1.3, 0.4);
        assert!(close(&g.dot(&bond_gate(1.3, -0.4)), &spin::identity(4), 1e-13));
        let u = g.dot(&spin::adjoint(&g));
        assert!(close(&u, &spin::identity(4), 1e-14));
        let swap_gate = bond_gate(2.0, std::f64::consts::PI / 2.0);
        assert!(spin::phase_insensitive_distance(&swap_gate, &spin::swap()) < 1e-14);
    }

    #[test]
    fn product_spectra() {
        let lat = LatticeSpec::finite(6).unwrap();
        for spec in [InitialStateSpec::TripletProduct, InitialStateSpec::SingletProduct] {
            let m = mps_from_product(&spec, &lat, 8).unwrap();
            for cut in 1..6 {
                let expect = if cut % 2 == 1 { 1.0 } else { 0.0 };
                assert!((m.schmidt_entropy(cut) - expect).abs() < 1e-14);
            }
            assert!(m.canonical_residual() < 1e-14);
        }
        let m = mps_from_product(&InitialStateSpec::SingleFlip { site: 2 }, &lat, 8).unwrap();
        assert!(m.bond_dimensions().iter().all(|&d| d == 1));
        let inf = mps_from_product(&InitialStateSpec::TripletProduct, &LatticeSpec::infinite(), 8).unwrap();
        assert!((inf.schmidt_entropy(1) - 1.0).abs() < 1e-14);
        assert!(inf.schmidt_entropy(0).abs() < 1e-14);
    }

    #[test]
    fn crossing_bonds_are_rejected() {
        let lat = LatticeSpec::finite(4).unwrap();
        let spec = InitialStateSpec::ExplicitVbs {
            bonds: vec![(0, 3), (1, 2)],
            labels: vec![BondLabel::TripletZ, BondLabel::TripletZ],
        };
        assert!(matches!(mps_from_product(&spec, &lat, 8), Err(MpsError::Unsupported(_))));
    }

    #[test]
    fn uncoupled_evolution_is_trivial() {
        let lat = LatticeSpec::finite(4).unwrap();
        let m0 = mps_from_product(&InitialStateSpec::TripletProduct, &lat, 8).unwrap();
        let sched = CouplingSchedule::new(vec![crate::model::Segment {
            start: 0.0,
            end: 1.0,
            j_even: 0.0,
            j_odd: 0.0,
        }])
        .unwrap();
        let mut m = m0.clone();
        m.evolve(&sched, 0.0, 1.0, &TebdOptions::default()).unwrap();
        assert_eq!(m.to_amplitudes().unwrap(), m0.to_amplitudes().unwrap());
        assert_eq!(m.truncation_error(), 0.0);
    }

    #[test]
    fn rdm_of_triplet_product() {
        let m = mps_from_product(&InitialStateSpec::TripletProduct, &LatticeSpec::finite(6).unwrap(), 8).unwrap();
        let on = m.two_site_rdm(2, 3).unwrap();
        assert!((on.population(BondState::TripletZ) - 1.0).abs() < 1e-14);
        let across = m.two_site_rdm(1, 4).unwrap();
        assert!(close(across.matrix(), &spin::identity(4).mapv(|x| x * 0.25), 1e-14));
        let inf = mps_from_product(&InitialStateSpec::SingletProduct, &LatticeSpec::infinite(), 8).unwrap();
        assert!((inf.two_site_rdm(4, 5).unwrap().population(BondState::Singlet) - 1.0).abs() < 1e-14);
        assert!((inf.two_site_rdm(5, 4).unwrap().population(BondState::Singlet) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_evolution_stays_canonical() {
        let lat = LatticeSpec::finite(8).unwrap();
        let mut m = mps_from_product(&InitialStateSpec::TripletProduct, &lat, 64).unwrap();
        let sched = build_schedule(&ProtocolSpec::homogeneous(1.0, 2.0).unwrap()).unwrap();
        m.evolve(&sched, 0.0, 2.0, &TebdOptions { chi_max: 64, ..Default::default() }).unwrap();
        assert!(m.canonical_residual() < 1e-8);
        for cut in 0..=8 {
            let sum: f64 = m.schmidt_values(cut).iter().map(|x| x * x).sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn correlation_strings_match_density_matrices() {
        let sched = build_schedule(&ProtocolSpec::homogeneous(1.0, 1.0).unwrap()).unwrap();
        for lat in [LatticeSpec::finite(10).unwrap(), LatticeSpec::infinite()] {
            let mut m = mps_from_product(&InitialStateSpec::TripletProduct, &lat, 32).unwrap();
            m.evolve(&sched, 0.0, 1.0, &TebdOptions { chi_max: 32, ..Default::default() }).unwrap();
            for i in [0, 1, 3] {
                let fast = m.correlation_row(i, 6).unwrap();
                let slow = m.rdm_row(i, 6).unwrap();
                for ((ss, pm), r) in fast.iter().zip(&slow) {
                    assert!((ss - r.spin_dot()).abs() < 1e-12);
                    assert!((pm - r.raise_lower()).norm() < 1e-12);
                }
            }
        }
    }
}
