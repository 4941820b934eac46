//! Lattice geometry, switching protocols, coupling schedules and initial-state
//! descriptions shared by every engine.
//!
//! Units are ħ = 1 throughout. The chain Hamiltonian is
//!
//! ```text
//! H(t) = -J1(t) Σ_j S_{2j}·S_{2j+1} - J2(t) Σ_j S_{2j+1}·S_{2j+2}
//! ```
//!
//! "Even" bonds `(2j, 2j+1)` are the intra-well bonds carrying `J1`; "odd"
//! bonds `(2j+1, 2j+2)` connect neighbouring wells and carry `J2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("lattice needs an even number of sites >= 2, got {0}")]
    BadSiteCount(usize),
    #[error("lattice spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("on-site interaction U must be positive, got {0}")]
    NonPositiveInteraction(f64),
    #[error("hopping amplitudes must be non-negative (t_in = {t_in}, t_out = {t_out})")]
    NegativeHopping { t_in: f64, t_out: f64 },
    #[error("total time must be positive and finite, got {0}")]
    BadTotalTime(f64),
    #[error("switching protocols need a non-zero coupling")]
    ZeroCoupling,
    #[error("periodic switch requires |J|·t_s = π, got |J|·t_s = {product}")]
    SwitchTimeMismatch { product: f64 },
    #[error("periodic switch needs at least one switch")]
    NoSwitches,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
}

pub type ModelResult<T> = Result<T, ModelError>;

/// Spin-wave velocity `v_s = Jπ/2` of the ferromagnetic Heisenberg chain, in
/// sites per unit time.
pub fn spin_wave_velocity(coupling: f64) -> f64 {
    coupling.abs() * PI / 2.0
}

/// Switching time `t_s = π/|J|`, after which a bond evolution is a swap.
pub fn switch_time(coupling: f64) -> f64 {
    PI / coupling.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondParity {
    /// Intra-well bonds `(2j, 2j+1)`.
    Even,
    /// Inter-well bonds `(2j+1, 2j+2)`.
    Odd,
}

impl BondParity {
    /// Parity of the bond `(site, site + 1)`.
    pub fn of_bond(site: usize) -> Self {
        if site % 2 == 0 {
            Self::Even
        } else {
            Self::Odd
        }
    }

    pub fn other(self) -> Self {
        match self {
            Self::Even => Self::Odd,
            Self::Odd => Self::Even,
        }
    }

    /// Left sites of all bonds of this parity on an open chain.
    pub fn bond_sites(self, num_sites: usize) -> impl Iterator<Item = usize> {
        let first = match self {
            Self::Even => 0,
            Self::Odd => 1,
        };
        (first..num_sites.saturating_sub(1)).step_by(2)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Even => "even",
            Self::Odd => "odd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    /// Open chain of `num_sites = 2N` sites.
    Finite { num_sites: usize },
    /// Infinite chain with a two-site (one double-well) unit cell.
    Infinite,
}

/// Chain geometry. Finite chains always have open boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLattice", into = "RawLattice")]
pub struct LatticeSpec {
    geometry: Geometry,
    spacing: f64,
}

impl LatticeSpec {
    pub fn finite(num_sites: usize) -> ModelResult<Self> {
        if num_sites < 2 || num_sites % 2 != 0 {
            return Err(ModelError::BadSiteCount(num_sites));
        }
        Ok(Self { geometry: Geometry::Finite { num_sites }, spacing: 1.0 })
    }

    pub fn infinite() -> Self {
        Self { geometry: Geometry::Infinite, spacing: 1.0 }
    }

    pub fn with_spacing(mut self, spacing: f64) -> ModelResult<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(ModelError::BadSpacing(spacing));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Number of sites `2N`, or `None` for the infinite chain.
    pub fn num_sites(&self) -> Option<usize> {
        match self.geometry {
            Geometry::Finite { num_sites } => Some(num_sites),
            Geometry::Infinite => None,
        }
    }

    /// Number of double wells `N`.
    pub fn num_wells(&self) -> Option<usize> {
        self.num_sites().map(|n| n / 2)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.geometry, Geometry::Infinite)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_sites: Option<usize>,
    #[serde(default)]
    infinite: bool,
    #[serde(default = "default_spacing")]
    spacing: f64,
}

fn default_spacing() -> f64 {
    1.0
}

impl TryFrom<RawLattice> for LatticeSpec {
    type Error = ModelError;

    fn try_from(raw: RawLattice) -> ModelResult<Self> {
        let base = match (raw.num_sites, raw.infinite) {
            (Some(n), false) => Self::finite(n)?,
            (None, true) => Self::infinite(),
            (Some(_), true) => {
                return Err(ModelError::InvalidSchedule(
                    "lattice cannot be both infinite and have num_sites".into(),
                ))
            }
            (None, false) => return Err(ModelError::BadSiteCount(0)),
        };
        base.with_spacing(raw.spacing)
    }
}

impl From<LatticeSpec> for RawLattice {
    fn from(l: LatticeSpec) -> Self {
        Self { num_sites: l.num_sites(), infinite: l.is_infinite(), spacing: l.spacing }
    }
}

/// Result of mapping Hubbard parameters onto spin couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HubbardCouplings {
    pub j_even: f64,
    pub j_odd: f64,
    /// `false` when `max(t_in, t_out)/U > 0.2`, where the superexchange
    /// description is no longer reliable.
    pub strong_coupling: bool,
}

/// Superexchange couplings `J1 = 4 t_in²/U`, `J2 = 4 t_out²/U`.
pub fn couplings_from_hubbard(t_in: f64, t_out: f64, u: f64) -> ModelResult<HubbardCouplings> {
    if !(u > 0.0) {
        return Err(ModelError::NonPositiveInteraction(u));
    }
    if t_in < 0.0 || t_out < 0.0 {
        return Err(ModelError::NegativeHopping { t_in, t_out });
    }
    let strong_coupling = t_in.max(t_out) / u <= 0.2;
    if !strong_coupling {
        log::warn!(
            "max(t_in, t_out)/U = {:.3} exceeds 0.2; the spin model is outside its strong-coupling regime",
            t_in.max(t_out) / u
        );
    }
    Ok(HubbardCouplings { j_even: 4.0 * t_in * t_in / u, j_odd: 4.0 * t_out * t_out / u, strong_coupling })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolSpec {
    /// `J1 = 0, J2 = J` for all `t > 0`.
    SingleSwitch { coupling: f64, total_time: f64 },
    /// Alternating half-periods of length `t_s`, starting with `J1 = 0, J2 = J`.
    PeriodicSwitch {
        coupling: f64,
        #[serde(default)]
        switch_time: Option<f64>,
        num_switches: usize,
        /// Accept a switch time that is not `π/|J|`.
        #[serde(default)]
        timing_override: bool,
    },
    /// `J1 = J2 = J` for all `t > 0`.
    HomogeneousSwitch { coupling: f64, total_time: f64 },
}

impl ProtocolSpec {
    pub fn single(coupling: f64, total_time: f64) -> ModelResult<Self> {
        let p = Self::SingleSwitch { coupling, total_time };
        p.validate()?;
        Ok(p)
    }

    /// Periodic switch with the ideal switching time `π/|J|`.
    pub fn periodic(coupling: f64, num_switches: usize) -> ModelResult<Self> {
        let p = Self::PeriodicSwitch {
            coupling,
            switch_time: (coupling != 0.0).then(|| switch_time(coupling)),
            num_switches,
            timing_override: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn homogeneous(coupling: f64, total_time: f64) -> ModelResult<Self> {
        let p = Self::HomogeneousSwitch { coupling, total_time };
        p.validate()?;
        Ok(p)
    }

    pub fn coupling(&self) -> f64 {
        match *self {
            Self::SingleSwitch { coupling, .. }
            | Self::PeriodicSwitch { coupling, .. }
            | Self::HomogeneousSwitch { coupling, .. } => coupling,
        }
    }

    /// Switch time of a periodic protocol (defaults to `π/|J|`).
    pub fn switch_time(&self) -> Option<f64> {
        match *self {
            Self::PeriodicSwitch { coupling, switch_time: ts, .. } => {
                Some(ts.unwrap_or_else(|| switch_time(coupling)))
            }
            _ => None,
        }
    }

    pub fn total_time(&self) -> f64 {
        match *self {
            Self::SingleSwitch { total_time, .. } | Self::HomogeneousSwitch { total_time, .. } => total_time,
            Self::PeriodicSwitch { num_switches, .. } => {
                num_switches as f64 * self.switch_time().unwrap_or(f64::NAN)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SingleSwitch { .. } => "single_switch",
            Self::PeriodicSwitch { .. } => "periodic_switch",
            Self::HomogeneousSwitch { .. } => "homogeneous_switch",
        }
    }

    pub fn validate(&self) -> ModelResult<()> {
        let coupling = self.coupling();
        if !coupling.is_finite() {
            return Err(ModelError::ZeroCoupling);
        }
        match *self {
            Self::SingleSwitch { total_time, .. } | Self::HomogeneousSwitch { total_time, .. } => {
                if !(total_time > 0.0 && total_time.is_finite()) {
                    return Err(ModelError::BadTotalTime(total_time));
                }
            }
            Self::PeriodicSwitch { num_switches, timing_override, .. } => {
                if coupling == 0.0 {
                    return Err(ModelError::ZeroCoupling);
                }
                if num_switches == 0 {
                    return Err(ModelError::NoSwitches);
                }
                let ts = self.switch_time().unwrap_or(f64::NAN);
                if !(ts > 0.0 && ts.is_finite()) {
                    return Err(ModelError::BadTotalTime(ts));
                }
                let product = coupling.abs() * ts;
                if !timing_override && (product - PI).abs() > 1e-12 * PI {
                    return Err(ModelError::SwitchTimeMismatch { product });
                }
            }
        }
        Ok(())
    }
}

/// A time interval with constant couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// `J1`, intra-well.
    pub j_even: f64,
    /// `J2`, inter-well.
    pub j_odd: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn coupling(&self, parity: BondParity) -> f64 {
        match parity {
            BondParity::Even => self.j_even,
            BondParity::Odd => self.j_odd,
        }
    }
}

/// Piecewise-constant couplings covering `[0, total_time]` without gaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSchedule {
    segments: Vec<Segment>,
}

impl CouplingSchedule {
    pub fn new(segments: Vec<Segment>) -> ModelResult<Self> {
        if segments.is_empty() {
            return Err(ModelError::InvalidSchedule("no segments".into()));
        }
        if segments[0].start != 0.0 {
            return Err(ModelError::InvalidSchedule("schedule must start at t = 0".into()));
        }
        for (k, seg) in segments.iter().enumerate() {
            if !(seg.end > seg.start) || !seg.end.is_finite() {
                return Err(ModelError::InvalidSchedule(format!("segment {k} has non-positive length")));
            }
            if k > 0 && segments[k - 1].end != seg.start {
                return Err(ModelError::InvalidSchedule(format!("gap or overlap before segment {k}")));
            }
        }
        Ok(Self { segments })
    }

    /// Alternating switch sequence with arbitrary interval lengths; the first
    /// interval has `J1 = 0, J2 = J`. Used to model switching-time noise.
    pub fn alternating(coupling: f64, intervals: &[f64]) -> ModelResult<Self> {
        let mut t = 0.0;
        let segments = intervals
            .iter()
            .enumerate()
            .map(|(k, &len)| {
                let (j_even, j_odd) = if k % 2 == 0 { (0.0, coupling) } else { (coupling, 0.0) };
                let seg = Segment { start: t, end: t + len, j_even, j_odd };
                t += len;
                seg
            })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Pieces of the schedule overlapping `[t_from, t_to]` (or `[t_to, t_from]`
    /// when going backwards), clipped to that window, in traversal order.
    pub fn pieces(&self, t_from: f64, t_to: f64) -> Vec<Segment> {
        let (lo, hi) = if t_from <= t_to { (t_from, t_to) } else { (t_to, t_from) };
        let mut out: Vec<Segment> = self
            .segments
            .iter()
            .filter_map(|s| {
                let start = s.start.max(lo);
                let end = s.end.min(hi);
                (end > start).then_some(Segment { start, end, ..*s })
            })
            .collect();
        if t_to < t_from {
            out.reverse();
        }
        out
    }

    /// Couplings in effect at time `t` (right-continuous).
    pub fn couplings_at(&self, t: f64) -> Option<Segment> {
        self.segments
            .iter()
            .find(|s| t >= s.start && t < s.end)
            .or_else(|| self.segments.last().filter(|s| t == s.end))
            .copied()
    }
}

pub fn build_schedule(protocol: &ProtocolSpec) -> ModelResult<CouplingSchedule> {
    protocol.validate()?;
    let j = protocol.coupling();
    match *protocol {
        ProtocolSpec::SingleSwitch { total_time, .. } => {
            CouplingSchedule::new(vec![Segment { start: 0.0, end: total_time, j_even: 0.0, j_odd: j }])
        }
        ProtocolSpec::HomogeneousSwitch { total_time, .. } => {
            CouplingSchedule::new(vec![Segment { start: 0.0, end: total_time, j_even: j, j_odd: j }])
        }
        ProtocolSpec::PeriodicSwitch { num_switches, .. } => {
            let ts = protocol.switch_time().expect("periodic protocol has a switch time");
            // k·t_s rather than accumulated sums keeps boundaries exact multiples
            let segments = (0..num_switches)
                .map(|k| {
                    let (j_even, j_odd) = if k % 2 == 0 { (0.0, j) } else { (j, 0.0) };
                    Segment { start: k as f64 * ts, end: (k + 1) as f64 * ts, j_even, j_odd }
                })
                .collect();
            CouplingSchedule::new(segments)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondLabel {
    /// `(|↑↓⟩ + |↓↑⟩)/√2`
    TripletZ,
    /// `(|↑↓⟩ - |↓↑⟩)/√2`, oriented from the lower to the higher site.
    Singlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateSpec {
    /// `Π_j |t^z_{2j,2j+1}⟩`
    TripletProduct,
    /// `Π_j |s_{2j,2j+1}⟩`
    SingletProduct,
    /// All spins down except an up spin at `site`.
    SingleFlip { site: usize },
    /// Arbitrary valence-bond state: a perfect matching with one label per pair.
    ExplicitVbs { bonds: Vec<(usize, usize)>, labels: Vec<BondLabel> },
}

impl InitialStateSpec {
    pub fn validate(&self, lattice: &LatticeSpec) -> ModelResult<()> {
        match self {
            Self::TripletProduct | Self::SingletProduct => Ok(()),
            Self::SingleFlip { site } => match lattice.num_sites() {
                Some(n) if *site >= n => Err(ModelError::InvalidInitialState(format!(
                    "flipped site {site} outside a chain of {n} sites"
                ))),
                None => Err(ModelError::InvalidInitialState(
                    "a single flip is not translation invariant".into(),
                )),
                _ => Ok(()),
            },
            Self::ExplicitVbs { bonds, labels } => {
                let n = lattice.num_sites().ok_or_else(|| {
                    ModelError::InvalidInitialState("explicit valence-bond states need a finite chain".into())
                })?;
                if labels.len() != bonds.len() {
                    return Err(ModelError::InvalidInitialState("one label per bond required".into()));
                }
                check_perfect_matching(bonds, n)
            }
        }
    }

    /// Pair list `(lower site, higher site, label)` for valence-bond specs.
    pub fn pairs(&self, num_sites: usize) -> Option<Vec<(usize, usize, BondLabel)>> {
        let dimers = |label| (0..num_sites / 2).map(|j| (2 * j, 2 * j + 1, label)).collect();
        match self {
            Self::TripletProduct => Some(dimers(BondLabel::TripletZ)),
            Self::SingletProduct => Some(dimers(BondLabel::Singlet)),
            Self::SingleFlip { .. } => None,
            Self::ExplicitVbs { bonds, labels } => Some(
                bonds.iter().zip(labels).map(|(&(a, b), &l)| (a.min(b), a.max(b), l)).collect(),
            ),
        }
    }
}

pub(crate) fn check_perfect_matching(bonds: &[(usize, usize)], num_sites: usize) -> ModelResult<()> {
    let mut seen = vec![false; num_sites];
    for &(a, b) in bonds {
        if a == b || a >= num_sites || b >= num_sites {
            return Err(ModelError::InvalidInitialState(format!("bad pair ({a}, {b})")));
        }
        for s in [a, b] {
            if std::mem::replace(&mut seen[s], true) {
                return Err(ModelError::InvalidInitialState(format!("site {s} is paired twice")));
            }
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(ModelError::InvalidInitialState("matching does not cover every site".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hubbard_mapping() {
        let c = couplings_from_hubbard(1.0, 0.0, 8.0).unwrap();
        assert_eq!((c.j_even, c.j_odd), (0.5, 0.0));
        let c = couplings_from_hubbard(0.0, 0.0, 5.0).unwrap();
        assert_eq!((c.j_even, c.j_odd), (0.0, 0.0));
        let c = couplings_from_hubbard(0.3, 0.3, 7.0).unwrap();
        assert_eq!(c.j_even, c.j_odd);
        assert!(c.strong_coupling);
        assert!(!couplings_from_hubbard(3.0, 0.0, 4.0).unwrap().strong_coupling);
        assert!(matches!(couplings_from_hubbard(1.0, 1.0, 0.0), Err(ModelError::NonPositiveInteraction(_))));
        assert!(couplings_from_hubbard(1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn single_switch_schedule() {
        let s = build_schedule(&ProtocolSpec::single(1.0, 2.0 * PI).unwrap()).unwrap();
        assert_eq!(s.segments(), &[Segment { start: 0.0, end: 2.0 * PI, j_even: 0.0, j_odd: 1.0 }]);
    }

    #[test]
    fn periodic_schedule_alternates() {
        let s = build_schedule(&ProtocolSpec::periodic(1.0, 2).unwrap()).unwrap();
        assert_eq!(
            s.segments(),
            &[
                Segment { start: 0.0, end: PI, j_even: 0.0, j_odd: 1.0 },
                Segment { start: PI, end: 2.0 * PI, j_even: 1.0, j_odd: 0.0 },
            ]
        );
    }

    #[test]
    fn homogeneous_schedule() {
        let s = build_schedule(&ProtocolSpec::homogeneous(1.0, 5.0).unwrap()).unwrap();
        assert_eq!(s.segments(), &[Segment { start: 0.0, end: 5.0, j_even: 1.0, j_odd: 1.0 }]);
    }

    #[test]
    fn periodic_timing_is_enforced() {
        let bad = ProtocolSpec::PeriodicSwitch {
            coupling: 1.0,
            switch_time: Some(3.0),
            num_switches: 3,
            timing_override: false,
        };
        assert!(matches!(bad.validate(), Err(ModelError::SwitchTimeMismatch { .. })));
        let ok = ProtocolSpec::PeriodicSwitch {
            coupling: 1.0,
            switch_time: Some(3.0),
            num_switches: 3,
            timing_override: true,
        };
        assert!(ok.validate().is_ok());
        // antiferromagnetic coupling swaps at |J| t_s = π
        assert!(ProtocolSpec::periodic(-2.0, 4).is_ok());
        assert!(ProtocolSpec::periodic(1.0, 0).is_err());
    }

    #[test]
    fn pieces_are_clipped_and_ordered() {
        let s = build_schedule(&ProtocolSpec::periodic(1.0, 3).unwrap()).unwrap();
        let p = s.pieces(1.0, 5.0);
        assert_eq!(p.len(), 2);
        assert_eq!((p[0].start, p[0].end), (1.0, PI));
        assert_eq!((p[1].start, p[1].end), (PI, 5.0));
        let back = s.pieces(5.0, 1.0);
        assert_eq!(back[0].end, 5.0);
        assert_eq!(back[1].start, 1.0);
    }

    #[test]
    fn initial_state_validation() {
        let l = LatticeSpec::finite(6).unwrap();
        assert!(InitialStateSpec::SingleFlip { site: 6 }.validate(&l).is_err());
        let vbs = InitialStateSpec::ExplicitVbs {
            bonds: vec![(0, 3), (1, 4), (2, 5)],
            labels: vec![BondLabel::TripletZ; 3],
        };
        assert!(vbs.validate(&l).is_ok());
        let bad = InitialStateSpec::ExplicitVbs {
            bonds: vec![(0, 3), (3, 4), (2, 5)],
            labels: vec![BondLabel::TripletZ; 3],
        };
        assert!(bad.validate(&l).is_err());
        assert!(LatticeSpec::finite(5).is_err());
    }

    #[test]
    fn lattice_from_toml() {
        let l: LatticeSpec = toml::from_str("num_sites = 8\nspacing = 0.5").unwrap();
        assert_eq!(l.num_sites(), Some(8));
        assert_eq!(l.spacing(), 0.5);
        let l: LatticeSpec = toml::from_str("infinite = true").unwrap();
        assert!(l.is_infinite());
        assert!(toml::from_str::<LatticeSpec>("num_sites = 7").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn periodic_segments_partition_time(j in 0.1f64..5.0, n in 1usize..40) {
                let p = ProtocolSpec::periodic(j, n).unwrap();
                let s = build_schedule(&p).unwrap();
                let total: f64 = s.segments().iter().map(Segment::duration).sum();
                prop_assert!((total - p.total_time()).abs() < 1e-9 * p.total_time());
                for seg in s.segments() {
                    prop_assert!((seg.duration() - PI / j).abs() <= 1e-12 * (PI / j));
                }
            }
        }
    }
}
