//! Configuration-driven runs: one protocol, one engine, observables sampled
//! on a time grid.

use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ed::{self, EdError, KrylovOptions, KrylovStats, StateVector};
use crate::model::{
    build_schedule, BondParity, CouplingSchedule, InitialStateSpec, LatticeSpec, ModelError, ProtocolSpec,
};
use crate::mps::{self, MpsError, MpsState, TebdOptions};
use crate::observables::{
    self, bond_populations, energy_per_site, ObservableError, ObservableSeries, SeriesMetadata, StateQuery,
    TrustFlag,
};
use crate::vbs::{self, VbsError, VbsState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Ed,
    Tebd,
    Itebd,
    Vbs,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ed => "ed",
            Self::Tebd => "tebd",
            Self::Itebd => "itebd",
            Self::Vbs => "vbs",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub dt_trotter: f64,
    pub chi_max: usize,
    pub sv_cutoff: f64,
    pub krylov_tol: f64,
    pub krylov_max_dim: usize,
    /// Allowed cumulative truncation error per unit time.
    pub truncation_budget: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt_trotter: 0.02,
            chi_max: 64,
            sv_cutoff: 1e-10,
            krylov_tol: 1e-10,
            krylov_max_dim: 40,
            truncation_budget: 1e-6,
        }
    }
}

impl Numerics {
    pub fn tebd(&self) -> TebdOptions {
        TebdOptions {
            dt: self.dt_trotter,
            chi_max: self.chi_max,
            sv_cutoff: self.sv_cutoff,
            truncation_budget_rate: self.truncation_budget,
        }
    }

    pub fn krylov(&self) -> KrylovOptions {
        KrylovOptions { tol: self.krylov_tol, max_dim: self.krylov_max_dim, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeGrid {
    /// `t = k·step` up to `end` (default: protocol total time).
    Uniform { step: f64, end: Option<f64> },
    /// `t = k·t_s` for a periodic switch.
    Stroboscopic,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::Uniform { step: 0.05, end: None }
    }
}

/// Which channels to record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSelection {
    pub populations: bool,
    /// Populations over bonds away from the chain ends (`*_bulk` channels).
    pub bulk_populations: bool,
    pub energy: bool,
    /// Edge-block lengths `l` on finite chains; the infinite chain always
    /// reports both cut types when this is non-empty.
    pub entropy_blocks: Vec<usize>,
    /// Largest distance of `G⁺⁻(l)`/`Q⁺⁻(l)`; 0 disables.
    pub correlations_l_max: usize,
    /// Number of points of the noise grid `q_k = 2πk/(n·a)`; 0 disables.
    pub noise_q_points: usize,
    /// Largest pair distance in the infinite-chain noise sum.
    pub noise_max_distance: usize,
    /// `⟨S^z_j⟩` for every site (finite chains).
    pub sz_profile: bool,
}

impl Default for ObservableSelection {
    fn default() -> Self {
        Self {
            populations: true,
            bulk_populations: false,
            energy: false,
            entropy_blocks: Vec::new(),
            correlations_l_max: 0,
            noise_q_points: 0,
            noise_max_distance: 48,
            sz_profile: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub lattice: LatticeSpec,
    pub protocol: ProtocolSpec,
    pub initial_state: InitialStateSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub observables: ObservableSelection,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "run".to_string()
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Ed(#[from] EdError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Vbs(#[from] VbsError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SimError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Self::Config { field: field.to_string(), message: message.into() }
    }

    /// Numerical-budget failures (truncation budget, Krylov convergence).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Self::Ed(EdError::KrylovConvergence { .. })
                | Self::Mps(MpsError::TruncationBudget { .. })
                | Self::Mps(MpsError::Svd(_))
        )
    }
}

fn model_field(field: &str) -> impl Fn(ModelError) -> SimError + '_ {
    move |e| SimError::config(field, e.to_string())
}

impl RunConfig {
    /// Default observables on a uniform grid.
    pub fn new(engine: EngineKind, lattice: LatticeSpec, protocol: ProtocolSpec, initial_state: InitialStateSpec) -> Self {
        Self {
            engine,
            lattice,
            protocol,
            initial_state,
            numerics: Numerics::default(),
            time_grid: TimeGrid::default(),
            observables: ObservableSelection::default(),
            rng_seed: 0,
            output_dir: default_output_dir(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.protocol.validate().map_err(model_field("protocol"))?;
        self.initial_state.validate(&self.lattice).map_err(model_field("initial_state"))?;
        let infinite = self.lattice.is_infinite();
        match (self.engine, infinite) {
            (EngineKind::Itebd, false) => {
                return Err(SimError::config("engine", "itebd requires an infinite lattice (lattice.infinite = true)"))
            }
            (EngineKind::Ed | EngineKind::Tebd | EngineKind::Vbs, true) => {
                return Err(SimError::config("engine", format!("{} requires a finite lattice", self.engine.name())))
            }
            _ => {}
        }
        if self.engine == EngineKind::Ed && self.lattice.num_sites().is_some_and(|n| n > ed::MAX_SITES) {
            return Err(SimError::config("lattice.num_sites", format!("ed supports at most {} sites", ed::MAX_SITES)));
        }
        if self.engine == EngineKind::Vbs {
            match self.protocol {
                ProtocolSpec::HomogeneousSwitch { .. } => {
                    return Err(SimError::config("protocol.kind", "vbs engine covers single and periodic switches"))
                }
                ProtocolSpec::PeriodicSwitch { timing_override: true, .. } => {
                    return Err(SimError::config("protocol.timing_override", "vbs engine needs exact swaps"))
                }
                ProtocolSpec::PeriodicSwitch { .. } if self.time_grid != TimeGrid::Stroboscopic => {
                    return Err(SimError::config("time_grid.kind", "vbs engine samples stroboscopically"))
                }
                ProtocolSpec::SingleSwitch { .. } if self.initial_state != InitialStateSpec::TripletProduct => {
                    return Err(SimError::config("initial_state", "closed forms assume the triplet product"))
                }
                _ => {}
            }
        }
        let n = &self.numerics;
        if matches!(self.engine, EngineKind::Tebd | EngineKind::Itebd) {
            if !(n.dt_trotter > 0.0) {
                return Err(SimError::config("numerics.dt_trotter", "must be positive"));
            }
            if n.chi_max < 2 {
                return Err(SimError::config("numerics.chi_max", "must be at least 2"));
            }
            if !(n.sv_cutoff >= 0.0) {
                return Err(SimError::config("numerics.sv_cutoff", "must be non-negative"));
            }
        }
        if self.engine == EngineKind::Ed && !(n.krylov_tol > 0.0) {
            return Err(SimError::config("numerics.krylov_tol", "must be positive"));
        }
        if self.engine == EngineKind::Ed && n.krylov_max_dim < 2 {
            return Err(SimError::config("numerics.krylov_max_dim", "must be at least 2"));
        }
        self.times()?;
        if let Some(num_sites) = self.lattice.num_sites() {
            let o = &self.observables;
            if let Some(&l) = o.entropy_blocks.iter().find(|&&l| l == 0 || l >= num_sites) {
                return Err(SimError::config("observables.entropy_blocks", format!("block {l} out of range")));
            }
            if o.correlations_l_max >= num_sites {
                return Err(SimError::config("observables.correlations_l_max", "exceeds the chain"));
            }
        } else if self.observables.sz_profile {
            return Err(SimError::config("observables.sz_profile", "only available on finite chains"));
        }
        Ok(())
    }

    /// Sample times, validated against the protocol.
    pub fn times(&self) -> Result<Vec<f64>, SimError> {
        let total = self.protocol.total_time();
        match self.time_grid {
            TimeGrid::Stroboscopic => match self.protocol {
                ProtocolSpec::PeriodicSwitch { num_switches, .. } => {
                    let ts = self.protocol.switch_time().expect("periodic");
                    Ok((0..=num_switches).map(|k| k as f64 * ts).collect())
                }
                _ => Err(SimError::config("time_grid.kind", "stroboscopic sampling needs a periodic switch")),
            },
            TimeGrid::Uniform { step, end } => {
                let end = end.unwrap_or(total);
                if !(step > 0.0) {
                    return Err(SimError::config("time_grid.step", "must be positive"));
                }
                if !(end >= 0.0) || end > total * (1.0 + 1e-12) {
                    return Err(SimError::config("time_grid.end", format!("must lie in [0, {total}]")));
                }
                let count = (end / step + 1e-9).floor() as usize;
                Ok((0..=count).map(|k| k as f64 * step).collect())
            }
        }
    }
}

/// Engine state behind a run.
#[derive(Clone, Debug)]
pub enum EngineState {
    Ed(StateVector),
    Mps(MpsState),
    Vbs(VbsState),
    /// Closed-form single switch; nothing to store.
    Analytic,
}

impl EngineState {
    pub fn as_query(&self) -> Option<&dyn StateQuery> {
        match self {
            Self::Ed(s) => Some(s),
            Self::Mps(s) => Some(s),
            Self::Vbs(s) => Some(s),
            Self::Analytic => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub krylov_steps: usize,
    pub krylov_matvecs: usize,
    pub krylov_max_error: f64,
    pub truncation_error: f64,
    pub max_bond_entropy: f64,
    pub trusted_until: Option<f64>,
    pub wall_time_seconds: f64,
}

#[derive(Debug)]
pub struct SimulationOutput {
    pub series: ObservableSeries,
    pub state: EngineState,
    pub diagnostics: Diagnostics,
    /// Set when the run stopped early on a numerical failure; the series
    /// holds every sample taken before it.
    pub failure: Option<SimError>,
}

pub fn initial_engine_state(config: &RunConfig) -> Result<EngineState, SimError> {
    Ok(match config.engine {
        EngineKind::Ed => EngineState::Ed(ed::encode_product_state(&config.initial_state, &config.lattice)?),
        EngineKind::Tebd | EngineKind::Itebd => {
            EngineState::Mps(mps::mps_from_product(&config.initial_state, &config.lattice, config.numerics.chi_max)?)
        }
        EngineKind::Vbs => match config.protocol {
            ProtocolSpec::PeriodicSwitch { .. } => {
                EngineState::Vbs(VbsState::from_spec(&config.initial_state, &config.lattice)?)
            }
            _ => EngineState::Analytic,
        },
    })
}

/// Channel names and values at one time.
pub fn measure(
    config: &RunConfig,
    state: &EngineState,
    schedule: &CouplingSchedule,
    t: f64,
) -> Result<Vec<(String, f64)>, SimError> {
    let sel = &config.observables;
    let mut out: Vec<(String, f64)> = Vec::new();
    let Some(query) = state.as_query() else {
        let p = vbs::single_switch_observables(t, config.protocol.coupling());
        // the closed forms describe bulk bonds
        let even = [("tx", p.txy_even), ("ty", p.txy_even), ("tz", p.tz_even), ("s", p.s_even)];
        for (wanted, suffix) in [(sel.populations, ""), (sel.bulk_populations, "_bulk")] {
            if wanted {
                out.extend(even.iter().map(|(n, v)| (format!("{n}_even{suffix}"), *v)));
                out.extend(["tx", "ty", "tz", "s"].iter().map(|n| (format!("{n}_odd{suffix}"), p.odd)));
            }
        }
        if !sel.entropy_blocks.is_empty() {
            out.push(("S_odd_approx".into(), p.s_odd_approx));
        }
        return Ok(out);
    };
    if sel.populations {
        for parity in [BondParity::Even, BondParity::Odd] {
            let p = bond_populations(query, parity)?;
            for (name, v) in [("tx", p.tx), ("ty", p.ty), ("tz", p.tz), ("s", p.s)] {
                out.push((format!("{name}_{}", parity.label()), v));
            }
        }
    }
    if sel.bulk_populations {
        for parity in [BondParity::Even, BondParity::Odd] {
            let p = observables::bulk_bond_populations(query, parity)?;
            for (name, v) in [("tx", p.tx), ("ty", p.ty), ("tz", p.tz), ("s", p.s)] {
                out.push((format!("{name}_{}_bulk", parity.label()), v));
            }
        }
    }
    if sel.energy {
        let seg = schedule.couplings_at(t).expect("time inside schedule");
        out.push(("energy".into(), energy_per_site(query, seg.j_even, seg.j_odd)?));
    }
    if !sel.entropy_blocks.is_empty() {
        out.extend(observables::entropy_channels(query, &sel.entropy_blocks)?);
    }
    let spacing = config.lattice.spacing();
    if sel.correlations_l_max > 0 || sel.noise_q_points > 0 {
        let reach = match query.num_sites() {
            Some(n) if sel.noise_q_points > 0 => n - 1,
            _ => sel.correlations_l_max.max(if sel.noise_q_points > 0 { sel.noise_max_distance } else { 0 }),
        };
        let table = observables::PairTable::build(query, reach)?;
        if sel.correlations_l_max > 0 {
            for c in observables::transverse_from_table(&table, sel.correlations_l_max) {
                out.push((format!("Gpm_{}", c.distance), c.g_pm));
            }
            for c in observables::transverse_from_table(&table, sel.correlations_l_max) {
                out.push((format!("Qpm_{}", c.distance), c.q_pm));
            }
        }
        if sel.noise_q_points > 0 {
            let grid = observables::uniform_q_grid(sel.noise_q_points, spacing);
            let spectrum = observables::noise_from_table(&table, &grid, spacing);
            let prefix = if spectrum.scaled_per_well { "NDelta" } else { "Delta" };
            out.extend(spectrum.delta.iter().enumerate().map(|(k, v)| (format!("{prefix}_{k}"), *v)));
        }
    }
    if sel.sz_profile {
        if let EngineState::Ed(psi) = state {
            out.extend(psi.sz_profile().into_iter().enumerate().map(|(j, v)| (format!("sz_{j}"), v)));
        } else if let Some(n) = query.num_sites() {
            for j in 0..n {
                let other = if j + 1 < n { j + 1 } else { j - 1 };
                let rho = query.two_site_rdm(j, other)?;
                let m = rho.matrix();
                // ⟨S^z_j⟩ from the first factor: up states are indices 0 and 1
                let up = m[(0, 0)].re + m[(1, 1)].re;
                out.push((format!("sz_{j}"), up - 0.5));
            }
        }
    }
    Ok(out)
}

fn series_metadata(config: &RunConfig) -> Result<SeriesMetadata, SimError> {
    let mut meta = SeriesMetadata::new(config.engine.name())
        .with_parameter("lattice", &config.lattice)
        .with_parameter("protocol", &config.protocol)
        .with_parameter("initial_state", &config.initial_state)
        .with_parameter("numerics", &config.numerics)
        .with_parameter("rng_seed", config.rng_seed)
        .with_parameter("spin_wave_velocity", crate::model::spin_wave_velocity(config.protocol.coupling()));
    let sel = &config.observables;
    if sel.correlations_l_max > 0 {
        meta = meta.with_parameter("correlation_normalization", "per contributing pair; Q sign (-1)^min(i,j)");
    }
    if sel.noise_q_points > 0 {
        let grid = observables::uniform_q_grid(sel.noise_q_points, config.lattice.spacing());
        meta = meta.with_parameter("q_grid", grid);
        let convention = if config.lattice.is_infinite() {
            "NDelta_k = N·Δ(q_k), size-independent per-unit-cell form"
        } else {
            "Delta_k = Δ(q_k) = G(q_k) - δ_{q,0}/2 from the exact pair sum"
        };
        meta = meta.with_parameter("noise_convention", convention);
    }
    if matches!(config.engine, EngineKind::Tebd | EngineKind::Itebd) {
        meta = meta.with_parameter("trust_rule", "max bond entropy < log2(chi_max) - 1");
    }
    Ok(meta)
}

/// Runs a configuration in memory.
pub fn simulate(config: &RunConfig) -> Result<SimulationOutput, SimError> {
    config.validate()?;
    let started = Instant::now();
    let schedule = build_schedule(&config.protocol).map_err(model_field("protocol"))?;
    let times = config.times()?;
    let mut state = initial_engine_state(config)?;
    let mut series = ObservableSeries::new(series_metadata(config)?);
    let mut diagnostics = Diagnostics::default();
    let mut krylov = KrylovStats::default();
    let mut failure = None;
    let mut previous = 0.0;
    let mut layers_done = 0usize;
    let mut trusted_prefix = true;

    for &t in &times {
        let advanced: Result<(), SimError> = match &mut state {
            EngineState::Ed(psi) => {
                psi.evolve(&schedule, previous, t, &config.numerics.krylov()).map(|s| krylov.merge(s)).map_err(Into::into)
            }
            EngineState::Mps(m) => m.evolve(&schedule, previous, t, &config.numerics.tebd()).map_err(Into::into),
            EngineState::Vbs(v) => {
                let ts = config.protocol.switch_time().expect("periodic");
                let target = (t / ts).round() as usize;
                while layers_done < target {
                    layers_done += 1;
                    *v = vbs::apply_switch_layer(v, vbs::layer_parity(layers_done));
                }
                Ok(())
            }
            EngineState::Analytic => Ok(()),
        };
        if let Err(e) = advanced {
            failure = Some(e);
            break;
        }
        previous = t;
        let values = measure(config, &state, &schedule, t)?;
        if let EngineState::Mps(m) = &state {
            let entropy = m.max_bond_entropy();
            let trusted = m.is_trusted();
            series.metadata.trust.push(TrustFlag {
                trusted,
                max_bond_entropy: entropy,
                truncation_error: m.truncation_error(),
            });
            diagnostics.max_bond_entropy = diagnostics.max_bond_entropy.max(entropy);
            trusted_prefix &= trusted;
            if trusted_prefix {
                diagnostics.trusted_until = Some(t);
            }
        }
        series.push(t, &values)?;
    }
    if let EngineState::Mps(m) = &state {
        diagnostics.truncation_error = m.truncation_error();
    }
    diagnostics.krylov_steps = krylov.steps;
    diagnostics.krylov_matvecs = krylov.matvecs;
    diagnostics.krylov_max_error = krylov.max_error;
    diagnostics.wall_time_seconds = started.elapsed().as_secs_f64();
    Ok(SimulationOutput { series, state, diagnostics, failure })
}

/// Named parameters for the sweep driver and reports.
pub type Parameters = IndexMap<String, serde_json::Value>;
