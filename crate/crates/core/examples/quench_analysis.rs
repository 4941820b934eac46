//! Derived quantities of a homogeneous quench: quasistationary averages and
//! the correlation front extracted from G⁺⁻(l, t), which the horizon picture
//! places at 2·v_s·t.

use superlattice::model::{spin_wave_velocity, InitialStateSpec, LatticeSpec, ProtocolSpec};
use superlattice::observables::{horizon_front, quasistationary_average};
use superlattice::simulation::{simulate, EngineKind, RunConfig, TimeGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_sites = 16;
    let vs = spin_wave_velocity(1.0);
    let t_rec = n_sites as f64 / vs;
    let mut c = RunConfig::new(
        EngineKind::Ed,
        LatticeSpec::finite(n_sites)?,
        ProtocolSpec::homogeneous(1.0, t_rec)?,
        InitialStateSpec::TripletProduct,
    );
    c.time_grid = TimeGrid::Uniform { step: t_rec / 100.0, end: None };
    c.observables.correlations_l_max = 7;
    let s = simulate(&c)?.series;

    for ch in ["tz_even", "tx_even", "tz_odd", "tx_odd"] {
        println!("⟨{ch}⟩_qs = {:.4}", quasistationary_average(&s, ch, 5.0 / vs, t_rec)?);
    }
    let columns: Vec<&[f64]> = (1..=7).map(|l| s.channel(&format!("Gpm_{l}"))).collect::<Result<_, _>>()?;
    let profiles: Vec<Vec<f64>> = (0..s.len()).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
    let front = horizon_front(s.times(), &profiles, 1e-3);
    for (l, t) in front.arrivals.iter().enumerate() {
        println!("G⁺⁻({}) departs at t = {}", l + 1, t.map_or("-".into(), |t| format!("{t:.3}")));
    }
    let speed = front.speed.unwrap_or(f64::NAN);
    println!("front speed {speed:.3} = {:.3} v_s", speed / vs);
    Ok(())
}
