//! Building a configuration from TOML with overrides and writing a run
//! directory, the same path the command-line tool takes.

use superlattice::cli::{parse_config, run_to_dir, to_toml};

const CONFIG: &str = r#"
engine = "tebd"
rng_seed = 1
[lattice]
num_sites = 12
[protocol]
kind = "homogeneous_switch"
coupling = 1.0
total_time = 2.0
[initial_state]
kind = "singlet_product"
[time_grid]
kind = "uniform"
step = 0.25
[observables]
energy = true
entropy_blocks = [6]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_config(CONFIG, &["numerics.chi_max=32".to_string()])?;
    print!("{}", to_toml(&config));
    let dir = std::env::temp_dir().join("superlattice-example-run");
    let manifest = run_to_dir(&config, &dir)?;
    println!("{} samples, status {:?}, written to {}", manifest.samples, manifest.status, dir.display());
    Ok(())
}
