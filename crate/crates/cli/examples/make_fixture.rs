//! Writes the small synthetic sample dataset shipped in `data/sample`.
//!
//! ```text
//! cargo run -p marketstates --example make_fixture -- data/sample
//! ```

use std::path::PathBuf;

use marketstates::synthetic::{block_regimes, random_levels, write_inputs, FactorPanel};

const EPOCHS: usize = 24;

const EVENTS: &str = "\
# Example event markers for the synthetic sample. The dates are arbitrary
# points inside the sample period and do not refer to real market events.
date,name
2010-06-15,example event A
2011-03-01,example event B
2011-09-20,example event C
2012-01-10,example event D
";

const CONFIG: &str = r#"# Run configuration for the synthetic sample dataset.
seed = 20240607

[paths]
prices = "prices.csv"
sectors = "sectors.csv"
events = "events_example.csv"
output = "../../out/sample"

[epochs]
length = 21

[clustering]
k_max = 8
restarts = 20
k = { standard = 3, reduced_cov = 3, reduced_corr = 3, demeaned = 3 }

[robustness]
enabled = true
subset_sizes = [8, 12, 16]
repetitions = 10
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/sample".into()));
    std::fs::create_dir_all(&dir)?;
    let panel = FactorPanel {
        sectors: 4,
        per_sector: 5,
        epoch_length: 21,
        regimes: block_regimes(EPOCHS, 3, 4),
        market: random_levels(EPOCHS, 0.5, 3.0, 11),
        pair_strength: 0.7,
        sector_strength: 0.3,
        noise: 1.0,
        seed: 7,
    }
    .generate();
    write_inputs(&dir, &panel)?;
    std::fs::write(dir.join("events_example.csv"), EVENTS)?;
    std::fs::write(dir.join("sample.toml"), CONFIG)?;
    println!("wrote sample inputs to {}", dir.display());
    Ok(())
}
