//! A small sweep driven from an inline TOML config, printed as CSV.
//!
//!     cargo run --release --example config_sweep

use lindblad_sdp::config::SweepConfig;
use lindblad_sdp::driver::{csv_string, run_sweep};
use lindblad_sdp::sdp::ClarabelBackend;

const CONFIG: &str = r#"
schema_version = 1

[chain]
n_left = 1
n_middle = 1
n_right = 1
g = 0.05

[baths]
beta_right = 1.0

[optimization]
objectives = ["pop", "pop_coh"]

[[sweep]]
axis = "beta_left"
log = { start = 0.1, stop = 10.0, points = 3 }
"#;

fn main() -> lindblad_sdp::Result<()> {
    let cfg = SweepConfig::from_toml_str(CONFIG)?;
    let report = run_sweep(&cfg, &ClarabelBackend::default())?;
    let rows: Vec<_> = report.rows.iter().map(|r| r.row.clone()).collect();
    print!("{}", csv_string(&rows)?);
    eprintln!("{} rows, {} failed", rows.len(), report.n_failed());
    Ok(())
}
