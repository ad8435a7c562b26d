//! Run a Monte Carlo campaign described by a TOML file.
//!
//!     cargo run --release --example campaign -- examples/campaign.toml

use joint_weak::experiments::{load_campaign, run_campaign, CellResult};

fn main() -> joint_weak::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/campaign.toml").into());
    let cfg = load_campaign(path.as_ref())?;
    let cells = run_campaign(&cfg)?;
    for c in &cells {
        eprintln!(
            "{:>12} {:<9} N={:<8} rmse/CR = {}",
            c.mode.to_string(),
            c.estimator.label(),
            c.n_photons,
            c.rmse_over_cr.map_or("-".into(), |r| format!("{r:.3}"))
        );
    }
    CellResult::write_csv(&cells, std::io::stdout().lock())
}
