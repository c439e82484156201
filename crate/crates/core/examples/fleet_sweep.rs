//! Coverage indices as the fleet grows, for the high and low frequency
//! bands of the same net-demand spectrum.
//!
//! Run with `cargo run --release --example fleet_sweep`.

use flexcap::pipeline::{run_sweep, RunConfig};
use flexcap::spectral::{evaluate_arma_psd, ArmaSpectrum, FrequencyGrid};

fn main() -> flexcap::Result<()> {
    let cfg = RunConfig::default();
    let snd = evaluate_arma_psd(
        &ArmaSpectrum::synthetic_net_demand(),
        &FrequencyGrid::planning_default(),
    );
    for curve in run_sweep(&cfg, &snd)? {
        println!("{} band, {} loads:", curve.band, curve.bin);
        for p in &curve.points {
            println!("  n = {:>9}  ζP {:6.2}%  ζE {:6.2}%", p.n, p.zeta_p, p.zeta_e);
        }
    }
    Ok(())
}
