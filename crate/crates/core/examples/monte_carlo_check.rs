//! Draw Gaussian sample paths with a feasible per-load spectrum and count
//! how often each quality-of-service limit is exceeded.
//!
//! Run with `cargo run --release --example monte_carlo_check`.

use flexcap::constraints::EnsembleSpec;
use flexcap::dynamics::{LoadDynamics, QosEnvelope};
use flexcap::montecarlo::{verify_chebyshev, MonteCarloOptions};
use flexcap::solver::{project, SolverOptions};
use flexcap::spectral::{bandpass_target, evaluate_arma_psd, ArmaSpectrum, FrequencyGrid, Passband};

fn main() -> flexcap::Result<()> {
    let snd = evaluate_arma_psd(
        &ArmaSpectrum::synthetic_net_demand(),
        &FrequencyGrid::planning_default(),
    );
    let target = bandpass_target(&snd, &Passband::high_default());
    let qos = QosEnvelope::small_building().with_eps([0.1; 4])?;
    let dynamics = LoadDynamics::small_building();

    let ens = EnsembleSpec::homogeneous("small", qos, dynamics, 1)?;
    let psd = project(&target, &ens, &SolverOptions::default())?.per_bin.remove(0);

    let rep = verify_chebyshev(&psd, &qos, &dynamics, 2024, &MonteCarloOptions::default())?;
    for c in rep.per_qos.iter().chain(&rep.capacity) {
        println!(
            "{:<16} threshold {:8.4}  exceeded {:>6} times  p̂ = {:.5} (ε = {})",
            c.name, c.threshold, c.exceedances, c.p_hat, c.eps
        );
    }
    println!(
        "{}",
        if rep.pass {
            "all limits hold"
        } else {
            "some limit exceeded"
        }
    );
    Ok(())
}
