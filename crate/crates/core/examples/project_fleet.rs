//! Project the high-frequency part of a net-demand spectrum onto a mixed
//! fleet of small and large buildings, and bracket the unknown correlation
//! between them with the two bound solves.
//!
//! Run with `cargo run --example project_fleet`.

use flexcap::constraints::{BinSpec, EnsembleSpec};
use flexcap::dynamics::{LoadDynamics, QosEnvelope};
use flexcap::solver::{project, solve_bounds, SolverOptions};
use flexcap::spectral::{bandpass_target, evaluate_arma_psd, ArmaSpectrum, FrequencyGrid, Passband};

fn main() -> flexcap::Result<()> {
    let snd = evaluate_arma_psd(
        &ArmaSpectrum::synthetic_net_demand(),
        &FrequencyGrid::planning_default(),
    );
    let target = bandpass_target(&snd, &Passband::high_default());
    let opts = SolverOptions::default();

    let small = BinSpec::new(
        "small",
        QosEnvelope::small_building(),
        LoadDynamics::small_building(),
        900,
    )?;
    let large = BinSpec::new(
        "large",
        QosEnvelope::large_building(),
        LoadDynamics::large_building(),
        2100,
    )?;

    let only_large = EnsembleSpec::new(vec![large.clone()])?;
    let r = project(&target, &only_large, &opts)?;
    println!(
        "2100 large buildings: objective {:.3e}, {} iterations",
        r.objective, r.iterations
    );
    for d in &r.duals {
        println!(
            "  {:?} row: {:.4} of budget {:.4}, dual {:.3e}",
            d.tag, d.value, d.budget, d.dual
        );
    }

    let mixed = EnsembleSpec::new(vec![small, large])?;
    let pair = solve_bounds(&target, &mixed, &opts)?;
    println!(
        "mixed fleet: lower objective {:.3e}, upper objective {:.3e}",
        pair.lower.objective, pair.upper.objective
    );
    Ok(())
}
