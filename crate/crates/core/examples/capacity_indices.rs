//! Power and energy capacity of a projected aggregate and how much of the
//! target it covers.
//!
//! Run with `cargo run --example capacity_indices`.

use flexcap::capacity::{capacity_report, power_capacity, unused_capacity};
use flexcap::constraints::EnsembleSpec;
use flexcap::dynamics::{LoadDynamics, QosEnvelope};
use flexcap::solver::{project, SolverOptions};
use flexcap::spectral::{bandpass_target, evaluate_arma_psd, ArmaSpectrum, FrequencyGrid, Passband};

fn main() -> flexcap::Result<()> {
    let snd = evaluate_arma_psd(
        &ArmaSpectrum::synthetic_net_demand(),
        &FrequencyGrid::planning_default(),
    );
    let target = bandpass_target(&snd, &Passband::high_default());
    let qos = QosEnvelope::small_building();
    println!(
        "target needs {:.1} kW at ε = {}",
        power_capacity(&target, qos.eps[0])?,
        qos.eps[0]
    );

    for n in [100, 1000, 10_000] {
        let ens = EnsembleSpec::homogeneous("small", qos, LoadDynamics::small_building(), n)?;
        let r = project(&target, &ens, &SolverOptions::default())?;
        let rep = capacity_report(&r.aggregate, &target, &ens, n)?;
        println!(
            "n = {n:>6}: Pow {:8.1} kW  Eng {:8.1} kWh  ζP {:5.1}%  ζE {:5.1}%",
            rep.pow_kw, rep.eng_kwh, rep.zeta_p, rep.zeta_e
        );
        let (dp, de) = unused_capacity(&r.per_bin[0].scaled(1.0 / (n * n) as f64)?, &qos)?;
        println!("            one load keeps {dp:.3} kW and {de:.3} kWh in reserve");
    }
    Ok(())
}
