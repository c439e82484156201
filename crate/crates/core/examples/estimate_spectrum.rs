//! Estimate a net-demand spectrum from a simulated one-minute series and
//! fit a low-order ARMA model to it.
//!
//! Run with `cargo run --example estimate_spectrum`.

use flexcap::spectral::{estimate_psd, evaluate_arma_psd, fit_arma_spectrum, ArmaSpectrum, SpectralDensity};

fn main() -> flexcap::Result<()> {
    let model = ArmaSpectrum::synthetic_net_demand();
    let series = model.simulate(1 << 17, 1, "net demand")?;
    println!(
        "{} samples, sample variance {:.0} kW²",
        series.len(),
        series.autocovariance(0)
    );

    let welch = estimate_psd(&series, 4096, 0.5)?;
    println!(
        "Welch estimate on {} frequencies, variance {:.0} kW²",
        welch.grid().len(),
        welch.variance()
    );

    // the mean was removed, so the DC bin carries no information
    let mut values = welch.values().to_vec();
    values[0] = 0.0;
    let fit = fit_arma_spectrum(&SpectralDensity::new(welch.grid().clone(), values)?, 2, 1)?;
    println!("fitted ar = {:?}, ma = {:?}", fit.model.ar(), fit.model.ma());
    println!("true   ar = {:?}, ma = {:?}", model.ar(), model.ma());

    let fitted = evaluate_arma_psd(&fit.model, welch.grid());
    for k in [1, 10, 100, 1000] {
        let w = welch.grid().omegas()[k];
        println!(
            "ω = {w:8.3} rad/h  Welch {:12.1}  fit {:12.1}",
            welch.values()[k],
            fitted.values()[k]
        );
    }
    Ok(())
}
