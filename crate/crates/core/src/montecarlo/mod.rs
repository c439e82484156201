//! Sample-path synthesis and empirical checks of the probabilistic QoS
//! guarantees.

mod chebyshev;
mod functionals;
mod synth;

pub use chebyshev::{binomial_se, verify_chebyshev, LimitCheck, MonteCarloOptions, ViolationReport};
pub use functionals::{qos_functionals, qos_functionals_causal, whole_steps, zoh_coefficients, QosSeries, STEP_TOL};
pub use synth::{average_periodogram, synthesize_correlated, synthesize_paths, Colorer, PathBatch, ALIASING_TOL};
