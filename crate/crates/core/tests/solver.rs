mod common;

use flexcap::capacity::capacity_indices;
use flexcap::constraints::{build_constraints, feasibility_report, BinSpec, EnsembleSpec, FEASIBILITY_TOL};
use flexcap::dynamics::{LoadDynamics, QosEnvelope};
use flexcap::solver::{project, project_onto, solve_bounds, SolverOptions};
use flexcap::spectral::{bandpass_target, evaluate_arma_psd, ArmaSpectrum, FrequencyGrid, Passband, SpectralDensity};
use proptest::prelude::*;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn synthetic_target(band: Passband) -> SpectralDensity {
    let snd = evaluate_arma_psd(
        &ArmaSpectrum::synthetic_net_demand(),
        &FrequencyGrid::planning_default(),
    );
    bandpass_target(&snd, &band)
}

fn large(count: u64) -> EnsembleSpec {
    EnsembleSpec::homogeneous(
        "large",
        QosEnvelope::large_building(),
        LoadDynamics::large_building(),
        count,
    )
    .unwrap()
}

#[test]
fn five_point_matches_active_set_oracle() {
    for seed in 0..8 {
        let (target, cs) = common::five_point_instance(seed);
        let r = project_onto(&target, &cs, &opts()).unwrap();
        assert!(r.converged, "seed {seed}");
        let oracle = common::oracle_for(&target, &cs);
        let scale = target.values().iter().copied().fold(1.0, f64::max);
        for (x, o) in r.per_bin[0].values().iter().zip(&oracle) {
            assert!((x - o).abs() <= 1e-4 * scale, "seed {seed}: {x} vs {o}");
        }
    }
}

#[test]
fn random_instances_are_feasible_with_small_complementarity() {
    let grid = FrequencyGrid::planning_default();
    for seed in 0..3 {
        let mut rng = common::rng(100 + seed);
        let target = common::random_target(&grid, &mut rng);
        let ens = common::random_ensemble(&mut rng);
        let pair = solve_bounds(&target, &ens, &opts()).unwrap();
        for r in [&pair.lower, &pair.upper] {
            assert!(r.converged);
            for d in &r.duals {
                assert!(d.margin >= -FEASIBILITY_TOL * d.budget, "{d:?}");
                assert!(d.dual.abs() * d.margin.abs() / d.budget <= 1e-6, "{d:?}");
            }
        }
    }
}

#[test]
fn projection_of_a_projection_is_itself() {
    let target = synthetic_target(Passband::high_default());
    let ens = large(300);
    let once = project(&target, &ens, &opts()).unwrap();
    let twice = project(&once.aggregate, &ens, &opts()).unwrap();
    let norm: f64 = once
        .aggregate
        .grid()
        .integrate(&once.aggregate.values().iter().map(|v| v * v).collect::<Vec<_>>());
    assert!(twice.objective <= 1e-10 * norm, "{} vs {norm}", twice.objective);
}

#[test]
fn larger_fleets_track_the_target_at_least_as_well() {
    let target = synthetic_target(Passband::high_default());
    let mut last = f64::INFINITY;
    for n in [30, 300, 3000, 30000] {
        let r = project(&target, &large(n), &opts()).unwrap();
        assert!(r.objective <= last * (1.0 + 1e-9), "n = {n}");
        last = r.objective;
    }
}

#[test]
fn lower_bound_aggregate_never_exceeds_upper() {
    let target = synthetic_target(Passband::high_default());
    let ens = EnsembleSpec::new(vec![
        BinSpec::new(
            "small",
            QosEnvelope::small_building(),
            LoadDynamics::small_building(),
            900,
        )
        .unwrap(),
        BinSpec::new(
            "large",
            QosEnvelope::large_building(),
            LoadDynamics::large_building(),
            2100,
        )
        .unwrap(),
    ])
    .unwrap();
    let pair = solve_bounds(&target, &ens, &opts()).unwrap();
    // two independent numerical solves agree where both track the target;
    // allow for rounding at the level of the peak
    let peak = target.values().iter().copied().fold(0.0, f64::max);
    for (l, u) in pair.lower.aggregate.values().iter().zip(pair.upper.aggregate.values()) {
        assert!(l <= &(u + 1e-12 * peak), "{l} > {u}");
    }
    let eps = (0.05, 0.05);
    let lo = capacity_indices(&pair.lower.aggregate, &target, eps, 24.0).unwrap();
    let hi = capacity_indices(&pair.upper.aggregate, &target, eps, 24.0).unwrap();
    assert!(lo.0 <= hi.0 && lo.1 <= hi.1, "{lo:?} {hi:?}");
}

#[test]
fn refining_the_grid_barely_moves_the_indices() {
    let band = Passband::high_default();
    let coarse_grid = FrequencyGrid::planning_default();
    let fine_grid = FrequencyGrid::hybrid(4096, 1024, 1.0, coarse_grid.omega_max()).unwrap();
    let model = ArmaSpectrum::synthetic_net_demand();
    let zeta = |grid: &FrequencyGrid| {
        let target = bandpass_target(&evaluate_arma_psd(&model, grid), &band);
        let r = project(&target, &large(3000), &opts()).unwrap();
        capacity_indices(&r.aggregate, &target, (0.05, 0.05), 24.0).unwrap()
    };
    let (a, b) = (zeta(&coarse_grid), zeta(&fine_grid));
    assert!((a.0 - b.0).abs() < 1.0 && (a.1 - b.1).abs() < 1.0, "{a:?} vs {b:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn convex_combinations_stay_feasible(seed in 0u64..1000, theta in 0.0f64..=1.0) {
        let grid = FrequencyGrid::planning_default();
        let mut rng = common::rng(seed);
        let ens = common::random_ensemble(&mut rng);
        let a = project(&common::random_target(&grid, &mut rng), &ens, &opts()).unwrap();
        let b = project(&common::random_target(&grid, &mut rng), &ens, &opts()).unwrap();
        let mix: Vec<SpectralDensity> = a.per_bin.iter().zip(&b.per_bin).map(|(x, y)| {
            let v = x.values().iter().zip(y.values()).map(|(p, q)| theta * p + (1.0 - theta) * q).collect();
            SpectralDensity::new(grid.clone(), v).unwrap()
        }).collect();
        let cs = build_constraints(&ens, &grid).unwrap();
        prop_assert!(feasibility_report(&mix, &cs).unwrap().feasible);
    }

    #[test]
    fn outputs_are_nonnegative_and_feasible(seed in 0u64..1000) {
        let grid = FrequencyGrid::planning_default();
        let mut rng = common::rng(seed);
        let ens = common::random_ensemble(&mut rng);
        let r = project(&common::random_target(&grid, &mut rng), &ens, &opts()).unwrap();
        prop_assert!(r.per_bin.iter().all(|s| s.values().iter().all(|v| *v >= 0.0)));
        let cs = build_constraints(&ens, &grid).unwrap();
        prop_assert!(feasibility_report(&r.per_bin, &cs).unwrap().feasible);
    }

    #[test]
    fn relaxing_budgets_never_raises_the_objective(seed in 0u64..1000) {
        let grid = FrequencyGrid::planning_default();
        let mut rng = common::rng(seed);
        let target = common::random_target(&grid, &mut rng);
        let ens = common::random_ensemble(&mut rng);
        let doubled = EnsembleSpec::new(
            ens.bins().iter().map(|b| BinSpec::new(b.label.clone(), b.qos, b.dynamics, 2 * b.count).unwrap()).collect(),
        ).unwrap();
        let a = project(&target, &ens, &opts()).unwrap();
        let b = project(&target, &doubled, &opts()).unwrap();
        let norm = grid.integrate(&target.values().iter().map(|v| v * v).collect::<Vec<_>>());
        prop_assert!(b.objective <= a.objective + 1e-9 * norm);
    }
}
