use s7flow::density::{entropy, estimate_density, GridSpec};
use s7flow::fokker_planck::{entropy_rate_fisher, entropy_rate_formula};
use s7flow::sde::{ensemble_states, simulate_ensemble, EnsembleSpec, SaveSchedule, Scheme};
use s7flow::{SdeProblem, SpherePoint};

// Brownian motion from a pole stays zonal, so a one-axis grid in the polar
// angle captures the whole density.
#[test]
fn zonal_entropy_rate_matches_entropy_increase() {
    let problem = SdeProblem::brownian_motion(SpherePoint::basis(1));
    let dt = 0.005;
    let spec = EnsembleSpec::new(200_000, 80, dt, 9, Scheme::Heun)
        .saving(SaveSchedule::Steps(vec![60, 70, 80]));
    let paths = simulate_ensemble(&problem, &spec).unwrap();
    let grid = GridSpec::marginal(&[0], 20).unwrap();
    let densities: Vec<_> = (0..3)
        .map(|slot| estimate_density(&ensemble_states(&paths, slot), &grid).unwrap())
        .collect();
    let s: Vec<f64> = densities.iter().map(|d| entropy(d).entropy).collect();
    let fd_rate = (s[2] - s[0]) / (20.0 * dt);
    let mid = densities[1].to_grid();
    let fisher = entropy_rate_fisher(&mid, problem.dynamics()).unwrap().rate;
    let bracket = entropy_rate_formula(&mid, problem.dynamics()).unwrap().rate;
    println!(
        "entropy rate: finite difference {fd_rate:.4}, fisher {fisher:.4}, bracket {bracket:.4}"
    );
    assert!(fd_rate > 0.0);
    assert!(fisher > 0.0 && bracket > 0.0);
    assert!(
        (fisher - fd_rate).abs() < 0.15 * fd_rate,
        "fisher {fisher} vs {fd_rate}"
    );
}
