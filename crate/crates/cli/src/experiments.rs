use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use s7flow::density::{entropy, estimate_density, max_entropy, GridSpec};
use s7flow::exotic::{
    circle_images, circle_images_csv, entropy_exotic, h_forward, h_inverse, integrate_on_surface,
    pushforward_field, pushforward_flow, Bump, Deformation, ExoticPoint, Homeomorphism,
    ScalingFunction,
};
use s7flow::flow::{cocycle_residual, inverse_residual, isometry_check};
use s7flow::fokker_planck::fokker_planck_residual;
use s7flow::frame::{all_generators, frame_matrix, lie_derivative_metric, ConstantCombination};
use s7flow::io::trajectories_csv;
use s7flow::linalg::expm;
use s7flow::noise::{sample_brownian, sample_brownian_path};
use s7flow::rng::path_rng;
use s7flow::sde::{
    ensemble_mean, ensemble_states, simulate_ensemble, NoiseMode, StartDistribution,
};
use s7flow::{
    CombinedField, EnsembleSpec, FlowMap, FrameField, Mat8, SaveSchedule, Scheme, SdeProblem,
    SharedField, SpherePoint, Vec8, VectorField,
};

use crate::config::{BetaPreset, DeformationFamily, Experiment, ExperimentConfig, FieldPreset};
use crate::summary::Check;
use crate::svg::{line_chart, Series};
use crate::{CliError, Outputs};

type Res<T> = Result<T, CliError>;

const HEUN_REPLICAS: u64 = 8;
const COCYCLE_REPLICAS: u64 = 64;

pub fn dispatch(cfg: &ExperimentConfig, out: &mut Outputs) -> Res<Vec<Check>> {
    match cfg.experiment {
        Experiment::FrameVerify => frame_verify(cfg, out),
        Experiment::Simulate => simulate(cfg, out),
        Experiment::FlowCheck => flow_check(cfg, out),
        Experiment::Entropy => entropy_series(cfg, out),
        Experiment::FpCheck => fp_check(cfg, out),
        Experiment::ExoticCompare => exotic_compare(cfg, out),
        Experiment::Circles => circles(cfg, out),
    }
}

fn scheme(cfg: &ExperimentConfig) -> Res<Scheme> {
    cfg.scheme
        .parse()
        .map_err(|e: s7flow::Error| CliError::Config(format!("key `scheme`: {e}")))
}

fn start_point(cfg: &ExperimentConfig) -> Res<SpherePoint> {
    match &cfg.start {
        None => Ok(SpherePoint::basis(1)),
        Some(v) => Ok(SpherePoint::normalize(Vec8::from_column_slice(v))?),
    }
}

fn start_distribution(cfg: &ExperimentConfig) -> StartDistribution {
    match cfg.cap_radius {
        Some(radius) => StartDistribution::UniformCap { radius },
        None => StartDistribution::Fixed,
    }
}

pub fn build_problem(cfg: &ExperimentConfig, initial: SpherePoint) -> Res<SdeProblem> {
    let s = 1.0 / 7f64.sqrt();
    let problem = match cfg.fields {
        FieldPreset::Frame => {
            let fields = cfg
                .frames
                .iter()
                .map(|&m| FrameField::new(m).map(|f| Arc::new(f) as SharedField))
                .collect::<s7flow::Result<Vec<_>>>()?;
            SdeProblem::new(None, fields, NoiseMode::PerField, initial)?
        }
        FieldPreset::Diagonal => SdeProblem::single(CombinedField::constant([s; 7]), initial)?,
        FieldPreset::Alternating => {
            SdeProblem::single(CombinedField::constant([s, -s, s, -s, s, -s, s]), initial)?
        }
        FieldPreset::FirstCoordinate => {
            SdeProblem::single(CombinedField::first_coordinate(), initial)?
        }
    };
    Ok(problem)
}

pub fn homeomorphism(cfg: &ExperimentConfig) -> Res<Homeomorphism> {
    let deformation = match cfg.deformation {
        DeformationFamily::Identity => Deformation::Identity,
        DeformationFamily::Radial => Deformation::radial(cfg.epsilon)?,
    };
    let beta = match cfg.beta {
        BetaPreset::One => ScalingFunction::Constant(1.0),
        BetaPreset::Smooth => ScalingFunction::Bump {
            amplitude: 0.15,
            bump: Bump {
                inner: 0.1,
                outer: 0.9,
            },
        },
        BetaPreset::Kink => ScalingFunction::Kink { kappa: 0.1 },
    };
    Ok(Homeomorphism { deformation, beta })
}

fn sci_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn sample_points(seed: u64, n: usize) -> Vec<SpherePoint> {
    // a stream family disjoint from the ensemble's
    let master = seed ^ 0x005e_ed0f_9017;
    (0..n)
        .map(|i| SpherePoint::random(&mut path_rng(master, i as u64)))
        .collect()
}

fn frame_verify(cfg: &ExperimentConfig, out: &mut Outputs) -> Res<Vec<Check>> {
    let points = sample_points(cfg.seed()?, cfg.n_paths);
    let (mut gram, mut tangency): (f64, f64) = (0.0, 0.0);
    for p in &points {
        let f = frame_matrix(p.as_vec());
        gram = gram.max(
            (f.transpose() * f - s7flow::exotic::Mat7::identity())
                .abs()
                .max(),
        );
        tangency = tangency.max((p.as_vec().transpose() * f).abs().max());
    }
    let killing_points = &points[..points.len().min(100)];
    let mut table = String::from("mu,square_residual,killing_residual\n");
    let (mut square, mut killing): (f64, f64) = (0.0, 0.0);
    for (k, j) in all_generators().iter().enumerate() {
        let sq = (j * j + Mat8::identity()).abs().max();
        let mut kr: f64 = 0.0;
        for p in killing_points {
            kr = kr.max(lie_derivative_metric(|x| j * x, p, 1e-5)?.abs().max());
        }
        let _ = writeln!(table, "{},{sq},{kr}", k + 1);
        square = square.max(sq);
        killing = killing.max(kr);
    }
    let mut rng = path_rng(cfg.seed()? ^ 0xc0ef, 0);
    let mut combo: f64 = 0.0;
    for p in killing_points {
        let c = SpherePoint::random(&mut rng).into_vec();
        let field = ConstantCombination(std::array::from_fn(|k| c[k]));
        combo = combo.max(
            lie_derivative_metric(|x| field.eval(x), p, 1e-5)?
                .abs()
                .max(),
        );
    }
    out.write("frame_residuals.csv", &table)?;
    Ok(vec![
        Check::at_most("gram_residual", gram, 1e-12),
        Check::at_most("tangency", tangency, 1e-14),
        Check::at_most("generator_square_residual", square, 1e-14),
        Check::at_most("killing_residual_frame", killing, 1e-6),
        Check::at_most("killing_residual_combinations", combo, 1e-6),
    ])
}

/// `E[z_t] = exp(t/2 · C) z0` for driftless linear dynamics, with
/// `C z = Σ K²z` the Itô correction.
fn linear_mean(problem: &SdeProblem, t: f64) -> Res<Option<Vec8>> {
    let d = problem.dynamics();
    if !d.is_linear() || d.drift().is_some() {
        return Ok(None);
    }
    let mut c = Mat8::zeros();
    for k in 0..8 {
        c.set_column(k, &d.ito_correction(&Vec8::ith(k, 1.0))?);
    }
    Ok(Some(expm(&(c * (0.5 * t))) * problem.initial().as_vec()))
}

fn simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> Res<Vec<Check>> {
    let steps = cfg.steps()?;
    let problem = build_problem(cfg, start_point(cfg)?)?;
    let save = match cfg.save_every {
        Some(k) => SaveSchedule::Every(k),
        None => SaveSchedule::Steps(vec![0, steps]),
    };
    let spec = EnsembleSpec::new(cfg.n_paths, steps, cfg.dt, cfg.seed()?, scheme(cfg)?)
        .saving(save)
        .starting(start_distribution(cfg));
    let paths = simulate_ensemble(&problem, &spec)?;
    out.write("trajectories.csv", &trajectories_csv(&paths))?;

    let times = paths[0].times.clone();
    let means: Vec<Vec8> = (0..times.len()).map(|s| ensemble_mean(&paths, s)).collect();
    let mut csv = String::from("t,m1,m2,m3,m4,m5,m6,m7,m8\n");
    for (t, m) in times.iter().zip(&means) {
        let _ = write!(csv, "{t}");
        for x in m.iter() {
            let _ = write!(csv, ",{x}");
        }
        csv.push('\n');
    }
    out.write("mean.csv", &csv)?;
    if cfg.svg {
        let series: Vec<Vec<(f64, f64)>> = (0..8)
            .map(|k| times.iter().zip(&means).map(|(t, m)| (*t, m[k])).collect())
            .collect();
        let labels = ["z1", "z2", "z3", "z4", "z5", "z6", "z7", "z8"];
        let s: Vec<Series> = series
            .iter()
            .zip(labels)
            .map(|(p, label)| Series { label, points: p })
            .collect();
        out.write("mean.svg", &line_chart("Ensemble mean", "t", "E[z]", &s))?;
    }

    let norm = paths
        .iter()
        .flat_map(|p| p.states.iter())
        .map(|z| (z.as_vec().norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut checks = vec![Check::at_most("norm_defect", norm, 1e-12)];
    if matches!(spec.start, StartDistribution::Fixed) && cfg.n_paths > 1 {
        let slot = times.len() - 1;
        if let Some(expected) = linear_mean(&problem, times[slot])? {
            let se = s7flow::sde::ensemble_standard_error(&paths, slot);
            let m = &means[slot];
            let z = (0..8)
                .map(|k| {
                    let d = m[k] - expected[k];
                    if se[k] > 0.0 {
                        (d / se[k]).abs()
                    } else if d.abs() < 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max);
            checks.push(
                Check::at_most("final_mean_z_score", z, 3.5).with_note("max over 8 components"),
            );
        }
    }
    Ok(checks)
}

fn flow_check(cfg: &ExperimentConfig, out: &mut Outputs) -> Res<Vec<Check>> {
    let n = cfg.steps()?;
    if n % 8 != 0 {
        return Err(CliError::Config(format!(
            "key `n_steps`: flow-check needs a multiple of 8, got {n}"
        )));
    }
    let seed = cfg.seed()?;
    let problem = build_problem(cfg, start_point(cfg)?)?;
    let dynamics = Arc::new(problem.dynamics().clone());
    let noise = Arc::new(sample_brownian(n, cfg.dt, dynamics.n_channels(), seed)?);
    let points = sample_points(seed, cfg.n_paths.clamp(2, 200));
    let g = |a, b, m, s| FlowMap::from_noise(dynamics.clone(), noise.clone(), a, b, m, s);
    let mut csv = String::from("scheme,substeps,cocycle,inverse,isometry\n");
    let mut checks = Vec::new();

    if dynamics.is_linear() {
        let e = Scheme::ExactRotation;
        let (g12, g1, g2) = (
            g(0, n, n, e)?,
            g(0, n / 2, n / 2, e)?,
            g(n / 2, n, n / 2, e)?,
        );
        let cocycle = cocycle_residual(&g12, &g1, &g2, &points)?;
        let inverse = inverse_residual(&g12, &points)?;
        let iso = isometry_check(&g12, &points)?;
        let id = g(n / 2, n / 2, 1, e)?;
        let identity = points
            .iter()
            .map(|p| id.apply(p.as_vec()).map(|x| (x - p.as_vec()).norm()))
            .collect::<s7flow::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let _ = writeln!(csv, "exact_rotation,{n},{cocycle},{inverse},{iso}");
        checks.push(Check::at_most("exact_cocycle_residual", cocycle, 1e-12));
        checks.push(Check::at_most("exact_identity_residual", identity, 1e-12));
        checks.push(Check::at_most("exact_inverse_residual", inverse, 1e-12));
        checks.push(Check::at_most("exact_isometry_defect", iso, 1e-12));
    }

    // Heun residuals are averaged over independent noise paths: for a single
    // path they are sums of random cubic increments and need not be monotone.
    let mut cocycles = Vec::new();
    let few = &points[..points.len().min(20)];
    for m in [n / 8, n / 4, n / 2] {
        let (mut cocycle, mut inverse, mut iso) = (0.0, 0.0, 0.0);
        for r in 0..COCYCLE_REPLICAS {
            let noise = Arc::new(sample_brownian_path(
                n,
                cfg.dt,
                dynamics.n_channels(),
                seed,
                r,
            )?);
            let g = |a, b, m| {
                FlowMap::from_noise(dynamics.clone(), noise.clone(), a, b, m, Scheme::Heun)
            };
            let g12 = g(0, n, m)?;
            cocycle += cocycle_residual(&g12, &g(0, n / 2, m)?, &g(n / 2, n, m)?, few)?;
            inverse += inverse_residual(&g12, few)?;
            iso += isometry_check(&g12, few)?;
        }
        let k = COCYCLE_REPLICAS as f64;
        let (cocycle, inverse, iso) = (cocycle / k, inverse / k, iso / k);
        let _ = writeln!(csv, "heun,{m},{cocycle},{inverse},{iso}");
        cocycles.push(cocycle);
    }
    out.write("flow_residuals.csv", &csv)?;
    let increases = cocycles.windows(2).filter(|w| w[1] >= w[0]).count();
    checks.push(
        Check::at_most(
            "heun_cocycle_non_decreasing_refinements",
            increases as f64,
            0.0,
        )
        .with_note(format!("residuals {}", sci_list(&cocycles))),
    );
    Ok(checks)
}

fn snapshot_steps(cfg: &ExperimentConfig, steps: usize) -> Res<Vec<usize>> {
    let t_final = steps as f64 * cfg.dt;
    let times = cfg.save_times.clone().unwrap_or_else(|| {
        vec![0.0, 0.2, 0.5, 1.0, 2.0]
            .into_iter()
            .filter(|t| *t < t_final)
            .collect()
    });
    let mut idx = Vec::new();
    for t in times {
        let k = (t / cfg.dt).round();
        if (k * cfg.dt - t).abs() > 1e-9 || k as usize > steps {
            return Err(CliError::Config(format!(
                "key `save_times`: {t} is not a multiple of dt within [0, {t_final}]"
            )));
        }
        idx.push(k as usize);
    }
    idx.push(steps);
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

fn entropy_series(cfg: &ExperimentConfig, out: &mut Outputs) -> Res<Vec<Check>> {
    let steps = cfg.steps()?;
    let saves = snapshot_steps(cfg, steps)?;
    let grid = GridSpec::uniform(cfg.polar_bins, cfg.azimuth_bins)?;
    let problem = build_problem(cfg, start_point(cfg)?)?;
    let start = StartDistribution::UniformCap {
        radius: cfg.cap_radius.unwrap_or(0.1),
    };
    let spec = EnsembleSpec::new(cfg.n_paths, steps, cfg.dt, cfg.seed()?, scheme(cfg)?)
        .saving(SaveSchedule::Steps(saves.clone()))
        .starting(start);
    let paths = simulate_ensemble(&problem, &spec)?;
    let mut reports = Vec::new();
    let mut last_density = None;
    for (slot, k) in saves.iter().enumerate() {
        let d =
            estimate_density(&ensemble_states(&paths, slot), &grid)?.at_time(*k as f64 * cfg.dt);
        reports.push(entropy(&d));
        last_density = Some(d);
    }
    let mut csv = String::from("t,entropy,standard_error,bias_correction,occupied_bins\n");
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.time, r.entropy, r.standard_error, r.bias_correction, r.occupied_bins
        );
    }
    out.write("entropy.csv", &csv)?;
    if let Some(d) = &last_density {
        out.write("density_final.csv", &d.to_text())?;
    }
    let series: Vec<(f64, f64)> = reports.iter().map(|r| (r.time, r.entropy)).collect();
    if cfg.svg {
        let limit: Vec<(f64, f64)> = series.iter().map(|(t, _)| (*t, max_entropy())).collect();
        out.write(
            "entropy.svg",
            &line_chart(
                "Entropy of the ensemble",
                "t",
                "S",
                &[
                    Series {
                        label: "estimate",
                        points: &series,
                    },
                    Series {
                        label: "log vol",
                        points: &limit,
                    },
                ],
            ),
        )?;
    }
    let drop = reports
        .windows(2)
        .map(|w| {
            let se = (w[0].standard_error.powi(2) + w[1].standard_error.powi(2)).sqrt();
            w[0].entropy - w[1].entropy - 2.0 * se
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut checks = Vec::new();
    if reports.len() > 1 {
        checks.push(
            Check::at_most("entropy_decrease_beyond_two_se", drop, 0.0).with_note(format!(
                "series {:.4?}",
                series.iter().map(|p| p.1).collect::<Vec<_>>()
            )),
        );
    }
    let last = reports.last().expect("at least one snapshot");
    if last.time >= 2.0 - 1e-9 {
        checks.push(Check::at_most(
            "final_entropy_gap",
            (last.entropy - max_entropy()).abs(),
            0.1,
        ));
    }
    Ok(checks)
}

fn fp_check(cfg: &ExperimentConfig, out: &mut Outputs) -> Res<Vec<Check>> {
    let grid = GridSpec::uniform(cfg.polar_bins, cfg.azimuth_bins)?;
    let problem = build_problem(cfg, start_point(cfg)?)?;
    let total = grid.n_bins();
    let count = cfg.fp_points.min(total);
    let uniform = 3.0 / PI.powi(4);
    let mut csv = String::from("phi1,phi2,phi3,phi4,phi5,phi6,phi7,residual\n");
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let idx = grid.bin_from_linear(k * total / count);
        let phi = grid.centre(&idx);
        let r = fokker_planck_residual(|_| uniform, |_| 0.0, problem.dynamics(), &phi, 1e-3)?;
        for x in phi {
            let _ = write!(csv, "{x},");
        }
        let _ = writeln!(csv, "{r}");
        worst = worst.max(r.abs());
    }
    out.write("fp_residuals.csv", &csv)?;
    Ok(vec![Check::at_most(
        "uniform_fokker_planck_residual",
        worst,
        1e-3,
    )])
}

fn exotic_compare(cfg: &ExperimentConfig, out: &mut Outputs) -> Res<Vec<Check>> {
    let steps = cfg.steps()?;
    if steps % 16 != 0 {
        return Err(CliError::Config(format!(
            "key `n_steps`: exotic-compare needs a multiple of 16, got {steps}"
        )));
    }
    let seed = cfg.seed()?;
    let h = homeomorphism(cfg)?;
    let initial = start_point(cfg)?;
    let problem = build_problem(cfg, initial)?;
    let spec = EnsembleSpec::new(cfg.n_paths, steps, cfg.dt, seed, scheme(cfg)?)
        .saving(SaveSchedule::Final)
        .starting(start_distribution(cfg));
    let paths = simulate_ensemble(&problem, &spec)?;
    let finals = ensemble_states(&paths, paths[0].states.len() - 1);
    let transported = finals
        .iter()
        .map(|z| h_forward(z, &h))
        .collect::<s7flow::Result<Vec<_>>>()?;
    let mut round_trip: f64 = 0.0;
    for (z, g) in finals.iter().zip(&transported) {
        round_trip = round_trip.max((h_inverse(g, &h)?.as_vec() - z.as_vec()).norm());
    }
    let grid = GridSpec::uniform(cfg.polar_bins, cfg.azimuth_bins)?;
    let sphere = entropy(&estimate_density(&finals, &grid)?);
    let mut checks = vec![Check::at_most("round_trip_error", round_trip, 1e-9)];
    // the surface measure needs ∂h, which a kinked scaling does not have
    checks.push(match entropy_exotic(&transported, &grid, &h, 1) {
        Ok(sigma) => Check::at_most(
            "paired_entropy_difference",
            (sigma.entropy - sphere.entropy).abs(),
            2.0 * sphere.standard_error,
        )
        .with_note(format!(
            "sphere {:.6}, surface {:.6}",
            sphere.entropy, sigma.entropy
        )),
        Err(e) => Check::failed("paired_entropy_difference", e.to_string()),
    });

    let dynamics = problem.dynamics();
    if let Some(first) = dynamics.channels().first() {
        if let Err(e) = pushforward_field(first.clone(), &h) {
            checks.push(Check::failed("surface_sde_gap_decreasing", e.to_string()));
            out.write("exotic_gap.csv", "substeps,mean_gap\n")?;
            return Ok(checks);
        }
    }
    let reference_scheme = if dynamics.is_linear() && dynamics.n_channels() == 1 {
        Scheme::ExactRotation
    } else {
        Scheme::Heun
    };
    let gamma0 = h_forward(&initial, &h)?;
    let levels = [steps / 16, steps / 4, steps];
    let mut gaps = vec![0.0; levels.len()];
    for r in 0..HEUN_REPLICAS {
        let noise = Arc::new(sample_brownian_path(
            steps,
            cfg.dt,
            dynamics.n_channels(),
            seed,
            r,
        )?);
        let flow = FlowMap::from_noise(
            Arc::new(dynamics.clone()),
            noise.clone(),
            0,
            steps,
            steps,
            reference_scheme,
        )?;
        let target = pushforward_flow(&flow, &h).apply(gamma0.gamma())?;
        for (gap, &m) in gaps.iter_mut().zip(&levels) {
            let path =
                integrate_on_surface(&h, dynamics, &ExoticPoint(*gamma0.gamma()), &noise, m)?;
            *gap += (path.last().expect("nonempty path") - target).norm() / HEUN_REPLICAS as f64;
        }
    }
    let mut csv = String::from("substeps,mean_gap\n");
    for (m, gap) in levels.iter().zip(&gaps) {
        let _ = writeln!(csv, "{m},{gap}");
    }
    out.write("exotic_gap.csv", &csv)?;
    let increases = gaps.windows(2).filter(|w| w[1] >= w[0]).count();
    checks.push(
        Check::at_most(
            "surface_sde_gap_non_decreasing_refinements",
            increases as f64,
            0.0,
        )
        .with_note(format!(
            "gaps {} against {reference_scheme}",
            sci_list(&gaps)
        )),
    );
    Ok(checks)
}

fn circles(cfg: &ExperimentConfig, out: &mut Outputs) -> Res<Vec<Check>> {
    let h = homeomorphism(cfg)?;
    let images = circle_images(&h, cfg.circle_samples)?;
    out.write("circle_images.csv", &circle_images_csv(&images))?;
    let mut csv = String::from("i,j,closure_error,max_radial_deviation,max_displacement\n");
    for c in &images {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            c.i, c.j, c.closure_error, c.max_radial_deviation, c.max_displacement
        );
    }
    out.write("circle_summary.csv", &csv)?;
    if cfg.svg {
        let radius = |i: usize, j: usize| -> Vec<(f64, f64)> {
            let c = images
                .iter()
                .find(|c| (c.i, c.j) == (i, j))
                .expect("all pairs present");
            c.thetas
                .iter()
                .zip(&c.points)
                .map(|(t, p)| (*t, p.norm()))
                .collect()
        };
        let (r12, r23, r38) = (radius(1, 2), radius(2, 3), radius(3, 8));
        out.write(
            "circle_radii.svg",
            &line_chart(
                "Radius along circle images",
                "theta",
                "|h(c(theta))|",
                &[
                    Series {
                        label: "S12",
                        points: &r12,
                    },
                    Series {
                        label: "S23",
                        points: &r23,
                    },
                    Series {
                        label: "S38",
                        points: &r38,
                    },
                ],
            ),
        )?;
    }
    let closure = images.iter().map(|c| c.closure_error).fold(0.0, f64::max);
    let fixed = images
        .iter()
        .find(|c| (c.i, c.j) == (1, 2))
        .map(|c| c.max_displacement)
        .unwrap_or(f64::NAN);
    let deviation = images
        .iter()
        .map(|c| c.max_radial_deviation)
        .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("max_closure_error", closure, 1e-9),
        Check::at_most("circle_12_displacement", fixed, 1e-12),
        Check::at_least("max_radial_deviation", deviation, 0.0).with_note("reported"),
    ])
}
