//! Stratonovich SDEs on S^7 driven by frame fields, with Heun, Itô-Euler and
//! exact matrix-exponential schemes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{NegatedField, SharedField, SumField, VectorField};
use crate::frame::{ConstantCombination, FrameField, SpherePoint};
use crate::linalg::{expm, Mat8, Vec8};
use crate::noise::{fill_increments, NoisePath};
use crate::rng::SeedLineage;
use crate::sphere::uniform_cap_point;

/// Tolerance of the tangency check on diffusion fields.
pub const TANGENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Heun,
    ExactRotation,
    ItoEuler,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Heun => "heun",
            Scheme::ExactRotation => "exact_rotation",
            Scheme::ItoEuler => "ito_euler",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heun" => Ok(Scheme::Heun),
            "exact_rotation" | "exact" => Ok(Scheme::ExactRotation),
            "ito_euler" => Ok(Scheme::ItoEuler),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// How diffusion fields are wired to Wiener channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// One independent channel per field.
    PerField,
    /// A single channel drives every field.
    Shared,
}

/// Drift plus one vector field per noise channel. Shared by the sphere and
/// the deformed-sphere integrators.
#[derive(Clone)]
pub struct Dynamics {
    drift: Option<SharedField>,
    channels: Vec<SharedField>,
    drift_gen: Option<Mat8>,
    channel_gens: Option<Vec<Mat8>>,
}

impl fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dynamics")
            .field("has_drift", &self.drift.is_some())
            .field("n_channels", &self.channels.len())
            .field("linear", &self.channel_gens.is_some())
            .finish()
    }
}

impl Dynamics {
    pub fn new(drift: Option<SharedField>, channels: Vec<SharedField>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one noise channel is required".into(),
            ));
        }
        let drift_gen = match &drift {
            Some(d) => d.generator(),
            None => Some(Mat8::zeros()),
        };
        let channel_gens: Option<Vec<Mat8>> = channels.iter().map(|c| c.generator()).collect();
        Ok(Dynamics {
            drift,
            channels,
            drift_gen,
            channel_gens,
        })
    }

    /// Dynamics with drift and every channel negated. Integrating it along
    /// time-reversed increments runs the flow backwards.
    pub fn reversed(&self) -> Self {
        let neg = |f: &SharedField| Arc::new(NegatedField(f.clone())) as SharedField;
        Dynamics::new(
            self.drift.as_ref().map(neg),
            self.channels.iter().map(neg).collect(),
        )
        .expect("negation keeps the channel count")
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[SharedField] {
        &self.channels
    }

    pub fn drift(&self) -> Option<&SharedField> {
        self.drift.as_ref()
    }

    /// True when drift and every channel are linear fields `z -> K z`.
    pub fn is_linear(&self) -> bool {
        self.drift_gen.is_some() && self.channel_gens.is_some()
    }

    pub fn drift_at(&self, z: &Vec8) -> Vec8 {
        match (&self.drift_gen, &self.drift) {
            (Some(a), _) => a * z,
            (None, Some(d)) => d.eval(z),
            (None, None) => Vec8::zeros(),
        }
    }

    /// `sum_alpha V_alpha(z) dw_alpha`.
    pub fn noise_at(&self, z: &Vec8, dw: &[f64]) -> Vec8 {
        match &self.channel_gens {
            Some(g) => self.noise_generator(g, dw) * z,
            None => self
                .channels
                .iter()
                .zip(dw)
                .map(|(f, w)| f.eval(z) * *w)
                .sum(),
        }
    }

    fn noise_generator(&self, gens: &[Mat8], dw: &[f64]) -> Mat8 {
        let mut k = Mat8::zeros();
        for (g, w) in gens.iter().zip(dw) {
            k += g * *w;
        }
        k
    }

    /// `h = sum_alpha (DV_alpha) V_alpha`; the Itô drift is `a + h/2`.
    pub fn ito_correction(&self, z: &Vec8) -> Result<Vec8> {
        let h: Vec8 = match &self.channel_gens {
            Some(gens) => gens.iter().map(|k| k * (k * z)).sum(),
            None => self
                .channels
                .iter()
                .map(|f| f.jacobian(z) * f.eval(z))
                .sum(),
        };
        if h.iter().all(|x| x.is_finite()) {
            Ok(h)
        } else {
            Err(Error::NonFinite("Itô correction"))
        }
    }

    /// Heun predictor-corrector step without retraction.
    pub fn heun_raw(&self, z: &Vec8, dw: &[f64], dt: f64) -> Vec8 {
        if let (Some(a), Some(gens)) = (&self.drift_gen, &self.channel_gens) {
            let m = a * dt + self.noise_generator(gens, dw);
            let mz = m * z;
            let pred = z + mz;
            return z + (mz + m * pred) * 0.5;
        }
        let a0 = self.drift_at(z);
        let n0 = self.noise_at(z, dw);
        let pred = z + a0 * dt + n0;
        let a1 = self.drift_at(&pred);
        let n1 = self.noise_at(&pred, dw);
        z + (a0 + a1) * (0.5 * dt) + (n0 + n1) * 0.5
    }

    /// Euler-Maruyama step of the Itô form, without retraction.
    pub fn ito_euler_raw(&self, z: &Vec8, dw: &[f64], dt: f64) -> Result<Vec8> {
        let h = self.ito_correction(z)?;
        Ok(z + (self.drift_at(z) + h * 0.5) * dt + self.noise_at(z, dw))
    }

    /// `A dt + sum_alpha dw_alpha K_alpha` for linear dynamics.
    pub fn step_generator(&self, dw: &[f64], dt: f64) -> Result<Mat8> {
        match (&self.drift_gen, &self.channel_gens) {
            (Some(a), Some(gens)) => Ok(a * dt + self.noise_generator(gens, dw)),
            _ => Err(Error::NonConstantCoefficients),
        }
    }

    /// One-step rotation `exp(A dt + sum dw K)`. Exact for a single channel
    /// (or commuting generators); otherwise a Lie-group Euler step that is
    /// still exactly orthogonal.
    pub fn exact_step_matrix(&self, dw: &[f64], dt: f64) -> Result<Mat8> {
        Ok(expm(&self.step_generator(dw, dt)?))
    }
}

/// A Stratonovich SDE `dz = a(z) dt + sum V_alpha(z) ∘ dW^alpha` on S^7.
#[derive(Clone, Debug)]
pub struct SdeProblem {
    dynamics: Dynamics,
    mode: NoiseMode,
    initial: SpherePoint,
}

impl SdeProblem {
    pub fn new(
        drift: Option<SharedField>,
        fields: Vec<SharedField>,
        mode: NoiseMode,
        initial: SpherePoint,
    ) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidParameter("no diffusion fields".into()));
        }
        for f in drift.iter().chain(fields.iter()) {
            check_tangent(f.as_ref(), initial.as_vec())?;
        }
        let channels = match mode {
            NoiseMode::PerField => fields,
            NoiseMode::Shared if fields.len() == 1 => fields,
            NoiseMode::Shared => vec![Arc::new(SumField(fields)) as SharedField],
        };
        Ok(SdeProblem {
            dynamics: Dynamics::new(drift, channels)?,
            mode,
            initial,
        })
    }

    /// Brownian motion: the seven frame fields with independent channels.
    pub fn brownian_motion(initial: SpherePoint) -> Self {
        let fields = (1..=7)
            .map(|mu| Arc::new(FrameField::new(mu).unwrap()) as SharedField)
            .collect();
        SdeProblem::new(None, fields, NoiseMode::PerField, initial).unwrap()
    }

    /// The flow of a single frame field `U_mu` driven by one channel.
    pub fn frame_flow(mu: usize, initial: SpherePoint) -> Result<Self> {
        let f = Arc::new(FrameField::new(mu)?) as SharedField;
        SdeProblem::new(None, vec![f], NoiseMode::PerField, initial)
    }

    /// A single-channel problem for an arbitrary field.
    pub fn single<F: VectorField + 'static>(field: F, initial: SpherePoint) -> Result<Self> {
        SdeProblem::new(None, vec![Arc::new(field)], NoiseMode::PerField, initial)
    }

    pub fn with_initial(&self, initial: SpherePoint) -> Self {
        SdeProblem {
            initial,
            ..self.clone()
        }
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn initial(&self) -> &SpherePoint {
        &self.initial
    }

    pub fn n_channels(&self) -> usize {
        self.dynamics.n_channels()
    }

    pub fn step(
        &self,
        scheme: Scheme,
        z: &SpherePoint,
        dw: &[f64],
        dt: f64,
    ) -> Result<StepOutcome> {
        match scheme {
            Scheme::Heun => Ok(heun_stratonovich_step(self, z, dw, dt)),
            Scheme::ItoEuler => ito_euler_step(self, z, dw, dt),
            Scheme::ExactRotation => {
                let r = self.dynamics.exact_step_matrix(dw, dt)?;
                let v = r * z.as_vec();
                let norm_before = v.norm();
                Ok(StepOutcome {
                    point: SpherePoint::new_unchecked(v / norm_before),
                    norm_before,
                })
            }
        }
    }
}

fn check_tangent(f: &dyn VectorField, z: &Vec8) -> Result<()> {
    let v = f.eval(z);
    let r = v.dot(z);
    if !r.is_finite() {
        return Err(Error::NonFinite("vector field"));
    }
    if r.abs() > TANGENCY_TOL * v.norm().max(1.0) {
        return Err(Error::NotTangent(r));
    }
    Ok(())
}

/// Result of one step: the retracted point and the norm it had before
/// retraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub point: SpherePoint,
    pub norm_before: f64,
}

/// Itô correction with one channel per field.
pub fn ito_correction_drift(fields: &[SharedField], z: &SpherePoint) -> Result<Vec8> {
    let mut h = Vec8::zeros();
    for f in fields {
        let zv = z.as_vec();
        h += match f.generator() {
            Some(k) => k * (k * zv),
            None => f.jacobian(zv) * f.eval(zv),
        };
    }
    if h.iter().all(|x| x.is_finite()) {
        Ok(h)
    } else {
        Err(Error::NonFinite("Itô correction"))
    }
}

fn retract(v: Vec8) -> StepOutcome {
    let norm_before = v.norm();
    StepOutcome {
        point: SpherePoint::new_unchecked(v / norm_before),
        norm_before,
    }
}

pub fn heun_stratonovich_step(
    problem: &SdeProblem,
    z: &SpherePoint,
    dw: &[f64],
    dt: f64,
) -> StepOutcome {
    retract(problem.dynamics.heun_raw(z.as_vec(), dw, dt))
}

pub fn ito_euler_step(
    problem: &SdeProblem,
    z: &SpherePoint,
    dw: &[f64],
    dt: f64,
) -> Result<StepOutcome> {
    Ok(retract(problem.dynamics.ito_euler_raw(
        z.as_vec(),
        dw,
        dt,
    )?))
}

/// `exp(dw * sum_mu c_mu J_mu) z`.
pub fn exact_rotation_step(c: &ConstantCombination, z: &SpherePoint, dw: f64) -> SpherePoint {
    let v = expm(&(c.matrix() * dw)) * z.as_vec();
    let n = v.norm();
    SpherePoint::new_unchecked(v / n)
}

/// Which steps of a path are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SaveSchedule {
    All,
    Every(usize),
    Steps(Vec<usize>),
    Final,
}

impl SaveSchedule {
    pub fn indices(&self, n_steps: usize) -> Result<Vec<usize>> {
        let v = match self {
            SaveSchedule::All => (0..=n_steps).collect(),
            SaveSchedule::Every(0) => {
                return Err(Error::InvalidParameter(
                    "save interval must be positive".into(),
                ))
            }
            SaveSchedule::Every(k) => {
                let mut v: Vec<usize> = (0..=n_steps).step_by(*k).collect();
                if *v.last().unwrap() != n_steps {
                    v.push(n_steps);
                }
                v
            }
            SaveSchedule::Steps(s) => {
                let mut v = s.clone();
                v.sort_unstable();
                v.dedup();
                if v.last().is_some_and(|&l| l > n_steps) {
                    return Err(Error::InvalidParameter(format!(
                        "save step beyond final step {n_steps}"
                    )));
                }
                v
            }
            SaveSchedule::Final => vec![n_steps],
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub path_id: u64,
    pub times: Vec<f64>,
    pub states: Vec<SpherePoint>,
    pub lineage: SeedLineage,
    /// max over steps of `| |z| - 1 |` before retraction
    pub max_norm_defect: f64,
    /// sum over steps of `| |z| - 1 |` before retraction
    pub total_norm_defect: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpherePoint {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    /// Norm defect accumulated per unit time.
    pub fn norm_defect_rate(&self) -> f64 {
        let t =
            self.times.last().copied().unwrap_or(0.0) - self.times.first().copied().unwrap_or(0.0);
        if t > 0.0 {
            self.total_norm_defect / t
        } else {
            0.0
        }
    }
}

/// Initial state of each ensemble path.
#[derive(Debug, Clone, PartialEq)]
pub enum StartDistribution {
    /// Every path starts at the problem's initial point.
    Fixed,
    /// Uniform on the geodesic cap around the problem's initial point; drawn
    /// from the path's own stream before any noise.
    UniformCap { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_paths: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub save: SaveSchedule,
    pub start: StartDistribution,
}

impl EnsembleSpec {
    pub fn new(n_paths: usize, n_steps: usize, dt: f64, seed: u64, scheme: Scheme) -> Self {
        EnsembleSpec {
            n_paths,
            n_steps,
            dt,
            seed,
            scheme,
            save: SaveSchedule::Final,
            start: StartDistribution::Fixed,
        }
    }

    pub fn starting(mut self, start: StartDistribution) -> Self {
        self.start = start;
        self
    }

    pub fn saving(mut self, save: SaveSchedule) -> Self {
        self.save = save;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(Error::InvalidParameter(
                "n_paths and n_steps must be positive".into(),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::StepSize(self.dt));
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn integrate<N>(
    problem: &SdeProblem,
    z0: SpherePoint,
    scheme: Scheme,
    n_steps: usize,
    dt: f64,
    save: &[usize],
    lineage: SeedLineage,
    mut next_dw: N,
) -> Result<Trajectory>
where
    N: FnMut(usize, &mut [f64]),
{
    let mut z = z0;
    let mut dw = vec![0.0; problem.n_channels()];
    let mut times = Vec::with_capacity(save.len());
    let mut states = Vec::with_capacity(save.len());
    let mut next_save = 0;
    let mut max_def: f64 = 0.0;
    let mut total_def = 0.0;
    for k in 0..=n_steps {
        if next_save < save.len() && save[next_save] == k {
            times.push(k as f64 * dt);
            states.push(z);
            next_save += 1;
        }
        if k == n_steps {
            break;
        }
        next_dw(k, &mut dw);
        let out = problem.step(scheme, &z, &dw, dt)?;
        let def = (out.norm_before - 1.0).abs();
        max_def = max_def.max(def);
        total_def += def;
        if !out.norm_before.is_finite() {
            return Err(Error::NonFinite("integrated state"));
        }
        z = out.point;
    }
    Ok(Trajectory {
        path_id: lineage.index,
        times,
        states,
        lineage,
        max_norm_defect: max_def,
        total_norm_defect: total_def,
    })
}

/// Integrate one path along a stored noise realization.
pub fn simulate_path(
    problem: &SdeProblem,
    noise: &NoisePath,
    scheme: Scheme,
    save: &SaveSchedule,
) -> Result<Trajectory> {
    if noise.n_channels() != problem.n_channels() {
        return Err(Error::ChannelMismatch {
            expected: problem.n_channels(),
            got: noise.n_channels(),
        });
    }
    let idx = save.indices(noise.n_steps())?;
    integrate(
        problem,
        *problem.initial(),
        scheme,
        noise.n_steps(),
        noise.dt(),
        &idx,
        SeedLineage::new(0, 0),
        |k, dw| dw.copy_from_slice(noise.step(k)),
    )
}

/// Simulate `n_paths` independent paths. Path `i` draws its noise from the
/// stream `(seed, i)`; the output order is the path order regardless of the
/// rayon pool size.
pub fn simulate_ensemble(problem: &SdeProblem, spec: &EnsembleSpec) -> Result<Vec<Trajectory>> {
    spec.validate()?;
    if spec.scheme == Scheme::ExactRotation && !problem.dynamics.is_linear() {
        return Err(Error::NonConstantCoefficients);
    }
    let idx = spec.save.indices(spec.n_steps)?;
    (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let lineage = SeedLineage::new(spec.seed, i);
            let mut rng = lineage.rng();
            let z0 = match spec.start {
                StartDistribution::Fixed => *problem.initial(),
                StartDistribution::UniformCap { radius } => {
                    uniform_cap_point(&mut rng, problem.initial(), radius)
                }
            };
            integrate(
                problem,
                z0,
                spec.scheme,
                spec.n_steps,
                spec.dt,
                &idx,
                lineage,
                |_, dw| fill_increments(&mut rng, spec.dt, dw),
            )
        })
        .collect()
}

/// Mean state at save slot `slot`, summed in path order.
pub fn ensemble_mean(paths: &[Trajectory], slot: usize) -> Vec8 {
    let n = paths.len() as f64;
    paths.iter().map(|p| p.states[slot].as_vec()).sum::<Vec8>() / n
}

/// Per-coordinate standard error of the mean at save slot `slot`.
pub fn ensemble_standard_error(paths: &[Trajectory], slot: usize) -> Vec8 {
    let n = paths.len() as f64;
    let mean = ensemble_mean(paths, slot);
    let var = paths
        .iter()
        .map(|p| (p.states[slot].as_vec() - mean).map(|x| x * x))
        .sum::<Vec8>()
        / (n - 1.0).max(1.0);
    var.map(|v| (v / n).sqrt())
}

/// Column `slot` of every trajectory.
pub fn ensemble_states(paths: &[Trajectory], slot: usize) -> Vec<SpherePoint> {
    paths.iter().map(|p| p.states[slot]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FnField, ZeroField};
    use crate::frame::CombinedField;
    use crate::noise::sample_brownian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn frame(mu: usize) -> SharedField {
        Arc::new(FrameField::new(mu).unwrap())
    }

    #[test]
    fn ito_correction_of_linear_frame_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let z = SpherePoint::random(&mut rng);
            for mu in 1..=7 {
                let h = ito_correction_drift(&[frame(mu)], &z).unwrap();
                assert_eq!(h, -z.as_vec());
            }
            let all: Vec<SharedField> = (1..=7).map(frame).collect();
            let h = ito_correction_drift(&all, &z).unwrap();
            assert!((h * 0.5 + z.as_vec() * 3.5).norm() < 1e-14);
            let zero = ito_correction_drift(&[Arc::new(ZeroField) as SharedField], &z).unwrap();
            assert_eq!(zero, Vec8::zeros());
        }
    }

    #[test]
    fn ito_correction_by_finite_differences_matches_linear_identity() {
        let j = crate::frame::all_generators()[2];
        let f: SharedField = Arc::new(FnField(move |z: &Vec8| j * z));
        let z = SpherePoint::basis(4);
        let h = ito_correction_drift(&[f], &z).unwrap();
        assert!((h + z.as_vec()).norm() < 1e-9);
    }

    #[test]
    fn ito_correction_rejects_non_finite() {
        let f: SharedField = Arc::new(FnField(|_z: &Vec8| Vec8::repeat(f64::NAN)));
        assert!(ito_correction_drift(&[f], &SpherePoint::basis(1)).is_err());
    }

    #[test]
    fn heun_with_zero_increments_is_identity() {
        let p = SdeProblem::brownian_motion(SpherePoint::basis(3));
        let z = SpherePoint::basis(3);
        let out = heun_stratonovich_step(&p, &z, &[0.0; 7], 0.01);
        assert_eq!(out.point, z);
        assert_eq!(out.norm_before, 1.0);
    }

    #[test]
    fn heun_output_is_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = SdeProblem::brownian_motion(SpherePoint::basis(1));
        let mut z = *p.initial();
        let mut dw = [0.0; 7];
        for _ in 0..1000 {
            fill_increments(&mut rng, 0.01, &mut dw);
            z = heun_stratonovich_step(&p, &z, &dw, 0.01).point;
            assert!((z.as_vec().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn heun_generic_path_matches_linear_fast_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gens = crate::frame::all_generators();
        let fields: Vec<SharedField> = (0..7)
            .map(|k| {
                let g = gens[k];
                Arc::new(FnField(move |z: &Vec8| g * z)) as SharedField
            })
            .collect();
        let generic =
            SdeProblem::new(None, fields, NoiseMode::PerField, SpherePoint::basis(1)).unwrap();
        let fast = SdeProblem::brownian_motion(SpherePoint::basis(1));
        assert!(!generic.dynamics().is_linear());
        let mut dw = [0.0; 7];
        for _ in 0..100 {
            let z = SpherePoint::random(&mut rng);
            fill_increments(&mut rng, 0.01, &mut dw);
            let a = heun_stratonovich_step(&generic, &z, &dw, 0.01).point;
            let b = heun_stratonovich_step(&fast, &z, &dw, 0.01).point;
            assert!((a.as_vec() - b.as_vec()).norm() < 1e-14);
        }
    }

    #[test]
    fn exact_rotation_examples() {
        let c = ConstantCombination([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let out = exact_rotation_step(&c, &SpherePoint::basis(1), FRAC_PI_2);
        assert!((out.as_vec() - SpherePoint::basis(2).as_vec()).norm() < 1e-13);
        let z = SpherePoint::basis(5);
        assert_eq!(exact_rotation_step(&c, &z, 0.0), z);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = expm(&(c.matrix() * 0.83));
        for _ in 0..100 {
            let x = SpherePoint::random(&mut rng);
            let y = SpherePoint::random(&mut rng);
            let rx = r * x.as_vec();
            let ry = r * y.as_vec();
            assert!((rx.norm() - 1.0).abs() < 1e-14);
            assert!((rx.dot(&ry) - x.as_vec().dot(y.as_vec())).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_scheme_rejects_state_dependent_coefficients() {
        let p =
            SdeProblem::single(CombinedField::first_coordinate(), SpherePoint::basis(1)).unwrap();
        let spec = EnsembleSpec::new(2, 10, 0.01, 1, Scheme::ExactRotation);
        assert!(matches!(
            simulate_ensemble(&p, &spec),
            Err(Error::NonConstantCoefficients)
        ));
        let spec = EnsembleSpec::new(2, 10, 0.01, 1, Scheme::Heun);
        assert!(simulate_ensemble(&p, &spec).is_ok());
    }

    #[test]
    fn radial_field_is_rejected() {
        let f = FnField(|z: &Vec8| *z);
        assert!(matches!(
            SdeProblem::single(f, SpherePoint::basis(1)),
            Err(Error::NotTangent(_))
        ));
    }

    #[test]
    fn ensemble_path_equals_stored_noise_path() {
        let p = SdeProblem::brownian_motion(SpherePoint::basis(2));
        let spec = EnsembleSpec::new(3, 40, 0.01, 99, Scheme::Heun).saving(SaveSchedule::Every(10));
        let paths = simulate_ensemble(&p, &spec).unwrap();
        let noise = crate::noise::sample_brownian_path(40, 0.01, 7, 99, 2).unwrap();
        let single = simulate_path(&p, &noise, Scheme::Heun, &SaveSchedule::Every(10)).unwrap();
        assert_eq!(paths[2].states, single.states);
        let want = [0.0, 0.1, 0.2, 0.3, 0.4];
        assert_eq!(paths[2].times.len(), want.len());
        for (t, w) in paths[2].times.iter().zip(want) {
            assert!((t - w).abs() < 1e-15);
        }
        assert_eq!(paths[2].path_id, 2);
    }

    #[test]
    fn channel_mismatch_is_reported() {
        let p = SdeProblem::frame_flow(1, SpherePoint::basis(1)).unwrap();
        let noise = sample_brownian(5, 0.1, 2, 0).unwrap();
        assert!(matches!(
            simulate_path(&p, &noise, Scheme::Heun, &SaveSchedule::Final),
            Err(Error::ChannelMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn heun_strong_error_decreases_with_dt() {
        // one path, exact oracle along the same Brownian path
        let p = SdeProblem::frame_flow(1, SpherePoint::basis(1)).unwrap();
        let fine = sample_brownian(4000, 2.5e-4, 1, 8).unwrap();
        let exact = simulate_path(&p, &fine, Scheme::ExactRotation, &SaveSchedule::Final).unwrap();
        let mut last = f64::INFINITY;
        for factor in [4, 2, 1] {
            let noise = fine.coarsen(factor).unwrap();
            let h = simulate_path(&p, &noise, Scheme::Heun, &SaveSchedule::Final).unwrap();
            let err = (h.final_state().as_vec() - exact.final_state().as_vec()).norm();
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::Heun, Scheme::ExactRotation, Scheme::ItoEuler] {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("rk4".parse::<Scheme>().is_err());
    }

    #[test]
    fn save_schedules() {
        assert_eq!(SaveSchedule::Every(3).indices(7).unwrap(), vec![0, 3, 6, 7]);
        assert_eq!(SaveSchedule::Final.indices(7).unwrap(), vec![7]);
        assert_eq!(
            SaveSchedule::Steps(vec![5, 0, 5]).indices(7).unwrap(),
            vec![0, 5]
        );
        assert!(SaveSchedule::Steps(vec![8]).indices(7).is_err());
        assert!(SaveSchedule::Every(0).indices(7).is_err());
    }
}
