//! Transport of the sphere dynamics through a homeomorphism
//! `h(z) = D^{-1}(β(z) z)` onto a deformed model surface Σ ⊂ R^8.
//!
//! The deformation family is radial, `D(x) = x (1 + ε s(x/|x|))`, with `s`
//! a smooth step in `ρ² = z3² + ... + z8²` that vanishes near the circle in
//! the (z1, z2) plane. Radial maps keep `h` invertible in closed form:
//! `h^{-1}(γ) = D(γ)/|D(γ)| = γ/|γ|`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{SMatrix, SymmetricEigen};

use crate::density::{DensityEstimate, EntropyReport, GridSpec};
use crate::error::{Error, Result};
use crate::field::{SharedField, VectorField};
use crate::flow::FlowMap;
use crate::frame::{frame_matrix, SkewGenerator, Smoothness, SpherePoint};
use crate::linalg::{expm, fd_jacobian, Mat8, Vec8};
use crate::noise::NoisePath;
use crate::quadrature::GaussLegendre;
use crate::sde::Dynamics;
use crate::sphere::{cartesian_unchecked, chart_jacobian, volume_element_raw};

pub type Mat7 = SMatrix<f64, 7, 7>;
pub type Basis87 = SMatrix<f64, 8, 7>;

/// Largest deformation amplitude for which the family is used.
pub const MAX_EPSILON: f64 = 0.3;

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn dpsi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        psi(t) / (t * t)
    }
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    let (a, b) = (psi(t), psi(1.0 - t));
    a / (a + b)
}

pub fn smooth_step_derivative(t: f64) -> f64 {
    let (a, b) = (psi(t), psi(1.0 - t));
    let s = a + b;
    (dpsi(t) * b + a * dpsi(1.0 - t)) / (s * s)
}

/// Bump profile on unit vectors: `σ((ρ² - inner)/(outer - inner))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Bump {
    fn default() -> Self {
        Bump {
            inner: 0.04,
            outer: 0.64,
        }
    }
}

impl Bump {
    fn rho2(u: &Vec8) -> f64 {
        u.iter().skip(2).map(|x| x * x).sum()
    }

    pub fn value(&self, u: &Vec8) -> f64 {
        smooth_step((Bump::rho2(u) - self.inner) / (self.outer - self.inner))
    }

    /// Gradient of `u -> value(u)` (as a function on R^8).
    pub fn gradient(&self, u: &Vec8) -> Vec8 {
        let w = self.outer - self.inner;
        let ds = smooth_step_derivative((Bump::rho2(u) - self.inner) / w) / w;
        let mut g = u * (2.0 * ds);
        g[0] = 0.0;
        g[1] = 0.0;
        g
    }

    /// Value and gradient of the degree-0 extension `x -> value(x/|x|)`.
    fn homogeneous(&self, x: &Vec8) -> (f64, Vec8) {
        let r = x.norm();
        let u = x / r;
        let g = self.gradient(&u);
        (self.value(&u), (g - u * u.dot(&g)) / r)
    }
}

/// Ambient deformation `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deformation {
    Identity,
    /// `D(x) = x (1 + ε s(x/|x|))`
    Radial {
        epsilon: f64,
        bump: Bump,
    },
}

impl Deformation {
    pub fn radial(epsilon: f64) -> Result<Self> {
        Deformation::radial_with(epsilon, Bump::default())
    }

    pub fn radial_with(epsilon: f64, bump: Bump) -> Result<Self> {
        if !(0.0..=MAX_EPSILON).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "deformation amplitude {epsilon} outside [0, {MAX_EPSILON}]"
            )));
        }
        if !(bump.inner >= 0.0 && bump.outer > bump.inner && bump.outer <= 1.0) {
            return Err(Error::InvalidParameter(
                "bump needs 0 <= inner < outer <= 1".into(),
            ));
        }
        Ok(Deformation::Radial { epsilon, bump })
    }

    pub fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }

    /// `1 + ε s(x/|x|)` and its gradient.
    fn factor(&self, x: &Vec8) -> (f64, Vec8) {
        match self {
            Deformation::Identity => (1.0, Vec8::zeros()),
            Deformation::Radial { epsilon, bump } => {
                let (s, g) = bump.homogeneous(x);
                (1.0 + epsilon * s, g * *epsilon)
            }
        }
    }

    pub fn forward(&self, x: &Vec8) -> Result<Vec8> {
        if x.norm() == 0.0 {
            return Err(Error::DegenerateDeformation);
        }
        Ok(x * self.factor(x).0)
    }

    /// Closed-form inverse: `D` keeps directions, so `D^{-1}(y) = y / (1 + ε s(y/|y|))`.
    pub fn inverse(&self, y: &Vec8) -> Result<Vec8> {
        if y.norm() == 0.0 {
            return Err(Error::DegenerateDeformation);
        }
        Ok(y / self.factor(y).0)
    }

    /// `∂D/∂x = f I + x ∇fᵀ`.
    pub fn jacobian(&self, x: &Vec8) -> Mat8 {
        let (f, g) = self.factor(x);
        Mat8::identity() * f + x * g.transpose()
    }
}

/// Positive scaling `β` on S^7, extended to R^8 \ {0} as a degree-0 function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingFunction {
    Constant(f64),
    /// `1 + amplitude * s(z/|z|)`: smooth.
    Bump {
        amplitude: f64,
        bump: Bump,
    },
    /// `1 + kappa * |z3| / |z|`: continuous but not C1 where z3 = 0.
    Kink {
        kappa: f64,
    },
}

impl ScalingFunction {
    pub fn smoothness(&self) -> Smoothness {
        match self {
            ScalingFunction::Kink { .. } => Smoothness::Continuous,
            _ => Smoothness::Smooth,
        }
    }

    pub fn is_c1(&self) -> bool {
        self.smoothness() != Smoothness::Continuous
    }

    pub fn value(&self, z: &Vec8) -> Result<f64> {
        let v = match self {
            ScalingFunction::Constant(c) => *c,
            ScalingFunction::Bump { amplitude, bump } => 1.0 + amplitude * bump.homogeneous(z).0,
            ScalingFunction::Kink { kappa } => 1.0 + kappa * z[2].abs() / z.norm(),
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonPositiveScaling(v))
        }
    }

    pub fn gradient(&self, z: &Vec8) -> Result<Vec8> {
        match self {
            ScalingFunction::Constant(_) => Ok(Vec8::zeros()),
            ScalingFunction::Bump { amplitude, bump } => Ok(bump.homogeneous(z).1 * *amplitude),
            ScalingFunction::Kink { .. } => Err(Error::ScalingNotC1),
        }
    }
}

/// The homeomorphism `h = D^{-1}(β(z) z)` together with its pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homeomorphism {
    pub deformation: Deformation,
    pub beta: ScalingFunction,
}

/// A point of the model surface Σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExoticPoint(pub Vec8);

impl ExoticPoint {
    pub fn gamma(&self) -> &Vec8 {
        &self.0
    }
}

impl Homeomorphism {
    pub fn identity() -> Self {
        Homeomorphism {
            deformation: Deformation::Identity,
            beta: ScalingFunction::Constant(1.0),
        }
    }

    /// Radial bump deformation of amplitude `epsilon` with `β ≡ 1`.
    pub fn bump(epsilon: f64) -> Result<Self> {
        Ok(Homeomorphism {
            deformation: Deformation::radial(epsilon)?,
            beta: ScalingFunction::Constant(1.0),
        })
    }

    pub fn with_beta(mut self, beta: ScalingFunction) -> Self {
        self.beta = beta;
        self
    }

    /// `h` on the ambient punctured space (degree-1 homogeneous extension).
    pub fn apply(&self, z: &Vec8) -> Result<Vec8> {
        let b = self.beta.value(z)?;
        self.deformation.inverse(&(z * b))
    }

    /// `h^{-1}(γ) = D(γ) / |D(γ)|` as an ambient map.
    pub fn apply_inverse(&self, gamma: &Vec8) -> Result<Vec8> {
        let d = self.deformation.forward(gamma)?;
        let n = d.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::DegenerateDeformation);
        }
        Ok(d / n)
    }

    /// `∂h/∂z` by the chain rule:
    /// `h = m(z) z` with `m = β(z) / f(β z)`, `f` the deformation factor.
    pub fn jacobian(&self, z: &Vec8) -> Result<Mat8> {
        let b = self.beta.value(z)?;
        let gb = self.beta.gradient(z)?;
        let y = z * b;
        let (f, gf) = self.deformation.factor(&y);
        // ∇_z f(β(z) z) = (β I + z ∇βᵀ)ᵀ ∇f(y)
        let dy = Mat8::identity() * b + z * gb.transpose();
        let grad_f = dy.transpose() * gf;
        let grad_m = gb / f - grad_f * (b / (f * f));
        Ok(Mat8::identity() * (b / f) + z * grad_m.transpose())
    }

    /// Jacobian of `h^{-1}`: `(1/|D|)(I - D̂ D̂ᵀ) ∂D/∂γ`.
    pub fn inverse_jacobian(&self, gamma: &Vec8) -> Result<Mat8> {
        let d = self.deformation.forward(gamma)?;
        let n = d.norm();
        let u = d / n;
        Ok((Mat8::identity() - u * u.transpose()) * self.deformation.jacobian(gamma) / n)
    }
}

pub fn h_forward(z: &SpherePoint, h: &Homeomorphism) -> Result<ExoticPoint> {
    h.apply(z.as_vec()).map(ExoticPoint)
}

pub fn h_inverse(gamma: &ExoticPoint, h: &Homeomorphism) -> Result<SpherePoint> {
    h.apply_inverse(&gamma.0).map(SpherePoint::new_unchecked)
}

/// Retraction of an ambient point onto Σ along rays.
pub fn retract_to_surface(h: &Homeomorphism, x: &Vec8) -> Result<Vec8> {
    let n = x.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::DegenerateDeformation);
    }
    h.apply(&(x / n))
}

/// `h_* V` on Σ: `γ -> ∂h(h^{-1}γ) V(h^{-1}γ)`.
#[derive(Clone)]
pub struct PushforwardField {
    h: Homeomorphism,
    field: SharedField,
}

impl PushforwardField {
    pub fn try_eval(&self, gamma: &Vec8) -> Result<Vec8> {
        let z = self.h.apply_inverse(gamma)?;
        Ok(self.h.jacobian(&z)? * self.field.eval(&z))
    }
}

impl VectorField for PushforwardField {
    fn eval(&self, gamma: &Vec8) -> Vec8 {
        self.try_eval(gamma)
            .unwrap_or_else(|_| Vec8::repeat(f64::NAN))
    }

    fn jacobian(&self, gamma: &Vec8) -> Mat8 {
        fd_jacobian(|x| self.eval(x), gamma, crate::field::FD_STEP)
    }
}

/// Requires a C1 scaling: for a merely continuous β the Jacobian of `h`
/// does not exist along the kink and the transported field is undefined.
pub fn pushforward_field(field: SharedField, h: &Homeomorphism) -> Result<PushforwardField> {
    if !h.beta.is_c1() {
        return Err(Error::ScalingNotC1);
    }
    Ok(PushforwardField { h: *h, field })
}

/// `h ∘ g ∘ h^{-1}`.
#[derive(Clone, Debug)]
pub struct ConjugatedFlow {
    pub flow: FlowMap,
    pub h: Homeomorphism,
}

impl ConjugatedFlow {
    pub fn apply(&self, gamma: &Vec8) -> Result<Vec8> {
        let z = self.h.apply_inverse(gamma)?;
        self.h.apply(&self.flow.apply(&z)?)
    }
}

pub fn pushforward_flow(g: &FlowMap, h: &Homeomorphism) -> ConjugatedFlow {
    ConjugatedFlow {
        flow: g.clone(),
        h: *h,
    }
}

/// `max |h*g12(γ) - h*g2(h*g1(γ))|` over `γ = h(z)` for the given sphere points.
pub fn conjugated_cocycle_residual(
    g12: &FlowMap,
    g1: &FlowMap,
    g2: &FlowMap,
    h: &Homeomorphism,
    points: &[SpherePoint],
) -> Result<f64> {
    let (a, b, c) = (
        pushforward_flow(g12, h),
        pushforward_flow(g1, h),
        pushforward_flow(g2, h),
    );
    let mut worst: f64 = 0.0;
    for p in points {
        let gamma = h.apply(p.as_vec())?;
        worst = worst.max((a.apply(&gamma)? - c.apply(&b.apply(&gamma)?)?).norm());
    }
    Ok(worst)
}

/// `max |h*g^{-1}(h*g(γ)) - γ|`.
pub fn conjugated_inverse_residual(
    g: &FlowMap,
    h: &Homeomorphism,
    points: &[SpherePoint],
) -> Result<f64> {
    let fwd = pushforward_flow(g, h);
    let back = pushforward_flow(&crate::flow::flow_invert(g), h);
    let mut worst: f64 = 0.0;
    for p in points {
        let gamma = h.apply(p.as_vec())?;
        worst = worst.max((back.apply(&fwd.apply(&gamma)?)? - gamma).norm());
    }
    Ok(worst)
}

/// Largest spectral norm of `∂h` over the sample, a local Lipschitz estimate.
pub fn lipschitz_estimate(h: &Homeomorphism, points: &[SpherePoint]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let j = h.jacobian(p.as_vec())?;
        worst = worst.max(j.singular_values().max());
    }
    Ok(worst)
}

/// Orthonormal basis of the tangent plane of Σ at `h(z)`.
pub fn surface_tangent_basis(h: &Homeomorphism, z: &Vec8) -> Result<Basis87> {
    let t = h.jacobian(z)? * frame_matrix(z);
    Ok(t.qr().q())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackMetric {
    /// `Jᵀ J` in ambient coordinates
    pub ambient: Mat8,
    /// orthonormal basis of the tangent plane of Σ
    pub basis: Basis87,
    /// metric restricted to the tangent plane in that basis
    pub tangent: Mat7,
}

impl PullbackMetric {
    pub fn eigenvalues(&self) -> [f64; 7] {
        let e = SymmetricEigen::new(self.tangent).eigenvalues;
        std::array::from_fn(|k| e[k])
    }
}

/// Pullback of the round metric through `h^{-1}` at a point of Σ.
pub fn pullback_metric(gamma: &ExoticPoint, h: &Homeomorphism) -> Result<PullbackMetric> {
    let j = h.inverse_jacobian(&gamma.0)?;
    let ambient = j.transpose() * j;
    let z = h.apply_inverse(&gamma.0)?;
    let basis = surface_tangent_basis(h, &z)?;
    let tangent = basis.transpose() * ambient * basis;
    Ok(PullbackMetric {
        ambient,
        basis,
        tangent,
    })
}

/// Length in the pullback metric of the image of a closed curve `c(θ)`,
/// `θ ∈ [0, 2π]`, by Gauss-Legendre quadrature.
pub fn pullback_length<C>(h: &Homeomorphism, curve: C, nodes: usize) -> Result<f64>
where
    C: Fn(f64) -> (Vec8, Vec8),
{
    let rule = GaussLegendre::new(nodes);
    let mut total = 0.0;
    for (theta, w) in rule.mapped(0.0, std::f64::consts::TAU) {
        let (z, dz) = curve(theta);
        let gamma = h.apply(&z)?;
        let v = h.jacobian(&z)? * dz;
        let g = pullback_metric(&ExoticPoint(gamma), h)?.ambient;
        total += w * (v.transpose() * g * v)[0].max(0.0).sqrt();
    }
    Ok(total)
}

/// Sampled image of one coordinate-plane circle.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleImage {
    pub i: usize,
    pub j: usize,
    pub thetas: Vec<f64>,
    pub points: Vec<Vec8>,
    /// `|h(c(0)) - h(c(2π))|`
    pub closure_error: f64,
    /// `max | |h(c(θ))| - 1 |`
    pub max_radial_deviation: f64,
    /// `max |h(c(θ)) - c(θ)|`
    pub max_displacement: f64,
}

/// Images under `h` of the 28 circles `S¹_ij`, each the integral curve of
/// the plane rotation in the (z_i, z_j) plane through `e_i`.
pub fn circle_images(h: &Homeomorphism, samples: usize) -> Result<Vec<CircleImage>> {
    if samples < 2 {
        return Err(Error::InvalidParameter(
            "need at least two samples per circle".into(),
        ));
    }
    let mut out = Vec::with_capacity(28);
    for i in 1..=8 {
        for j in (i + 1)..=8 {
            let gen = *SkewGenerator::plane(i, j).matrix();
            let start = *SpherePoint::basis(i).as_vec();
            let mut thetas = Vec::with_capacity(samples + 1);
            let mut points = Vec::with_capacity(samples + 1);
            let mut radial: f64 = 0.0;
            let mut shift: f64 = 0.0;
            for k in 0..=samples {
                let theta = std::f64::consts::TAU * k as f64 / samples as f64;
                let c = expm(&(gen * theta)) * start;
                let g = h.apply(&c)?;
                radial = radial.max((g.norm() - 1.0).abs());
                shift = shift.max((g - c).norm());
                thetas.push(theta);
                points.push(g);
            }
            let closure_error = (points[0] - points[samples]).norm();
            out.push(CircleImage {
                i,
                j,
                thetas,
                points,
                closure_error,
                max_radial_deviation: radial,
                max_displacement: shift,
            });
        }
    }
    Ok(out)
}

/// CSV with header `i,j,theta,g1,...,g8`.
pub fn circle_images_csv(images: &[CircleImage]) -> String {
    let mut out = String::from("i,j,theta,g1,g2,g3,g4,g5,g6,g7,g8\n");
    for c in images {
        for (t, p) in c.thetas.iter().zip(&c.points) {
            let _ = write!(out, "{},{},{}", c.i, c.j, t);
            for x in p.iter() {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
    }
    out
}

/// Ratio of the Σ volume element (pullback metric in the chart `h ∘ chart`)
/// to the sphere volume element at angles `phi`.
pub fn volume_ratio(h: &Homeomorphism, phi: &[f64; 7]) -> Result<f64> {
    let z = cartesian_unchecked(phi);
    let gamma = h.apply(&z)?;
    let chart = h.jacobian(&z)? * chart_jacobian(phi);
    let g = pullback_metric(&ExoticPoint(gamma), h)?.ambient;
    let induced: Mat7 = chart.transpose() * g * chart;
    let sphere = volume_element_raw(phi);
    Ok(induced.determinant().abs().sqrt() / sphere)
}

/// Entropy of a sample of Σ. Bins are the angular bins of the ray chart
/// `γ -> γ/|γ|`; bin volumes use the Riemannian measure of the pullback
/// metric, integrated with `nodes` Gauss points per axis.
pub fn entropy_exotic(
    samples: &[ExoticPoint],
    grid: &GridSpec,
    h: &Homeomorphism,
    nodes: usize,
) -> Result<EntropyReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let rays = samples
        .iter()
        .map(|g| h_inverse(g, h))
        .collect::<Result<Vec<_>>>()?;
    let sphere = crate::density::estimate_density(&rays, grid)?;
    let mut volumes = BTreeMap::new();
    for (idx, _, _, _) in sphere.iter() {
        volumes.insert(idx, sigma_bin_volume(h, grid, &idx, nodes)?);
    }
    Ok(entropy_with_volumes(&sphere, &volumes))
}

fn sigma_bin_volume(
    h: &Homeomorphism,
    grid: &GridSpec,
    idx: &crate::density::BinIndex,
    nodes: usize,
) -> Result<f64> {
    let rule = GaussLegendre::new(nodes.max(1));
    let (lo, hi) = grid.bounds(idx);
    let axes: Vec<Vec<(f64, f64)>> = (0..7)
        .map(|k| rule.mapped(lo[k], hi[k]).collect())
        .collect();
    let n = rule.len();
    let mut weighted = 0.0;
    let mut weight = 0.0;
    let mut pos = [0usize; 7];
    loop {
        let mut phi = [0.0; 7];
        let mut w = 1.0;
        for k in 0..7 {
            let (x, wk) = axes[k][pos[k]];
            phi[k] = x;
            w *= wk;
        }
        let v = volume_element_raw(&phi) * w;
        if v > 0.0 {
            weighted += v * volume_ratio(h, &phi)?;
            weight += v;
        }
        let mut k = 0;
        loop {
            pos[k] += 1;
            if pos[k] < n {
                break;
            }
            pos[k] = 0;
            k += 1;
            if k == 7 {
                let mean_ratio = if weight > 0.0 { weighted / weight } else { 1.0 };
                return Ok(grid.bin_volume(idx) * mean_ratio);
            }
        }
    }
}

fn entropy_with_volumes(
    d: &DensityEstimate,
    volumes: &BTreeMap<crate::density::BinIndex, f64>,
) -> EntropyReport {
    let n = d.n_samples() as f64;
    let mut s = 0.0;
    let mut s2 = 0.0;
    for (idx, c, _, _) in d.iter() {
        let w = c as f64 / n;
        let l = (w / volumes[&idx]).ln();
        s -= w * l;
        s2 += w * l * l;
    }
    EntropyReport {
        entropy: s,
        time: d.time(),
        standard_error: ((s2 - s * s).max(0.0) / n).sqrt(),
        bias_correction: (d.occupied_bins() as f64 - 1.0) / (2.0 * n),
        occupied_bins: d.occupied_bins(),
        n_samples: d.n_samples(),
    }
}

/// Heun integration on Σ of the transported SDE, with the fields pushed
/// forward and the state retracted to Σ along rays after every step.
/// Returns the states after every integration step (first: `gamma0`).
pub fn integrate_on_surface(
    h: &Homeomorphism,
    sphere_dynamics: &Dynamics,
    gamma0: &ExoticPoint,
    noise: &NoisePath,
    substeps: usize,
) -> Result<Vec<Vec8>> {
    if noise.n_channels() != sphere_dynamics.n_channels() {
        return Err(Error::ChannelMismatch {
            expected: sphere_dynamics.n_channels(),
            got: noise.n_channels(),
        });
    }
    if substeps == 0 || !noise.n_steps().is_multiple_of(substeps) {
        return Err(Error::InvalidParameter(format!(
            "{} steps cannot be split into {substeps} substeps",
            noise.n_steps()
        )));
    }
    let push =
        |f: &SharedField| pushforward_field(f.clone(), h).map(|p| Arc::new(p) as SharedField);
    let drift = sphere_dynamics.drift().map(push).transpose()?;
    let channels = sphere_dynamics
        .channels()
        .iter()
        .map(push)
        .collect::<Result<Vec<_>>>()?;
    let dynamics = Dynamics::new(drift, channels)?;
    let block = noise.n_steps() / substeps;
    let dt = block as f64 * noise.dt();
    let mut gamma = gamma0.0;
    let mut out = vec![gamma];
    for b in 0..substeps {
        let dw = noise.total(b * block, (b + 1) * block);
        let raw = dynamics.heun_raw(&gamma, &dw, dt);
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("surface integration"));
        }
        gamma = retract_to_surface(h, &raw)?;
        out.push(gamma);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{entropy, estimate_density};
    use crate::frame::FrameField;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn random_points(n: usize, seed: u64) -> Vec<SpherePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| SpherePoint::random(&mut rng)).collect()
    }

    fn on_circle_12(theta: f64) -> Vec8 {
        let mut v = Vec8::zeros();
        v[0] = theta.cos();
        v[1] = theta.sin();
        v
    }

    fn smooth_beta() -> ScalingFunction {
        ScalingFunction::Bump {
            amplitude: 0.15,
            bump: Bump {
                inner: 0.1,
                outer: 0.9,
            },
        }
    }

    #[test]
    fn smooth_step_profile() {
        assert_eq!(smooth_step(-0.5), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        for t in [0.1, 0.3, 0.7, 0.9] {
            let fd = (smooth_step(t + 1e-6) - smooth_step(t - 1e-6)) / 2e-6;
            assert!((fd - smooth_step_derivative(t)).abs() < 1e-7);
        }
    }

    #[test]
    fn deformation_inverse_and_nonvanishing() {
        let d = Deformation::radial(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = SpherePoint::random(&mut rng).into_vec() * 1.7;
            let y = d.forward(&x).unwrap();
            assert!(y.norm() > 0.0);
            assert!((d.inverse(&y).unwrap() - x).norm() < 1e-12);
        }
        assert!(matches!(
            d.forward(&Vec8::zeros()),
            Err(Error::DegenerateDeformation)
        ));
        assert!(Deformation::radial(0.5).is_err());
    }

    #[test]
    fn deformation_jacobian_matches_finite_differences() {
        let d = Deformation::radial(0.3).unwrap();
        for p in random_points(50, 2) {
            let x = p.into_vec() * 0.9;
            let fd = fd_jacobian(|v| d.forward(v).unwrap(), &x, 1e-6);
            assert!((fd - d.jacobian(&x)).abs().max() < 1e-7);
        }
    }

    #[test]
    fn identity_homeomorphism() {
        let h = Homeomorphism::identity();
        for p in random_points(100, 3) {
            let g = h_forward(&p, &h).unwrap();
            assert_eq!(g.0, *p.as_vec());
            assert!(
                (h.jacobian(p.as_vec()).unwrap() - Mat8::identity())
                    .abs()
                    .max()
                    < 1e-15
            );
        }
        let gamma = ExoticPoint(Vec8::repeat(2.0));
        let back = h_inverse(&gamma, &h).unwrap();
        assert!((back.as_vec().norm() - 1.0).abs() < 1e-14);
        assert!((back.as_vec() - Vec8::repeat(1.0 / 8f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn round_trips_both_ways() {
        let h = Homeomorphism::bump(0.2).unwrap().with_beta(smooth_beta());
        for p in random_points(10_000, 4) {
            let g = h_forward(&p, &h).unwrap();
            let back = h_inverse(&g, &h).unwrap();
            assert!((back.as_vec() - p.as_vec()).norm() < 1e-9);
            assert!((back.as_vec().norm() - 1.0).abs() < 1e-14);
            let again = h_forward(&back, &h).unwrap();
            assert!((again.0 - g.0).norm() < 1e-9);
        }
    }

    #[test]
    fn beta_is_recovered_from_deformation_norm() {
        let h = Homeomorphism::bump(0.25).unwrap().with_beta(smooth_beta());
        for p in random_points(200, 5) {
            let g = h_forward(&p, &h).unwrap();
            let z = h_inverse(&g, &h).unwrap();
            let beta = h.beta.value(z.as_vec()).unwrap();
            let d = h.deformation.forward(&g.0).unwrap().norm();
            assert!((beta - d).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_12_is_fixed() {
        let h = Homeomorphism::bump(0.2).unwrap();
        for k in 0..100 {
            let c = on_circle_12(TAU * k as f64 / 100.0);
            assert!((h.apply(&c).unwrap() - c).norm() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_scaling_rejected() {
        let h = Homeomorphism::identity().with_beta(ScalingFunction::Constant(-1.0));
        assert!(matches!(
            h_forward(&SpherePoint::basis(1), &h),
            Err(Error::NonPositiveScaling(_))
        ));
    }

    #[test]
    fn jacobian_of_h_matches_finite_differences() {
        let h = Homeomorphism::bump(0.3).unwrap().with_beta(smooth_beta());
        for p in random_points(200, 6) {
            let z = p.into_vec();
            let fd = fd_jacobian(|x| h.apply(x).unwrap(), &z, 1e-6);
            assert!((fd - h.jacobian(&z).unwrap()).abs().max() < 1e-7);
            let g = h.apply(&z).unwrap();
            let fdi = fd_jacobian(|x| h.apply_inverse(x).unwrap(), &g, 1e-6);
            assert!((fdi - h.inverse_jacobian(&g).unwrap()).abs().max() < 1e-7);
        }
    }

    #[test]
    fn pushforward_matches_directional_derivative() {
        let h = Homeomorphism::bump(0.2).unwrap().with_beta(smooth_beta());
        let u1: SharedField = Arc::new(FrameField::new(1).unwrap());
        let push = pushforward_field(u1.clone(), &h).unwrap();
        for p in random_points(100, 7) {
            let z = p.into_vec();
            let v = u1.eval(&z);
            let e = 1e-6;
            let fd = (h.apply(&(z + v * e)).unwrap() - h.apply(&(z - v * e)).unwrap()) / (2.0 * e);
            let g = h.apply(&z).unwrap();
            assert!((fd - push.eval(&g)).norm() < 1e-6);
        }
    }

    #[test]
    fn pushforward_identity_and_fixed_circle() {
        let u1: SharedField = Arc::new(FrameField::new(1).unwrap());
        let id = pushforward_field(u1.clone(), &Homeomorphism::identity()).unwrap();
        for p in random_points(20, 8) {
            assert!((id.eval(p.as_vec()) - u1.eval(p.as_vec())).norm() < 1e-15);
        }
        let h = Homeomorphism::bump(0.2).unwrap();
        let push = pushforward_field(u1.clone(), &h).unwrap();
        for k in 0..24 {
            let c = on_circle_12(TAU * k as f64 / 24.0);
            // the bump vanishes near the circle, so h is the identity on a neighbourhood
            assert!((h.jacobian(&c).unwrap() - Mat8::identity()).abs().max() < 1e-12);
            assert!((push.eval(&c) - u1.eval(&c)).norm() < 1e-12);
        }
    }

    #[test]
    fn kink_scaling_blocks_pushforward() {
        let h = Homeomorphism::bump(0.2)
            .unwrap()
            .with_beta(ScalingFunction::Kink { kappa: 0.1 });
        let u1: SharedField = Arc::new(FrameField::new(1).unwrap());
        assert!(matches!(
            pushforward_field(u1, &h),
            Err(Error::ScalingNotC1)
        ));
        // h itself is still a homeomorphism
        let p = SpherePoint::basis(3);
        let g = h_forward(&p, &h).unwrap();
        assert!((h_inverse(&g, &h).unwrap().as_vec() - p.as_vec()).norm() < 1e-12);
    }

    #[test]
    fn conjugation_preserves_flow_laws() {
        let h = Homeomorphism::bump(0.2).unwrap().with_beta(smooth_beta());
        let pts = random_points(50, 13);
        let lip = lipschitz_estimate(&h, &pts).unwrap();
        assert!((1.0..2.0).contains(&lip));
        let dynamics = Arc::new(
            crate::sde::SdeProblem::frame_flow(3, SpherePoint::basis(1))
                .unwrap()
                .dynamics()
                .clone(),
        );
        let noise = Arc::new(crate::noise::sample_brownian(64, 1.0 / 64.0, 1, 14).unwrap());
        for (scheme, sub) in [
            (crate::sde::Scheme::ExactRotation, 64),
            (crate::sde::Scheme::Heun, 8),
        ] {
            let make = |a, b, m| {
                FlowMap::from_noise(dynamics.clone(), noise.clone(), a, b, m, scheme).unwrap()
            };
            let (g1, g2, g12) = (
                make(0, 24, sub * 3 / 8),
                make(24, 64, sub * 5 / 8),
                make(0, 64, sub),
            );
            let base = crate::flow::cocycle_residual(&g12, &g1, &g2, &pts).unwrap();
            let conj = conjugated_cocycle_residual(&g12, &g1, &g2, &h, &pts).unwrap();
            assert!(conj <= lip * base + 1e-9, "{scheme}: {conj} vs {base}");
            let inv = conjugated_inverse_residual(&g12, &h, &pts).unwrap();
            assert!(inv <= lip * crate::flow::inverse_residual(&g12, &pts).unwrap() + 1e-9);
        }
        let g = FlowMap::from_noise(
            dynamics,
            noise,
            0,
            64,
            64,
            crate::sde::Scheme::ExactRotation,
        )
        .unwrap();
        let id = pushforward_flow(&g, &Homeomorphism::identity());
        for p in &pts {
            assert!((id.apply(p.as_vec()).unwrap() - g.apply(p.as_vec()).unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn pullback_metric_properties() {
        let id = Homeomorphism::identity();
        for p in random_points(20, 9) {
            let m = pullback_metric(&ExoticPoint(p.into_vec()), &id).unwrap();
            assert!((m.tangent - Mat7::identity()).abs().max() < 1e-12);
        }
        let h = Homeomorphism::bump(0.3).unwrap().with_beta(smooth_beta());
        for p in random_points(1000, 10) {
            let g = h_forward(&p, &h).unwrap();
            let m = pullback_metric(&g, &h).unwrap();
            assert!((m.ambient - m.ambient.transpose()).abs().max() < 1e-14);
            assert!(m.eigenvalues().iter().all(|&e| e >= -1e-10));
        }
    }

    #[test]
    fn fixed_circle_has_length_two_pi() {
        let h = Homeomorphism::bump(0.2).unwrap();
        let len = pullback_length(
            &h,
            |t| {
                let mut d = Vec8::zeros();
                d[0] = -t.sin();
                d[1] = t.cos();
                (on_circle_12(t), d)
            },
            32,
        )
        .unwrap();
        assert!((len - TAU).abs() < 1e-6);
    }

    #[test]
    fn pulled_back_length_is_round_length_for_any_circle() {
        let h = Homeomorphism::bump(0.3).unwrap().with_beta(smooth_beta());
        let len = pullback_length(
            &h,
            |t| {
                let mut z = Vec8::zeros();
                let mut d = Vec8::zeros();
                z[1] = t.cos();
                z[2] = t.sin();
                d[1] = -t.sin();
                d[2] = t.cos();
                (z, d)
            },
            64,
        )
        .unwrap();
        assert!((len - TAU).abs() < 1e-5);
    }

    #[test]
    fn circle_images_close_and_deform() {
        let h = Homeomorphism::bump(0.2).unwrap();
        let imgs = circle_images(&h, 256).unwrap();
        assert_eq!(imgs.len(), 28);
        for c in &imgs {
            assert!(c.closure_error < 1e-9);
        }
        let c12 = imgs.iter().find(|c| (c.i, c.j) == (1, 2)).unwrap();
        assert!(c12.max_displacement < 1e-12);
        let c23 = imgs.iter().find(|c| (c.i, c.j) == (2, 3)).unwrap();
        assert!(c23.max_radial_deviation > 0.01);
        let csv = circle_images_csv(&imgs);
        assert!(csv.starts_with("i,j,theta,g1,g2,g3,g4,g5,g6,g7,g8\n"));
        assert_eq!(csv.lines().count(), 1 + 28 * 257);
    }

    #[test]
    fn volume_ratio_is_one() {
        let h = Homeomorphism::bump(0.3).unwrap().with_beta(smooth_beta());
        for phi in [
            [1.0, 0.5, 2.0, 1.2, 0.9, 2.5, 4.0],
            [0.3, 2.8, 1.6, 1.6, 0.4, 1.0, 0.1],
        ] {
            assert!((volume_ratio(&h, &phi).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!((volume_ratio(&Homeomorphism::identity(), &[1.0; 7]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exotic_entropy_matches_sphere_entropy() {
        let grid = GridSpec::uniform(2, 4).unwrap();
        let pts = random_points(20_000, 11);
        let sphere = entropy(&estimate_density(&pts, &grid).unwrap());
        for h in [Homeomorphism::identity(), Homeomorphism::bump(0.2).unwrap()] {
            let gam: Vec<ExoticPoint> = pts.iter().map(|p| h_forward(p, &h).unwrap()).collect();
            let ex = entropy_exotic(&gam, &grid, &h, 1).unwrap();
            assert!((ex.entropy - sphere.entropy).abs() < 1e-9);
        }
        assert!((sphere.entropy - (PI.powi(4) / 3.0).ln()).abs() < 0.05);
    }

    #[test]
    fn surface_heun_tracks_conjugated_exact_flow() {
        let h = Homeomorphism::bump(0.2).unwrap().with_beta(smooth_beta());
        let dynamics = crate::sde::SdeProblem::frame_flow(2, SpherePoint::basis(1))
            .unwrap()
            .dynamics()
            .clone();
        let noise = crate::noise::sample_brownian(512, 1.0 / 512.0, 1, 12).unwrap();
        let z0 = SpherePoint::new(
            Vec8::from_column_slice(&[0.4, 0.1, 0.5, -0.3, 0.2, 0.6, -0.2, 0.2]).normalize(),
        )
        .unwrap();
        let g0 = h_forward(&z0, &h).unwrap();
        let exact = FlowMap::from_noise(
            Arc::new(dynamics.clone()),
            Arc::new(noise.clone()),
            0,
            512,
            512,
            crate::sde::Scheme::ExactRotation,
        )
        .unwrap();
        let target = pushforward_flow(&exact, &h).apply(&g0.0).unwrap();
        let mut last = f64::INFINITY;
        for m in [32, 128, 512] {
            let path = integrate_on_surface(&h, &dynamics, &g0, &noise, m).unwrap();
            let gap = (path.last().unwrap() - target).norm();
            assert!(gap < last, "m={m} gap={gap}");
            last = gap;
        }
    }
}
