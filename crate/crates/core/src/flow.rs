//! Stochastic flow maps `g_{s,t}` on a fixed noise realization.

use std::sync::Arc;

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::frame::{frame_matrix, SpherePoint};
use crate::linalg::{fd_jacobian, Mat8, Vec8};
use crate::noise::NoisePath;
use crate::sde::{Dynamics, Scheme};
use crate::sphere::geodesic_distance;

/// Orthogonality tolerance of stored rotation factors.
pub const FACTOR_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
enum Repr {
    /// Rotation factors, first factor applied first.
    Exact(Vec<Mat8>),
    /// Re-integration over fine steps `[start, end)` using `substeps`
    /// integration steps with aggregated increments.
    Numerical {
        dynamics: Arc<Dynamics>,
        noise: Arc<NoisePath>,
        start: usize,
        end: usize,
        substeps: usize,
        scheme: Scheme,
        reversed: bool,
    },
    /// Maps applied in order.
    Composite(Vec<FlowMap>),
}

/// A flow map from time `s` to time `t` (for inverses `t < s`).
#[derive(Clone, Debug)]
pub struct FlowMap {
    s: f64,
    t: f64,
    repr: Repr,
}

impl FlowMap {
    pub fn identity(t: f64) -> Self {
        FlowMap {
            s: t,
            t,
            repr: Repr::Exact(Vec::new()),
        }
    }

    pub fn from_factors(s: f64, t: f64, factors: Vec<Mat8>) -> Result<Self> {
        for f in &factors {
            let r = (f.transpose() * f - Mat8::identity()).abs().max();
            if r > FACTOR_TOL || (f.determinant() - 1.0).abs() > FACTOR_TOL {
                return Err(Error::InvalidParameter(format!(
                    "flow factor is not a rotation (orthogonality residual {r:e})"
                )));
            }
        }
        Ok(FlowMap {
            s,
            t,
            repr: Repr::Exact(factors),
        })
    }

    /// Flow over fine steps `[start, end)` of `noise`, integrated with
    /// `substeps` steps of the given scheme. The exact scheme stores rotation
    /// factors; the others re-integrate on demand.
    pub fn from_noise(
        dynamics: Arc<Dynamics>,
        noise: Arc<NoisePath>,
        start: usize,
        end: usize,
        substeps: usize,
        scheme: Scheme,
    ) -> Result<Self> {
        if noise.n_channels() != dynamics.n_channels() {
            return Err(Error::ChannelMismatch {
                expected: dynamics.n_channels(),
                got: noise.n_channels(),
            });
        }
        if start > end || end > noise.n_steps() {
            return Err(Error::InvalidParameter(format!(
                "step range {start}..{end} outside noise of {} steps",
                noise.n_steps()
            )));
        }
        let len = end - start;
        if len > 0 && (substeps == 0 || !len.is_multiple_of(substeps)) {
            return Err(Error::InvalidParameter(format!(
                "{len} fine steps cannot be split into {substeps} substeps"
            )));
        }
        let (s, t) = (start as f64 * noise.dt(), end as f64 * noise.dt());
        if len == 0 {
            return Ok(FlowMap::identity(s));
        }
        if scheme == Scheme::ExactRotation {
            let block = len / substeps;
            let dt = block as f64 * noise.dt();
            let factors = (0..substeps)
                .map(|b| {
                    let k = start + b * block;
                    dynamics.exact_step_matrix(&noise.total(k, k + block), dt)
                })
                .collect::<Result<Vec<_>>>()?;
            return FlowMap::from_factors(s, t, factors);
        }
        Ok(FlowMap {
            s,
            t,
            repr: Repr::Numerical {
                dynamics,
                noise,
                start,
                end,
                substeps,
                scheme,
                reversed: false,
            },
        })
    }

    pub fn start_time(&self) -> f64 {
        self.s
    }

    pub fn end_time(&self) -> f64 {
        self.t
    }

    pub fn is_exact(&self) -> bool {
        match &self.repr {
            Repr::Exact(_) => true,
            Repr::Numerical { .. } => false,
            Repr::Composite(parts) => parts.iter().all(FlowMap::is_exact),
        }
    }

    /// Stored rotation factors of an exact flow.
    pub fn factors(&self) -> Option<&[Mat8]> {
        match &self.repr {
            Repr::Exact(f) => Some(f),
            _ => None,
        }
    }

    /// Dense matrix of an exact flow.
    pub fn matrix(&self) -> Option<Mat8> {
        match &self.repr {
            Repr::Exact(f) => Some(f.iter().fold(Mat8::identity(), |acc, m| m * acc)),
            Repr::Composite(parts) => parts
                .iter()
                .try_fold(Mat8::identity(), |acc, p| p.matrix().map(|m| m * acc)),
            Repr::Numerical { .. } => None,
        }
    }

    /// Apply to an ambient vector. Numerical flows retract to the sphere
    /// after every step, so inputs should be unit vectors.
    pub fn apply(&self, z: &Vec8) -> Result<Vec8> {
        match &self.repr {
            Repr::Exact(factors) => Ok(factors.iter().fold(*z, |acc, m| m * acc)),
            Repr::Composite(parts) => parts.iter().try_fold(*z, |acc, p| p.apply(&acc)),
            Repr::Numerical {
                dynamics,
                noise,
                start,
                end,
                substeps,
                scheme,
                reversed,
            } => {
                let block = (end - start) / substeps;
                let dt = block as f64 * noise.dt();
                let backward;
                let dynamics: &Dynamics = if *reversed {
                    backward = dynamics.reversed();
                    &backward
                } else {
                    dynamics
                };
                let mut x = *z;
                for b in 0..*substeps {
                    let b = if *reversed { substeps - 1 - b } else { b };
                    let k = start + b * block;
                    let dw = noise.total(k, k + block);
                    let raw = match scheme {
                        Scheme::Heun => dynamics.heun_raw(&x, &dw, dt),
                        Scheme::ItoEuler => dynamics.ito_euler_raw(&x, &dw, dt)?,
                        Scheme::ExactRotation => dynamics.exact_step_matrix(&dw, dt)? * x,
                    };
                    let n = raw.norm();
                    if !(n.is_finite() && n > 0.0) {
                        return Err(Error::NonFinite("flow application"));
                    }
                    x = raw / n;
                }
                Ok(x)
            }
        }
    }

    pub fn apply_point(&self, z: &SpherePoint) -> Result<SpherePoint> {
        self.apply(z.as_vec()).map(SpherePoint::new_unchecked)
    }
}

fn endpoints_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// `g2 ∘ g1` over `[s, u]` from `g1` over `[s, t]` and `g2` over `[t, u]`.
pub fn flow_compose(g1: &FlowMap, g2: &FlowMap) -> Result<FlowMap> {
    if !endpoints_match(g1.t, g2.s) {
        return Err(Error::IntervalMismatch {
            first_end: g1.t,
            second_start: g2.s,
        });
    }
    let repr = match (&g1.repr, &g2.repr) {
        (Repr::Exact(a), Repr::Exact(b)) => Repr::Exact(a.iter().chain(b).copied().collect()),
        _ => {
            let mut parts = Vec::new();
            for g in [g1, g2] {
                match &g.repr {
                    Repr::Composite(p) => parts.extend(p.iter().cloned()),
                    _ => parts.push(g.clone()),
                }
            }
            Repr::Composite(parts)
        }
    };
    Ok(FlowMap {
        s: g1.s,
        t: g2.t,
        repr,
    })
}

/// `g_{t,s}`: exact inverse for rotation factors, backward re-integration
/// for numerical flows.
pub fn flow_invert(g: &FlowMap) -> FlowMap {
    let repr = match &g.repr {
        Repr::Exact(f) => Repr::Exact(f.iter().rev().map(|m| m.transpose()).collect()),
        Repr::Composite(parts) => Repr::Composite(parts.iter().rev().map(flow_invert).collect()),
        Repr::Numerical {
            dynamics,
            noise,
            start,
            end,
            substeps,
            scheme,
            reversed,
        } => Repr::Numerical {
            dynamics: dynamics.clone(),
            noise: noise.clone(),
            start: *start,
            end: *end,
            substeps: *substeps,
            scheme: *scheme,
            reversed: !reversed,
        },
    };
    FlowMap {
        s: g.t,
        t: g.s,
        repr,
    }
}

/// Points moved together by one noise realization.
#[derive(Clone, Debug)]
pub struct NPointMotion {
    pub points: Vec<SpherePoint>,
    pub noise: Arc<NoisePath>,
}

impl NPointMotion {
    pub fn new(points: Vec<SpherePoint>, noise: Arc<NoisePath>) -> Self {
        NPointMotion { points, noise }
    }

    /// States after every fine step (first entry: the initial points).
    pub fn run(&self, dynamics: &Dynamics, scheme: Scheme) -> Result<Vec<Vec<SpherePoint>>> {
        if self.noise.n_channels() != dynamics.n_channels() {
            return Err(Error::ChannelMismatch {
                expected: dynamics.n_channels(),
                got: self.noise.n_channels(),
            });
        }
        let dt = self.noise.dt();
        let mut history = Vec::with_capacity(self.noise.n_steps() + 1);
        let mut cur: Vec<Vec8> = self.points.iter().map(|p| *p.as_vec()).collect();
        history.push(self.points.clone());
        for dw in self.noise.steps() {
            let rot = match scheme {
                Scheme::ExactRotation => Some(dynamics.exact_step_matrix(dw, dt)?),
                _ => None,
            };
            for x in cur.iter_mut() {
                let raw = match (scheme, &rot) {
                    (_, Some(r)) => r * *x,
                    (Scheme::ItoEuler, None) => dynamics.ito_euler_raw(x, dw, dt)?,
                    _ => dynamics.heun_raw(x, dw, dt),
                };
                *x = raw / raw.norm();
            }
            history.push(cur.iter().map(|v| SpherePoint::new_unchecked(*v)).collect());
        }
        Ok(history)
    }
}

fn pairwise_distances(points: &[SpherePoint]) -> Vec<f64> {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            d.push(geodesic_distance(&points[i], &points[j]));
        }
    }
    d
}

/// Largest change of any pairwise geodesic distance along an n-point history.
pub fn max_distance_drift(history: &[Vec<SpherePoint>]) -> f64 {
    let Some(first) = history.first() else {
        return 0.0;
    };
    let d0 = pairwise_distances(first);
    history
        .iter()
        .map(|pts| {
            pairwise_distances(pts)
                .iter()
                .zip(&d0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `max |d(g x, g y) - d(x, y)|` over all pairs.
pub fn isometry_check(g: &FlowMap, points: &[SpherePoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "isometry check needs at least two points".into(),
        ));
    }
    let images = points
        .iter()
        .map(|p| g.apply_point(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(max_distance_drift(&[points.to_vec(), images]))
}

/// Empirical distortion bounds of a flow over a point mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityReport {
    /// `max d(gx, gy) / d(x, y)`: Lipschitz estimate
    pub max_ratio: f64,
    /// `min d(gx, gy) / d(x, y)`: inverse Lipschitz estimate
    pub min_ratio: f64,
    pub pairs: usize,
}

pub fn continuity_modulus(g: &FlowMap, mesh: &[SpherePoint]) -> Result<ContinuityReport> {
    let images = mesh
        .iter()
        .map(|p| g.apply_point(p))
        .collect::<Result<Vec<_>>>()?;
    let mut max_ratio: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    let mut pairs = 0;
    for i in 0..mesh.len() {
        for j in (i + 1)..mesh.len() {
            let d = geodesic_distance(&mesh[i], &mesh[j]);
            if d <= 0.0 {
                continue;
            }
            let r = geodesic_distance(&images[i], &images[j]) / d;
            max_ratio = max_ratio.max(r);
            min_ratio = min_ratio.min(r);
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::InvalidParameter("mesh has no distinct pairs".into()));
    }
    Ok(ContinuityReport {
        max_ratio,
        min_ratio,
        pairs,
    })
}

/// Condition number of the tangent map of `g` at `z`, from a central
/// difference Jacobian expressed in the orthonormal frames at `z` and `g(z)`.
pub fn jacobian_condition(g: &FlowMap, z: &SpherePoint, h: f64) -> Result<f64> {
    let gz = g.apply(z.as_vec())?;
    let failed = std::cell::RefCell::new(None);
    let jac = fd_jacobian(
        |x| match g.apply(&(x / x.norm())) {
            Ok(v) => v,
            Err(e) => {
                *failed.borrow_mut() = Some(e);
                Vec8::zeros()
            }
        },
        z.as_vec(),
        h,
    );
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    let b_in = frame_matrix(z.as_vec());
    let b_out = frame_matrix(&gz);
    let m: SMatrix<f64, 7, 7> = b_out.transpose() * jac * b_in;
    let sv = m.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });
    Ok(hi / lo)
}

/// `max_z |g2(g1(z)) - g12(z)|`.
pub fn cocycle_residual(
    g12: &FlowMap,
    g1: &FlowMap,
    g2: &FlowMap,
    points: &[SpherePoint],
) -> Result<f64> {
    let composed = flow_compose(g1, g2)?;
    max_gap(&composed, g12, points)
}

/// `max_z |g^{-1}(g(z)) - z|`.
pub fn inverse_residual(g: &FlowMap, points: &[SpherePoint]) -> Result<f64> {
    let round = flow_compose(g, &flow_invert(g))?;
    max_gap(&round, &FlowMap::identity(g.s), points)
}

fn max_gap(a: &FlowMap, b: &FlowMap, points: &[SpherePoint]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        worst = worst.max((a.apply(p.as_vec())? - b.apply(p.as_vec())?).norm());
    }
    Ok(worst)
}
