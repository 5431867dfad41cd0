//! Hyperspherical coordinates on S^7.
//!
//! Chart: `z1 = cos φ1`, `z2 = sin φ1 cos φ2`, ..., `z7 = sin φ1 ... sin φ6 cos φ7`,
//! `z8 = sin φ1 ... sin φ6 sin φ7`, with φ1..φ6 in [0, π] and φ7 in [0, 2π).
//! The Riemannian volume element is `prod_{p=1..6} sin^{7-p}(φ_p)`.

use std::f64::consts::{PI, TAU};

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::frame::SpherePoint;
use crate::linalg::Vec8;
use crate::quadrature::GaussLegendre;

/// `Vol(S^7) = 2 π^4 / Γ(4) = π^4 / 3`.
pub const SPHERE_VOLUME: f64 = PI * PI * PI * PI / 3.0;

/// Radius of the (z7, z8) tail below which a point is treated as lying on the
/// coordinate-singular set.
pub const SINGULAR_TOL: f64 = 1e-12;

pub type Jacobian87 = SMatrix<f64, 8, 7>;
pub type Mat7 = SMatrix<f64, 7, 7>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoords([f64; 7]);

impl SphericalCoords {
    pub fn new(phi: [f64; 7]) -> Result<Self> {
        for (k, &v) in phi.iter().enumerate() {
            let upper_ok = if k < 6 { v <= PI } else { v < TAU };
            if !(v.is_finite() && v >= 0.0 && upper_ok) {
                return Err(Error::AngleRange {
                    index: k + 1,
                    value: v,
                });
            }
        }
        Ok(SphericalCoords(phi))
    }

    pub(crate) fn from_raw(phi: [f64; 7]) -> Self {
        SphericalCoords(phi)
    }

    pub fn angles(&self) -> &[f64; 7] {
        &self.0
    }

    pub fn upper_bound(axis: usize) -> f64 {
        if axis < 6 {
            PI
        } else {
            TAU
        }
    }
}

pub fn to_cartesian(c: &SphericalCoords) -> SpherePoint {
    SpherePoint::new_unchecked(cartesian_unchecked(&c.0))
}

/// Chart evaluation without range checks; used by finite differences that
/// step slightly outside the angle box.
pub fn cartesian_unchecked(phi: &[f64; 7]) -> Vec8 {
    let mut z = Vec8::zeros();
    let mut prefix = 1.0;
    for k in 0..7 {
        z[k] = prefix * phi[k].cos();
        prefix *= phi[k].sin();
    }
    z[7] = prefix;
    z
}

fn angles_of(z: &Vec8) -> [f64; 7] {
    // tail[k] = |(z_k, ..., z_8)| (0-based)
    let mut tail = [0.0f64; 9];
    for k in (0..8).rev() {
        tail[k] = tail[k + 1].hypot(z[k]);
    }
    let mut phi = [0.0; 7];
    for k in 0..6 {
        phi[k] = tail[k + 1].atan2(z[k]);
    }
    let mut last = z[7].atan2(z[6]);
    if last < 0.0 {
        last += TAU;
    }
    if last >= TAU {
        last = 0.0;
    }
    phi[6] = last;
    phi
}

pub fn to_spherical(z: &SpherePoint) -> Result<SphericalCoords> {
    let v = z.as_vec();
    let phi = angles_of(v);
    if v[6].hypot(v[7]) < SINGULAR_TOL {
        return Err(Error::SingularChart {
            suggestion: SphericalCoords(phi),
        });
    }
    Ok(SphericalCoords(phi))
}

/// Angles of any point, including singular ones where undetermined angles
/// are set by the atan2 convention. Used by histogramming.
pub fn angles_lenient(z: &Vec8) -> [f64; 7] {
    angles_of(z)
}

pub fn volume_element(c: &SphericalCoords) -> f64 {
    volume_element_raw(&c.0)
}

pub(crate) fn volume_element_raw(phi: &[f64; 7]) -> f64 {
    (0..6).map(|p| phi[p].sin().powi(6 - p as i32)).product()
}

/// Analytic 8x7 Jacobian `d z_i / d φ_k` of the chart.
pub fn chart_jacobian(phi: &[f64; 7]) -> Jacobian87 {
    let s: [f64; 7] = std::array::from_fn(|k| phi[k].sin());
    let c: [f64; 7] = std::array::from_fn(|k| phi[k].cos());
    // product of sines over `0..n` with factor `k` replaced by its cosine
    let swapped =
        |n: usize, k: usize| -> f64 { (0..n).map(|p| if p == k { c[p] } else { s[p] }).product() };
    let mut jac = Jacobian87::zeros();
    for i in 0..7 {
        for k in 0..i {
            jac[(i, k)] = swapped(i, k) * c[i];
        }
        jac[(i, i)] = -swapped(i, usize::MAX) * s[i];
    }
    for k in 0..7 {
        jac[(7, k)] = swapped(7, k);
    }
    jac
}

/// `G = JᵀJ` at a coordinate point, with rows that vanish at coordinate
/// singularities flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    pub g: Mat7,
    pub jacobian: Jacobian87,
    pub singular_rows: Vec<usize>,
}

impl MetricTensor {
    pub fn determinant(&self) -> f64 {
        self.g.determinant()
    }

    pub fn is_singular(&self) -> bool {
        !self.singular_rows.is_empty()
    }
}

pub fn metric_tensor(c: &SphericalCoords) -> MetricTensor {
    let jacobian = chart_jacobian(&c.0);
    let g = jacobian.transpose() * jacobian;
    let singular_rows = (0..7)
        .filter(|&k| g.row(k).iter().all(|x| x.abs() < 1e-28))
        .collect();
    MetricTensor {
        g,
        jacobian,
        singular_rows,
    }
}

/// Great-circle distance in [0, π], computed as `2 atan2(|x-y|, |x+y|)`.
pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> f64 {
    geodesic_distance_vec(x.as_vec(), y.as_vec())
}

pub fn geodesic_distance_vec(x: &Vec8, y: &Vec8) -> f64 {
    2.0 * (x - y).norm().atan2((x + y).norm())
}

/// Point drawn uniformly (w.r.t. Riemannian volume) from the geodesic cap
/// of radius `radius` around `centre`.
pub fn uniform_cap_point<R: rand::Rng + ?Sized>(
    rng: &mut R,
    centre: &SpherePoint,
    radius: f64,
) -> SpherePoint {
    let c = centre.as_vec();
    // radial density ∝ sin^6(θ) on [0, radius]; propose from θ^6
    let theta = loop {
        let u: f64 = rng.random();
        let th = radius * u.powf(1.0 / 7.0);
        let accept: f64 = rng.random();
        if th == 0.0 || accept <= (th.sin() / th).powi(6) {
            break th;
        }
    };
    let dir = loop {
        let g = *SpherePoint::random(rng).as_vec();
        let t = g - c * g.dot(c);
        let n = t.norm();
        if n > 1e-8 {
            break t / n;
        }
    };
    SpherePoint::new_unchecked(c * theta.cos() + dir * theta.sin())
}

/// Riemannian volume of the coordinate box `[lo, hi]` (product of 1-D
/// Gauss-Legendre integrals of the sine powers).
pub fn box_volume(lo: &[f64; 7], hi: &[f64; 7], rule: &GaussLegendre) -> f64 {
    let mut v = hi[6] - lo[6];
    for p in 0..6 {
        let power = 6 - p as i32;
        v *= rule.integrate(lo[p], hi[p], |x| x.sin().powi(power));
    }
    v
}

/// Tensor-product Gauss-Legendre integral of `f` against the volume element
/// over the whole sphere, with `nodes[k]` points on axis `k`.
pub fn integrate_tensor<F>(f: F, nodes: [usize; 7]) -> f64
where
    F: Fn(&[f64; 7]) -> f64,
{
    let rules: Vec<Vec<(f64, f64)>> = (0..7)
        .map(|k| {
            GaussLegendre::new(nodes[k])
                .mapped(0.0, SphericalCoords::upper_bound(k))
                .collect()
        })
        .collect();
    let mut total = 0.0;
    let mut idx = [0usize; 7];
    loop {
        let mut phi = [0.0; 7];
        let mut w = 1.0;
        for k in 0..7 {
            let (x, wk) = rules[k][idx[k]];
            phi[k] = x;
            w *= wk;
        }
        total += w * f(&phi) * volume_element_raw(&phi);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < nodes[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == 7 {
                return total;
            }
        }
    }
}

/// Total volume by the tensor-product rule applied to the separable volume
/// element: the 7-fold sum factorizes into a product of 1-D sums.
pub fn sphere_volume_by_quadrature(nodes_per_angle: usize) -> f64 {
    let rule = GaussLegendre::new(nodes_per_angle);
    box_volume(&[0.0; 7], &[PI, PI, PI, PI, PI, PI, TAU], &rule)
}
