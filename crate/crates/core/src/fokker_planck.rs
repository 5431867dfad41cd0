//! Fokker-Planck operator in angular coordinates, entropy rates and the
//! weak-form generator check.
//!
//! For an SDE with Itô generator `L`, the coordinate drift is `b^i = L φ^i`
//! and the coordinate diffusion is `D^{ij} = sum_alpha (V_alpha φ^i)(V_alpha φ^j)`.
//! With `ρ = p * vol` the density w.r.t. coordinate Lebesgue measure,
//! `∂_t ρ = -∂_i(b^i ρ) + ½ ∂_i ∂_j(D^{ij} ρ)`.

use nalgebra::{SMatrix, SVector};

use crate::density::{BinIndex, GridDensity};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::linalg::{fd_gradient, fd_hessian, Vec8};
use crate::sde::{simulate_ensemble, Dynamics, EnsembleSpec, SdeProblem};
use crate::sphere::{
    angles_lenient, cartesian_unchecked, chart_jacobian, volume_element_raw, SphericalCoords,
};

pub type Vec7 = SVector<f64, 7>;
pub type Mat7 = SMatrix<f64, 7, 7>;

/// Step along integral curves used for the second-order part of `L φ`.
pub const CURVE_STEP: f64 = 1e-5;

/// Smallest `sin φ_k` accepted as a regular chart point.
pub const CHART_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateCoefficients {
    pub drift: Vec7,
    pub diffusion: Mat7,
}

/// `V φ` for a tangent vector `v` at `z`: the chart is orthogonal, so the
/// pseudo-inverse of its Jacobian is `diag(1/|∂_k z|²) Jᵀ`.
fn coordinate_velocity(z: &Vec8, v: &Vec8) -> Vec7 {
    let jac = chart_jacobian(&angles_lenient(z));
    Vec7::from_fn(|k, _| {
        let col = jac.column(k);
        col.dot(v) / col.norm_squared()
    })
}

fn rk4_point(field: &dyn VectorField, z: &Vec8, h: f64) -> Vec8 {
    let k1 = field.eval(z);
    let k2 = field.eval(&(z + k1 * (0.5 * h)));
    let k3 = field.eval(&(z + k2 * (0.5 * h)));
    let k4 = field.eval(&(z + k3 * h));
    let y = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    y / y.norm()
}

fn check_regular(phi: &[f64; 7]) -> Result<()> {
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("angles"));
    }
    if phi[..6]
        .iter()
        .any(|x| x.sin() < CHART_MARGIN || *x < 0.0 || *x > std::f64::consts::PI)
    {
        return Err(Error::SingularChart {
            suggestion: SphericalCoords::from_raw(angles_lenient(&cartesian_unchecked(phi))),
        });
    }
    Ok(())
}

/// Drift and diffusion of the angular coordinates at a regular point.
pub fn coordinate_coefficients(
    dynamics: &Dynamics,
    phi: &[f64; 7],
) -> Result<CoordinateCoefficients> {
    check_regular(phi)?;
    let z = cartesian_unchecked(phi);
    let mut drift = coordinate_velocity(&z, &dynamics.drift_at(&z));
    let mut diffusion = Mat7::zeros();
    for v in dynamics.channels() {
        let v = v.as_ref();
        let c = coordinate_velocity(&z, &v.eval(&z));
        diffusion += c * c.transpose();
        let q = |y: &Vec8| coordinate_velocity(y, &v.eval(y));
        let fwd = q(&rk4_point(v, &z, CURVE_STEP));
        let bwd = q(&rk4_point(v, &z, -CURVE_STEP));
        drift += (fwd - bwd) * (0.25 / CURVE_STEP);
    }
    if drift.iter().chain(diffusion.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("coordinate coefficients"));
    }
    Ok(CoordinateCoefficients { drift, diffusion })
}

/// `RHS - LHS` of the angular Fokker-Planck equation at `phi`, with the
/// volume factor kept inside the derivatives:
/// `½ ∂_ij(D^{ij} p vol) - ∂_i(b^i p vol) - ∂_t p vol`.
/// Derivatives in the angles are central differences of step `delta`.
pub fn fokker_planck_residual<P, T>(
    p: P,
    dp_dt: T,
    dynamics: &Dynamics,
    phi: &[f64; 7],
    delta: f64,
) -> Result<f64>
where
    P: Fn(&[f64; 7]) -> f64,
    T: Fn(&[f64; 7]) -> f64,
{
    if !(delta > 0.0 && delta < 0.1) {
        return Err(Error::StepSize(delta));
    }
    let mut lo = *phi;
    let mut hi = *phi;
    for k in 0..6 {
        lo[k] -= delta;
        hi[k] += delta;
    }
    check_regular(&lo)?;
    check_regular(&hi)?;
    check_regular(phi)?;

    let weighted = |x: &[f64; 7]| -> Result<(Vec7, Mat7)> {
        let c = coordinate_coefficients(dynamics, x)?;
        let rho = p(x) * volume_element_raw(x);
        Ok((c.drift * rho, c.diffusion * rho))
    };
    let shifted = |moves: &[(usize, f64)]| {
        let mut x = *phi;
        for &(k, s) in moves {
            x[k] += s * delta;
        }
        x
    };

    let (_, h0) = weighted(phi)?;
    let mut transport = 0.0;
    let mut diffusion = 0.0;
    for i in 0..7 {
        let (fp, hp) = weighted(&shifted(&[(i, 1.0)]))?;
        let (fm, hm) = weighted(&shifted(&[(i, -1.0)]))?;
        transport += (fp[i] - fm[i]) / (2.0 * delta);
        diffusion += (hp[(i, i)] - 2.0 * h0[(i, i)] + hm[(i, i)]) / (delta * delta);
        for j in (i + 1)..7 {
            let corner =
                |si: f64, sj: f64| weighted(&shifted(&[(i, si), (j, sj)])).map(|(_, h)| h[(i, j)]);
            let mixed = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                + corner(-1.0, -1.0)?)
                / (4.0 * delta * delta);
            // D is symmetric: the (i,j) and (j,i) terms are equal
            diffusion += 2.0 * mixed;
        }
    }
    Ok(0.5 * diffusion - transport - dp_dt(phi) * volume_element_raw(phi))
}

/// Value of an entropy-rate quadrature over a grid density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRateReport {
    pub rate: f64,
    pub evaluated_bins: usize,
    /// bins with zero density, left out of the sum
    pub excluded_bins: usize,
}

/// Finite-difference stencil `(offset, weight)` for the first or second
/// derivative at bin `i` of an axis with `n` bins. Periodic axes wrap;
/// bounded axes switch to one-sided stencils at the ends.
fn stencil(n: usize, i: usize, periodic: bool, order: usize, h: f64) -> Vec<(isize, f64)> {
    if n < 3 {
        return Vec::new();
    }
    let i = i as isize;
    let n = n as isize;
    let interior = periodic || (i > 0 && i < n - 1);
    let s = match (order, interior, i == 0) {
        (1, true, _) => vec![(-1, -0.5), (1, 0.5)],
        (1, false, true) => vec![(0, -1.5), (1, 2.0), (2, -0.5)],
        (1, false, false) => vec![(0, 1.5), (-1, -2.0), (-2, 0.5)],
        (_, true, _) => vec![(-1, 1.0), (0, -2.0), (1, 1.0)],
        (_, false, true) => vec![(0, 1.0), (1, -2.0), (2, 1.0)],
        (_, false, false) => vec![(0, 1.0), (-1, -2.0), (-2, 1.0)],
    };
    let scale = if order == 1 { h } else { h * h };
    s.into_iter()
        .map(|(o, w)| (((i + o).rem_euclid(n)) - i, w / scale))
        .collect()
}

fn grid_derivatives(gd: &GridDensity, idx: &BinIndex) -> (Vec7, Mat7) {
    let bins = *gd.grid.bins();
    let value = |moves: &[(usize, isize)]| {
        let mut j = *idx;
        for &(k, o) in moves {
            j[k] = (j[k] as isize + o) as u16;
        }
        gd.value(&j)
    };
    let st =
        |k: usize, order: usize| stencil(bins[k], idx[k] as usize, k == 6, order, gd.grid.width(k));
    let mut grad = Vec7::zeros();
    let mut hess = Mat7::zeros();
    for i in 0..7 {
        grad[i] = st(i, 1).iter().map(|&(o, w)| w * value(&[(i, o)])).sum();
        hess[(i, i)] = st(i, 2).iter().map(|&(o, w)| w * value(&[(i, o)])).sum();
        for j in (i + 1)..7 {
            let (si, sj) = (st(i, 1), st(j, 1));
            let mut m = 0.0;
            for &(oi, wi) in &si {
                for &(oj, wj) in &sj {
                    m += wi * wj * value(&[(i, oi), (j, oj)]);
                }
            }
            hess[(i, j)] = m;
            hess[(j, i)] = m;
        }
    }
    (grad, hess)
}

fn rate_sum<F>(gd: &GridDensity, dynamics: &Dynamics, integrand: F) -> Result<EntropyRateReport>
where
    F: Fn(f64, &Vec7, &Mat7, &Mat7) -> f64,
{
    let mut rate = 0.0;
    let mut evaluated = 0;
    let mut excluded = 0;
    for lin in 0..gd.values.len() {
        let idx = gd.grid.bin_from_linear(lin);
        let p = gd.values[lin];
        if p <= 0.0 {
            excluded += 1;
            continue;
        }
        let (grad, hess) = grid_derivatives(gd, &idx);
        let d = coordinate_coefficients(dynamics, &gd.grid.centre(&idx))?.diffusion;
        rate += integrand(p, &grad, &hess, &d) * gd.grid.bin_volume(&idx);
        evaluated += 1;
    }
    if excluded > 0 {
        log::warn!("entropy rate: {excluded} bins with zero density excluded");
    }
    Ok(EntropyRateReport {
        rate,
        evaluated_bins: evaluated,
        excluded_bins: excluded,
    })
}

/// The bracketed rate expression
/// `-∫ ½ sum_ij [ -(1/p) D^{ij} ∂_i p ∂_j p + ∂_ij p D^{ij} ] dV`
/// evaluated by bin quadrature with grid finite differences.
pub fn entropy_rate_formula(gd: &GridDensity, dynamics: &Dynamics) -> Result<EntropyRateReport> {
    rate_sum(gd, dynamics, |p, g, h, d| {
        let quad = (g.transpose() * d * g)[0];
        -0.5 * (-quad / p + h.component_mul(d).sum())
    })
}

/// `½ ∫ D^{ij} ∂_i p ∂_j p / p dV`, the entropy production of a diffusion
/// driven by divergence-free (e.g. Killing) fields.
pub fn entropy_rate_fisher(gd: &GridDensity, dynamics: &Dynamics) -> Result<EntropyRateReport> {
    rate_sum(gd, dynamics, |p, g, _, d| {
        0.5 * (g.transpose() * d * g)[0] / p
    })
}

/// `(L f)(z) = ∇f · (a + ½ h) + ½ sum_alpha V_alphaᵀ H_f V_alpha`, derivatives
/// of `f` by central differences in the ambient space.
pub fn apply_generator<F>(dynamics: &Dynamics, f: &F, z: &Vec8, h: f64) -> Result<f64>
where
    F: Fn(&Vec8) -> f64,
{
    let grad = fd_gradient(f, z, h);
    let hess = fd_hessian(f, z, h);
    let drift = dynamics.drift_at(z) + dynamics.ito_correction(z)? * 0.5;
    let mut second = 0.0;
    for v in dynamics.channels() {
        let vz = v.eval(z);
        second += (vz.transpose() * hess * vz)[0];
    }
    Ok(grad.dot(&drift) + 0.5 * second)
}

/// Monte Carlo comparison of `E f(z_t) - f(z_0)` with `∫_0^t E (Lf)(z_s) ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakCheckReport {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_standard_error: f64,
    /// standard error of the per-path difference `lhs - rhs`
    pub difference_standard_error: f64,
    pub t: f64,
}

impl WeakCheckReport {
    pub fn difference(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// Difference in units of its standard error (0 when both vanish).
    pub fn z_score(&self) -> f64 {
        let d = self.difference();
        if d == 0.0 {
            0.0
        } else {
            d.abs() / self.difference_standard_error
        }
    }
}

/// Weak-form check. The time integral uses the trapezoid rule over the
/// ensemble's save schedule, so `spec.save` should be reasonably dense.
pub fn generator_weak_check<F>(
    problem: &SdeProblem,
    f: F,
    spec: &EnsembleSpec,
) -> Result<WeakCheckReport>
where
    F: Fn(&Vec8) -> f64 + Sync,
{
    let paths = simulate_ensemble(problem, spec)?;
    let h = 1e-4;
    let dynamics = problem.dynamics();
    let n = paths.len() as f64;
    let mut sum = [0.0; 4];
    for p in &paths {
        let lf = p
            .states
            .iter()
            .map(|s| apply_generator(dynamics, &f, s.as_vec(), h))
            .collect::<Result<Vec<_>>>()?;
        let integral: f64 = p
            .times
            .windows(2)
            .zip(lf.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum();
        let lhs = f(p.final_state().as_vec()) - f(p.states[0].as_vec());
        let d = lhs - integral;
        sum[0] += lhs;
        sum[1] += lhs * lhs;
        sum[2] += integral;
        sum[3] += d * d;
    }
    let lhs = sum[0] / n;
    let rhs = sum[2] / n;
    let var_lhs = (sum[1] / n - lhs * lhs).max(0.0);
    let var_d = (sum[3] / n - (lhs - rhs).powi(2)).max(0.0);
    Ok(WeakCheckReport {
        lhs,
        rhs,
        lhs_standard_error: (var_lhs / n).sqrt(),
        difference_standard_error: (var_d / n).sqrt(),
        t: spec.n_steps as f64 * spec.dt,
    })
}
