//! The global orthonormal Killing frame of S^7 and fields built from it.
//!
//! Each frame field is `U_mu(z) = J_mu z` for a constant skew generator with
//! `J_mu^2 = -I`. The generators pairwise anticommute, so the frame is
//! orthonormal at every point of the sphere.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::SMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::linalg::{fd_jacobian, tangent_projector, Mat8, Vec8};

/// Tolerance of the unit-norm invariant of [`SpherePoint`].
pub const SPHERE_TOL: f64 = 1e-10;

/// A unit vector in R^8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vec8);

impl SpherePoint {
    pub fn new(v: Vec8) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > SPHERE_TOL {
            return Err(Error::NotOnSphere { norm });
        }
        Ok(SpherePoint(v))
    }

    pub fn from_slice(c: &[f64; 8]) -> Result<Self> {
        Self::new(Vec8::from_column_slice(c))
    }

    /// Radial projection onto the sphere.
    pub fn normalize(v: Vec8) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(SpherePoint(v / norm))
    }

    pub(crate) fn new_unchecked(v: Vec8) -> Self {
        SpherePoint(v)
    }

    /// Standard basis point `e_k`, `k` in 1..=8.
    pub fn basis(k: usize) -> Self {
        assert!((1..=8).contains(&k), "basis index {k} out of range 1..=8");
        let mut v = Vec8::zeros();
        v[k - 1] = 1.0;
        SpherePoint(v)
    }

    /// Uniform sample on S^7 from a normalized Gaussian in R^8.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Vec8::from_fn(|_, _| rng.sample(StandardNormal));
            let n = v.norm();
            if n > 1e-150 {
                return SpherePoint(v / n);
            }
        }
    }

    pub fn as_vec(&self) -> &Vec8 {
        &self.0
    }

    pub fn into_vec(self) -> Vec8 {
        self.0
    }

    pub fn coords(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        out.copy_from_slice(self.0.as_slice());
        out
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Signed coordinate-plane rotations `U_ij = z^i d_j - z^j d_i` making up each
/// frame field, 1-based.
const FRAME_PLANES: [[(usize, usize, f64); 4]; 7] = [
    [(1, 2, 1.0), (3, 4, 1.0), (5, 6, 1.0), (7, 8, 1.0)],
    [(1, 3, 1.0), (2, 4, -1.0), (5, 7, -1.0), (6, 8, 1.0)],
    [(1, 4, 1.0), (2, 3, 1.0), (5, 8, 1.0), (6, 7, 1.0)],
    [(1, 5, 1.0), (2, 6, -1.0), (3, 7, 1.0), (4, 8, -1.0)],
    [(1, 6, 1.0), (2, 5, 1.0), (3, 8, -1.0), (4, 7, -1.0)],
    [(1, 7, 1.0), (2, 8, -1.0), (3, 5, -1.0), (4, 6, 1.0)],
    [(1, 8, 1.0), (2, 7, 1.0), (3, 6, 1.0), (4, 5, 1.0)],
];

/// An 8x8 skew-symmetric matrix `J` with `U(z) = J z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewGenerator(Mat8);

impl SkewGenerator {
    /// Generator of the plane rotation `U_ij`, 1-based `i != j`.
    pub fn plane(i: usize, j: usize) -> Self {
        assert!(i != j && (1..=8).contains(&i) && (1..=8).contains(&j));
        let mut m = Mat8::zeros();
        m[(j - 1, i - 1)] = 1.0;
        m[(i - 1, j - 1)] = -1.0;
        SkewGenerator(m)
    }

    pub fn matrix(&self) -> &Mat8 {
        &self.0
    }

    pub fn apply(&self, z: &Vec8) -> Vec8 {
        self.0 * z
    }
}

fn build_generator(mu: usize) -> Mat8 {
    let mut m = Mat8::zeros();
    for &(i, j, s) in &FRAME_PLANES[mu - 1] {
        m[(j - 1, i - 1)] += s;
        m[(i - 1, j - 1)] -= s;
    }
    m
}

fn generators() -> &'static [SkewGenerator; 7] {
    static GENERATORS: OnceLock<[SkewGenerator; 7]> = OnceLock::new();
    GENERATORS.get_or_init(|| std::array::from_fn(|k| SkewGenerator(build_generator(k + 1))))
}

fn check_index(mu: usize) -> Result<()> {
    if (1..=7).contains(&mu) {
        Ok(())
    } else {
        Err(Error::FrameIndex(mu))
    }
}

/// Skew generator `J_mu` of the frame field `U_mu`, `mu` in 1..=7.
pub fn generator_matrix(mu: usize) -> Result<SkewGenerator> {
    check_index(mu)?;
    Ok(generators()[mu - 1])
}

/// All seven frame generators, index 0 holding `J_1`.
pub fn all_generators() -> [Mat8; 7] {
    std::array::from_fn(|k| generators()[k].0)
}

/// `U_mu(z)` evaluated from the component formulas.
pub fn frame_eval(mu: usize, z: &SpherePoint) -> Result<Vec8> {
    check_index(mu)?;
    Ok(generators()[mu - 1].apply(z.as_vec()))
}

/// The 8x7 matrix whose columns are `U_1(z), ..., U_7(z)`.
pub fn frame_matrix(z: &Vec8) -> SMatrix<f64, 8, 7> {
    let gens = generators();
    SMatrix::<f64, 8, 7>::from_fn(|i, mu| (gens[mu].0 * z)[i])
}

/// A single frame field as a [`VectorField`].
#[derive(Debug, Clone, Copy)]
pub struct FrameField(usize);

impl FrameField {
    pub fn new(mu: usize) -> Result<Self> {
        check_index(mu)?;
        Ok(FrameField(mu))
    }

    pub fn index(&self) -> usize {
        self.0
    }
}

impl VectorField for FrameField {
    fn eval(&self, z: &Vec8) -> Vec8 {
        generators()[self.0 - 1].apply(z)
    }
    fn jacobian(&self, _z: &Vec8) -> Mat8 {
        generators()[self.0 - 1].0
    }
    fn generator(&self) -> Option<Mat8> {
        Some(generators()[self.0 - 1].0)
    }
}

/// `sum_mu c_mu U_mu` with constant coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCombination(pub [f64; 7]);

impl ConstantCombination {
    pub fn matrix(&self) -> Mat8 {
        let gens = generators();
        self.0.iter().zip(gens.iter()).map(|(c, g)| g.0 * *c).sum()
    }
}

impl VectorField for ConstantCombination {
    fn eval(&self, z: &Vec8) -> Vec8 {
        self.matrix() * z
    }
    fn jacobian(&self, _z: &Vec8) -> Mat8 {
        self.matrix()
    }
    fn generator(&self) -> Option<Mat8> {
        Some(self.matrix())
    }
}

/// Differentiability of the coefficient functions of a [`CombinedField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Continuous,
    C1,
    Smooth,
}

type CoefficientFn = dyn Fn(&Vec8) -> [f64; 7] + Send + Sync;

/// A field `A = A^mu(z) U_mu` with state-dependent coefficients.
#[derive(Clone)]
pub struct CombinedField {
    coeffs: Arc<CoefficientFn>,
    smoothness: Smoothness,
    constant: Option<[f64; 7]>,
}

impl fmt::Debug for CombinedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CombinedField")
            .field("smoothness", &self.smoothness)
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

impl CombinedField {
    pub fn new<F>(coeffs: F, smoothness: Smoothness) -> Self
    where
        F: Fn(&Vec8) -> [f64; 7] + Send + Sync + 'static,
    {
        CombinedField {
            coeffs: Arc::new(coeffs),
            smoothness,
            constant: None,
        }
    }

    pub fn constant(c: [f64; 7]) -> Self {
        CombinedField {
            coeffs: Arc::new(move |_| c),
            smoothness: Smoothness::Smooth,
            constant: Some(c),
        }
    }

    /// `A^1(z) = z^1`, all other coefficients zero. Not Killing.
    pub fn first_coordinate() -> Self {
        CombinedField::new(
            |z| {
                let mut c = [0.0; 7];
                c[0] = z[0];
                c
            },
            Smoothness::Smooth,
        )
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn coefficients(&self, z: &Vec8) -> [f64; 7] {
        (self.coeffs)(z)
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }
}

impl VectorField for CombinedField {
    fn eval(&self, z: &Vec8) -> Vec8 {
        let c = self.coefficients(z);
        let gens = generators();
        let mut out = Vec8::zeros();
        for (cm, g) in c.iter().zip(gens.iter()) {
            if *cm != 0.0 {
                out += g.apply(z) * *cm;
            }
        }
        out
    }

    fn generator(&self) -> Option<Mat8> {
        self.constant.map(|c| ConstantCombination(c).matrix())
    }

    fn jacobian(&self, z: &Vec8) -> Mat8 {
        match self.constant {
            Some(c) => ConstantCombination(c).matrix(),
            None => fd_jacobian(|x| self.eval(x), z, crate::field::FD_STEP),
        }
    }
}

/// `A(z) = sum_mu A^mu(z) U_mu(z)`.
pub fn combined_eval(a: &CombinedField, z: &SpherePoint) -> Vec8 {
    a.eval(z.as_vec())
}

fn check_step(h: f64) -> Result<()> {
    if (1e-7..=1e-3).contains(&h) {
        Ok(())
    } else {
        Err(Error::StepSize(h))
    }
}

/// Symmetrized coefficient-gradient matrix
/// `M_ij = sum_mu (U_mu^j d_i A^mu + U_mu^i d_j A^mu)`.
///
/// The gradients are central differences in ambient space, projected onto the
/// tangent plane at `z`. Since every `U_mu` is Killing, `A` is Killing exactly
/// when `M` vanishes.
pub fn killing_residual(a: &CombinedField, z: &SpherePoint, h: f64) -> Result<Mat8> {
    check_step(h)?;
    let zv = z.as_vec();
    let proj = tangent_projector(zv);
    let mut grads = [Vec8::zeros(); 7];
    for k in 0..8 {
        let mut zp = *zv;
        let mut zm = *zv;
        zp[k] += h;
        zm[k] -= h;
        let cp = a.coefficients(&zp);
        let cm = a.coefficients(&zm);
        for mu in 0..7 {
            let d = (cp[mu] - cm[mu]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFinite("combined-field coefficients"));
            }
            grads[mu][k] = d;
        }
    }
    let frame = frame_matrix(zv);
    let mut m = Mat8::zeros();
    for (mu, g) in grads.iter().enumerate() {
        let g = proj * g;
        let u = frame.column(mu);
        m += g * u.transpose() + u * g.transpose();
    }
    Ok(m)
}

/// Central-difference Lie derivative of the Euclidean metric along `v`,
/// `(L_V g)_ij = d_i V^j + d_j V^i`, restricted to the tangent plane at `z`.
pub fn lie_derivative_metric<F>(v: F, z: &SpherePoint, h: f64) -> Result<Mat8>
where
    F: Fn(&Vec8) -> Vec8,
{
    check_step(h)?;
    let zv = z.as_vec();
    let v0 = v(zv);
    let radial = zv.dot(&v0);
    if !radial.is_finite() {
        return Err(Error::NonFinite("vector field"));
    }
    if radial.abs() > SPHERE_TOL * v0.norm().max(1.0) {
        return Err(Error::NotTangent(radial));
    }
    let jac = fd_jacobian(&v, zv, h);
    if jac.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("vector field"));
    }
    let proj = tangent_projector(zv);
    Ok(proj * (jac + jac.transpose()) * proj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Component formulas transcribed term by term, independent of the
    // plane table used to build the generators.
    fn components(mu: usize, z: &[f64; 8]) -> [f64; 8] {
        let [z1, z2, z3, z4, z5, z6, z7, z8] = *z;
        match mu {
            1 => [-z2, z1, -z4, z3, -z6, z5, -z8, z7],
            2 => [-z3, z4, z1, -z2, z7, -z8, -z5, z6],
            3 => [-z4, -z3, z2, z1, -z8, -z7, z6, z5],
            4 => [-z5, z6, -z7, z8, z1, -z2, z3, -z4],
            5 => [-z6, -z5, z8, z7, z2, z1, -z4, -z3],
            6 => [-z7, z8, z5, -z6, -z3, z4, z1, -z2],
            7 => [-z8, -z7, -z6, -z5, z4, z3, z2, z1],
            _ => unreachable!(),
        }
    }

    #[test]
    fn generators_match_component_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let z = SpherePoint::random(&mut rng);
            for mu in 1..=7 {
                let got = frame_eval(mu, &z).unwrap();
                let want = components(mu, &z.coords());
                for k in 0..8 {
                    assert_eq!(got[k], want[k]);
                }
            }
        }
    }

    #[test]
    fn frame_on_first_basis_vector() {
        let e1 = SpherePoint::basis(1);
        assert_eq!(frame_eval(1, &e1).unwrap(), *SpherePoint::basis(2).as_vec());
        assert_eq!(frame_eval(7, &e1).unwrap(), *SpherePoint::basis(8).as_vec());
        let j1 = generator_matrix(1).unwrap();
        assert_eq!(
            j1.apply(SpherePoint::basis(2).as_vec()),
            -SpherePoint::basis(1).as_vec()
        );
    }

    #[test]
    fn index_out_of_range() {
        let e1 = SpherePoint::basis(1);
        assert_eq!(frame_eval(0, &e1), Err(Error::FrameIndex(0)));
        assert_eq!(frame_eval(8, &e1), Err(Error::FrameIndex(8)));
        assert!(generator_matrix(9).is_err());
    }

    // Brute-force 8x8 products, element by element.
    fn mat_mul(a: &Mat8, b: &Mat8) -> Mat8 {
        let mut c = Mat8::zeros();
        for i in 0..8 {
            for j in 0..8 {
                let mut s = 0.0;
                for k in 0..8 {
                    s += a[(i, k)] * b[(k, j)];
                }
                c[(i, j)] = s;
            }
        }
        c
    }

    #[test]
    fn generator_identities_by_brute_force() {
        let gens = all_generators();
        for (m, jm) in gens.iter().enumerate() {
            assert_eq!(jm.transpose(), -jm);
            assert_eq!(mat_mul(jm, jm), -Mat8::identity());
            for (n, jn) in gens.iter().enumerate() {
                let s = mat_mul(&jm.transpose(), jn) + mat_mul(&jn.transpose(), jm);
                let want = if m == n {
                    Mat8::identity() * 2.0
                } else {
                    Mat8::zeros()
                };
                assert_eq!(s, want, "pair ({}, {})", m + 1, n + 1);
            }
        }
    }

    #[test]
    fn combined_eval_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let z = SpherePoint::random(&mut rng);
        let mut c = [0.0; 7];
        c[0] = 1.0;
        assert_eq!(
            combined_eval(&CombinedField::constant(c), &z),
            frame_eval(1, &z).unwrap()
        );
        assert_eq!(
            combined_eval(&CombinedField::constant([0.0; 7]), &z),
            Vec8::zeros()
        );
        let e1 = SpherePoint::basis(1);
        assert_eq!(
            combined_eval(&CombinedField::first_coordinate(), &e1),
            *SpherePoint::basis(2).as_vec()
        );
    }

    #[test]
    fn killing_residual_vanishes_for_constant_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = CombinedField::constant([0.3, -1.0, 0.5, 0.0, 2.0, 0.1, -0.7]);
        let mut u1 = [0.0; 7];
        u1[0] = 1.0;
        for _ in 0..20 {
            let z = SpherePoint::random(&mut rng);
            assert!(killing_residual(&a, &z, 1e-5).unwrap().abs().max() < 1e-8);
            let r = killing_residual(&CombinedField::constant(u1), &z, 1e-5).unwrap();
            assert_eq!(r.abs().max(), 0.0);
        }
    }

    #[test]
    fn killing_residual_of_first_coordinate_matches_hand_assembly() {
        let z = SpherePoint::normalize(Vec8::from_column_slice(&[
            0.5, 0.1, -0.3, 0.2, 0.4, -0.6, 0.25, 0.1,
        ]))
        .unwrap();
        let zv = *z.as_vec();
        let m = killing_residual(&CombinedField::first_coordinate(), &z, 1e-5).unwrap();
        // d_i A^1 = delta_i1, projected: g = e1 - z1 z
        let g: Vec<f64> = (0..8)
            .map(|i| if i == 0 { 1.0 } else { 0.0 } - zv[0] * zv[i])
            .collect();
        let u = components(1, &z.coords());
        for i in 0..8 {
            for j in 0..8 {
                let want = u[j] * g[i] + u[i] * g[j];
                assert!((m[(i, j)] - want).abs() < 1e-8);
            }
        }
        assert!(m.abs().max() > 0.1);
    }

    #[test]
    fn killing_residual_rejects_bad_step() {
        let z = SpherePoint::basis(1);
        let a = CombinedField::constant([0.0; 7]);
        assert_eq!(killing_residual(&a, &z, 1e-2), Err(Error::StepSize(1e-2)));
        assert_eq!(killing_residual(&a, &z, 1e-9), Err(Error::StepSize(1e-9)));
    }

    #[test]
    fn killing_residual_reports_non_finite_coefficients() {
        let a = CombinedField::new(|_| [f64::NAN; 7], Smoothness::Smooth);
        let r = killing_residual(&a, &SpherePoint::basis(3), 1e-5);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn lie_derivative_of_frame_fields_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let z = SpherePoint::random(&mut rng);
            for mu in 1..=7 {
                let f = FrameField::new(mu).unwrap();
                let l = lie_derivative_metric(|x| f.eval(x), &z, 1e-5).unwrap();
                assert!(l.abs().max() < 1e-6);
            }
            let (a, b) = (FrameField::new(2).unwrap(), FrameField::new(6).unwrap());
            let l = lie_derivative_metric(|x| a.eval(x) + b.eval(x), &z, 1e-5).unwrap();
            assert!(l.abs().max() < 1e-6);
        }
    }

    #[test]
    fn lie_derivative_rejects_radial_field() {
        let z = SpherePoint::basis(4);
        let r = lie_derivative_metric(|x| *x, &z, 1e-5);
        assert!(matches!(r, Err(Error::NotTangent(_))));
    }

    #[test]
    fn lie_derivative_detects_non_killing_field() {
        let z = SpherePoint::normalize(Vec8::from_column_slice(&[
            0.5, 0.1, -0.3, 0.2, 0.4, -0.6, 0.25, 0.1,
        ]))
        .unwrap();
        let a = CombinedField::first_coordinate();
        let l = lie_derivative_metric(|x| a.eval(x), &z, 1e-5).unwrap();
        let m = killing_residual(&a, &z, 1e-5).unwrap();
        // For tangent inputs the two routes agree: A^mu L_{U_mu} g = 0.
        let proj = tangent_projector(z.as_vec());
        assert!((l - proj * m * proj).abs().max() < 1e-7);
        assert!(l.abs().max() > 0.1);
    }
}
