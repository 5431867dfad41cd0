//! Fixed-size linear algebra on the ambient space R^8.

use nalgebra::{SMatrix, SVector};

pub type Vec8 = SVector<f64, 8>;
pub type Mat8 = SMatrix<f64, 8, 8>;

/// Orthogonal projector onto the tangent plane of the unit sphere at `z`.
pub fn tangent_projector(z: &Vec8) -> Mat8 {
    Mat8::identity() - z * z.transpose()
}

/// Exponential of a real 8x8 matrix by scaling and squaring with a fixed
/// diagonal Padé(6,6) approximant.
///
/// The argument is scaled so that its 1-norm is at most 1/2, where the
/// approximant's relative backward error is below double precision.
pub fn expm(a: &Mat8) -> Mat8 {
    // Padé(6,6) coefficients c_k = (12-k)! 6! / (12! k! (6-k)!)
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);

    let a2 = scaled * scaled;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let id = Mat8::identity();
    let even = id * C[0] + a2 * C[2] + a4 * C[4] + a6 * C[6];
    let odd = scaled * (id * C[1] + a2 * C[3] + a4 * C[5]);
    let p = even + odd;
    let q = even - odd;
    let mut result = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        result = result * result;
    }
    result
}

fn one_norm(a: &Mat8) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Central-difference Jacobian `J[i][k] = d f_i / d x_k` of a map R^8 -> R^8.
pub fn fd_jacobian<F>(f: F, x: &Vec8, h: f64) -> Mat8
where
    F: Fn(&Vec8) -> Vec8,
{
    let mut jac = Mat8::zeros();
    for k in 0..8 {
        let mut xp = *x;
        let mut xm = *x;
        xp[k] += h;
        xm[k] -= h;
        let col = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(k, &col);
    }
    jac
}

/// Central-difference gradient of a scalar function on R^8.
pub fn fd_gradient<F>(f: F, x: &Vec8, h: f64) -> Vec8
where
    F: Fn(&Vec8) -> f64,
{
    Vec8::from_fn(|k, _| {
        let mut xp = *x;
        let mut xm = *x;
        xp[k] += h;
        xm[k] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Central-difference Hessian of a scalar function on R^8.
pub fn fd_hessian<F>(f: F, x: &Vec8, h: f64) -> Mat8
where
    F: Fn(&Vec8) -> f64,
{
    let f0 = f(x);
    let mut hess = Mat8::zeros();
    for i in 0..8 {
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        hess[(i, i)] = (f(&xp) - 2.0 * f0 + f(&xm)) / (h * h);
        for j in (i + 1)..8 {
            let eval = |si: f64, sj: f64| {
                let mut y = *x;
                y[i] += si * h;
                y[j] += sj * h;
                f(&y)
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

#[cfg(test)]
mod tests {
    use super::*;

    // Truncated Taylor series, summed until terms vanish; independent of the
    // Padé route.
    fn expm_taylor(a: &Mat8) -> Mat8 {
        let mut sum = Mat8::identity();
        let mut term = Mat8::identity();
        for k in 1..60 {
            term = term * a / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_series_on_skew_and_general_inputs() {
        let mut a = Mat8::zeros();
        for i in 0..8 {
            for j in 0..8 {
                a[(i, j)] = ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.45;
            }
        }
        let skew = (a - a.transpose()) * 0.8;
        for m in [a, skew, skew * 3.0] {
            let diff = (expm(&m) - expm_taylor(&m)).abs().max();
            assert!(diff < 1e-11, "diff {diff}");
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        assert_eq!(expm(&Mat8::zeros()), Mat8::identity());
    }

    #[test]
    fn fd_hessian_of_quadratic_is_exact() {
        let f = |x: &Vec8| x[0] * x[1] + 2.0 * x[2] * x[2];
        let h = fd_hessian(f, &Vec8::from_element(0.3), 1e-4);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
        assert!((h[(2, 2)] - 4.0).abs() < 1e-5);
        assert!(h[(3, 3)].abs() < 1e-6);
    }
}
