//! Sp(2,H) as 2x2 quaternionic matrices with orthonormal columns, together
//! with the two free S^3 actions on it: the standard `•`-action, whose
//! quotient is S^7, and the Gromoll-Meyer `⋆`-action.

use rand::Rng;

use crate::error::{Error, Result};
use crate::frame::SpherePoint;
use crate::linalg::Vec8;
use crate::quaternion::Quaternion;

/// Tolerance for both membership conditions.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Tolerance on `|q| = 1` for acting quaternions.
pub const UNIT_TOL: f64 = 1e-9;

/// `Q = [[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpMatrix {
    pub a: Quaternion,
    pub b: Quaternion,
    pub c: Quaternion,
    pub d: Quaternion,
}

/// Residuals of the two membership conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub is_member: bool,
    /// max of `||a|^2 + |c|^2 - 1|` and `||b|^2 + |d|^2 - 1|`
    pub column_residual: f64,
    /// `|conj(b) a + conj(d) c|`
    pub orthogonality_residual: f64,
}

impl SpMatrix {
    pub const IDENTITY: SpMatrix = SpMatrix {
        a: Quaternion::ONE,
        b: Quaternion::ZERO,
        c: Quaternion::ZERO,
        d: Quaternion::ONE,
    };

    pub fn new(a: Quaternion, b: Quaternion, c: Quaternion, d: Quaternion) -> Self {
        SpMatrix { a, b, c, d }
    }

    pub fn membership(&self) -> Membership {
        let col1 = (self.a.norm_squared() + self.c.norm_squared() - 1.0).abs();
        let col2 = (self.b.norm_squared() + self.d.norm_squared() - 1.0).abs();
        let column_residual = col1.max(col2);
        let orthogonality_residual = (self.b.conj() * self.a + self.d.conj() * self.c).norm();
        Membership {
            is_member: column_residual <= MEMBERSHIP_TOL
                && orthogonality_residual <= MEMBERSHIP_TOL,
            column_residual,
            orthogonality_residual,
        }
    }

    /// Max-abs entrywise distance.
    pub fn distance_max(&self, other: &SpMatrix) -> f64 {
        self.a
            .distance_max(other.a)
            .max(self.b.distance_max(other.b))
            .max(self.c.distance_max(other.c))
            .max(self.d.distance_max(other.d))
    }

    /// Random member: first column uniform on S^7, second column completed by
    /// quaternionic Gram-Schmidt against the first.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let first = SpherePoint::random(rng);
        let (a, c) = unpack_pair(first.as_vec());
        loop {
            let cand = SpherePoint::random(rng);
            let (b0, d0) = unpack_pair(cand.as_vec());
            // <(a,c),(b,d)> = conj(a) b + conj(c) d; remove the component along
            // (a,c) using right scalar multiplication.
            let lambda = a.conj() * b0 + c.conj() * d0;
            let b1 = b0 - a * lambda;
            let d1 = d0 - c * lambda;
            let n = (b1.norm_squared() + d1.norm_squared()).sqrt();
            if n > 1e-3 {
                return SpMatrix::new(a, b1.scale(1.0 / n), c, d1.scale(1.0 / n));
            }
        }
    }
}

/// `is_member` with its residual report.
pub fn is_member(q: &SpMatrix) -> Membership {
    q.membership()
}

/// A real-form matrix `[[alpha, beta], [-beta, alpha]]` with `alpha^2 + beta^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealFormMatrix {
    alpha: f64,
    beta: f64,
}

impl RealFormMatrix {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let n = alpha * alpha + beta * beta;
        if (n - 1.0).abs() > MEMBERSHIP_TOL {
            return Err(Error::InvalidParameter(format!(
                "real-form entries must satisfy alpha^2 + beta^2 = 1, got {n}"
            )));
        }
        Ok(RealFormMatrix { alpha, beta })
    }

    pub fn from_angle(theta: f64) -> Self {
        RealFormMatrix {
            alpha: theta.cos(),
            beta: theta.sin(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn to_sp(&self) -> SpMatrix {
        SpMatrix::new(
            Quaternion::real(self.alpha),
            Quaternion::real(self.beta),
            Quaternion::real(-self.beta),
            Quaternion::real(self.alpha),
        )
    }
}

fn check_unit(q: Quaternion) -> Result<()> {
    let norm = q.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        Err(Error::NonUnitQuaternion { norm })
    } else {
        Ok(())
    }
}

/// `q • Q = [[a, b q̄], [c, d q̄]]`.
pub fn bullet_action(q: Quaternion, m: &SpMatrix) -> Result<SpMatrix> {
    check_unit(q)?;
    let qb = q.conj();
    Ok(SpMatrix::new(m.a, m.b * qb, m.c, m.d * qb))
}

/// `q ⋆ Q = [[q a q̄, q b], [q c q̄, q d]]`.
pub fn star_action(q: Quaternion, m: &SpMatrix) -> Result<SpMatrix> {
    check_unit(q)?;
    let qb = q.conj();
    Ok(SpMatrix::new(q * m.a * qb, q * m.b, q * m.c * qb, q * m.d))
}

/// Interleave a quaternion pair `(p, r)` into R^8 as
/// `(p0, r0, p1, r1, p2, r2, p3, r3)`.
pub fn pack_pair(p: Quaternion, r: Quaternion) -> Vec8 {
    Vec8::from_column_slice(&[p.w, r.w, p.x, r.x, p.y, r.y, p.z, r.z])
}

/// Inverse of [`pack_pair`].
pub fn unpack_pair(z: &Vec8) -> (Quaternion, Quaternion) {
    (
        Quaternion::new(z[0], z[2], z[4], z[6]),
        Quaternion::new(z[1], z[3], z[5], z[7]),
    )
}

/// Projection of the `•`-bundle: the first column `(a, c)` in the interleaved
/// layout.
pub fn project_bullet(m: &SpMatrix) -> Result<SpherePoint> {
    let mem = m.membership();
    if !mem.is_member {
        return Err(Error::NotSymplectic {
            column: mem.column_residual,
            orthogonality: mem.orthogonality_residual,
        });
    }
    Ok(SpherePoint::new_unchecked(pack_pair(m.a, m.c)))
}

/// Identification of the second column `(b, d)` with a point of S^7, in the
/// same interleaved layout.
pub fn identify_second_column(m: &SpMatrix) -> Result<SpherePoint> {
    SpherePoint::new(pack_pair(m.b, m.d))
}

/// Tolerance for entrywise fiber coincidence.
pub const FIBER_TOL: f64 = 1e-12;

/// Finds `q'` with `q • R = q' ⋆ R`. Real entries commute with every
/// quaternion, so `q' = q̄`.
pub fn fiber_coincidence_check(r: &RealFormMatrix, q: Quaternion) -> Result<Quaternion> {
    let sp = r.to_sp();
    let lhs = bullet_action(q, &sp)?;
    let candidate = q.conj();
    let rhs = star_action(candidate, &sp)?;
    let residual = lhs.distance_max(&rhs);
    if residual <= FIBER_TOL {
        Ok(candidate)
    } else {
        Err(Error::FiberMismatch { residual })
    }
}
