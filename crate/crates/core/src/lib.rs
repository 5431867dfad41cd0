//! Isometric stochastic flows on S^7 driven by a global orthonormal frame,
//! with density and entropy estimators and a transport of the dynamics to a
//! deformed model of an exotic sphere.

pub mod density;
pub mod error;
pub mod exotic;
pub mod field;
pub mod flow;
pub mod fokker_planck;
pub mod frame;
pub mod io;
pub mod linalg;
pub mod noise;
pub mod quadrature;
pub mod quaternion;
pub mod rng;
pub mod sde;
pub mod sphere;
pub mod symplectic;

pub use error::{Error, Result};
pub use exotic::{Deformation, ExoticPoint, Homeomorphism, ScalingFunction};
pub use field::{SharedField, VectorField};
pub use flow::{FlowMap, NPointMotion};
pub use frame::{CombinedField, FrameField, SkewGenerator, SpherePoint};
pub use linalg::{Mat8, Vec8};
pub use noise::NoisePath;
pub use quaternion::Quaternion;
pub use rng::SeedLineage;
pub use sde::{EnsembleSpec, SaveSchedule, Scheme, SdeProblem, Trajectory};
pub use sphere::SphericalCoords;
pub use symplectic::SpMatrix;
