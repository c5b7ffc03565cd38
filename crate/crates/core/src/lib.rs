//! Symplectic size of randomly rotated centrally symmetric convex bodies.
//!
//! Everything geometric is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the estimators and the CLI use.

pub mod alpha;
pub mod body;
pub mod ensemble;
pub mod error;
pub mod geom;
pub mod parallel;
pub mod rotation;
pub mod scalar;
pub mod stats;

pub use alpha::{alpha, ehz_ellipsoid, ehz_sandwich, AlphaMethod, AlphaOptions, AlphaPlan, AlphaResult, CapacityInterval};
pub use body::{make_body, polar, section_support, Block, ConvexBody, FamilySpec, Shape, VertexSet};
pub use ensemble::{
    capacity_expectation_sandwich, concentration_profile, counterexample_sweep, ellipsoid_capacity_expectation,
    expect_alpha_moment, psi2_norm_estimate, theorem17_mean_identity, EnsembleConfig, TailProfile,
};
pub use error::{Error, Result};
pub use geom::{circumradius, contact_point, inradius, mean_width, nondeg_functional, section_mean_width, table1_row, volume_radius_sq};
pub use rotation::{
    conjugate, haar_frame, haar_rotation, j_of, prop21_identities, pushforward_uniformity_test, standard_j,
    Prop21Record, RngStream, RotationMatrix, UniformityReport,
};
pub use scalar::Real;
pub use stats::{sphere_coordinate_cdf, EstimatorResult};

pub type Body = ConvexBody<f64>;
pub type Body32 = ConvexBody<f32>;
pub type Rotation = RotationMatrix<f64>;
pub type Rotation32 = RotationMatrix<f32>;
