//! Circular rectification of multiview camera rigs.
//!
//! Takes a rig of calibrated cameras placed roughly on a circle, fits the
//! ideal circle through their positions, snaps each camera onto it, aims
//! every optical axis at the circle centre and corrects intrinsics so the
//! whole rig is described by a handful of shared scalars plus one angle and
//! one principal-point offset per camera. For rigs in that reduced form,
//! point correspondences between views collapse from a 4x4 matrix chain to a
//! few multiplications per point ([`circular`]); the evaluation harness
//! ([`eval`]) verifies the equivalence against the full perspective path,
//! measures the kernel speedup and scores inter-view prediction quality on
//! synthetic scenes ([`synth`]) via depth-image-based warping ([`dibr`]).
//!
//! Geometry modules are generic over the scalar type (`f32`/`f64`) via
//! [`real::Real`]; the aliases at the crate root fix `f64`, which is what the
//! frame pipeline works in.

// `!(a > b)` rather than `a <= b`: NaN must fail validity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Indexed loops are clearer than iterator chains in the matrix kernels.
#![allow(clippy::needless_range_loop)]

pub mod camera;
pub mod circle_fit;
pub mod circular;
pub mod dibr;
pub mod eval;
pub mod io;
pub mod math;
pub mod real;
pub mod rectify;
pub mod synth;

pub use real::Real;

/// `f64` instantiations of the generic geometry types.
pub type Intrinsics = camera::Intrinsics<f64>;
pub type Extrinsics = camera::Extrinsics<f64>;
pub type CameraParams = camera::CameraParams<f64>;
pub type ProjectionMatrix = camera::ProjectionMatrix<f64>;
pub type ImagePoint = camera::ImagePoint<f64>;
pub type PointProjector = camera::PointProjector<f64>;
pub type Circle = circle_fit::Circle<f64>;
pub type FitResult = circle_fit::FitResult<f64>;
pub type CircularCameraParams = rectify::CircularCameraParams<f64>;
pub type RectifiedRig = rectify::RectifiedRig<f64>;
pub type CircularPair = circular::CircularPair<f64>;
pub type LinearPair = circular::LinearPair<f64>;
pub type Vec3 = math::Vec3<f64>;
pub type Mat3 = math::Mat3<f64>;
pub type Mat4 = math::Mat4<f64>;
