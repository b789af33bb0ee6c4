//! Circular rectification: snap cameras onto the fitted circle, aim every
//! optical axis at the circle centre and correct the intrinsics so that the
//! whole rig is described by shared `(f_x, f_y, o_y, r)` plus a per-camera
//! angle and horizontal principal point.

use thiserror::Error;

use crate::camera::{CameraError, CameraParams, Extrinsics, Intrinsics};
use crate::circle_fit::{self, Circle, CircleFitError};
use crate::math::{Mat3, Vec3};
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RectifyError {
    #[error("circle fit failed: {0}")]
    Fit(#[from] CircleFitError),
    #[error("view {view}: reference point has non-positive depth in the rectified camera")]
    PointBehindCamera { view: u32 },
    #[error("view {view}: rectification produced an invalid camera: {source}")]
    Camera {
        view: u32,
        #[source]
        source: CameraError,
    },
    #[error("rig is empty")]
    EmptyRig,
}

/// How the reference depth for the per-camera principal-point correction is
/// chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OxPolicy {
    /// Depth of the least-squares closest point to all original optical axes
    /// (the point the rig converges on), measured along each principal ray.
    #[default]
    Convergence,
    /// Euclidean distance from each camera to the circle centre.
    CircleCenter,
}

/// Reduced per-camera parameter set of a circularly rectified camera:
/// shared horizontal focal length, per-camera horizontal principal point,
/// shared vertical principal point, circle angle and radius. No vertical
/// focal length, no skew, no rotation matrix, no translation vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularCameraParams<S> {
    pub f_x: S,
    pub o_x: S,
    pub o_y: S,
    pub alpha: S,
    pub r: S,
    pub width: u32,
    pub height: u32,
}

/// Output of [`rectify_rig`]: the fitted circle, the reduced parameter set
/// per camera, the equivalent full camera parameters, and the rig-level
/// values needed to reconstruct them.
#[derive(Clone, Debug)]
pub struct RectifiedRig<S> {
    pub circle: Circle<S>,
    pub cameras: Vec<CircularCameraParams<S>>,
    pub full_params: Vec<CameraParams<S>>,
    pub common_f_y: S,
    pub camera_height: S,
    pub ox_policy: OxPolicy,
}

/// Rotation of a rectified camera at circle angle `alpha`.
///
/// Yaw-only (the optical axes stay in the plane of the circle) and aimed so
/// that a camera at position `centre + r*(sin a, 0, cos a)` looks straight at
/// the circle centre under this crate's world-to-camera convention.
pub fn rectified_rotation<S: Real>(alpha: S) -> Mat3<S> {
    let (s, c) = (alpha.sin(), alpha.cos());
    let zero = S::zero();
    Mat3([
        [-c, zero, s],
        [zero, S::one(), zero],
        [-s, zero, -c],
    ])
}

fn mean<S: Real>(values: impl Iterator<Item = S>, n: usize) -> S {
    values.fold(S::zero(), |a, v| a + v) / S::from_usize(n).unwrap()
}

/// Least-squares closest point to all camera optical axes. Falls back to
/// `fallback` when the axes are (nearly) parallel.
fn convergence_point<S: Real>(rig: &[CameraParams<S>], fallback: Vec3<S>) -> Vec3<S> {
    let mut a = Mat3::zero();
    let mut b = Vec3::zero();
    for cam in rig {
        let axis = cam.extr.optical_axis();
        let c = cam.extr.camera_center();
        // I - axis*axis^T projects onto the plane normal to the axis.
        for i in 0..3 {
            for j in 0..3 {
                let m = (if i == j { S::one() } else { S::zero() }) - axis.0[i] * axis.0[j];
                a.0[i][j] += m;
                b.0[i] += m * c.0[j];
            }
        }
    }
    match a.inverse() {
        Some(inv) => {
            let v = inv.mul_vec(&b);
            if v.is_finite() {
                v
            } else {
                fallback
            }
        }
        None => fallback,
    }
}

/// Corrected intrinsics for every camera: skew forced to zero, `f_x`, `f_y`
/// and `o_y` averaged across the rig, and `o_x` shifted per camera so that
/// the reference point `Q_i` (the original principal ray at the policy depth)
/// keeps its original image column in the rectified camera.
pub fn rectify_intrinsics<S: Real>(
    rig: &[CameraParams<S>],
    circle: &Circle<S>,
    policy: OxPolicy,
) -> Result<Vec<Intrinsics<S>>, RectifyError> {
    if rig.is_empty() {
        return Err(RectifyError::EmptyRig);
    }
    let n = rig.len();
    let f_x = mean(rig.iter().map(|c| c.intr.f_x), n);
    let f_y = mean(rig.iter().map(|c| c.intr.f_y), n);
    let o_y = mean(rig.iter().map(|c| c.intr.o_y), n);
    let y_bar = mean(rig.iter().map(|c| c.extr.camera_center().y()), n);

    let centre = Vec3::new(circle.x_cen, y_bar, circle.z_cen);
    let target = match policy {
        OxPolicy::Convergence => convergence_point(rig, centre),
        OxPolicy::CircleCenter => centre,
    };

    let mut out = Vec::with_capacity(n);
    for cam in rig {
        let c = cam.extr.camera_center();
        let axis = cam.extr.optical_axis();
        let depth = match policy {
            OxPolicy::Convergence => axis.dot(&target.sub(&c)),
            OxPolicy::CircleCenter => target.sub(&c).norm(),
        };
        let q = c.add(&axis.scale(depth));

        let snapped = circle_fit::snap_to_circle([c.x(), c.z()], circle)?;
        let alpha = circle_fit::camera_angle(snapped, circle)?;
        let rect_pos = Vec3::new(snapped[0], y_bar, snapped[1]);
        let x_cam = rectified_rotation(alpha).mul_vec(&q.sub(&rect_pos));
        if !(x_cam.z() > S::zero()) {
            return Err(RectifyError::PointBehindCamera { view: cam.id });
        }
        // Q_i keeps its original column (it sat at o_x, the principal pixel).
        let o_x = cam.intr.o_x - f_x * x_cam.x() / x_cam.z();
        out.push(
            Intrinsics::new(f_x, f_y, o_x, o_y, S::zero())
                .map_err(|source| RectifyError::Camera { view: cam.id, source })?,
        );
    }
    Ok(out)
}

/// Reconstructs the full camera parameters equivalent to a reduced
/// circular-camera description.
pub fn circular_to_full<S: Real>(
    id: u32,
    c: &CircularCameraParams<S>,
    circle: &Circle<S>,
    common_f_y: S,
    camera_height: S,
) -> CameraParams<S> {
    let position = Vec3::new(
        circle.x_cen + c.r * c.alpha.sin(),
        camera_height,
        circle.z_cen + c.r * c.alpha.cos(),
    );
    let rotation = rectified_rotation(c.alpha);
    let extr = Extrinsics::from_center(rotation, position)
        .expect("rectified rotation is orthonormal by construction");
    let intr = Intrinsics::new(c.f_x, common_f_y, c.o_x, c.o_y, S::zero())
        .expect("circular parameters carry positive focal lengths");
    CameraParams::new(id, intr, extr, c.width, c.height)
        .expect("circular parameters carry nonzero dimensions")
}

/// Full rectification pipeline: fit the circle through the camera positions,
/// snap each camera onto it, aim it at the centre and correct intrinsics.
pub fn rectify_rig<S: Real>(
    rig: &[CameraParams<S>],
    policy: OxPolicy,
) -> Result<RectifiedRig<S>, RectifyError> {
    if rig.is_empty() {
        return Err(RectifyError::EmptyRig);
    }
    let positions: Vec<[S; 2]> = rig
        .iter()
        .map(|c| {
            let p = c.extr.camera_center();
            [p.x(), p.z()]
        })
        .collect();
    let fit = circle_fit::fit_circle(&positions)?;
    let circle = fit.circle;
    let y_bar = mean(rig.iter().map(|c| c.extr.camera_center().y()), rig.len());
    let intrinsics = rectify_intrinsics(rig, &circle, policy)?;
    let common_f_y = intrinsics[0].f_y;

    let mut cameras = Vec::with_capacity(rig.len());
    let mut full_params = Vec::with_capacity(rig.len());
    for (cam, intr) in rig.iter().zip(&intrinsics) {
        let snapped = circle_fit::snap_to_circle(
            {
                let p = cam.extr.camera_center();
                [p.x(), p.z()]
            },
            &circle,
        )?;
        let alpha = circle_fit::camera_angle(snapped, &circle)?;
        let circular = CircularCameraParams {
            f_x: intr.f_x,
            o_x: intr.o_x,
            o_y: intr.o_y,
            alpha,
            r: circle.r,
            width: cam.width,
            height: cam.height,
        };
        full_params.push(circular_to_full(cam.id, &circular, &circle, common_f_y, y_bar));
        cameras.push(circular);
    }
    Ok(RectifiedRig {
        circle,
        cameras,
        full_params,
        common_f_y,
        camera_height: y_bar,
        ox_policy: policy,
    })
}
