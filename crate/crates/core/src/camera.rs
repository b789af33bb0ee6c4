//! Pinhole camera model and exact point correspondence between views.
//!
//! Conventions, used by every module in this crate:
//!
//! * World-to-camera mapping: `X_cam = R * X_world + T`. The camera centre in
//!   world coordinates is `C = -R^T * T`.
//! * The camera looks down its local +z axis. Depth `z` is the camera-frame z
//!   coordinate (distance along the optical axis), not Euclidean ray length;
//!   a point is visible only with `z > 0`.
//! * Pixel mapping: `x = f_x*X/Z + skew*Y/Z + o_x`, `y = f_y*Y/Z + o_y`.
//!   Integer sample `(i, j)` sits at image coordinate `(i, j)` exactly.
//! * The 4x4 projection matrix is the block product of the embedded
//!   intrinsics and the rigid transform, so `P * (X_world, 1) =
//!   (Z*x, Z*y, Z, 1)` and correspondences between views A and B follow from
//!   `P_B * P_A^-1`.
//!
//! All geometry is carried in the scalar type `S`; the crate-root aliases fix
//! `f64`. Image samples elsewhere stay 8/16-bit integers.

use thiserror::Error;

use crate::math::{Mat3, Mat4, Vec3};
use crate::real::Real;

/// Orthonormality / determinant tolerance for rotation matrices.
const ROTATION_TOL: f64 = 1e-9;
/// Reciprocal condition number below which a projection matrix is treated as
/// singular.
const RCOND_MIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CameraError {
    #[error("focal lengths must be positive and all intrinsics finite")]
    BadIntrinsics,
    #[error("rotation matrix is not orthonormal with determinant +1 (defect {defect}, det {det})")]
    BadRotation { defect: String, det: String },
    #[error("translation vector must be finite")]
    BadTranslation,
    #[error("image dimensions must be nonzero")]
    BadDimensions,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionError {
    /// The corresponding point has non-positive depth in the target view.
    #[error("projected point lies behind the camera")]
    BehindCamera,
    /// Reciprocal condition of the source projection matrix is below 1e-12.
    #[error("projection matrix is numerically singular")]
    SingularProjection,
}

/// Intrinsic parameters: focal lengths, principal point and skew, in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics<S> {
    pub f_x: S,
    pub f_y: S,
    pub o_x: S,
    pub o_y: S,
    pub skew: S,
}

impl<S: Real> Intrinsics<S> {
    pub fn new(f_x: S, f_y: S, o_x: S, o_y: S, skew: S) -> Result<Self, CameraError> {
        let i = Intrinsics { f_x, f_y, o_x, o_y, skew };
        if !(f_x > S::zero() && f_y > S::zero())
            || [f_x, f_y, o_x, o_y, skew].iter().any(|v| !v.is_finite())
        {
            return Err(CameraError::BadIntrinsics);
        }
        Ok(i)
    }

    pub fn k_matrix(&self) -> Mat3<S> {
        Mat3([
            [self.f_x, self.skew, self.o_x],
            [S::zero(), self.f_y, self.o_y],
            [S::zero(), S::zero(), S::one()],
        ])
    }
}

/// Camera pose: world-to-camera rotation and translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrinsics<S> {
    r: Mat3<S>,
    t: Vec3<S>,
}

impl<S: Real> Extrinsics<S> {
    pub fn new(r: Mat3<S>, t: Vec3<S>) -> Result<Self, CameraError> {
        if !r.is_finite() {
            return Err(CameraError::BadRotation {
                defect: "non-finite".into(),
                det: "non-finite".into(),
            });
        }
        let defect = r.orthonormality_defect();
        let det = r.det();
        let tol = S::of(ROTATION_TOL);
        if defect > tol || (det - S::one()).abs() > tol {
            return Err(CameraError::BadRotation {
                defect: format!("{defect:e}"),
                det: format!("{det}"),
            });
        }
        if !t.is_finite() {
            return Err(CameraError::BadTranslation);
        }
        Ok(Extrinsics { r, t })
    }

    /// Pose of a camera at world position `center` with rotation `r`.
    pub fn from_center(r: Mat3<S>, center: Vec3<S>) -> Result<Self, CameraError> {
        let t = r.mul_vec(&center).neg();
        Extrinsics::new(r, t)
    }

    pub fn rotation(&self) -> &Mat3<S> {
        &self.r
    }

    pub fn translation(&self) -> &Vec3<S> {
        &self.t
    }

    /// Camera centre in world coordinates, `-R^T * T`.
    pub fn camera_center(&self) -> Vec3<S> {
        self.r.transpose().mul_vec(&self.t).neg()
    }

    /// World-space direction of the optical axis (third row of R).
    pub fn optical_axis(&self) -> Vec3<S> {
        self.r.row(2)
    }

    /// `X_cam = R * X_world + T`.
    #[inline]
    pub fn world_to_camera(&self, x_world: &Vec3<S>) -> Vec3<S> {
        self.r.mul_vec(x_world).add(&self.t)
    }
}

/// One calibrated camera: view id, intrinsics, pose and image size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraParams<S> {
    pub id: u32,
    pub intr: Intrinsics<S>,
    pub extr: Extrinsics<S>,
    pub width: u32,
    pub height: u32,
}

impl<S: Real> CameraParams<S> {
    pub fn new(
        id: u32,
        intr: Intrinsics<S>,
        extr: Extrinsics<S>,
        width: u32,
        height: u32,
    ) -> Result<Self, CameraError> {
        if width == 0 || height == 0 {
            return Err(CameraError::BadDimensions);
        }
        Ok(CameraParams { id, intr, extr, width, height })
    }
}

/// A pixel position with the depth of the underlying 3D point along the
/// owning camera's optical axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImagePoint<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> ImagePoint<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        ImagePoint { x, y, z }
    }
}

/// 4x4 projection matrix mapping `(X_world, 1)` to `(Z*x, Z*y, Z, 1)`.
///
/// The bottom row is `(0, 0, 0, 1)` by construction; the inverse and the
/// reciprocal condition number are computed once at construction time.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionMatrix<S> {
    m: Mat4<S>,
    inv: Option<Mat4<S>>,
    rcond: S,
}

impl<S: Real> ProjectionMatrix<S> {
    fn from_matrix(m: Mat4<S>) -> Self {
        let inv = m.inverse().filter(|i| i.is_finite());
        let rcond = match &inv {
            Some(i) => S::one() / (m.norm_inf() * i.norm_inf()),
            None => S::zero(),
        };
        ProjectionMatrix { m, inv, rcond }
    }

    pub fn matrix(&self) -> &Mat4<S> {
        &self.m
    }

    pub fn rcond(&self) -> S {
        self.rcond
    }
}

/// Builds the projection matrix as the block product of the embedded
/// intrinsics and the rigid transform.
pub fn build_projection<S: Real>(cam: &CameraParams<S>) -> ProjectionMatrix<S> {
    let k = cam.intr.k_matrix();
    let r = cam.extr.rotation();
    let t = cam.extr.translation();
    let zero = S::zero();
    let one = S::one();
    let k4 = Mat4([
        [k.0[0][0], k.0[0][1], k.0[0][2], zero],
        [k.0[1][0], k.0[1][1], k.0[1][2], zero],
        [k.0[2][0], k.0[2][1], k.0[2][2], zero],
        [zero, zero, zero, one],
    ]);
    let rt4 = Mat4([
        [r.0[0][0], r.0[0][1], r.0[0][2], t.x()],
        [r.0[1][0], r.0[1][1], r.0[1][2], t.y()],
        [r.0[2][0], r.0[2][1], r.0[2][2], t.z()],
        [zero, zero, zero, one],
    ]);
    ProjectionMatrix::from_matrix(k4.mul(&rt4))
}

/// Inverts a projection matrix; fails when its reciprocal condition number is
/// below 1e-12.
pub fn invert_projection<S: Real>(
    p: &ProjectionMatrix<S>,
) -> Result<ProjectionMatrix<S>, ProjectionError> {
    if p.rcond < S::of(RCOND_MIN) {
        return Err(ProjectionError::SingularProjection);
    }
    let inv = p.inv.ok_or(ProjectionError::SingularProjection)?;
    Ok(ProjectionMatrix { m: inv, inv: Some(p.m), rcond: p.rcond })
}

/// Precomposed source-to-destination map `P_dst * P_src^-1`.
///
/// Applying this per point is bit-identical to calling [`project_point`]
/// with the same camera pair; batch consumers (the warper) build it once.
#[derive(Clone, Copy, Debug)]
pub struct PointProjector<S> {
    m: Mat4<S>,
}

impl<S: Real> PointProjector<S> {
    pub fn new(
        src: &CameraParams<S>,
        dst: &CameraParams<S>,
    ) -> Result<Self, ProjectionError> {
        let p_src = build_projection(src);
        let p_dst = build_projection(dst);
        let inv = invert_projection(&p_src)?;
        Ok(PointProjector { m: p_dst.m.mul(&inv.m) })
    }

    #[inline]
    pub fn project(&self, p: &ImagePoint<S>) -> Result<ImagePoint<S>, ProjectionError> {
        if !(p.z > S::zero()) {
            return Err(ProjectionError::BehindCamera);
        }
        let v = [p.z * p.x, p.z * p.y, p.z, S::one()];
        let w = self.m.mul_vec(&v);
        // Affine structure of both projections forces the fourth component
        // back to exactly 1.
        debug_assert!((w[3] - S::one()).abs() <= S::of(1e-9), "w = {:?}", w[3]);
        let z_b = w[2];
        if !(z_b > S::zero()) {
            return Err(ProjectionError::BehindCamera);
        }
        Ok(ImagePoint { x: w[0] / z_b, y: w[1] / z_b, z: z_b })
    }
}

/// Maps the pixel+depth `p` seen by `src` to the corresponding pixel+depth in
/// `dst` via the full perspective correspondence `P_dst * P_src^-1`.
pub fn project_point<S: Real>(
    src: &CameraParams<S>,
    dst: &CameraParams<S>,
    p: &ImagePoint<S>,
) -> Result<ImagePoint<S>, ProjectionError> {
    PointProjector::new(src, dst)?.project(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SplitMix64;

    fn intr(f_x: f64, f_y: f64, o_x: f64, o_y: f64, skew: f64) -> Intrinsics<f64> {
        Intrinsics::new(f_x, f_y, o_x, o_y, skew).unwrap()
    }

    fn unit_camera() -> CameraParams<f64> {
        CameraParams::new(
            0,
            intr(1.0, 1.0, 0.0, 0.0, 0.0),
            Extrinsics::new(Mat3::identity(), Vec3::zero()).unwrap(),
            2,
            2,
        )
        .unwrap()
    }

    /// Deterministic valid camera for randomized checks.
    fn random_camera(rng: &mut SplitMix64, id: u32) -> CameraParams<f64> {
        let axis = Vec3::new(
            rng.next_f64() * 2.0 - 1.0,
            rng.next_f64() * 2.0 - 1.0,
            rng.next_f64() * 2.0 - 1.0,
        );
        let r = Mat3::from_axis_angle(&axis, rng.next_f64() * 2.0 - 1.0);
        let t = Vec3::new(
            rng.next_f64() * 10.0 - 5.0,
            rng.next_f64() * 2.0 - 1.0,
            rng.next_f64() * 10.0 - 5.0,
        );
        CameraParams::new(
            id,
            intr(
                400.0 + rng.next_f64() * 1200.0,
                400.0 + rng.next_f64() * 1200.0,
                300.0 + rng.next_f64() * 40.0,
                220.0 + rng.next_f64() * 40.0,
                rng.next_f64() * 0.6 - 0.3,
            ),
            Extrinsics::new(r, t).unwrap(),
            640,
            480,
        )
        .unwrap()
    }

    /// Forward model straight from the convention: project a world point with
    /// one camera's K, R, T. Independent of the matrix pipeline.
    fn forward_pixel(cam: &CameraParams<f64>, x_world: &Vec3<f64>) -> ImagePoint<f64> {
        let xc = cam.extr.world_to_camera(x_world);
        let z = xc.z();
        ImagePoint::new(
            cam.intr.f_x * xc.x() / z + cam.intr.skew * xc.y() / z + cam.intr.o_x,
            cam.intr.f_y * xc.y() / z + cam.intr.o_y,
            z,
        )
    }

    /// Independent 4x4 block multiply used as the oracle for
    /// `build_projection` (plain loops, no Mat4 involvement).
    fn block_product_oracle(cam: &CameraParams<f64>) -> [[f64; 4]; 4] {
        let k = cam.intr.k_matrix().0;
        let r = cam.extr.rotation().0;
        let t = cam.extr.translation().0;
        let mut a = [[0.0; 4]; 4];
        let mut b = [[0.0; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = k[i][j];
                b[i][j] = r[i][j];
            }
            b[i][3] = t[i];
        }
        a[3][3] = 1.0;
        b[3][3] = 1.0;
        let mut p = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for (k_, bk) in b.iter().enumerate() {
                    p[i][j] += a[i][k_] * bk[j];
                }
            }
        }
        p
    }

    #[test]
    fn identity_camera_gives_identity_projection() {
        let p = build_projection(&unit_camera());
        assert_eq!(p.matrix(), &Mat4::identity());
    }

    #[test]
    fn pure_translation_fills_last_column() {
        let cam = CameraParams::new(
            0,
            intr(1.0, 1.0, 0.0, 0.0, 0.0),
            Extrinsics::new(Mat3::identity(), Vec3::new(1.0, 2.0, 3.0)).unwrap(),
            2,
            2,
        )
        .unwrap();
        let p = build_projection(&cam);
        let mut want = Mat4::identity();
        want.0[0][3] = 1.0;
        want.0[1][3] = 2.0;
        want.0[2][3] = 3.0;
        assert_eq!(p.matrix(), &want);
    }

    #[test]
    fn build_projection_matches_block_multiply_oracle() {
        let mut rng = SplitMix64::new(11);
        for id in 0..32 {
            let cam = random_camera(&mut rng, id);
            let p = build_projection(&cam);
            let want = block_product_oracle(&cam);
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        (p.matrix().0[i][j] - want[i][j]).abs() <= 1e-12 * want[i][j].abs().max(1.0),
                        "entry ({i},{j})"
                    );
                }
            }
            assert_eq!(p.matrix().0[3], [0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn build_projection_reproduces_kr_and_kt() {
        let mut rng = SplitMix64::new(12);
        let cam = random_camera(&mut rng, 0);
        let p = build_projection(&cam);
        let kr = cam.intr.k_matrix().mul(cam.extr.rotation());
        let kt = cam.intr.k_matrix().mul_vec(cam.extr.translation());
        for i in 0..3 {
            for j in 0..3 {
                assert!((p.matrix().0[i][j] - kr.0[i][j]).abs() < 1e-10);
            }
            assert!((p.matrix().0[i][3] - kt.0[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn project_point_src_equals_dst_is_identity() {
        let mut rng = SplitMix64::new(13);
        let cam = random_camera(&mut rng, 0);
        let p = ImagePoint::new(123.0, 456.0, 2.5);
        let q = project_point(&cam, &cam, &p).unwrap();
        assert!((q.x - p.x).abs() < 1e-9);
        assert!((q.y - p.y).abs() < 1e-9);
        assert!((q.z - p.z).abs() < 1e-9);
    }

    #[test]
    fn project_point_matches_forward_model_oracle() {
        let mut rng = SplitMix64::new(14);
        for _ in 0..64 {
            let cam_a = random_camera(&mut rng, 0);
            let cam_b = random_camera(&mut rng, 1);
            let x_world = Vec3::new(
                rng.next_f64() * 4.0 - 2.0,
                rng.next_f64() * 4.0 - 2.0,
                rng.next_f64() * 4.0 - 2.0,
            );
            let pa = forward_pixel(&cam_a, &x_world);
            let pb = forward_pixel(&cam_b, &x_world);
            if pa.z <= 0.1 || pb.z <= 0.1 {
                continue;
            }
            let got = project_point(&cam_a, &cam_b, &pa).unwrap();
            assert!((got.x - pb.x).abs() < 1e-6, "{} vs {}", got.x, pb.x);
            assert!((got.y - pb.y).abs() < 1e-6);
            assert!((got.z - pb.z).abs() / pb.z < 1e-6);
        }
    }

    #[test]
    fn behind_camera_is_reported() {
        // Destination looks the opposite way: the point lands behind it.
        let cam_a = unit_camera();
        let flip = Mat3([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]);
        let cam_b = CameraParams::new(
            1,
            intr(1.0, 1.0, 0.0, 0.0, 0.0),
            Extrinsics::new(flip, Vec3::zero()).unwrap(),
            2,
            2,
        )
        .unwrap();
        let p = ImagePoint::new(0.1, 0.2, 3.0);
        assert_eq!(
            project_point(&cam_a, &cam_b, &p),
            Err(ProjectionError::BehindCamera)
        );
        // Non-positive input depth violates visibility outright.
        assert_eq!(
            project_point(&cam_a, &cam_a, &ImagePoint::new(0.0, 0.0, -1.0)),
            Err(ProjectionError::BehindCamera)
        );
    }

    #[test]
    fn projection_roundtrip_and_composition() {
        let mut rng = SplitMix64::new(15);
        let mut checked = 0;
        while checked < 40 {
            let a = random_camera(&mut rng, 0);
            let b = random_camera(&mut rng, 1);
            let c = random_camera(&mut rng, 2);
            let p = ImagePoint::new(
                rng.next_f64() * 640.0,
                rng.next_f64() * 480.0,
                0.5 + rng.next_f64() * 5.0,
            );
            let (Ok(ab), Ok(ac)) = (project_point(&a, &b, &p), project_point(&a, &c, &p)) else {
                continue;
            };
            let back = project_point(&b, &a, &ab).unwrap();
            assert!((back.x - p.x).abs() < 1e-6);
            assert!((back.y - p.y).abs() < 1e-6);
            assert!((back.z - p.z).abs() / p.z < 1e-6);
            let Ok(abc) = project_point(&b, &c, &ab) else {
                continue;
            };
            assert!((abc.x - ac.x).abs() < 1e-6);
            assert!((abc.y - ac.y).abs() < 1e-6);
            checked += 1;
        }
    }

    #[test]
    fn invert_projection_identity_and_translation() {
        let id = build_projection(&unit_camera());
        let inv = invert_projection(&id).unwrap();
        assert_eq!(inv.matrix(), &Mat4::identity());

        let cam = CameraParams::new(
            0,
            intr(1.0, 1.0, 0.0, 0.0, 0.0),
            Extrinsics::new(Mat3::identity(), Vec3::new(1.0, 2.0, 3.0)).unwrap(),
            2,
            2,
        )
        .unwrap();
        let p = build_projection(&cam);
        let inv = invert_projection(&p).unwrap();
        assert_eq!(inv.matrix().0[0][3], -1.0);
        assert_eq!(inv.matrix().0[1][3], -2.0);
        assert_eq!(inv.matrix().0[2][3], -3.0);
    }

    #[test]
    fn invert_projection_self_check() {
        let mut rng = SplitMix64::new(16);
        for id in 0..16 {
            let cam = random_camera(&mut rng, id);
            let p = build_projection(&cam);
            let inv = invert_projection(&p).unwrap();
            let prod = p.matrix().mul(inv.matrix());
            assert!(prod.max_abs_diff(&Mat4::identity()) < 1e-9);
        }
    }

    #[test]
    fn degenerate_rotation_rejected() {
        let reflection = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]);
        assert!(Extrinsics::new(reflection, Vec3::zero()).is_err());
    }
}
