//! Fast point projection between circularly rectified views.
//!
//! For a rectified pair the full 4x4 correspondence collapses to three short
//! expressions in the shared parameters and the angle difference:
//!
//! ```text
//! z_B = (x_A - o_xA) * (z_A / f_x) * sin(da) + (z_A - r) * cos(da) + r
//! y_B = o_y + (z_A / z_B) * (y_A - o_y)
//! x_B = o_xB + [ (x_A - o_xA) * z_A * cos(da) - (z_A - r) * f_x * sin(da) ] / z_B
//! ```
//!
//! evaluated in that order (the last two divide by `z_B`). `sin`/`cos` of the
//! angle difference are computed once per pair and cached; that cache is
//! where the speedup over the matrix path comes from.

use thiserror::Error;

use crate::camera::ImagePoint;
use crate::real::Real;
use crate::rectify::CircularCameraParams;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircularError {
    #[error("projected point lies behind the camera")]
    BehindCamera,
    #[error("cameras do not form a rectified pair: {field} differs between views")]
    PairMismatch { field: &'static str },
    #[error("angle difference must be finite and inside (-2*pi, 2*pi)")]
    BadAngleDifference,
}

/// A pair of circularly rectified cameras with the per-pair constants
/// precomputed.
#[derive(Clone, Copy, Debug)]
pub struct CircularPair<S> {
    o_x_a: S,
    o_x_b: S,
    o_y: S,
    r: S,
    delta_alpha: S,
    sin_d: S,
    cos_d: S,
    /// sin(da) / f_x
    sin_over_fx: S,
    /// f_x * sin(da)
    fx_sin: S,
    /// Depths below this are treated as behind the camera (1e-9 * r).
    behind_eps: S,
}

impl<S: Real> CircularPair<S> {
    /// Builds the pair; the shared parameters must be bit-identical.
    pub fn new(
        cam_a: &CircularCameraParams<S>,
        cam_b: &CircularCameraParams<S>,
    ) -> Result<Self, CircularError> {
        if cam_a.f_x != cam_b.f_x {
            return Err(CircularError::PairMismatch { field: "f_x" });
        }
        if cam_a.o_y != cam_b.o_y {
            return Err(CircularError::PairMismatch { field: "o_y" });
        }
        if cam_a.r != cam_b.r {
            return Err(CircularError::PairMismatch { field: "r" });
        }
        let delta_alpha = cam_b.alpha - cam_a.alpha;
        let two_pi = S::PI() + S::PI();
        if !delta_alpha.is_finite() || delta_alpha.abs() >= two_pi {
            return Err(CircularError::BadAngleDifference);
        }
        let (sin_d, cos_d) = (delta_alpha.sin(), delta_alpha.cos());
        Ok(CircularPair {
            o_x_a: cam_a.o_x,
            o_x_b: cam_b.o_x,
            o_y: cam_a.o_y,
            r: cam_a.r,
            delta_alpha,
            sin_d,
            cos_d,
            sin_over_fx: sin_d / cam_a.f_x,
            fx_sin: cam_a.f_x * sin_d,
            behind_eps: S::of(1e-9) * cam_a.r,
        })
    }

    pub fn delta_alpha(&self) -> S {
        self.delta_alpha
    }

    pub fn radius(&self) -> S {
        self.r
    }

    /// The same pair traversed in the opposite direction.
    pub fn reversed(&self) -> CircularPair<S> {
        CircularPair {
            o_x_a: self.o_x_b,
            o_x_b: self.o_x_a,
            delta_alpha: -self.delta_alpha,
            sin_d: -self.sin_d,
            sin_over_fx: -self.sin_over_fx,
            fx_sin: -self.fx_sin,
            ..*self
        }
    }
}

/// Projects a point from view A to view B of a rectified pair.
#[inline]
pub fn project_circular<S: Real>(
    pair: &CircularPair<S>,
    p: &ImagePoint<S>,
) -> Result<ImagePoint<S>, CircularError> {
    if !(p.z > S::zero()) {
        return Err(CircularError::BehindCamera);
    }
    let dxz = (p.x - pair.o_x_a) * p.z;
    let zr = p.z - pair.r;
    let z_b = dxz * pair.sin_over_fx + zr * pair.cos_d + pair.r;
    if !(z_b > pair.behind_eps) {
        return Err(CircularError::BehindCamera);
    }
    let inv = S::one() / z_b;
    let y_b = pair.o_y + p.z * inv * (p.y - pair.o_y);
    let x_b = pair.o_x_b + inv * (dxz * pair.cos_d - zr * pair.fx_sin);
    Ok(ImagePoint { x: x_b, y: y_b, z: z_b })
}

/// Elementwise [`project_circular`] over a dense set of points.
///
/// Runs the identical scalar kernel per element, so the results are bitwise
/// equal to the scalar path; failures are flagged per element (the output
/// slot keeps the input point).
pub fn project_circular_batch<S: Real>(
    pair: &CircularPair<S>,
    points: &[ImagePoint<S>],
) -> (Vec<ImagePoint<S>>, Vec<bool>) {
    let mut out = Vec::with_capacity(points.len());
    let mut valid = Vec::with_capacity(points.len());
    for p in points {
        match project_circular(pair, p) {
            Ok(q) => {
                out.push(q);
                valid.push(true);
            }
            Err(_) => {
                out.push(*p);
                valid.push(false);
            }
        }
    }
    (out, valid)
}

/// Parameters of a rectified *linear* pair: shared horizontal focal length
/// and the horizontal translation between the views (world-to-camera
/// convention, i.e. `t_x = T_B.x - T_A.x` for a shared rotation).
#[derive(Clone, Copy, Debug)]
pub struct LinearPair<S> {
    pub f_x: S,
    pub t_x: S,
}

/// Classic disparity-based prediction for rectified linear views:
/// `x_B = x_A + f_x * t_x / z_A`, y and z unchanged.
#[inline]
pub fn disparity_predict<S: Real>(pair: &LinearPair<S>, p: &ImagePoint<S>) -> ImagePoint<S> {
    ImagePoint { x: p.x + pair.f_x * pair.t_x / p.z, y: p.y, z: p.z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{project_point, CameraParams, Extrinsics, Intrinsics};
    use crate::circle_fit::Circle;
    use crate::math::{Mat3, Vec3};
    use crate::rectify::circular_to_full;
    use crate::synth::SplitMix64;

    fn circ(f_x: f64, o_x: f64, o_y: f64, alpha: f64, r: f64) -> CircularCameraParams<f64> {
        CircularCameraParams { f_x, o_x, o_y, alpha, r, width: 640, height: 480 }
    }

    /// Random rectified pair plus the full-parameter equivalents.
    fn random_pair(
        rng: &mut SplitMix64,
    ) -> (
        CircularPair<f64>,
        CameraParams<f64>,
        CameraParams<f64>,
        f64, // radius
    ) {
        let r = 1.0 + rng.next_f64() * 20.0;
        let circle = Circle {
            x_cen: rng.next_f64() * 100.0 - 50.0,
            z_cen: rng.next_f64() * 100.0 - 50.0,
            r,
        };
        let f_x = 300.0 + rng.next_f64() * 1500.0;
        let o_y = 200.0 + rng.next_f64() * 80.0;
        let f_y = 300.0 + rng.next_f64() * 1500.0;
        let height = rng.next_f64() * 4.0 - 2.0;
        let pi = std::f64::consts::PI;
        let a = circ(f_x, 280.0 + rng.next_f64() * 80.0, o_y, rng.next_f64() * 2.0 * pi - pi, r);
        let b = circ(f_x, 280.0 + rng.next_f64() * 80.0, o_y, rng.next_f64() * 2.0 * pi - pi, r);
        let fa = circular_to_full(0, &a, &circle, f_y, height);
        let fb = circular_to_full(1, &b, &circle, f_y, height);
        (CircularPair::new(&a, &b).unwrap(), fa, fb, r)
    }

    #[test]
    fn zero_delta_same_principal_point_is_identity() {
        let a = circ(600.0, 320.0, 240.0, 0.75, 5.0);
        let pair = CircularPair::new(&a, &a).unwrap();
        let p = ImagePoint::new(123.25, 456.5, 3.75);
        let q = project_circular(&pair, &p).unwrap();
        assert!((q.x - p.x).abs() <= 1e-12 * p.x.abs());
        assert!((q.y - p.y).abs() <= 1e-12 * p.y.abs());
        assert!((q.z - p.z).abs() <= 1e-12 * p.z.abs());
    }

    #[test]
    fn circle_centre_maps_to_principal_column_in_every_view() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..64 {
            let r = 0.5 + rng.next_f64() * 10.0;
            let a = circ(600.0, 320.0, 240.0, rng.next_f64() * 6.0 - 3.0, r);
            let b = circ(
                600.0,
                300.0,
                240.0,
                rng.next_f64() * 6.0 - 3.0,
                r,
            );
            let pair = CircularPair::new(&a, &b).unwrap();
            let y = rng.next_f64() * 480.0;
            let q = project_circular(&pair, &ImagePoint::new(a.o_x, y, r)).unwrap();
            assert!((q.x - b.o_x).abs() < 1e-9);
            assert!((q.y - y).abs() < 1e-9);
            assert!((q.z - r).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_full_projection_oracle() {
        let mut rng = SplitMix64::new(123);
        let mut checked = 0usize;
        while checked < 20_000 {
            let (pair, fa, fb, r) = random_pair(&mut rng);
            let p = ImagePoint::new(
                rng.next_f64() * 640.0,
                rng.next_f64() * 480.0,
                (0.1 + rng.next_f64() * 2.9) * r,
            );
            let fast = project_circular(&pair, &p);
            let full = project_point(&fa, &fb, &p);
            match (fast, full) {
                (Ok(f), Ok(g)) => {
                    // Compare only destination-visible points: grazing or
                    // far-out-of-frame projections amplify last-ulp rounding
                    // past the stated tolerance.
                    if g.z <= 1e-3 * r || !(0.0..640.0).contains(&g.x) || !(0.0..480.0).contains(&g.y) {
                        continue;
                    }
                    assert!((f.x - g.x).abs() < 1e-6, "x: {} vs {}", f.x, g.x);
                    assert!((f.y - g.y).abs() < 1e-6, "y: {} vs {}", f.y, g.y);
                    assert!((f.z - g.z).abs() / g.z < 1e-6);
                    checked += 1;
                }
                // Either both reject or the point grazes the eps band.
                (Err(_), Err(_)) => {}
                (Ok(f), Err(_)) => assert!(f.z <= 1e-3 * r),
                (Err(_), Ok(g)) => assert!(g.z <= 1e-3 * r),
            }
        }
    }

    #[test]
    fn batch_is_bitwise_equal_to_scalar() {
        let mut rng = SplitMix64::new(9);
        let (pair, _, _, r) = random_pair(&mut rng);
        let points: Vec<ImagePoint<f64>> = (0..4096)
            .map(|_| {
                ImagePoint::new(
                    rng.next_f64() * 640.0,
                    rng.next_f64() * 480.0,
                    (rng.next_f64() * 4.0 - 0.5) * r, // includes behind-camera inputs
                )
            })
            .collect();
        let (out, valid) = project_circular_batch(&pair, &points);
        for ((p, q), v) in points.iter().zip(&out).zip(&valid) {
            match project_circular(&pair, p) {
                Ok(scalar) => {
                    assert!(*v);
                    assert_eq!(q.x.to_bits(), scalar.x.to_bits());
                    assert_eq!(q.y.to_bits(), scalar.y.to_bits());
                    assert_eq!(q.z.to_bits(), scalar.z.to_bits());
                }
                Err(_) => {
                    assert!(!*v);
                    assert_eq!(q, p);
                }
            }
        }
        assert!(valid.iter().any(|v| !*v) && valid.iter().any(|v| *v));
    }

    #[test]
    fn composition_around_the_circle() {
        let mut rng = SplitMix64::new(77);
        let mut checked = 0;
        while checked < 500 {
            let r = 2.0 + rng.next_f64() * 8.0;
            let a = circ(700.0, 320.0, 240.0, rng.next_f64() - 0.5, r);
            let b = circ(700.0, 315.0, 240.0, a.alpha + rng.next_f64() * 0.6 - 0.3, r);
            let c = circ(700.0, 330.0, 240.0, b.alpha + rng.next_f64() * 0.6 - 0.3, r);
            let ab = CircularPair::new(&a, &b).unwrap();
            let bc = CircularPair::new(&b, &c).unwrap();
            let ac = CircularPair::new(&a, &c).unwrap();
            let p = ImagePoint::new(rng.next_f64() * 640.0, rng.next_f64() * 480.0, r * (0.4 + rng.next_f64()));
            let (Ok(via_b), Ok(direct)) = (
                project_circular(&ab, &p).and_then(|q| project_circular(&bc, &q)),
                project_circular(&ac, &p),
            ) else {
                continue;
            };
            if direct.z < 0.05 * r || via_b.z < 0.05 * r {
                continue;
            }
            assert!((via_b.x - direct.x).abs() < 1e-5);
            assert!((via_b.y - direct.y).abs() < 1e-5);
            checked += 1;
        }
    }

    #[test]
    fn inverse_returns_input() {
        let mut rng = SplitMix64::new(31);
        let mut checked = 0;
        while checked < 500 {
            let (pair, _, _, r) = random_pair(&mut rng);
            let p = ImagePoint::new(
                rng.next_f64() * 640.0,
                rng.next_f64() * 480.0,
                r * (0.3 + rng.next_f64() * 2.0),
            );
            let Ok(q) = project_circular(&pair, &p) else { continue };
            if q.z < 0.05 * r {
                continue;
            }
            let back = project_circular(&pair.reversed(), &q).unwrap();
            assert!((back.x - p.x).abs() < 1e-6);
            assert!((back.y - p.y).abs() < 1e-6);
            checked += 1;
        }
    }

    #[test]
    fn mismatched_pairs_rejected() {
        let a = circ(600.0, 320.0, 240.0, 0.0, 5.0);
        let mut b = a;
        b.f_x = 601.0;
        assert!(matches!(
            CircularPair::new(&a, &b),
            Err(CircularError::PairMismatch { field: "f_x" })
        ));
        let mut c = a;
        c.r = 5.5;
        assert!(matches!(
            CircularPair::new(&a, &c),
            Err(CircularError::PairMismatch { field: "r" })
        ));
    }

    #[test]
    fn disparity_examples() {
        let p: ImagePoint<f64> = ImagePoint::new(100.0, 50.0, 100.0);
        assert_eq!(
            disparity_predict(&LinearPair { f_x: 1000.0, t_x: 0.0 }, &p),
            p
        );
        let q = disparity_predict(&LinearPair { f_x: 1000.0, t_x: 0.1 }, &p);
        assert!((q.x - 101.0).abs() < 1e-12);
        assert_eq!(q.y, p.y);
        assert_eq!(q.z, p.z);
    }

    #[test]
    fn disparity_matches_full_projection_on_linear_rig() {
        let intr = Intrinsics::new(800.0, 790.0, 320.0, 240.0, 0.0).unwrap();
        let mut rng = SplitMix64::new(55);
        for _ in 0..64 {
            let baseline = rng.next_f64() * 2.0 - 1.0;
            let cam_a = CameraParams::new(
                0,
                intr,
                Extrinsics::from_center(Mat3::identity(), Vec3::new(0.0, 0.0, 0.0)).unwrap(),
                640,
                480,
            )
            .unwrap();
            let cam_b = CameraParams::new(
                1,
                intr,
                Extrinsics::from_center(Mat3::identity(), Vec3::new(baseline, 0.0, 0.0)).unwrap(),
                640,
                480,
            )
            .unwrap();
            // t_x in the world-to-camera convention: T = -R*C, R = I.
            let t_x = -baseline;
            let p = ImagePoint::new(
                rng.next_f64() * 640.0,
                rng.next_f64() * 480.0,
                1.0 + rng.next_f64() * 9.0,
            );
            let fast = disparity_predict(&LinearPair { f_x: intr.f_x, t_x }, &p);
            let full = project_point(&cam_a, &cam_b, &p).unwrap();
            assert!((fast.x - full.x).abs() < 1e-6, "{} vs {}", fast.x, full.x);
            assert!((fast.y - full.y).abs() < 1e-6);
            assert!((fast.z - full.z).abs() < 1e-9);
        }
    }
}
