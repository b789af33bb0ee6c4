//! Least-squares circle fit through camera ground-plane positions.
//!
//! The geometric objective `S = sum_i (sqrt((x_i-x_cen)^2+(z_i-z_cen)^2) - r)^2`
//! is minimized by Gauss-Newton on the signed radial residuals, seeded with
//! the algebraic Kasa fit (linear least squares on `x^2+z^2+Dx+Ez+F = 0`).
//! Vertical positions are ignored: the fit lives entirely in the (x, z)
//! ground plane.

use thiserror::Error;

use crate::math::{Mat3, Vec3};
use crate::real::Real;

const MAX_ITERATIONS: usize = 100;
/// Points closer than this are considered duplicates.
const DISTINCT_TOL: f64 = 1e-9;
/// A best-fit radius beyond this multiple of the point-cloud diameter means
/// the input is an (almost) straight line, not an arc.
const COLLINEAR_RADIUS_FACTOR: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircleFitError {
    #[error("need at least 3 distinct positions, got {distinct}")]
    DegenerateInput { distinct: usize },
    #[error("camera positions are collinear: best-fit radius exceeds 1e6 x point-cloud diameter")]
    CollinearCameras,
    #[error("position coincides with the circle centre; nearest circle point undefined")]
    AtCenter,
    #[error("position is not on the circle (radial offset {offset} exceeds 1e-6 x radius)")]
    NotOnCircle { offset: String },
}

/// Circle in the ground plane: centre `(x_cen, z_cen)` and radius `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle<S> {
    pub x_cen: S,
    pub z_cen: S,
    pub r: S,
}

impl<S: Real> Circle<S> {
    /// Signed radial distance of a ground-plane point from the circle.
    pub fn signed_distance(&self, x: S, z: S) -> S {
        ((x - self.x_cen).hypot(z - self.z_cen)) - self.r
    }

    /// Value of the sum-of-squares objective for the given positions.
    pub fn objective<'a, I>(&self, positions: I) -> S
    where
        I: IntoIterator<Item = &'a [S; 2]>,
        S: 'a,
    {
        positions.into_iter().fold(S::zero(), |acc, p| {
            let d = self.signed_distance(p[0], p[1]);
            acc + d * d
        })
    }
}

/// Converged fit: circle, objective value, iteration count and per-input
/// signed radial errors.
#[derive(Clone, Debug)]
pub struct FitResult<S> {
    pub circle: Circle<S>,
    pub residual: S,
    pub iterations: usize,
    pub per_camera_distance: Vec<S>,
}

fn count_distinct<S: Real>(positions: &[[S; 2]]) -> usize {
    let tol = S::of(DISTINCT_TOL);
    let mut kept: Vec<[S; 2]> = Vec::new();
    for p in positions {
        if kept
            .iter()
            .all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) > tol)
        {
            kept.push(*p);
        }
    }
    kept.len()
}

fn cloud_diameter<S: Real>(positions: &[[S; 2]]) -> S {
    let mut min = [S::infinity(); 2];
    let mut max = [S::neg_infinity(); 2];
    for p in positions {
        for k in 0..2 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    (max[0] - min[0]).hypot(max[1] - min[1])
}

/// Algebraic Kasa seed, solved on centroid-shifted coordinates.
fn kasa_seed<S: Real>(positions: &[[S; 2]]) -> Result<Circle<S>, CircleFitError> {
    let n = S::from_usize(positions.len()).unwrap();
    let (mut cx, mut cz) = (S::zero(), S::zero());
    for p in positions {
        cx += p[0];
        cz += p[1];
    }
    cx /= n;
    cz /= n;

    let mut a = Mat3::zero();
    let mut b = Vec3::zero();
    for p in positions {
        let x = p[0] - cx;
        let z = p[1] - cz;
        let q = x * x + z * z;
        a.0[0][0] += x * x;
        a.0[0][1] += x * z;
        a.0[0][2] += x;
        a.0[1][1] += z * z;
        a.0[1][2] += z;
        b.0[0] -= q * x;
        b.0[1] -= q * z;
        b.0[2] -= q;
    }
    a.0[1][0] = a.0[0][1];
    a.0[2][0] = a.0[0][2];
    a.0[2][1] = a.0[1][2];
    a.0[2][2] = n;

    let inv = a.inverse().ok_or(CircleFitError::CollinearCameras)?;
    let sol = inv.mul_vec(&b);
    let (d, e, f) = (sol.x(), sol.y(), sol.z());
    let half = S::of(0.5);
    let x_cen = -d * half;
    let z_cen = -e * half;
    let r2 = x_cen * x_cen + z_cen * z_cen - f;
    if !(r2 > S::zero()) || !r2.is_finite() {
        return Err(CircleFitError::CollinearCameras);
    }
    Ok(Circle { x_cen: x_cen + cx, z_cen: z_cen + cz, r: r2.sqrt() })
}

/// Fits the circle minimizing the geometric sum of squares.
///
/// Gauss-Newton with step halving; never accepts a step that worsens the
/// objective, so the result is at least as good as the Kasa seed. Stops when
/// the parameter step max-norm drops below `1e-12 * (1 + r)` or after 100
/// iterations.
pub fn fit_circle<S: Real>(positions: &[[S; 2]]) -> Result<FitResult<S>, CircleFitError> {
    let distinct = count_distinct(positions);
    if distinct < 3 {
        return Err(CircleFitError::DegenerateInput { distinct });
    }
    let diameter = cloud_diameter(positions);
    let collinear_radius = S::of(COLLINEAR_RADIUS_FACTOR) * diameter;

    let seed = kasa_seed(positions)?;
    if seed.r > collinear_radius {
        return Err(CircleFitError::CollinearCameras);
    }

    let mut circle = seed;
    let mut s_cur = circle.objective(positions);
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        iterations += 1;

        // Normal equations of the geometric residual d_i = rho_i - r with
        // Jacobian rows (-(x_i-a)/rho_i, -(z_i-b)/rho_i, -1).
        let mut jtj = Mat3::zero();
        let mut jtr = Vec3::zero();
        for p in positions {
            let dx = p[0] - circle.x_cen;
            let dz = p[1] - circle.z_cen;
            let rho = dx.hypot(dz);
            let (jx, jz) = if rho > S::of(1e-300) {
                (-dx / rho, -dz / rho)
            } else {
                (S::zero(), S::zero())
            };
            let res = rho - circle.r;
            jtj.0[0][0] += jx * jx;
            jtj.0[0][1] += jx * jz;
            jtj.0[0][2] += -jx;
            jtj.0[1][1] += jz * jz;
            jtj.0[1][2] += -jz;
            jtr.0[0] += jx * res;
            jtr.0[1] += jz * res;
            jtr.0[2] += -res;
        }
        jtj.0[1][0] = jtj.0[0][1];
        jtj.0[2][0] = jtj.0[0][2];
        jtj.0[2][1] = jtj.0[1][2];
        jtj.0[2][2] = S::from_usize(positions.len()).unwrap();

        let Some(inv) = jtj.inverse() else { break };
        let step = inv.mul_vec(&jtr).neg();

        // Step halving: shrink until the objective does not increase.
        let mut scale = S::one();
        let mut accepted = None;
        for _ in 0..40 {
            let candidate = Circle {
                x_cen: circle.x_cen + step.x() * scale,
                z_cen: circle.z_cen + step.y() * scale,
                r: circle.r + step.z() * scale,
            };
            if candidate.r > S::zero() {
                let s_new = candidate.objective(positions);
                if s_new <= s_cur {
                    accepted = Some((candidate, s_new, scale));
                    break;
                }
            }
            scale *= S::of(0.5);
        }
        let Some((next, s_next, scale)) = accepted else { break };
        let applied = step.scale(scale);
        let step_norm = applied
            .0
            .iter()
            .fold(S::zero(), |a, v| a.max(v.abs()));
        circle = next;
        s_cur = s_next;
        if step_norm <= S::of(1e-12) * (S::one() + circle.r) {
            break;
        }
    }

    if circle.r > collinear_radius {
        return Err(CircleFitError::CollinearCameras);
    }

    let per_camera_distance = positions
        .iter()
        .map(|p| circle.signed_distance(p[0], p[1]))
        .collect();
    Ok(FitResult { circle, residual: s_cur, iterations, per_camera_distance })
}

/// Nearest point on the circle: radial projection of `pos`.
pub fn snap_to_circle<S: Real>(
    pos: [S; 2],
    circle: &Circle<S>,
) -> Result<[S; 2], CircleFitError> {
    let dx = pos[0] - circle.x_cen;
    let dz = pos[1] - circle.z_cen;
    let rho = dx.hypot(dz);
    if rho < S::of(1e-9) * circle.r {
        return Err(CircleFitError::AtCenter);
    }
    let k = circle.r / rho;
    Ok([circle.x_cen + dx * k, circle.z_cen + dz * k])
}

/// Angle of an on-circle position: `cos a = (z'-z_cen)/r`,
/// `sin a = (x'-x_cen)/r`, returned in `(-pi, pi]`.
pub fn camera_angle<S: Real>(
    pos_on_circle: [S; 2],
    circle: &Circle<S>,
) -> Result<S, CircleFitError> {
    let offset = circle.signed_distance(pos_on_circle[0], pos_on_circle[1]);
    if offset.abs() > S::of(1e-6) * circle.r {
        return Err(CircleFitError::NotOnCircle { offset: format!("{offset:e}") });
    }
    let sin_a = pos_on_circle[0] - circle.x_cen;
    let cos_a = pos_on_circle[1] - circle.z_cen;
    let alpha = sin_a.atan2(cos_a);
    Ok(if alpha == -S::PI() { S::PI() } else { alpha })
}
