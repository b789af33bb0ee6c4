//! Small fixed-size vectors and matrices (row-major) used by the camera
//! geometry. Deliberately minimal: only the operations the crate needs.

use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<S>(pub [S; 3]);

impl<S: Real> Vec3<S> {
    #[inline]
    pub fn new(x: S, y: S, z: S) -> Self {
        Vec3([x, y, z])
    }

    #[inline]
    pub fn zero() -> Self {
        Vec3([S::zero(); 3])
    }

    #[inline]
    pub fn x(&self) -> S {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> S {
        self.0[1]
    }

    #[inline]
    pub fn z(&self) -> S {
        self.0[2]
    }

    #[inline]
    pub fn add(&self, o: &Vec3<S>) -> Vec3<S> {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    #[inline]
    pub fn sub(&self, o: &Vec3<S>) -> Vec3<S> {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    #[inline]
    pub fn scale(&self, k: S) -> Vec3<S> {
        Vec3([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }

    #[inline]
    pub fn neg(&self) -> Vec3<S> {
        self.scale(-S::one())
    }

    #[inline]
    pub fn dot(&self, o: &Vec3<S>) -> S {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(&self, o: &Vec3<S>) -> Vec3<S> {
        Vec3([
            self.0[1] * o.0[2] - self.0[2] * o.0[1],
            self.0[2] * o.0[0] - self.0[0] * o.0[2],
            self.0[0] * o.0[1] - self.0[1] * o.0[0],
        ])
    }

    #[inline]
    pub fn norm(&self) -> S {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Vec3<S> {
        self.scale(S::one() / self.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<S>(pub [[S; 3]; 3]);

impl<S: Real> Mat3<S> {
    pub fn identity() -> Self {
        let mut m = [[S::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = S::one();
        }
        Mat3(m)
    }

    pub fn zero() -> Self {
        Mat3([[S::zero(); 3]; 3])
    }

    pub fn from_rows(r0: Vec3<S>, r1: Vec3<S>, r2: Vec3<S>) -> Self {
        Mat3([r0.0, r1.0, r2.0])
    }

    pub fn row(&self, i: usize) -> Vec3<S> {
        Vec3(self.0[i])
    }

    pub fn transpose(&self) -> Mat3<S> {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul(&self, o: &Mat3<S>) -> Mat3<S> {
        let mut r = [[S::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = S::zero();
                for (k, ok) in o.0.iter().enumerate() {
                    acc += self.0[i][k] * ok[j];
                }
                r[i][j] = acc;
            }
        }
        Mat3(r)
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3<S>) -> Vec3<S> {
        Vec3([
            self.row(0).dot(v),
            self.row(1).dot(v),
            self.row(2).dot(v),
        ])
    }

    pub fn det(&self) -> S {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate. `None` when the determinant is too small
    /// relative to the matrix scale to invert meaningfully.
    pub fn inverse(&self) -> Option<Mat3<S>> {
        let m = &self.0;
        let det = self.det();
        let scale = self
            .0
            .iter()
            .flatten()
            .fold(S::zero(), |a, v| a.max(v.abs()));
        if !det.is_finite() || det.abs() <= S::of(1e-14) * scale * scale * scale {
            return None;
        }
        let inv_det = S::one() / det;
        let cof = |a: S, b: S, c: S, d: S| (a * d - b * c) * inv_det;
        Some(Mat3([
            [
                cof(m[1][1], m[1][2], m[2][1], m[2][2]),
                cof(m[0][2], m[0][1], m[2][2], m[2][1]),
                cof(m[0][1], m[0][2], m[1][1], m[1][2]),
            ],
            [
                cof(m[1][2], m[1][0], m[2][2], m[2][0]),
                cof(m[0][0], m[0][2], m[2][0], m[2][2]),
                cof(m[0][2], m[0][0], m[1][2], m[1][0]),
            ],
            [
                cof(m[1][0], m[1][1], m[2][0], m[2][1]),
                cof(m[0][1], m[0][0], m[2][1], m[2][0]),
                cof(m[0][0], m[0][1], m[1][0], m[1][1]),
            ],
        ]))
    }

    /// max |A^T A - I|, the orthonormality defect.
    pub fn orthonormality_defect(&self) -> S {
        let p = self.transpose().mul(self);
        let mut worst = S::zero();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { S::one() } else { S::zero() };
                worst = worst.max((p.0[i][j] - target).abs());
            }
        }
        worst
    }

    /// Rodrigues rotation about `axis` (not necessarily unit) by `angle`.
    pub fn from_axis_angle(axis: &Vec3<S>, angle: S) -> Mat3<S> {
        let n = axis.norm();
        if n < S::of(1e-300) {
            return Mat3::identity();
        }
        let u = axis.scale(S::one() / n);
        let (s, c) = (angle.sin(), angle.cos());
        let t = S::one() - c;
        let (x, y, z) = (u.x(), u.y(), u.z());
        Mat3([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4<S>(pub [[S; 4]; 4]);

impl<S: Real> Mat4<S> {
    pub fn identity() -> Self {
        let mut m = [[S::zero(); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = S::one();
        }
        Mat4(m)
    }

    pub fn mul(&self, o: &Mat4<S>) -> Mat4<S> {
        let mut r = [[S::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = S::zero();
                for (k, ok) in o.0.iter().enumerate() {
                    acc += self.0[i][k] * ok[j];
                }
                r[i][j] = acc;
            }
        }
        Mat4(r)
    }

    #[inline]
    pub fn mul_vec(&self, v: &[S; 4]) -> [S; 4] {
        let mut r = [S::zero(); 4];
        for (ri, row) in r.iter_mut().zip(self.0.iter()) {
            *ri = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        r
    }

    /// Gauss-Jordan inverse with partial pivoting. `None` on a (numerically)
    /// singular pivot.
    pub fn inverse(&self) -> Option<Mat4<S>> {
        let mut a = self.0;
        let mut inv = Mat4::identity().0;
        for col in 0..4 {
            let mut pivot = col;
            for r in col + 1..4 {
                if a[r][col].abs() > a[pivot][col].abs() {
                    pivot = r;
                }
            }
            let p = a[pivot][col];
            if !p.is_finite() || p.abs() < S::of(1e-300) {
                return None;
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let inv_p = S::one() / p;
            for j in 0..4 {
                a[col][j] *= inv_p;
                inv[col][j] *= inv_p;
            }
            for r in 0..4 {
                if r == col {
                    continue;
                }
                let f = a[r][col];
                if f == S::zero() {
                    continue;
                }
                for j in 0..4 {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
        Some(Mat4(inv))
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> S {
        self.0.iter().fold(S::zero(), |acc, row| {
            acc.max(row.iter().fold(S::zero(), |a, v| a + v.abs()))
        })
    }

    pub fn max_abs_diff(&self, o: &Mat4<S>) -> S {
        let mut worst = S::zero();
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - o.0[i][j]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat3_inverse_roundtrip() {
        let m: Mat3<f64> = Mat3([[2.0, 1.0, 0.5], [-1.0, 3.0, 0.0], [0.25, 0.0, 1.5]]);
        let inv = m.inverse().unwrap();
        let p = m.mul(&inv);
        assert!(p.0[0][0] - 1.0 < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.0[i][j] - want).abs() < 1e-12, "{p:?}");
            }
        }
    }

    #[test]
    fn mat3_singular_rejected() {
        let m = Mat3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]]);
        assert!(m.inverse().is_none());
    }

    #[test]
    fn mat4_inverse_roundtrip() {
        let m = Mat4([
            [2.0, 0.0, 1.0, 4.0],
            [0.5, 1.0, 0.0, -1.0],
            [0.0, 3.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        let inv = m.inverse().unwrap();
        let p = m.mul(&inv);
        assert!(p.max_abs_diff(&Mat4::identity()) < 1e-12);
    }

    #[test]
    fn mat4_affine_inverse_keeps_bottom_row() {
        let m = Mat4([
            [0.2, -1.0, 0.0, 7.0],
            [3.0, 0.0, 0.5, -2.0],
            [0.0, 0.1, 2.0, 1.0],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        let inv = m.inverse().unwrap();
        assert_eq!(inv.0[3], [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn axis_angle_is_rotation() {
        let r: Mat3<f64> = Mat3::from_axis_angle(&Vec3::new(0.3, -1.0, 0.2), 0.7);
        assert!(r.orthonormality_defect() < 1e-14);
        assert!((r.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cross_is_right_handed() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(&y), Vec3::new(0.0, 0.0, 1.0));
    }
}
