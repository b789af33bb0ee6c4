//! Depth-image-based forward warping of texture+depth frames, with hole
//! detection and row-wise interpolation.
//!
//! Warping is a forward splat: every source pixel is pushed through the full
//! perspective correspondence, rounded to the nearest destination pixel
//! (ties toward negative infinity) and resolved by a z-buffer (nearest depth
//! wins, first writer wins on exact ties). Chroma is carried at luma
//! resolution by sample duplication during the pass and decimated afterwards,
//! so it shares the luma geometry and z-buffer decisions.

use thiserror::Error;

use crate::camera::{CameraParams, ImagePoint, PointProjector, ProjectionError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("plane dimensions must be even and chroma exactly half of luma")]
    BadDimensions,
    #[error("depth range must satisfy 0 < z_near < z_far")]
    BadDepthRange,
    #[error("every pixel is invalid; nothing to interpolate from")]
    AllInvalid,
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

/// A rectangular sample plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Plane { width, height, data: vec![value; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == width * height).then_some(Plane { width, height, data })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
}

/// Texture (4:2:0, 8-bit) plus a 16-bit inverse-depth plane for one view at
/// one time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewFrame {
    pub luma: Plane<u8>,
    pub chroma_u: Plane<u8>,
    pub chroma_v: Plane<u8>,
    pub depth: Plane<u16>,
    pub z_near: f64,
    pub z_far: f64,
}

impl ViewFrame {
    pub fn new(
        luma: Plane<u8>,
        chroma_u: Plane<u8>,
        chroma_v: Plane<u8>,
        depth: Plane<u16>,
        z_near: f64,
        z_far: f64,
    ) -> Result<Self, FrameError> {
        let (w, h) = (luma.width(), luma.height());
        if w == 0 || h == 0 || w % 2 != 0 || h % 2 != 0 {
            return Err(FrameError::BadDimensions);
        }
        if depth.width() != w || depth.height() != h {
            return Err(FrameError::BadDimensions);
        }
        for c in [&chroma_u, &chroma_v] {
            if c.width() != w / 2 || c.height() != h / 2 {
                return Err(FrameError::BadDimensions);
            }
        }
        if !(z_near > 0.0 && z_near < z_far && z_far.is_finite()) {
            return Err(FrameError::BadDepthRange);
        }
        Ok(ViewFrame { luma, chroma_u, chroma_v, depth, z_near, z_far })
    }

    /// Uniform frame (useful for tests and as a warp target container).
    #[allow(clippy::too_many_arguments)]
    pub fn constant(
        width: usize,
        height: usize,
        luma: u8,
        u: u8,
        v: u8,
        depth: u16,
        z_near: f64,
        z_far: f64,
    ) -> Result<Self, FrameError> {
        ViewFrame::new(
            Plane::filled(width, height, luma),
            Plane::filled(width / 2, height / 2, u),
            Plane::filled(width / 2, height / 2, v),
            Plane::filled(width, height, depth),
            z_near,
            z_far,
        )
    }

    pub fn width(&self) -> usize {
        self.luma.width()
    }

    pub fn height(&self) -> usize {
        self.luma.height()
    }
}

/// Warp output: the warped frame, the validity mask (luma resolution) and the
/// fraction of destination pixels no source pixel reached.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedFrame {
    pub frame: ViewFrame,
    pub mask: Plane<bool>,
    pub hole_fraction: f64,
}

/// Linear-in-inverse-depth decoding of a 16-bit depth sample:
/// `1/z = (v/65535)*(1/z_near - 1/z_far) + 1/z_far`.
#[inline]
pub fn depth_sample_to_z(v: u16, z_near: f64, z_far: f64) -> f64 {
    let t = v as f64 / 65535.0;
    1.0 / (t * (1.0 / z_near - 1.0 / z_far) + 1.0 / z_far)
}

/// Inverse of [`depth_sample_to_z`]; rounds to nearest and clamps.
#[inline]
pub fn z_to_depth_sample(z: f64, z_near: f64, z_far: f64) -> u16 {
    let t = (1.0 / z - 1.0 / z_far) / (1.0 / z_near - 1.0 / z_far);
    (t * 65535.0).round().clamp(0.0, 65535.0) as u16
}

/// Nearest integer with ties toward negative infinity.
#[inline]
fn round_half_down(v: f64) -> f64 {
    (v - 0.5).ceil()
}

/// Forward warp driven by an arbitrary per-point mapper. `map` returns the
/// destination pixel+depth or `None` for degenerate projections, which become
/// masked-out source contributions.
pub fn warp_view_with<F>(src: &ViewFrame, mut map: F) -> WarpedFrame
where
    F: FnMut(&ImagePoint<f64>) -> Option<ImagePoint<f64>>,
{
    let (w, h) = (src.width(), src.height());
    let mut luma = Plane::filled(w, h, 0u8);
    let mut u_full = Plane::filled(w, h, 128u8);
    let mut v_full = Plane::filled(w, h, 128u8);
    let mut mask = Plane::filled(w, h, false);
    let mut zbuf = vec![f64::INFINITY; w * h];

    for sy in 0..h {
        for sx in 0..w {
            let z = depth_sample_to_z(src.depth.get(sx, sy), src.z_near, src.z_far);
            let p = ImagePoint::new(sx as f64, sy as f64, z);
            let Some(q) = map(&p) else { continue };
            let dx = round_half_down(q.x);
            let dy = round_half_down(q.y);
            if dx < 0.0 || dy < 0.0 || dx >= w as f64 || dy >= h as f64 {
                continue;
            }
            let (dx, dy) = (dx as usize, dy as usize);
            let slot = dy * w + dx;
            if q.z < zbuf[slot] {
                zbuf[slot] = q.z;
                luma.set(dx, dy, src.luma.get(sx, sy));
                u_full.set(dx, dy, src.chroma_u.get(sx / 2, sy / 2));
                v_full.set(dx, dy, src.chroma_v.get(sx / 2, sy / 2));
                mask.set(dx, dy, true);
            }
        }
    }

    let mut depth = Plane::filled(w, h, 0u16);
    let mut holes = 0usize;
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                depth.set(x, y, z_to_depth_sample(zbuf[y * w + x], src.z_near, src.z_far));
            } else {
                holes += 1;
            }
        }
    }

    // Decimate the duplicated chroma: chroma sample (i, j) is co-sited with
    // luma sample (2i, 2j).
    let mut chroma_u = Plane::filled(w / 2, h / 2, 128u8);
    let mut chroma_v = Plane::filled(w / 2, h / 2, 128u8);
    for y in 0..h / 2 {
        for x in 0..w / 2 {
            chroma_u.set(x, y, u_full.get(2 * x, 2 * y));
            chroma_v.set(x, y, v_full.get(2 * x, 2 * y));
        }
    }

    let frame = ViewFrame { luma, chroma_u, chroma_v, depth, z_near: src.z_near, z_far: src.z_far };
    WarpedFrame { frame, mask, hole_fraction: holes as f64 / (w * h) as f64 }
}

/// Warps `src` from `cam_src` into the image plane of `cam_dst` via the full
/// perspective correspondence.
pub fn warp_view(
    src: &ViewFrame,
    cam_src: &CameraParams<f64>,
    cam_dst: &CameraParams<f64>,
) -> Result<WarpedFrame, FrameError> {
    let projector = PointProjector::new(cam_src, cam_dst)?;
    Ok(warp_view_with(src, |p| projector.project(p).ok()))
}

trait FillSample: Copy {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl FillSample for u8 {
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f64(v: f64) -> Self {
        v.round().clamp(0.0, 255.0) as u8
    }
}

impl FillSample for u16 {
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f64(v: f64) -> Self {
        v.round().clamp(0.0, 65535.0) as u16
    }
}

/// One gap between two (optional) valid candidates on a scan line.
fn fill_gap<T: FillSample>(
    left: Option<(usize, T, f64)>,
    right: Option<(usize, T, f64)>,
    idx: usize,
    z_band: f64,
) -> Option<T> {
    match (left, right) {
        (Some((li, lv, lz)), Some((ri, rv, rz))) => {
            // Background bias: across a depth discontinuity only the farther
            // side contributes.
            if (lz - rz).abs() > z_band {
                Some(if lz > rz { lv } else { rv })
            } else {
                let dl = (idx - li) as f64;
                let dr = (ri - idx) as f64;
                let w_total = dl + dr;
                Some(T::from_f64((lv.to_f64() * dr + rv.to_f64() * dl) / w_total))
            }
        }
        (Some((_, lv, _)), None) => Some(lv),
        (None, Some((_, rv, _))) => Some(rv),
        (None, None) => None,
    }
}

/// Fills the invalid pixels of one plane along the given scan lines. `lines`
/// yields, per line, the (x, y) plane coordinates in order.
fn fill_lines<T: FillSample>(
    plane: &mut Plane<T>,
    valid: &Plane<bool>,
    z_of: &dyn Fn(usize, usize) -> f64,
    lines: &mut dyn Iterator<Item = Vec<(usize, usize)>>,
    z_band: f64,
    filled: &mut Plane<bool>,
) {
    for line in lines {
        for (i, &(x, y)) in line.iter().enumerate() {
            if valid.get(x, y) || filled.get(x, y) {
                continue;
            }
            let left = line[..i]
                .iter()
                .enumerate()
                .rev()
                .find(|(_, &(lx, ly))| valid.get(lx, ly))
                .map(|(j, &(lx, ly))| (j, plane.get(lx, ly), z_of(lx, ly)));
            let right = line[i + 1..]
                .iter()
                .enumerate()
                .find(|(_, &(rx, ry))| valid.get(rx, ry))
                .map(|(j, &(rx, ry))| (i + 1 + j, plane.get(rx, ry), z_of(rx, ry)));
            if let Some(v) = fill_gap(left, right, i, z_band) {
                plane.set(x, y, v);
                filled.set(x, y, true);
            }
        }
    }
}

fn fill_plane<T: FillSample>(
    plane: &mut Plane<T>,
    valid: &Plane<bool>,
    depth: &Plane<u16>,
    z_near: f64,
    z_far: f64,
) {
    let (w, h) = (plane.width(), plane.height());
    let z_band = 0.05 * (z_far - z_near);
    let z_of = |x: usize, y: usize| depth_sample_to_z(depth.get(x, y), z_near, z_far);
    let mut filled = Plane::filled(w, h, false);
    // Row-wise pass, then columns for lines with no valid sample at all.
    fill_lines(
        plane,
        valid,
        &z_of,
        &mut (0..h).map(|y| (0..w).map(|x| (x, y)).collect()),
        z_band,
        &mut filled,
    );
    fill_lines(
        plane,
        valid,
        &z_of,
        &mut (0..w).map(|x| (0..h).map(|y| (x, y)).collect()),
        z_band,
        &mut filled,
    );
    // Any pixel still unfilled has no valid sample in its row or column;
    // copy the first valid sample in scan order.
    let mut fallback: Option<T> = None;
    'outer: for y in 0..h {
        for x in 0..w {
            if valid.get(x, y) {
                fallback = Some(plane.get(x, y));
                break 'outer;
            }
        }
    }
    if let Some(fb) = fallback {
        for y in 0..h {
            for x in 0..w {
                if !valid.get(x, y) && !filled.get(x, y) {
                    plane.set(x, y, fb);
                }
            }
        }
    }
}

/// Interpolates every masked-out pixel from the nearest valid samples on its
/// row (columns as fallback for empty rows). Valid pixels are never modified;
/// the result has no mask.
pub fn fill_holes(w: &WarpedFrame) -> Result<ViewFrame, FrameError> {
    if w.hole_fraction >= 1.0 {
        return Err(FrameError::AllInvalid);
    }
    let mut frame = w.frame.clone();
    let original_depth = w.frame.depth.clone();
    let (z_near, z_far) = (frame.z_near, frame.z_far);

    fill_plane(&mut frame.luma, &w.mask, &original_depth, z_near, z_far);
    fill_plane(&mut frame.depth, &w.mask, &original_depth, z_near, z_far);

    // Chroma at half resolution, against the decimated mask/depth.
    let (cw, ch) = (frame.chroma_u.width(), frame.chroma_u.height());
    let mut mask_half = Plane::filled(cw, ch, false);
    let mut depth_half = Plane::filled(cw, ch, 0u16);
    for y in 0..ch {
        for x in 0..cw {
            mask_half.set(x, y, w.mask.get(2 * x, 2 * y));
            depth_half.set(x, y, original_depth.get(2 * x, 2 * y));
        }
    }
    fill_plane(&mut frame.chroma_u, &mask_half, &depth_half, z_near, z_far);
    fill_plane(&mut frame.chroma_v, &mask_half, &depth_half, z_near, z_far);

    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraParams, Extrinsics, Intrinsics};
    use crate::math::{Mat3, Vec3};
    use crate::synth::SplitMix64;

    fn camera(o_x: f64, w: u32, h: u32) -> CameraParams<f64> {
        CameraParams::new(
            0,
            Intrinsics::new(500.0, 500.0, o_x, h as f64 / 2.0, 0.0).unwrap(),
            Extrinsics::new(Mat3::identity(), Vec3::zero()).unwrap(),
            w,
            h,
        )
        .unwrap()
    }

    fn random_frame(seed: u64, w: usize, h: usize) -> ViewFrame {
        let mut rng = SplitMix64::new(seed);
        let mut f = ViewFrame::constant(w, h, 0, 0, 0, 0, 1.0, 3.0).unwrap();
        for y in 0..h {
            for x in 0..w {
                f.luma.set(x, y, (rng.next_u64() & 0xff) as u8);
                f.depth.set(x, y, (rng.next_u64() & 0xffff) as u16);
            }
        }
        for y in 0..h / 2 {
            for x in 0..w / 2 {
                f.chroma_u.set(x, y, (rng.next_u64() & 0xff) as u8);
                f.chroma_v.set(x, y, (rng.next_u64() & 0xff) as u8);
            }
        }
        f
    }

    #[test]
    fn depth_codec_endpoints_and_midpoint() {
        assert_eq!(depth_sample_to_z(65535, 1.0, 3.0), 1.0);
        assert_eq!(depth_sample_to_z(0, 1.0, 3.0), 3.0);
        let z = depth_sample_to_z(32768, 1.0, 3.0);
        let want = 1.0 / ((32768.0 / 65535.0) * (1.0 - 1.0 / 3.0) + 1.0 / 3.0);
        assert!((z - want).abs() < 1e-12);
        assert!((z - 1.49998).abs() < 1e-4);
        assert_eq!(z_to_depth_sample(z, 1.0, 3.0), 32768);
    }

    #[test]
    fn depth_codec_roundtrip_within_one_step() {
        let (z_near, z_far) = (0.7, 12.0);
        for v in (0u16..=65535).step_by(97) {
            let z = depth_sample_to_z(v, z_near, z_far);
            assert_eq!(z_to_depth_sample(z, z_near, z_far), v);
        }
    }

    #[test]
    fn tie_rounding_is_toward_negative_infinity() {
        assert_eq!(round_half_down(2.5), 2.0);
        assert_eq!(round_half_down(-2.5), -3.0);
        assert_eq!(round_half_down(2.51), 3.0);
        assert_eq!(round_half_down(2.49), 2.0);
    }

    #[test]
    fn identity_warp_is_bit_exact() {
        let frame = random_frame(1, 64, 48);
        let cam = camera(32.0, 64, 48);
        let out = warp_view(&frame, &cam, &cam).unwrap();
        assert_eq!(out.hole_fraction, 0.0);
        assert_eq!(out.frame, frame);
        assert!(out.mask.data().iter().all(|&m| m));
    }

    #[test]
    fn principal_point_shift_translates_by_integer_pixels() {
        // Fronto-parallel constant-depth scene; +10 px shift of the
        // destination principal point moves content to larger x, so the
        // first 10 destination columns have no source.
        let (w, h) = (64, 48);
        let mut frame = random_frame(2, w, h);
        let depth = z_to_depth_sample(2.0, frame.z_near, frame.z_far);
        for v in frame.depth.data_mut() {
            *v = depth;
        }
        let cam_src = camera(32.0, w as u32, h as u32);
        let cam_dst = camera(42.0, w as u32, h as u32);
        let out = warp_view(&frame, &cam_src, &cam_dst).unwrap();
        assert!((out.hole_fraction - 10.0 / w as f64).abs() < 1e-12);
        for y in 0..h {
            for x in 0..w {
                if x < 10 {
                    assert!(!out.mask.get(x, y));
                } else {
                    assert!(out.mask.get(x, y));
                    assert_eq!(out.frame.luma.get(x, y), frame.luma.get(x - 10, y));
                    assert_eq!(out.frame.depth.get(x, y), frame.depth.get(x - 10, y));
                }
            }
        }
        // Chroma shifts by 5 half-resolution pixels.
        for y in 0..h / 2 {
            for x in 5..w / 2 {
                assert_eq!(out.frame.chroma_u.get(x, y), frame.chroma_u.get(x - 5, y));
            }
        }
    }

    #[test]
    fn zbuffer_keeps_strictly_nearest_and_matches_replay() {
        // Two-depth frame warped with a lateral shift so near content
        // overlaps far content.
        let (w, h) = (48, 16);
        let mut frame = random_frame(3, w, h);
        let near = z_to_depth_sample(1.2, frame.z_near, frame.z_far);
        let far = z_to_depth_sample(2.8, frame.z_near, frame.z_far);
        for y in 0..h {
            for x in 0..w {
                frame.depth.set(x, y, if (20..30).contains(&x) { near } else { far });
            }
        }
        let cam_src = camera(24.0, w as u32, h as u32);
        let mut dst = cam_src;
        dst.extr =
            Extrinsics::from_center(Mat3::identity(), Vec3::new(0.12, 0.0, 0.0)).unwrap();
        let out = warp_view(&frame, &cam_src, &dst).unwrap();

        // Exhaustive replay: every destination pixel must show the source
        // pixel with the smallest projected depth among all that land there.
        let projector = crate::camera::PointProjector::new(&cam_src, &dst).unwrap();
        let mut best: Vec<Option<(f64, u8)>> = vec![None; w * h];
        for sy in 0..h {
            for sx in 0..w {
                let z = depth_sample_to_z(frame.depth.get(sx, sy), frame.z_near, frame.z_far);
                let Ok(q) = projector.project(&ImagePoint::new(sx as f64, sy as f64, z)) else {
                    continue;
                };
                let dx = round_half_down(q.x);
                let dy = round_half_down(q.y);
                if dx < 0.0 || dy < 0.0 || dx >= w as f64 || dy >= h as f64 {
                    continue;
                }
                let slot = dy as usize * w + dx as usize;
                let replace = match best[slot] {
                    None => true,
                    Some((z_old, _)) => q.z < z_old,
                };
                if replace {
                    best[slot] = Some((q.z, frame.luma.get(sx, sy)));
                }
            }
        }
        for y in 0..h {
            for x in 0..w {
                match best[y * w + x] {
                    Some((_, luma)) => {
                        assert!(out.mask.get(x, y));
                        assert_eq!(out.frame.luma.get(x, y), luma);
                    }
                    None => assert!(!out.mask.get(x, y)),
                }
            }
        }
    }

    #[test]
    fn hole_fraction_matches_mask_exactly() {
        let frame = random_frame(4, 32, 16);
        let cam_src = camera(16.0, 32, 16);
        let cam_dst = camera(20.0, 32, 16);
        let out = warp_view(&frame, &cam_src, &cam_dst).unwrap();
        let holes = out.mask.data().iter().filter(|&&m| !m).count();
        assert_eq!(out.hole_fraction, holes as f64 / (32.0 * 16.0));
    }

    #[test]
    fn fill_holes_full_mask_is_identity() {
        let frame = random_frame(5, 32, 16);
        let warped = WarpedFrame {
            frame: frame.clone(),
            mask: Plane::filled(32, 16, true),
            hole_fraction: 0.0,
        };
        assert_eq!(fill_holes(&warped).unwrap(), frame);
    }

    #[test]
    fn fill_holes_single_pixel_averages_neighbours() {
        let mut frame = ViewFrame::constant(8, 4, 0, 10, 20, 0, 1.0, 3.0).unwrap();
        let depth = z_to_depth_sample(2.0, 1.0, 3.0);
        for v in frame.depth.data_mut() {
            *v = depth;
        }
        let mut mask = Plane::filled(8, 4, true);
        for y in 0..4 {
            for x in 0..8 {
                frame.luma.set(x, y, 100);
            }
        }
        frame.luma.set(4, 1, 104);
        frame.luma.set(3, 1, 0); // hole between 100 (x=2) and 104 (x=4)
        mask.set(3, 1, false);
        let warped = WarpedFrame { frame, mask, hole_fraction: 1.0 / 32.0 };
        let filled = fill_holes(&warped).unwrap();
        assert_eq!(filled.luma.get(3, 1), 102);
        // Valid pixels untouched.
        assert_eq!(filled.luma.get(2, 1), 100);
        assert_eq!(filled.luma.get(4, 1), 104);
    }

    /// Scalar re-implementation of the stated rule for one row, used as an
    /// oracle for the background-biased strip case.
    fn fill_row_oracle(values: &[f64], valid: &[bool], z: &[f64], z_band: f64) -> Vec<f64> {
        let mut out = values.to_vec();
        for i in 0..values.len() {
            if valid[i] {
                continue;
            }
            let left = (0..i).rev().find(|&j| valid[j]);
            let right = (i + 1..values.len()).find(|&j| valid[j]);
            out[i] = match (left, right) {
                (Some(l), Some(r)) => {
                    if (z[l] - z[r]).abs() > z_band {
                        if z[l] > z[r] {
                            values[l]
                        } else {
                            values[r]
                        }
                    } else {
                        let (dl, dr) = ((i - l) as f64, (r - i) as f64);
                        (values[l] * dr + values[r] * dl) / (dl + dr)
                    }
                }
                (Some(l), None) => values[l],
                (None, Some(r)) => values[r],
                (None, None) => f64::NAN,
            };
        }
        out
    }

    #[test]
    fn fill_holes_strip_at_depth_discontinuity_takes_far_side() {
        let (w, h) = (16, 4);
        let mut frame = ViewFrame::constant(w, h, 0, 0, 0, 0, 1.0, 5.0).unwrap();
        let near = z_to_depth_sample(1.5, 1.0, 5.0);
        let far = z_to_depth_sample(4.5, 1.0, 5.0);
        let mut mask = Plane::filled(w, h, true);
        for y in 0..h {
            for x in 0..w {
                let (luma, d) = if x < 5 { (200, near) } else { (50, far) };
                frame.luma.set(x, y, luma);
                frame.depth.set(x, y, d);
            }
        }
        // 5-pixel hole strip straddling the boundary.
        for y in 0..h {
            for x in 5..10 {
                mask.set(x, y, false);
            }
        }
        let warped = WarpedFrame {
            frame: frame.clone(),
            mask: mask.clone(),
            hole_fraction: (5 * h) as f64 / (w * h) as f64,
        };
        let filled = fill_holes(&warped).unwrap();
        // Oracle over one row.
        let values: Vec<f64> = (0..w).map(|x| frame.luma.get(x, 0) as f64).collect();
        let valid: Vec<bool> = (0..w).map(|x| mask.get(x, 0)).collect();
        let z: Vec<f64> = (0..w)
            .map(|x| depth_sample_to_z(frame.depth.get(x, 0), 1.0, 5.0))
            .collect();
        let oracle = fill_row_oracle(&values, &valid, &z, 0.05 * 4.0);
        for x in 0..w {
            assert_eq!(filled.luma.get(x, 0) as f64, oracle[x].round(), "x={x}");
        }
        // Every strip pixel came from the far (background) side.
        for y in 0..h {
            for x in 5..10 {
                assert_eq!(filled.luma.get(x, y), 50);
            }
        }
    }

    #[test]
    fn fill_holes_never_touches_valid_pixels() {
        let mut rng = SplitMix64::new(6);
        let frame = random_frame(7, 32, 16);
        let mut mask = Plane::filled(32, 16, true);
        for _ in 0..120 {
            let x = (rng.next_u64() % 32) as usize;
            let y = (rng.next_u64() % 16) as usize;
            mask.set(x, y, false);
        }
        let holes = mask.data().iter().filter(|&&m| !m).count() as f64 / (32.0 * 16.0);
        let warped = WarpedFrame { frame: frame.clone(), mask: mask.clone(), hole_fraction: holes };
        let filled = fill_holes(&warped).unwrap();
        for y in 0..16 {
            for x in 0..32 {
                if mask.get(x, y) {
                    assert_eq!(filled.luma.get(x, y), frame.luma.get(x, y));
                    assert_eq!(filled.depth.get(x, y), frame.depth.get(x, y));
                }
            }
        }
    }

    #[test]
    fn fill_holes_handles_empty_rows_via_columns() {
        let (w, h) = (8, 6);
        let mut frame = ViewFrame::constant(w, h, 7, 1, 2, 100, 1.0, 3.0).unwrap();
        let mut mask = Plane::filled(w, h, true);
        for x in 0..w {
            mask.set(x, 2, false);
            frame.luma.set(x, 2, 0);
        }
        let warped = WarpedFrame { frame, mask, hole_fraction: w as f64 / (w * h) as f64 };
        let filled = fill_holes(&warped).unwrap();
        for x in 0..w {
            assert_eq!(filled.luma.get(x, 2), 7);
        }
    }

    #[test]
    fn fill_holes_all_invalid_is_an_error() {
        let frame = ViewFrame::constant(8, 4, 0, 0, 0, 0, 1.0, 3.0).unwrap();
        let warped = WarpedFrame { frame, mask: Plane::filled(8, 4, false), hole_fraction: 1.0 };
        assert!(matches!(fill_holes(&warped), Err(FrameError::AllInvalid)));
    }

    #[test]
    fn frame_validation() {
        assert!(ViewFrame::constant(7, 4, 0, 0, 0, 0, 1.0, 2.0).is_err());
        assert!(ViewFrame::constant(8, 4, 0, 0, 0, 0, 2.0, 1.0).is_err());
        assert!(ViewFrame::constant(8, 4, 0, 0, 0, 0, 1.0, 2.0).is_ok());
    }
}
