//! Deterministic synthetic rigs and ray-traced scenes: the ground truth
//! every randomized check in this crate is measured against.
//!
//! All randomness flows through [`SplitMix64`] so that identical specs
//! produce bit-identical rigs and frames on every platform.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, CameraParams, Extrinsics, Intrinsics};
use crate::dibr::{z_to_depth_sample, Plane, ViewFrame};
use crate::math::{Mat3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("rig needs at least 3 cameras, got {0}")]
    TooFewCameras(u32),
    #[error("arc span must lie in (0, 2*pi], got {0}")]
    BadArcSpan(f64),
    #[error("intrinsics template is invalid: {0}")]
    BadTemplate(#[from] CameraError),
}

/// splitmix64: 64-bit state, one additive constant, two xor-shift-multiply
/// finalization rounds. Constants as published for the generator family:
/// increment 0x9E3779B97F4A7C15, multipliers 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB, shifts 30/27/31.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via Box-Muller (two uniforms per draw, no caching).
    pub fn next_gauss(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Shared camera template for synthetic rigs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsTemplate {
    pub f_x: f64,
    pub f_y: f64,
    pub o_x: f64,
    pub o_y: f64,
    #[serde(default)]
    pub skew: f64,
    pub width: u32,
    pub height: u32,
    pub z_near: f64,
    pub z_far: f64,
}

/// Parameters of a synthetic multi-camera rig on (or near) a circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigSpec {
    pub n_cameras: u32,
    pub radius: f64,
    pub center: [f64; 2],
    /// Angular extent of the rig in radians; `2*pi` is a closed ring.
    pub arc_span: f64,
    #[serde(default)]
    pub position_noise_sigma: f64,
    #[serde(default)]
    pub rotation_noise_sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub camera_height: f64,
    /// Point the cameras aim at; defaults to the circle centre at camera
    /// height.
    #[serde(default)]
    pub look_at: Option<[f64; 3]>,
    pub intrinsics: IntrinsicsTemplate,
}

/// World-to-camera rotation of a camera at `eye` looking at `target`,
/// y-up.
fn look_at_rotation(eye: &Vec3<f64>, target: &Vec3<f64>) -> Mat3<f64> {
    let z_row = target.sub(eye).normalized();
    let up = Vec3::new(0.0, 1.0, 0.0);
    let x_row = up.cross(&z_row).normalized();
    let y_row = z_row.cross(&x_row);
    Mat3::from_rows(x_row, y_row, z_row)
}

/// Builds the rig: cameras at equally spaced angles over the arc (symmetric
/// about angle zero), perturbed by seeded position/rotation noise. Zero noise
/// with the default aim gives an exactly ideal circular rig.
pub fn synth_rig(spec: &RigSpec) -> Result<Vec<CameraParams<f64>>, SynthError> {
    if spec.n_cameras < 3 {
        return Err(SynthError::TooFewCameras(spec.n_cameras));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    if !(spec.arc_span > 0.0 && spec.arc_span <= two_pi) {
        return Err(SynthError::BadArcSpan(spec.arc_span));
    }
    let t = &spec.intrinsics;
    let intr = Intrinsics::new(t.f_x, t.f_y, t.o_x, t.o_y, t.skew)?;

    let n = spec.n_cameras as usize;
    // A closed ring would duplicate the first camera if the endpoints were
    // both included.
    let step = if spec.arc_span == two_pi {
        spec.arc_span / n as f64
    } else {
        spec.arc_span / (n - 1) as f64
    };
    let start = -spec.arc_span / 2.0;

    let target = spec
        .look_at
        .map(|p| Vec3::new(p[0], p[1], p[2]))
        .unwrap_or_else(|| Vec3::new(spec.center[0], spec.camera_height, spec.center[1]));

    let mut rng = SplitMix64::new(spec.seed);
    let mut cameras = Vec::with_capacity(n);
    for i in 0..n {
        let alpha = start + step * i as f64;
        let mut pos = Vec3::new(
            spec.center[0] + spec.radius * alpha.sin(),
            spec.camera_height,
            spec.center[1] + spec.radius * alpha.cos(),
        );
        if spec.position_noise_sigma > 0.0 {
            pos = pos.add(&Vec3::new(
                spec.position_noise_sigma * rng.next_gauss(),
                spec.position_noise_sigma * rng.next_gauss(),
                spec.position_noise_sigma * rng.next_gauss(),
            ));
        }
        let mut rot = look_at_rotation(&pos, &target);
        if spec.rotation_noise_sigma > 0.0 {
            let axis = Vec3::new(rng.next_gauss(), rng.next_gauss(), rng.next_gauss());
            let angle = spec.rotation_noise_sigma * rng.next_gauss();
            rot = Mat3::from_axis_angle(&axis, angle).mul(&rot);
        }
        let extr = Extrinsics::from_center(rot, pos)?;
        cameras.push(CameraParams::new(i as u32, intr, extr, t.width, t.height)?);
    }
    Ok(cameras)
}

/// Procedural luma patterns; each texture also carries flat chroma.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Texture {
    Checker { a: f64, b: f64, cell: f64, u: u8, v: u8 },
    Gradient { base: f64, slope_u: f64, slope_v: f64, u: u8, v: u8 },
    Noise { seed: u64, base: f64, amplitude: f64, cell: f64, u: u8, v: u8 },
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Hash of a lattice point, uniform in [0, 1).
fn lattice_value(seed: u64, ix: i64, iy: i64) -> f64 {
    let mixed = seed
        ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    SplitMix64::new(mixed).next_f64()
}

impl Texture {
    /// Luma sample at surface coordinates (u, v), clamped to [0, 255].
    pub fn luma(&self, u: f64, v: f64) -> f64 {
        let raw = match self {
            Texture::Checker { a, b, cell, .. } => {
                let parity =
                    ((u / cell).floor() as i64 + (v / cell).floor() as i64).rem_euclid(2);
                if parity == 0 {
                    *a
                } else {
                    *b
                }
            }
            Texture::Gradient { base, slope_u, slope_v, .. } => base + slope_u * u + slope_v * v,
            Texture::Noise { seed, base, amplitude, cell, .. } => {
                let (fu, fv) = (u / cell, v / cell);
                let (iu, iv) = (fu.floor(), fv.floor());
                let (tu, tv) = (smoothstep(fu - iu), smoothstep(fv - iv));
                let (iu, iv) = (iu as i64, iv as i64);
                let v00 = lattice_value(*seed, iu, iv);
                let v10 = lattice_value(*seed, iu + 1, iv);
                let v01 = lattice_value(*seed, iu, iv + 1);
                let v11 = lattice_value(*seed, iu + 1, iv + 1);
                let top = v00 + (v10 - v00) * tu;
                let bot = v01 + (v11 - v01) * tu;
                base + amplitude * (2.0 * (top + (bot - top) * tv) - 1.0)
            }
        };
        raw.clamp(0.0, 255.0)
    }

    pub fn chroma(&self) -> (u8, u8) {
        match self {
            Texture::Checker { u, v, .. }
            | Texture::Gradient { u, v, .. }
            | Texture::Noise { u, v, .. } => (*u, *v),
        }
    }
}

/// Analytic scene primitives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Sphere { center: [f64; 3], radius: f64, texture: Texture },
    /// Axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3], texture: Texture },
    /// Parallelogram `origin + u*edge_u + v*edge_v`, u,v in [0,1].
    Rect { origin: [f64; 3], edge_u: [f64; 3], edge_v: [f64; 3], texture: Texture },
}

/// What a ray sees when it misses every primitive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub depth: f64,
    pub luma: u8,
    pub u: u8,
    pub v: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub background: Background,
    pub primitives: Vec<Primitive>,
}

struct Hit<'a> {
    /// Camera depth (the ray is parameterized so t equals camera-frame z).
    t: f64,
    u: f64,
    v: f64,
    texture: &'a Texture,
}

fn hit_sphere<'a>(
    center: &[f64; 3],
    radius: f64,
    texture: &'a Texture,
    origin: &Vec3<f64>,
    dir: &Vec3<f64>,
) -> Option<Hit<'a>> {
    let c = Vec3::new(center[0], center[1], center[2]);
    let oc = origin.sub(&c);
    let a = dir.dot(dir);
    let b = 2.0 * oc.dot(dir);
    let cc = oc.dot(&oc) - radius * radius;
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t = {
        let t0 = (-b - sq) / (2.0 * a);
        let t1 = (-b + sq) / (2.0 * a);
        if t0 > 1e-9 {
            t0
        } else if t1 > 1e-9 {
            t1
        } else {
            return None;
        }
    };
    let local = origin.add(&dir.scale(t)).sub(&c);
    let theta = (local.y() / radius).clamp(-1.0, 1.0).acos();
    let phi = local.x().atan2(local.z());
    Some(Hit { t, u: phi * radius, v: theta * radius, texture })
}

fn hit_box<'a>(
    min: &[f64; 3],
    max: &[f64; 3],
    texture: &'a Texture,
    origin: &Vec3<f64>,
    dir: &Vec3<f64>,
) -> Option<Hit<'a>> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    let mut axis_enter = 0usize;
    for k in 0..3 {
        let (o, d) = (origin.0[k], dir.0[k]);
        if d.abs() < 1e-300 {
            if o < min[k] || o > max[k] {
                return None;
            }
            continue;
        }
        let (mut t0, mut t1) = ((min[k] - o) / d, (max[k] - o) / d);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_enter {
            t_enter = t0;
            axis_enter = k;
        }
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return None;
        }
    }
    let t = if t_enter > 1e-9 {
        t_enter
    } else if t_exit > 1e-9 {
        t_exit
    } else {
        return None;
    };
    let p = origin.add(&dir.scale(t));
    // Texture over the two coordinates spanning the hit face.
    let (u, v) = match axis_enter {
        0 => (p.y(), p.z()),
        1 => (p.x(), p.z()),
        _ => (p.x(), p.y()),
    };
    Some(Hit { t, u, v, texture })
}

fn hit_rect<'a>(
    origin_p: &[f64; 3],
    edge_u: &[f64; 3],
    edge_v: &[f64; 3],
    texture: &'a Texture,
    origin: &Vec3<f64>,
    dir: &Vec3<f64>,
) -> Option<Hit<'a>> {
    let o = Vec3::new(origin_p[0], origin_p[1], origin_p[2]);
    let eu = Vec3::new(edge_u[0], edge_u[1], edge_u[2]);
    let ev = Vec3::new(edge_v[0], edge_v[1], edge_v[2]);
    // Solve o + u*eu + v*ev = origin + t*dir.
    let m = Mat3([
        [eu.x(), ev.x(), -dir.x()],
        [eu.y(), ev.y(), -dir.y()],
        [eu.z(), ev.z(), -dir.z()],
    ]);
    let rhs = origin.sub(&o);
    let sol = m.inverse()?.mul_vec(&rhs);
    let (u, v, t) = (sol.x(), sol.y(), sol.z());
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) || t <= 1e-9 {
        return None;
    }
    Some(Hit { t, u: u * eu.norm(), v: v * ev.norm(), texture })
}

/// Renders one view of the scene: one ray per pixel through the sample
/// position, nearest analytic hit, exact depth. Chroma is sampled at the
/// even-luma positions (co-sited 4:2:0).
pub fn render(
    scene: &SceneSpec,
    cam: &CameraParams<f64>,
    z_near: f64,
    z_far: f64,
) -> ViewFrame {
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut luma = Plane::filled(w, h, 0u8);
    let mut depth = Plane::filled(w, h, 0u16);
    let mut chroma_u = Plane::filled(w / 2, h / 2, 0u8);
    let mut chroma_v = Plane::filled(w / 2, h / 2, 0u8);

    let origin = cam.extr.camera_center();
    let r_t = cam.extr.rotation().transpose();
    let intr = &cam.intr;

    for py in 0..h {
        for px in 0..w {
            let y_dir = (py as f64 - intr.o_y) / intr.f_y;
            let x_dir = (px as f64 - intr.o_x - intr.skew * y_dir) / intr.f_x;
            // Camera-frame z of the direction is 1, so the ray parameter is
            // the camera depth itself.
            let dir = r_t.mul_vec(&Vec3::new(x_dir, y_dir, 1.0));

            let mut best: Option<Hit> = None;
            for prim in &scene.primitives {
                let hit = match prim {
                    Primitive::Sphere { center, radius, texture } => {
                        hit_sphere(center, *radius, texture, &origin, &dir)
                    }
                    Primitive::Box { min, max, texture } => {
                        hit_box(min, max, texture, &origin, &dir)
                    }
                    Primitive::Rect { origin: o, edge_u, edge_v, texture } => {
                        hit_rect(o, edge_u, edge_v, texture, &origin, &dir)
                    }
                };
                if let Some(hit) = hit {
                    if best.as_ref().is_none_or(|b| hit.t < b.t) {
                        best = Some(hit);
                    }
                }
            }

            let (y8, uv, z) = match &best {
                Some(hit) => (
                    hit.texture.luma(hit.u, hit.v).round() as u8,
                    hit.texture.chroma(),
                    hit.t,
                ),
                None => (
                    scene.background.luma,
                    (scene.background.u, scene.background.v),
                    scene.background.depth,
                ),
            };
            luma.set(px, py, y8);
            depth.set(px, py, z_to_depth_sample(z, z_near, z_far));
            if px % 2 == 0 && py % 2 == 0 {
                chroma_u.set(px / 2, py / 2, uv.0);
                chroma_v.set(px / 2, py / 2, uv.1);
            }
        }
    }

    ViewFrame::new(luma, chroma_u, chroma_v, depth, z_near, z_far)
        .expect("render dimensions come from a validated camera")
}
