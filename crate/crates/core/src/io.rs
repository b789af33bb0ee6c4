//! File formats: camera parameter files, reduced circular-camera files,
//! JSON configs and raw video planes.
//!
//! Structured data is JSON with strict parsing (unknown fields are rejected
//! by name, numbers round-trip exactly). Video is raw planar 4:2:0 8-bit,
//! frame-sequential; depth is one 16-bit little-endian plane per frame. Frame
//! counts are inferred from the file size and any remainder is an error.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraParams, Extrinsics, Intrinsics};
use crate::circle_fit::Circle;
use crate::dibr::Plane;
use crate::math::{Mat3, Vec3};
use crate::rectify::{circular_to_full, CircularCameraParams, OxPolicy, RectifiedRig};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {what}")]
    Invalid { path: String, what: String },
    #[error("{path}: file is {file_len} bytes but a frame is {frame_bytes} bytes; {remainder} trailing bytes at offset {offset}")]
    TruncatedFile {
        path: String,
        file_len: u64,
        frame_bytes: u64,
        remainder: u64,
        offset: u64,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.display().to_string(), source }
}

/// Strict JSON loading for any config type in this crate.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

// ---------------------------------------------------------------------------
// Camera parameter file
// ---------------------------------------------------------------------------

/// Meaning of the per-camera `t` field in a camera file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationConvention {
    /// `t` is the world-to-camera translation: `X_cam = R*X_world + t`.
    WorldToCamera,
    /// `t` is the camera centre in world coordinates.
    CameraCenter,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub id: u32,
    pub width: u32,
    pub height: u32,
    /// Row-major 3x3 intrinsic matrix.
    pub k: [f64; 9],
    /// Row-major 3x3 rotation matrix (world to camera).
    pub r: [f64; 9],
    pub t: [f64; 3],
    pub z_near: f64,
    pub z_far: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFile {
    pub format_version: u32,
    pub convention: TranslationConvention,
    pub cameras: Vec<CameraRecord>,
}

/// A camera with its depth range as loaded from a camera file.
#[derive(Clone, Copy, Debug)]
pub struct LoadedCamera {
    pub params: CameraParams<f64>,
    pub z_near: f64,
    pub z_far: f64,
}

#[derive(Clone, Debug)]
pub struct LoadedRig {
    pub cameras: Vec<LoadedCamera>,
}

fn mat3_of(values: &[f64; 9]) -> Mat3<f64> {
    Mat3([
        [values[0], values[1], values[2]],
        [values[3], values[4], values[5]],
        [values[6], values[7], values[8]],
    ])
}

fn camera_from_record(
    record: &CameraRecord,
    convention: TranslationConvention,
    path: &Path,
) -> Result<LoadedCamera, IoError> {
    let invalid = |what: String| IoError::Invalid {
        path: path.display().to_string(),
        what: format!("camera {}: {what}", record.id),
    };
    let k = &record.k;
    if k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0 || k[8] != 1.0 {
        return Err(invalid(
            "K must be upper triangular with K[2][2] = 1 (row-major entries 3,6,7 zero, 8 one)"
                .to_string(),
        ));
    }
    let intr = Intrinsics::new(k[0], k[4], k[2], k[5], k[1])
        .map_err(|e| invalid(e.to_string()))?;
    let r = mat3_of(&record.r);
    let t = Vec3::new(record.t[0], record.t[1], record.t[2]);
    let extr = match convention {
        TranslationConvention::WorldToCamera => Extrinsics::new(r, t),
        TranslationConvention::CameraCenter => Extrinsics::from_center(r, t),
    }
    .map_err(|e| invalid(e.to_string()))?;
    let params = CameraParams::new(record.id, intr, extr, record.width, record.height)
        .map_err(|e| invalid(e.to_string()))?;
    if !(record.z_near > 0.0 && record.z_near < record.z_far) {
        return Err(invalid(format!(
            "depth range must satisfy 0 < z_near < z_far, got ({}, {})",
            record.z_near, record.z_far
        )));
    }
    Ok(LoadedCamera { params, z_near: record.z_near, z_far: record.z_far })
}

pub fn load_camera_file(path: &Path) -> Result<LoadedRig, IoError> {
    let file: CameraFile = load_json(path)?;
    if file.format_version != 1 {
        return Err(IoError::Invalid {
            path: path.display().to_string(),
            what: format!("unsupported format_version {}", file.format_version),
        });
    }
    let mut cameras = Vec::with_capacity(file.cameras.len());
    for record in &file.cameras {
        cameras.push(camera_from_record(record, file.convention, path)?);
    }
    Ok(LoadedRig { cameras })
}

pub fn camera_file_from_rig(
    cameras: &[LoadedCamera],
    convention: TranslationConvention,
) -> CameraFile {
    let records = cameras
        .iter()
        .map(|c| {
            let k = c.params.intr.k_matrix().0;
            let r = c.params.extr.rotation().0;
            let t = match convention {
                TranslationConvention::WorldToCamera => *c.params.extr.translation(),
                TranslationConvention::CameraCenter => c.params.extr.camera_center(),
            };
            CameraRecord {
                id: c.params.id,
                width: c.params.width,
                height: c.params.height,
                k: [k[0][0], k[0][1], k[0][2], k[1][0], k[1][1], k[1][2], k[2][0], k[2][1], k[2][2]],
                r: [r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]],
                t: [t.x(), t.y(), t.z()],
                z_near: c.z_near,
                z_far: c.z_far,
            }
        })
        .collect();
    CameraFile { format_version: 1, convention, cameras: records }
}

pub fn save_camera_file(
    cameras: &[LoadedCamera],
    convention: TranslationConvention,
    path: &Path,
) -> Result<(), IoError> {
    save_json(&camera_file_from_rig(cameras, convention), path)
}

// ---------------------------------------------------------------------------
// Circular camera file (the reduced parameter set)
// ---------------------------------------------------------------------------

/// Rig-level values shared by every camera of a rectified rig.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircularShared {
    pub f_x: f64,
    pub f_y_common: f64,
    pub o_y: f64,
    pub r: f64,
    pub x_cen: f64,
    pub z_cen: f64,
    pub camera_height: f64,
    pub width: u32,
    pub height: u32,
    pub z_near: f64,
    pub z_far: f64,
    pub ox_policy: OxPolicy,
}

/// Per-camera part of the reduced set: id, horizontal principal point and
/// circle angle. Everything else is shared.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircularRecord {
    pub id: u32,
    pub o_x: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircularCameraFile {
    pub format_version: u32,
    pub shared: CircularShared,
    pub cameras: Vec<CircularRecord>,
}

pub fn circular_file_from_rig(
    rig: &RectifiedRig<f64>,
    z_near: f64,
    z_far: f64,
) -> Result<CircularCameraFile, IoError> {
    let first = rig.cameras.first().ok_or_else(|| IoError::Invalid {
        path: "<memory>".into(),
        what: "rectified rig has no cameras".into(),
    })?;
    if rig
        .cameras
        .iter()
        .any(|c| c.width != first.width || c.height != first.height)
    {
        return Err(IoError::Invalid {
            path: "<memory>".into(),
            what: "cameras of one rig must share image dimensions".into(),
        });
    }
    let shared = CircularShared {
        f_x: first.f_x,
        f_y_common: rig.common_f_y,
        o_y: first.o_y,
        r: rig.circle.r,
        x_cen: rig.circle.x_cen,
        z_cen: rig.circle.z_cen,
        camera_height: rig.camera_height,
        width: first.width,
        height: first.height,
        z_near,
        z_far,
        ox_policy: rig.ox_policy,
    };
    let cameras = rig
        .full_params
        .iter()
        .zip(&rig.cameras)
        .map(|(full, c)| CircularRecord { id: full.id, o_x: c.o_x, alpha: c.alpha })
        .collect();
    Ok(CircularCameraFile { format_version: 1, shared, cameras })
}

/// Rebuilds the rectified rig (reduced and full parameters) from a circular
/// camera file.
pub fn rig_from_circular_file(file: &CircularCameraFile) -> Result<RectifiedRig<f64>, IoError> {
    if file.format_version != 1 {
        return Err(IoError::Invalid {
            path: "<memory>".into(),
            what: format!("unsupported format_version {}", file.format_version),
        });
    }
    let s = &file.shared;
    let circle = Circle { x_cen: s.x_cen, z_cen: s.z_cen, r: s.r };
    let mut cameras = Vec::with_capacity(file.cameras.len());
    let mut full_params = Vec::with_capacity(file.cameras.len());
    for rec in &file.cameras {
        let c = CircularCameraParams {
            f_x: s.f_x,
            o_x: rec.o_x,
            o_y: s.o_y,
            alpha: rec.alpha,
            r: s.r,
            width: s.width,
            height: s.height,
        };
        full_params.push(circular_to_full(rec.id, &c, &circle, s.f_y_common, s.camera_height));
        cameras.push(c);
    }
    Ok(RectifiedRig {
        circle,
        cameras,
        full_params,
        common_f_y: s.f_y_common,
        camera_height: s.camera_height,
        ox_policy: s.ox_policy,
    })
}

pub fn save_circular_file(file: &CircularCameraFile, path: &Path) -> Result<(), IoError> {
    save_json(file, path)
}

pub fn load_circular_file(path: &Path) -> Result<CircularCameraFile, IoError> {
    load_json(path)
}

// ---------------------------------------------------------------------------
// Raw video planes
// ---------------------------------------------------------------------------

type YuvFrame = (Plane<u8>, Plane<u8>, Plane<u8>);

fn frame_count(path: &Path, file_len: u64, frame_bytes: u64) -> Result<u64, IoError> {
    let remainder = file_len % frame_bytes;
    if remainder != 0 {
        return Err(IoError::TruncatedFile {
            path: path.display().to_string(),
            file_len,
            frame_bytes,
            remainder,
            offset: file_len - remainder,
        });
    }
    Ok(file_len / frame_bytes)
}

/// Reads planar 4:2:0 8-bit frames (Y then U then V, frame-sequential).
pub fn read_yuv_frames(path: &Path, width: usize, height: usize) -> Result<Vec<YuvFrame>, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let luma_len = width * height;
    let chroma_len = luma_len / 4;
    let frame_bytes = (luma_len + 2 * chroma_len) as u64;
    let n = frame_count(path, bytes.len() as u64, frame_bytes)?;
    let mut frames = Vec::with_capacity(n as usize);
    for f in 0..n as usize {
        let base = f * frame_bytes as usize;
        let y = Plane::from_vec(width, height, bytes[base..base + luma_len].to_vec()).unwrap();
        let u = Plane::from_vec(
            width / 2,
            height / 2,
            bytes[base + luma_len..base + luma_len + chroma_len].to_vec(),
        )
        .unwrap();
        let v = Plane::from_vec(
            width / 2,
            height / 2,
            bytes[base + luma_len + chroma_len..base + frame_bytes as usize].to_vec(),
        )
        .unwrap();
        frames.push((y, u, v));
    }
    Ok(frames)
}

/// Appends one 4:2:0 frame to `out`.
pub fn append_yuv_frame(out: &mut Vec<u8>, y: &Plane<u8>, u: &Plane<u8>, v: &Plane<u8>) {
    out.extend_from_slice(y.data());
    out.extend_from_slice(u.data());
    out.extend_from_slice(v.data());
}

pub fn write_yuv_frames(path: &Path, frames: &[YuvFrame]) -> Result<(), IoError> {
    let mut bytes = Vec::new();
    for (y, u, v) in frames {
        append_yuv_frame(&mut bytes, y, u, v);
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Reads frame-sequential 16-bit little-endian depth planes.
pub fn read_depth_frames(
    path: &Path,
    width: usize,
    height: usize,
) -> Result<Vec<Plane<u16>>, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let frame_bytes = (width * height * 2) as u64;
    let n = frame_count(path, bytes.len() as u64, frame_bytes)?;
    let mut frames = Vec::with_capacity(n as usize);
    for f in 0..n as usize {
        let base = f * frame_bytes as usize;
        let data: Vec<u16> = bytes[base..base + frame_bytes as usize]
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        frames.push(Plane::from_vec(width, height, data).unwrap());
    }
    Ok(frames)
}

pub fn write_depth_frames(path: &Path, frames: &[Plane<u16>]) -> Result<(), IoError> {
    let mut bytes = Vec::new();
    for frame in frames {
        for &v in frame.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(io_err(path))
}
