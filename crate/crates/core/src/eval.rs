//! Evaluation harness: prediction quality per view pair, projection-kernel
//! timing, Bjontegaard delta-rate between RD curves, and the end-to-end
//! experiment runner.
//!
//! Quality is reported as prediction-residual PSNR of warped luma against the
//! rectified ground truth; a real rate-distortion comparison would need an
//! entropy codec, which is out of scope, and every report header says so.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{project_point, CameraParams, ImagePoint};
use crate::circular::{disparity_predict, project_circular, CircularPair, LinearPair};
use crate::dibr::{fill_holes, warp_view, warp_view_with, ViewFrame, WarpedFrame};
use crate::rectify::{rectify_rig, OxPolicy};
use crate::synth::{render, synth_rig, RigSpec, SceneSpec, SplitMix64};

/// Stated in every CSV/JSON report header.
pub const PROXY_NOTE: &str = "quality proxy: prediction-residual PSNR of warped luma vs rectified ground truth over valid pixels; bitrate-based comparisons require an entropy codec and are out of scope";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictor {predictor} is missing its required geometry: {what}")]
    PredictorMismatch { predictor: &'static str, what: &'static str },
    #[error("RD curves do not overlap in PSNR")]
    NoOverlap,
    #[error("polynomial fit matrix is singular")]
    IllConditioned,
    #[error("RD curve invalid: {0}")]
    BadCurve(&'static str),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("report line {line}: {what}")]
    BadReport { line: usize, what: String },
}

fn stage<E>(name: &'static str) -> impl FnOnce(E) -> EvalError
where
    E: std::error::Error + Send + Sync + 'static,
{
    move |source| EvalError::Stage { stage: name, source: Box::new(source) }
}

// ---------------------------------------------------------------------------
// Prediction quality
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    /// Classic rectified-linear disparity shift.
    Disparity,
    /// Simplified projection for circularly rectified pairs.
    Circular,
    /// Full perspective correspondence (4x4 matrices).
    FullProjection,
}

impl Predictor {
    pub fn as_str(self) -> &'static str {
        match self {
            Predictor::Disparity => "disparity",
            Predictor::Circular => "circular",
            Predictor::FullProjection => "full_projection",
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Geometry available for one (source, destination) view pair; each predictor
/// requires its own piece.
#[derive(Clone, Debug)]
pub struct PairGeometry {
    pub full: Option<(CameraParams<f64>, CameraParams<f64>)>,
    pub circular: Option<CircularPair<f64>>,
    pub linear: Option<LinearPair<f64>>,
}

/// Measured outcome of predicting one view from another.
#[derive(Clone, Copy, Debug)]
pub struct PredictionOutcome {
    pub sse: u64,
    pub psnr_db: f64,
    pub hole_fraction: f64,
    pub ns_per_point: f64,
    pub n_pixels: u64,
}

/// PSNR of an 8-bit plane from its summed squared error over `n` pixels.
pub fn psnr_from_sse(sse: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    if sse == 0 {
        return f64::INFINITY;
    }
    10.0 * ((255.0 * 255.0 * n as f64) / sse as f64).log10()
}

fn masked_sse(pred: &WarpedFrame, truth: &ViewFrame) -> (u64, u64) {
    let (w, h) = (truth.width(), truth.height());
    let mut sse = 0u64;
    let mut n = 0u64;
    for y in 0..h {
        for x in 0..w {
            if pred.mask.get(x, y) {
                let d = pred.frame.luma.get(x, y) as i64 - truth.luma.get(x, y) as i64;
                sse += (d * d) as u64;
                n += 1;
            }
        }
    }
    (sse, n)
}

type PointMapper = Box<dyn Fn(&ImagePoint<f64>) -> Option<ImagePoint<f64>>>;

/// Warps `src` into the destination view with the named predictor's geometry
/// and scores it against `truth` over the valid mask.
pub fn predict_view(
    src: &ViewFrame,
    truth: &ViewFrame,
    geom: &PairGeometry,
    predictor: Predictor,
) -> Result<PredictionOutcome, EvalError> {
    let mapper: PointMapper = match predictor {
        Predictor::Disparity => {
            let pair = geom.linear.ok_or(EvalError::PredictorMismatch {
                predictor: "disparity",
                what: "linear pair (f_x, t_x)",
            })?;
            Box::new(move |p| Some(disparity_predict(&pair, p)))
        }
        Predictor::Circular => {
            let pair = geom.circular.ok_or(EvalError::PredictorMismatch {
                predictor: "circular",
                what: "circular camera pair",
            })?;
            Box::new(move |p| project_circular(&pair, p).ok())
        }
        Predictor::FullProjection => {
            let (a, b) = geom.full.ok_or(EvalError::PredictorMismatch {
                predictor: "full_projection",
                what: "full camera parameters",
            })?;
            let projector =
                crate::camera::PointProjector::new(&a, &b).map_err(stage("predict"))?;
            Box::new(move |p| projector.project(p).ok())
        }
    };

    // Per-point projection cost, measured over every source sample with the
    // results consumed; the warp itself is not timed.
    let (w, h) = (src.width(), src.height());
    let n_points = (w * h) as u64;
    let start = Instant::now();
    let mut sink = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            let z = crate::dibr::depth_sample_to_z(src.depth.get(x, y), src.z_near, src.z_far);
            if let Some(q) = mapper(&ImagePoint::new(x as f64, y as f64, z)) {
                sink += q.x;
            }
        }
    }
    std::hint::black_box(sink);
    let ns_per_point = start.elapsed().as_nanos() as f64 / n_points as f64;

    let warped = warp_view_with(src, |p| mapper(p));
    let (sse, n) = masked_sse(&warped, truth);
    Ok(PredictionOutcome {
        sse,
        psnr_db: psnr_from_sse(sse, n),
        hole_fraction: warped.hole_fraction,
        ns_per_point,
        n_pixels: n,
    })
}

// ---------------------------------------------------------------------------
// Bjontegaard delta rate
// ---------------------------------------------------------------------------

/// Rate-distortion curve: at least four (bitrate, PSNR) points with strictly
/// increasing bitrate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    points: Vec<(f64, f64)>,
}

impl RdCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, EvalError> {
        if points.len() < 4 {
            return Err(EvalError::BadCurve("need at least 4 points"));
        }
        if points.iter().any(|(r, p)| !r.is_finite() || !p.is_finite() || *r <= 0.0) {
            return Err(EvalError::BadCurve("bitrates must be positive and finite"));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(EvalError::BadCurve("bitrate must be strictly increasing"));
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn psnr_range(&self) -> (f64, f64) {
        let lo = self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Cubic least-squares fit of log10(rate) as a function of (psnr - shift).
/// Returns coefficients c0..c3.
fn fit_log_rate(curve: &RdCurve, shift: f64) -> Result<[f64; 4], EvalError> {
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    for &(rate, psnr) in curve.points() {
        let t = psnr - shift;
        let basis = [1.0, t, t * t, t * t * t];
        let y = rate.log10();
        for i in 0..4 {
            for j in 0..4 {
                ata[i][j] += basis[i] * basis[j];
            }
            atb[i] += basis[i] * y;
        }
    }
    let inv = crate::math::Mat4(ata).inverse().ok_or(EvalError::IllConditioned)?;
    let c = inv.mul_vec(&atb);
    if c.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::IllConditioned);
    }
    Ok(c)
}

/// Antiderivative of the cubic at `t`.
fn cubic_integral(c: &[f64; 4], t: f64) -> f64 {
    ((c[3] / 4.0 * t + c[2] / 3.0) * t + c[1] / 2.0) * t * t + c[0] * t
}

/// Average bitrate difference of `test` against `anchor` in percent
/// (negative means `test` needs less rate for the same PSNR).
///
/// Cubic fit of log10(rate) vs PSNR per curve, exact polynomial integration
/// of the difference over the shared PSNR interval.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64, EvalError> {
    let (a_lo, a_hi) = anchor.psnr_range();
    let (t_lo, t_hi) = test.psnr_range();
    let lo = a_lo.max(t_lo);
    let hi = a_hi.min(t_hi);
    if !(hi > lo) {
        return Err(EvalError::NoOverlap);
    }
    // A common shift keeps the Vandermonde system well scaled without
    // changing the integral of the difference.
    let shift = 0.5 * (lo + hi);
    let ca = fit_log_rate(anchor, shift)?;
    let ct = fit_log_rate(test, shift)?;
    let span = hi - lo;
    let int_a = cubic_integral(&ca, hi - shift) - cubic_integral(&ca, lo - shift);
    let int_t = cubic_integral(&ct, hi - shift) - cubic_integral(&ct, lo - shift);
    let avg_diff = (int_t - int_a) / span;
    Ok((10.0f64.powf(avg_diff) - 1.0) * 100.0)
}

// ---------------------------------------------------------------------------
// Projection kernel timing
// ---------------------------------------------------------------------------

/// Median per-point timings of the two projection paths.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TimingArms {
    pub full_ns_per_point: f64,
    pub circular_ns_per_point: f64,
    /// full / circular.
    pub speedup_ratio: f64,
    /// (circular/full - 1) * 100; negative means the circular path is
    /// faster.
    pub time_reduction_percent: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TimingRecord {
    pub n_points: usize,
    pub repetitions: usize,
    /// Empty when `n_points` is zero.
    pub arms: Option<TimingArms>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times `project_circular` against the full `project_point` path on
/// identical, seeded inputs. Single-threaded; one warm-up pass per arm;
/// median over `repetitions`; results are consumed to defeat dead-code
/// elimination.
pub fn benchmark_projection(
    full_pair: (&CameraParams<f64>, &CameraParams<f64>),
    circ_pair: &CircularPair<f64>,
    n_points: usize,
    repetitions: usize,
    seed: u64,
) -> TimingRecord {
    if n_points == 0 {
        return TimingRecord { n_points, repetitions, arms: None };
    }
    let reps = repetitions.max(1);
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(n_points);
    let r = circ_pair.radius();
    let (w, h) = (full_pair.0.width as f64, full_pair.0.height as f64);
    let mut attempts = 0usize;
    while points.len() < n_points {
        attempts += 1;
        assert!(
            attempts <= n_points.saturating_mul(1000),
            "camera pair rejects almost every sample; nothing to benchmark"
        );
        let p = ImagePoint::new(
            rng.next_f64() * w,
            rng.next_f64() * h,
            (0.4 + rng.next_f64()) * r,
        );
        // Keep only points both paths accept, so the arms do identical work.
        if project_circular(circ_pair, &p).is_ok()
            && project_point(full_pair.0, full_pair.1, &p).is_ok()
        {
            points.push(p);
        }
    }

    let time_arm = |f: &dyn Fn(&ImagePoint<f64>) -> f64| -> f64 {
        let start = Instant::now();
        let mut sink = 0.0;
        for p in &points {
            sink += f(p);
        }
        std::hint::black_box(sink);
        start.elapsed().as_nanos() as f64 / n_points as f64
    };

    let full_arm = |p: &ImagePoint<f64>| match project_point(full_pair.0, full_pair.1, p) {
        Ok(q) => q.x + q.z,
        Err(_) => 0.0,
    };
    let circ_arm = |p: &ImagePoint<f64>| match project_circular(circ_pair, p) {
        Ok(q) => q.x + q.z,
        Err(_) => 0.0,
    };

    // Warm-up pass, excluded from the medians.
    time_arm(&full_arm);
    time_arm(&circ_arm);

    let mut full_times = Vec::with_capacity(reps);
    let mut circ_times = Vec::with_capacity(reps);
    for _ in 0..reps {
        full_times.push(time_arm(&full_arm));
        circ_times.push(time_arm(&circ_arm));
    }
    let full_ns = median(full_times);
    let circ_ns = median(circ_times);
    TimingRecord {
        n_points,
        repetitions: reps,
        arms: Some(TimingArms {
            full_ns_per_point: full_ns,
            circular_ns_per_point: circ_ns,
            speedup_ratio: full_ns / circ_ns,
            time_reduction_percent: (circ_ns / full_ns - 1.0) * 100.0,
        }),
    }
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

/// Where the experiment's views come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSource {
    Synth { rig: RigSpec, scene: SceneSpec },
    External { cameras: String, views: Vec<ExternalView> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalView {
    pub id: u32,
    pub texture: String,
    pub depth: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: ExperimentSource,
    /// (source view id, destination view id) pairs to evaluate.
    pub pairs: Vec<(u32, u32)>,
    pub predictors: Vec<Predictor>,
    #[serde(default)]
    pub ox_policy: OxPolicy,
}

/// One report row; the CSV columns, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sequence: String,
    pub pair: String,
    pub predictor: Predictor,
    pub sse: u64,
    /// Infinite when the prediction is exact; serialized as the string
    /// "inf".
    #[serde(with = "psnr_serde")]
    pub psnr_db: f64,
    pub hole_fraction: f64,
    pub ns_per_point: f64,
}

mod psnr_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub proxy_note: String,
    pub config: ExperimentConfig,
    pub records: Vec<PredictionRecord>,
}

impl Report {
    /// Fixed CSV layout: a `#` note line, the header, one line per record.
    /// Numeric fields use shortest-round-trip formatting, so parsing the file
    /// back reproduces the records exactly.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# {}\n", self.proxy_note);
        out.push_str("sequence,pair,predictor,sse,psnr_db,hole_fraction,ns_per_point\n");
        for r in &self.records {
            let psnr = if r.psnr_db.is_infinite() {
                "inf".to_string()
            } else {
                format!("{}", r.psnr_db)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.sequence, r.pair, r.predictor, r.sse, psnr, r.hole_fraction, r.ns_per_point
            ));
        }
        out
    }

    pub fn records_from_csv(text: &str) -> Result<Vec<PredictionRecord>, EvalError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("sequence,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(EvalError::BadReport {
                    line: i + 1,
                    what: format!("expected 7 fields, got {}", fields.len()),
                });
            }
            let bad = |what: &str| EvalError::BadReport { line: i + 1, what: what.to_string() };
            let predictor = match fields[2] {
                "disparity" => Predictor::Disparity,
                "circular" => Predictor::Circular,
                "full_projection" => Predictor::FullProjection,
                other => return Err(bad(&format!("unknown predictor {other:?}"))),
            };
            let psnr_db = if fields[4] == "inf" {
                f64::INFINITY
            } else {
                fields[4].parse().map_err(|_| bad("bad psnr"))?
            };
            records.push(PredictionRecord {
                sequence: fields[0].to_string(),
                pair: fields[1].to_string(),
                predictor,
                sse: fields[3].parse().map_err(|_| bad("bad sse"))?,
                psnr_db,
                hole_fraction: fields[5].parse().map_err(|_| bad("bad hole_fraction"))?,
                ns_per_point: fields[6].parse().map_err(|_| bad("bad ns_per_point"))?,
            });
        }
        Ok(records)
    }
}

fn load_external_views(
    cameras_path: &str,
    views: &[ExternalView],
) -> Result<(Vec<CameraParams<f64>>, Vec<ViewFrame>), EvalError> {
    let loaded = crate::io::load_camera_file(Path::new(cameras_path)).map_err(stage("load-cameras"))?;
    let mut cams = Vec::new();
    let mut frames = Vec::new();
    for v in views {
        let cam = loaded
            .cameras
            .iter()
            .find(|c| c.params.id == v.id)
            .ok_or_else(|| EvalError::Stage {
                stage: "load-views",
                source: format!("view {} not present in {}", v.id, cameras_path).into(),
            })?;
        let (w, h) = (cam.params.width as usize, cam.params.height as usize);
        let textures = crate::io::read_yuv_frames(Path::new(&v.texture), w, h)
            .map_err(stage("load-views"))?;
        let depths = crate::io::read_depth_frames(Path::new(&v.depth), w, h)
            .map_err(stage("load-views"))?;
        let (Some(t), Some(d)) = (textures.into_iter().next(), depths.into_iter().next()) else {
            return Err(EvalError::Stage {
                stage: "load-views",
                source: format!("view {}: empty texture or depth file", v.id).into(),
            });
        };
        frames.push(
            ViewFrame::new(t.0, t.1, t.2, d, cam.z_near, cam.z_far).map_err(stage("load-views"))?,
        );
        cams.push(cam.params);
    }
    Ok((cams, frames))
}

/// The lateral baseline a linear-rig codec would assume for this pair:
/// destination camera offset expressed in the source camera frame.
fn linear_t_x(src: &CameraParams<f64>, dst: &CameraParams<f64>) -> f64 {
    let delta = dst.extr.camera_center().sub(&src.extr.camera_center());
    -src.extr.rotation().mul_vec(&delta).x()
}

/// Runs the configured experiment: build or load the views, rectify the rig,
/// warp every view into its rectified camera (hole-filled), then score every
/// (pair, predictor) combination. Deterministic except for the timing field.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, EvalError> {
    let (cams, originals, z_range) = match &config.source {
        ExperimentSource::Synth { rig, scene } => {
            let cams = synth_rig(rig).map_err(stage("synth-rig"))?;
            let z = (rig.intrinsics.z_near, rig.intrinsics.z_far);
            let frames: Vec<ViewFrame> =
                cams.iter().map(|c| render(scene, c, z.0, z.1)).collect();
            (cams, frames, z)
        }
        ExperimentSource::External { cameras, views } => {
            let (cams, frames) = load_external_views(cameras, views)?;
            let z = (frames[0].z_near, frames[0].z_far);
            (cams, frames, z)
        }
    };
    let _ = z_range;

    let rect = rectify_rig(&cams, config.ox_policy).map_err(stage("rectify"))?;

    // Pre-processing: every view is warped from its original camera into its
    // rectified counterpart and hole-filled; predictors then operate purely
    // in the rectified domain.
    let mut rectified_frames = Vec::with_capacity(originals.len());
    for (frame, (orig, rect_cam)) in originals
        .iter()
        .zip(cams.iter().zip(&rect.full_params))
    {
        let warped = warp_view(frame, orig, rect_cam).map_err(stage("preprocess-warp"))?;
        rectified_frames.push(fill_holes(&warped).map_err(stage("preprocess-warp"))?);
    }

    let index_of = |id: u32| -> Result<usize, EvalError> {
        cams.iter().position(|c| c.id == id).ok_or(EvalError::Stage {
            stage: "predict",
            source: format!("pair references unknown view id {id}").into(),
        })
    };

    let mut records = Vec::new();
    for &(src_id, dst_id) in &config.pairs {
        let (si, di) = (index_of(src_id)?, index_of(dst_id)?);
        let full_pair = (rect.full_params[si], rect.full_params[di]);
        let geom = PairGeometry {
            circular: CircularPair::new(&rect.cameras[si], &rect.cameras[di]).ok(),
            linear: Some(LinearPair {
                f_x: rect.cameras[si].f_x,
                t_x: linear_t_x(&full_pair.0, &full_pair.1),
            }),
            full: Some(full_pair),
        };
        for &predictor in &config.predictors {
            let outcome =
                predict_view(&rectified_frames[si], &rectified_frames[di], &geom, predictor)?;
            records.push(PredictionRecord {
                sequence: config.name.clone(),
                pair: format!("{src_id}->{dst_id}"),
                predictor,
                sse: outcome.sse,
                psnr_db: outcome.psnr_db,
                hole_fraction: outcome.hole_fraction,
                ns_per_point: outcome.ns_per_point,
            });
        }
    }

    Ok(Report {
        proxy_note: PROXY_NOTE.to_string(),
        config: config.clone(),
        records,
    })
}

/// Writes the CSV and a JSON mirror (same stem, `.json` extension).
pub fn write_report(report: &Report, csv_path: &Path) -> Result<(), EvalError> {
    std::fs::write(csv_path, report.to_csv()).map_err(stage("write-report"))?;
    let json_path = csv_path.with_extension("json");
    let text = serde_json::to_string_pretty(report).map_err(stage("write-report"))?;
    std::fs::write(json_path, text).map_err(stage("write-report"))?;
    Ok(())
}

/// Strips the timing column: the part of a report CSV that must be
/// bit-identical across runs.
pub fn csv_without_timing(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            if line.starts_with('#') || line.is_empty() {
                line.to_string()
            } else {
                match line.rsplit_once(',') {
                    Some((rest, _timing)) => rest.to_string(),
                    None => line.to_string(),
                }
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
