//! Camera trajectory geometry: motion direction changes, viewpoint geodesics,
//! positional jitter, start-to-end direction and the sphere/jitter binning used
//! by trajectory-aware sampling.
//!
//! Trajectory artifact files are plain text:
//!
//! ```text
//! # clipcurate-trajectory v1 frames=<N> fps=<F>
//! <t> <x> <y> <z> <qw> <qx> <qy> <qz>
//! ...
//! ```
//!
//! one row per frame, whitespace separated, timestamps in seconds.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Steps shorter than this carry no motion direction.
pub const MOTION_EPSILON: f64 = 1e-6;

/// Frames per jitter window.
pub const JITTER_WINDOW: usize = 30;

pub type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Quat {
        let n = norm(axis);
        let (s, c) = (angle_rad / 2.0).sin_cos();
        Quat {
            w: c,
            x: s * axis[0] / n,
            y: s * axis[1] / n,
            z: s * axis[2] / n,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        Quat {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn dot(&self, o: &Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Hamilton product `self * o`.
    pub fn mul(&self, o: &Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn neg(&self) -> Quat {
        Quat {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Rotates a vector by this (unit) quaternion.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let u = [self.x, self.y, self.z];
        let t = cross(u, v);
        let t = [2.0 * t[0], 2.0 * t[1], 2.0 * t[2]];
        let c = cross(u, t);
        [
            v[0] + self.w * t[0] + c[0],
            v[1] + self.w * t[1] + c[1],
            v[2] + self.w * t[2] + c[2],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub t_s: f64,
    pub position: Vec3,
    pub orientation: Quat,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("timestamps not strictly increasing at frame {0}")]
    Timestamps(usize),
    #[error("orientation at frame {frame} has norm {norm}, not unit within 1e-6")]
    NonUnit { frame: usize, norm: f64 },
    #[error("non-finite value at frame {0}")]
    NonFinite(usize),
    #[error("trajectory file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Per-frame camera poses with strictly increasing timestamps.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CameraTrajectory {
    frames: Vec<Pose>,
}

impl CameraTrajectory {
    pub fn new(frames: Vec<Pose>) -> Result<Self, TrajectoryError> {
        for (i, f) in frames.iter().enumerate() {
            let vals = [
                f.t_s,
                f.position[0],
                f.position[1],
                f.position[2],
                f.orientation.w,
                f.orientation.x,
                f.orientation.y,
                f.orientation.z,
            ];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(TrajectoryError::NonFinite(i));
            }
            let n = f.orientation.norm();
            if (n - 1.0).abs() > 1e-6 {
                return Err(TrajectoryError::NonUnit { frame: i, norm: n });
            }
            if i > 0 && f.t_s <= frames[i - 1].t_s {
                return Err(TrajectoryError::Timestamps(i));
            }
        }
        Ok(CameraTrajectory { frames })
    }

    pub fn frames(&self) -> &[Pose] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.frames.iter().map(|f| f.position)
    }

    /// Displacement vector of step `i -> i+1`.
    pub fn step(&self, i: usize) -> Vec3 {
        sub(self.frames[i + 1].position, self.frames[i].position)
    }

    pub fn fps_estimate(&self) -> f64 {
        match self.frames.len() {
            0 | 1 => 0.0,
            n => (n - 1) as f64 / (self.frames[n - 1].t_s - self.frames[0].t_s),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# clipcurate-trajectory v1 frames={} fps={}\n",
            self.frames.len(),
            self.fps_estimate()
        );
        for f in &self.frames {
            let q = f.orientation;
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {}",
                f.t_s, f.position[0], f.position[1], f.position[2], q.w, q.x, q.y, q.z
            );
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, TrajectoryError> {
        let err = |line: usize, message: String| TrajectoryError::Parse { line, message };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let rest = header
            .strip_prefix("# clipcurate-trajectory v1")
            .ok_or_else(|| err(1, format!("bad header {header:?}")))?;
        let mut declared = None;
        for field in rest.split_whitespace() {
            if let Some(v) = field.strip_prefix("frames=") {
                declared = Some(v.parse::<usize>().map_err(|e| err(1, e.to_string()))?);
            } else if let Some(v) = field.strip_prefix("fps=") {
                v.parse::<f64>().map_err(|e| err(1, e.to_string()))?;
            }
        }
        let declared = declared.ok_or_else(|| err(1, "header lacks frames=".into()))?;
        let mut frames = Vec::with_capacity(declared);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e: std::num::ParseFloatError| err(idx + 1, e.to_string()))?;
            if vals.len() != 8 {
                return Err(err(idx + 1, format!("expected 8 columns, got {}", vals.len())));
            }
            frames.push(Pose {
                t_s: vals[0],
                position: [vals[1], vals[2], vals[3]],
                orientation: Quat { w: vals[4], x: vals[5], y: vals[6], z: vals[7] },
            });
        }
        if frames.len() != declared {
            return Err(err(1, format!("header declares {declared} frames, found {}", frames.len())));
        }
        CameraTrajectory::new(frames)
    }
}

/// Angle in degrees between steps `i-1 -> i` and `i -> i+1`. `None` when
/// either step is shorter than [`MOTION_EPSILON`] or `i` is an end frame.
pub fn direction_change(traj: &CameraTrajectory, i: usize) -> Option<f64> {
    if i == 0 || i + 1 >= traj.len() {
        return None;
    }
    let a = traj.step(i - 1);
    let b = traj.step(i);
    if norm(a) <= MOTION_EPSILON || norm(b) <= MOTION_EPSILON {
        return None;
    }
    Some(angle_between(a, b))
}

/// Angle between two non-zero vectors in degrees, via atan2 for accuracy at
/// 0 and 180.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b)).to_degrees()
}

/// Geodesic rotation angle between two orientations in degrees. Inputs that
/// are not unit length are normalized first.
pub fn viewpoint_shift(q1: &Quat, q2: &Quat) -> f64 {
    let (mut a, mut b) = (*q1, *q2);
    for q in [&mut a, &mut b] {
        let n = q.norm();
        if (n - 1.0).abs() > 1e-6 {
            log::warn!("normalizing non-unit quaternion (norm {n})");
            *q = q.normalized();
        }
    }
    // Relative rotation conj(a) * b. The vector part is written as
    // antisymmetric pairs so that it is exactly zero for b = a and b = -a.
    let w = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    let v = [
        (a.w * b.x - a.x * b.w) + (a.z * b.y - a.y * b.z),
        (a.w * b.y - a.y * b.w) + (a.x * b.z - a.z * b.x),
        (a.w * b.z - a.z * b.w) + (a.y * b.x - a.x * b.y),
    ];
    2.0 * norm(v).atan2(w.abs()).to_degrees()
}

/// Mean over disjoint windows of the Euclidean norm of per-axis population
/// variance. `None` when there are fewer than `window` frames.
pub fn jitter(traj: &CameraTrajectory, window: usize) -> Option<f64> {
    if window == 0 || traj.len() < window {
        return None;
    }
    let windows: Vec<f64> = traj
        .frames()
        .chunks_exact(window)
        .map(|w| window_jitter(w))
        .collect();
    Some(windows.iter().sum::<f64>() / windows.len() as f64)
}

fn window_jitter(frames: &[Pose]) -> f64 {
    // Offsets from the first frame make the result independent of where the
    // trajectory sits in space.
    let origin = frames[0].position;
    let n = frames.len() as f64;
    let mut var = [0.0; 3];
    for (axis, v) in var.iter_mut().enumerate() {
        let mean = frames.iter().map(|f| f.position[axis] - origin[axis]).sum::<f64>() / n;
        *v = frames
            .iter()
            .map(|f| {
                let d = (f.position[axis] - origin[axis]) - mean;
                d * d
            })
            .sum::<f64>()
            / n;
    }
    norm(var)
}

/// Unit vector from the first to the last position; `None` for empty or
/// closed trajectories.
pub fn direction_vector(traj: &CameraTrajectory) -> Option<Vec3> {
    let first = traj.frames().first()?.position;
    let last = traj.frames().last()?.position;
    let d = sub(last, first);
    let n = norm(d);
    (n > MOTION_EPSILON).then(|| [d[0] / n, d[1] / n, d[2] / n])
}

/// Bin index a value falls in, treating values within 1e-6 of a bin edge as
/// lying on the edge.
fn grid_index(value: f64, width: f64, bins: usize) -> usize {
    let mut t = value / width;
    if (t - t.round()).abs() < 1e-6 {
        t = t.round();
    }
    (t.floor().max(0.0) as usize).min(bins)
}

/// Equiangular latitude/longitude cell of a direction. Row 0 is the +z cap,
/// column 0 starts at +x and azimuth increases towards +y. `None` (no
/// direction) maps to the reserved bin `azimuth_bins * elevation_bins`.
pub fn sphere_bin(direction: Option<Vec3>, azimuth_bins: usize, elevation_bins: usize) -> usize {
    let Some(d) = direction else {
        return azimuth_bins * elevation_bins;
    };
    let polar = d[2].clamp(-1.0, 1.0).acos();
    let row = grid_index(polar, PI / elevation_bins as f64, elevation_bins).min(elevation_bins - 1);
    let mut azimuth = d[1].atan2(d[0]);
    if azimuth < 0.0 {
        azimuth += 2.0 * PI;
    }
    let col = grid_index(azimuth, 2.0 * PI / azimuth_bins as f64, azimuth_bins) % azimuth_bins;
    row * azimuth_bins + col
}

/// Number of edges `<=` the value: 0 below the first edge, `edges.len()` at
/// or above the last.
pub fn jitter_bin(jitter: f64, edges: &[f64]) -> usize {
    edges.partition_point(|&e| e <= jitter)
}

/// Cut points splitting `values` into `bins` equally populated groups
/// (deciles for `bins = 10`). Duplicate cut points are merged.
pub fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    if values.is_empty() || bins < 2 {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..bins)
        .map(|k| {
            // linear interpolation between closest ranks
            let pos = k as f64 / bins as f64 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        })
        .collect();
    edges.dedup();
    edges
}

/// Direction and jitter of one clip's trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub clip_id: String,
    /// `None` when the camera ends where it started.
    pub direction: Option<Vec3>,
    /// `None` when the trajectory is shorter than one jitter window.
    pub jitter: Option<f64>,
}

impl TrajectorySummary {
    pub fn compute(clip_id: &str, traj: &CameraTrajectory, jitter_window: usize) -> Self {
        TrajectorySummary {
            clip_id: clip_id.to_string(),
            direction: direction_vector(traj),
            jitter: jitter(traj, jitter_window),
        }
    }
}

/// Sphere/jitter discretization parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBinning {
    pub azimuth_bins: usize,
    pub elevation_bins: usize,
    pub jitter_edges: Vec<f64>,
}

impl TrajectoryBinning {
    /// Bin pair of a summary. A missing jitter goes to the reserved bin
    /// `jitter_edges.len() + 1`.
    pub fn bins(&self, s: &TrajectorySummary) -> (usize, usize) {
        let d = sphere_bin(s.direction, self.azimuth_bins, self.elevation_bins);
        let j = match s.jitter {
            Some(j) => jitter_bin(j, &self.jitter_edges),
            None => self.jitter_edges.len() + 1,
        };
        (d, j)
    }
}
