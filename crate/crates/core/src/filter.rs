//! Signal-based clip filters: luminance runs, technical-quality percentile,
//! burned-in subtitles and implausible camera motion.

use std::cmp::Ordering;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::manifest::{ClipStatus, Manifest, RemovalReason, Source};
use crate::trajectory::{direction_change, viewpoint_shift, norm, CameraTrajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub luma_low: f64,
    pub luma_high: f64,
    /// A clip fails when a dark or bright run is strictly longer than this.
    pub luma_run_len: usize,
    pub quality_drop_frac: f64,
    pub subtitle_min_visible_s: f64,
    /// Fraction of the frame height, measured from the bottom, searched for subtitles.
    pub subtitle_region_frac: f64,
    pub reversal_angle_deg: f64,
    pub reversal_window_s: f64,
    pub reversal_min_count: usize,
    pub viewpoint_shift_deg: f64,
    pub displacement_factor: f64,
    pub displacement_window_frames: usize,
    /// Apply the luminance filter to real-world videos.
    pub luma_real: bool,
    /// Apply the luminance filter to game captures.
    pub luma_game: bool,
    pub trajectory_scope: TrajectoryScope,
}

/// Which clips the trajectory filter judges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryScope {
    /// Every clip; a pose is fetched for each.
    #[default]
    All,
    /// Only clips that already carry a `trajectory_ref`.
    Annotated,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            luma_low: 16.0,
            luma_high: 235.0,
            luma_run_len: 15,
            quality_drop_frac: 0.10,
            subtitle_min_visible_s: 0.75,
            subtitle_region_frac: 1.0 / 3.0,
            reversal_angle_deg: 150.0,
            reversal_window_s: 10.0,
            reversal_min_count: 2,
            viewpoint_shift_deg: 60.0,
            displacement_factor: 5.0,
            displacement_window_frames: 30,
            luma_real: true,
            luma_game: true,
            trajectory_scope: TrajectoryScope::All,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Brightness {
    Dark,
    Normal,
    Bright,
}

/// True when some run of more than `luma_run_len` consecutive frames is
/// entirely below `luma_low` or entirely above `luma_high`.
pub fn luminance_fails(luma: &[f32], cfg: &FilterConfig) -> bool {
    let class = |v: f32| {
        let v = v as f64;
        if v < cfg.luma_low {
            Brightness::Dark
        } else if v > cfg.luma_high {
            Brightness::Bright
        } else {
            Brightness::Normal
        }
    };
    let mut run = 0usize;
    let mut prev = Brightness::Normal;
    for &v in luma {
        let c = class(v);
        run = if c != Brightness::Normal && c == prev { run + 1 } else { usize::from(c != Brightness::Normal) };
        prev = c;
        if run > cfg.luma_run_len {
            return true;
        }
    }
    false
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PercentileOutcome {
    /// Clip ids removed, lowest score first.
    pub removed: Vec<String>,
    /// Clips without a technical score; left out of the ranking.
    pub unscored: Vec<String>,
}

/// Removes the `floor(drop_frac * N)` lowest-scoring clips, N counting scored
/// clips only. Ties go to the lexicographically smaller clip id.
pub fn quality_percentile(scores: &[(&str, Option<f64>)], drop_frac: f64) -> PercentileOutcome {
    let mut ranked: Vec<(&str, f64)> = Vec::with_capacity(scores.len());
    let mut unscored = Vec::new();
    for &(id, s) in scores {
        match s {
            Some(v) if v.is_finite() => ranked.push((id, v)),
            _ => unscored.push(id.to_string()),
        }
    }
    let drop = (drop_frac * ranked.len() as f64 + 1e-9).floor() as usize;
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    unscored.sort();
    PercentileOutcome {
        removed: ranked[..drop.min(ranked.len())].iter().map(|(id, _)| id.to_string()).collect(),
        unscored,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtitleEvent {
    /// Vertical center of the text box as a fraction of frame height, 0 at the top.
    pub y_center_frac: f64,
    pub start_s: f64,
    pub end_s: f64,
}

pub fn subtitle_flagged(events: &[SubtitleEvent], cfg: &FilterConfig) -> bool {
    events.iter().any(|e| {
        e.y_center_frac > 1.0 - cfg.subtitle_region_frac
            && e.end_s - e.start_s > cfg.subtitle_min_visible_s
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryRule {
    Reversal,
    Viewpoint,
    Displacement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryVerdict {
    Pass,
    /// Fewer frames than one displacement window; nothing is judged.
    Insufficient,
    Fail(TrajectoryRule),
}

impl TrajectoryRule {
    pub fn name(self) -> &'static str {
        match self {
            TrajectoryRule::Reversal => "reversal",
            TrajectoryRule::Viewpoint => "viewpoint",
            TrajectoryRule::Displacement => "displacement",
        }
    }
}

impl TrajectoryVerdict {
    pub fn failed(&self) -> bool {
        matches!(self, TrajectoryVerdict::Fail(_))
    }
}

/// Checks the three motion rules in order (reversal, viewpoint, displacement)
/// and reports the first that fires.
pub fn trajectory_verdict(traj: &CameraTrajectory, cfg: &FilterConfig) -> TrajectoryVerdict {
    if traj.len() < cfg.displacement_window_frames.max(2) {
        log::warn!(
            "trajectory has {} frames, fewer than {}; not judged",
            traj.len(),
            cfg.displacement_window_frames
        );
        return TrajectoryVerdict::Insufficient;
    }
    if has_reversals(traj, cfg) {
        TrajectoryVerdict::Fail(TrajectoryRule::Reversal)
    } else if has_viewpoint_jump(traj, cfg) {
        TrajectoryVerdict::Fail(TrajectoryRule::Viewpoint)
    } else if has_displacement_spike(traj, cfg) {
        TrajectoryVerdict::Fail(TrajectoryRule::Displacement)
    } else {
        TrajectoryVerdict::Pass
    }
}

/// Some closed window of `reversal_window_s` holds at least
/// `reversal_min_count` direction changes sharper than `reversal_angle_deg`.
fn has_reversals(traj: &CameraTrajectory, cfg: &FilterConfig) -> bool {
    let times: Vec<f64> = (1..traj.len().saturating_sub(1))
        .filter(|&i| direction_change(traj, i).is_some_and(|a| a > cfg.reversal_angle_deg))
        .map(|i| traj.frames()[i].t_s)
        .collect();
    let need = cfg.reversal_min_count.max(1);
    times.len() >= need
        && times
            .windows(need)
            .any(|w| w[need - 1] - w[0] <= cfg.reversal_window_s)
}

fn has_viewpoint_jump(traj: &CameraTrajectory, cfg: &FilterConfig) -> bool {
    traj.frames()
        .windows(2)
        .any(|w| viewpoint_shift(&w[0].orientation, &w[1].orientation) > cfg.viewpoint_shift_deg)
}

/// Some step exceeds `displacement_factor` times the mean step length over
/// the window of `displacement_window_frames` frames centered on it (shifted
/// inward at the ends).
fn has_displacement_spike(traj: &CameraTrajectory, cfg: &FilterConfig) -> bool {
    let steps: Vec<f64> = (0..traj.len() - 1).map(|i| norm(traj.step(i))).collect();
    let w = cfg.displacement_window_frames;
    let win_steps = w - 1;
    // prefix sums for window means
    let mut prefix = Vec::with_capacity(steps.len() + 1);
    prefix.push(0.0);
    for s in &steps {
        prefix.push(prefix.last().unwrap() + s);
    }
    steps.iter().enumerate().any(|(i, &d)| {
        let start = displacement_window_start(i, traj.len(), w);
        let mean = (prefix[start + win_steps] - prefix[start]) / win_steps as f64;
        d.partial_cmp(&(cfg.displacement_factor * mean)) == Some(Ordering::Greater)
    })
}

/// Window of frames (first index) used for the displacement rule at step `i`.
pub fn displacement_window_start(step: usize, frames: usize, window: usize) -> usize {
    step.saturating_sub((window - 2) / 2).min(frames - window)
}

impl FilterConfig {
    pub fn luma_applies_to(&self, source: Source) -> bool {
        match source {
            Source::Real => self.luma_real,
            Source::Game => self.luma_game,
        }
    }

    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut need = |ok: bool, field: &str, msg: &str| {
            if !ok {
                out.push((field.to_string(), msg.to_string()));
            }
        };
        need((0.0..=255.0).contains(&self.luma_low), "luma_low", "must lie in [0, 255]");
        need((0.0..=255.0).contains(&self.luma_high), "luma_high", "must lie in [0, 255]");
        need(self.luma_low < self.luma_high, "luma_high", "must exceed luma_low");
        need(self.luma_run_len > 0, "luma_run_len", "must be positive");
        need(self.quality_drop_frac > 0.0 && self.quality_drop_frac < 1.0, "quality_drop_frac", "must lie in (0, 1)");
        need(self.subtitle_min_visible_s > 0.0, "subtitle_min_visible_s", "must be positive");
        need(self.subtitle_region_frac > 0.0 && self.subtitle_region_frac < 1.0, "subtitle_region_frac", "must lie in (0, 1)");
        need(self.reversal_angle_deg > 0.0 && self.reversal_angle_deg <= 180.0, "reversal_angle_deg", "must lie in (0, 180]");
        need(self.reversal_window_s > 0.0, "reversal_window_s", "must be positive");
        need(self.reversal_min_count > 0, "reversal_min_count", "must be positive");
        need(self.viewpoint_shift_deg > 0.0 && self.viewpoint_shift_deg <= 180.0, "viewpoint_shift_deg", "must lie in (0, 180]");
        need(self.displacement_factor > 0.0, "displacement_factor", "must be positive");
        need(self.displacement_window_frames >= 2, "displacement_window_frames", "must be at least 2");
        out
    }
}

/// Per-clip filter evidence. `None` means the signal was not collected, and
/// the corresponding filter leaves the clip alone.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClipSignals {
    pub luma_failed: Option<bool>,
    pub subtitle_flagged: Option<bool>,
    pub trajectory: Option<TrajectoryVerdict>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CascadeSummary {
    pub input: usize,
    pub kept: usize,
    pub removed: BTreeMap<String, usize>,
    pub trajectory_failures: BTreeMap<String, usize>,
    pub trajectories_insufficient: usize,
    pub unscored: Vec<String>,
}

/// Applies luminance, quality percentile, subtitle and trajectory filters in
/// that order, marking removals on the manifest.
///
/// The percentile is ranked over every clip that entered the filters and
/// passed the luminance check, including clips the quality, subtitle or
/// trajectory filters removed earlier, so applying the cascade again
/// changes nothing.
pub fn apply_cascade(manifest: &mut Manifest, signals: &HashMap<String, ClipSignals>, cfg: &FilterConfig) -> CascadeSummary {
    let in_scope = |s: ClipStatus| {
        matches!(
            s,
            ClipStatus::Active
                | ClipStatus::Removed(RemovalReason::Quality | RemovalReason::Subtitle | RemovalReason::Trajectory)
        )
    };
    let sig = |id: &str| signals.get(id).copied().unwrap_or_default();
    let mut summary = CascadeSummary { input: manifest.active_clips().count(), ..Default::default() };
    let mut removed: Vec<(String, RemovalReason)> = Vec::new();

    let mut population: Vec<(&str, Option<f64>)> = Vec::new();
    for c in manifest.clips() {
        if !(in_scope(c.status) || c.status == ClipStatus::Removed(RemovalReason::Luma)) {
            continue;
        }
        if sig(&c.clip_id).luma_failed == Some(true) {
            removed.push((c.clip_id.clone(), RemovalReason::Luma));
        } else if in_scope(c.status) {
            population.push((&c.clip_id, c.scores.map(|s| s.technical)));
        }
    }
    let pct = quality_percentile(&population, cfg.quality_drop_frac);
    let dropped: std::collections::HashSet<&str> = pct.removed.iter().map(String::as_str).collect();
    for (id, _) in &population {
        if dropped.contains(id) {
            removed.push((id.to_string(), RemovalReason::Quality));
            continue;
        }
        let s = sig(id);
        if s.subtitle_flagged == Some(true) {
            removed.push((id.to_string(), RemovalReason::Subtitle));
            continue;
        }
        match s.trajectory {
            Some(TrajectoryVerdict::Fail(rule)) => {
                *summary.trajectory_failures.entry(rule.name().to_string()).or_insert(0) += 1;
                removed.push((id.to_string(), RemovalReason::Trajectory));
            }
            Some(TrajectoryVerdict::Insufficient) => summary.trajectories_insufficient += 1,
            _ => {}
        }
    }
    summary.unscored = pct.unscored;
    for (id, reason) in removed {
        if let Some(c) = manifest.clip_mut(&id) {
            if c.remove(reason) {
                *summary.removed.entry(reason.name().to_string()).or_insert(0) += 1;
            }
        }
    }
    summary.kept = manifest.active_clips().count();
    summary
}
