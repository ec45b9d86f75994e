use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::quota::allocate;
use super::{keep_count, rng_for, Selection};
use crate::trajectory::TrajectoryBinning;

#[derive(Clone, Copy, Debug)]
pub struct CameraItem<'a> {
    pub id: &'a str,
    pub direction_bin: usize,
    pub jitter_bin: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupDiag {
    pub clips: usize,
    pub quota: f64,
    pub kept: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraDiagnostics {
    pub target: usize,
    pub azimuth_bins: usize,
    pub elevation_bins: usize,
    pub jitter_edges: Vec<f64>,
    /// Keyed `"<direction_bin>/<jitter_bin>"`.
    pub groups: BTreeMap<String, GroupDiag>,
}

/// Equal quotas over the non-empty (direction, jitter) groups, smallest
/// group first; equally sized groups are visited in seeded random order and
/// each group keeps a seeded uniform subset.
pub fn camera_diversity_sample(
    items: &[CameraItem<'_>],
    alpha: f64,
    seed: u64,
    binning: TrajectoryBinning,
) -> (Selection, CameraDiagnostics) {
    let target = keep_count(alpha, items.len());
    let mut groups: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for it in items {
        groups.entry((it.direction_bin, it.jitter_bin)).or_default().push(it.id);
    }
    let mut order: Vec<((usize, usize), Vec<&str>)> = groups.into_iter().collect();
    order.shuffle(&mut rng_for(seed, &["camera", "order"]));
    order.sort_by_key(|(_, v)| v.len());
    let sizes: Vec<usize> = order.iter().map(|(_, v)| v.len()).collect();
    let slots = allocate(&sizes, target);

    let mut kept = Vec::with_capacity(target);
    let mut diag_groups = BTreeMap::new();
    for (((d, j), mut ids), slot) in order.into_iter().zip(&slots) {
        let key = format!("{d}/{j}");
        ids.sort_unstable();
        ids.shuffle(&mut rng_for(seed, &["camera", &key]));
        kept.extend_from_slice(&ids[..slot.take]);
        diag_groups.insert(key, GroupDiag { clips: slot.size, quota: slot.quota, kept: slot.take });
    }
    let diag = CameraDiagnostics {
        target,
        azimuth_bins: binning.azimuth_bins,
        elevation_bins: binning.elevation_bins,
        jitter_edges: binning.jitter_edges,
        groups: diag_groups,
    };
    (Selection::from_kept(items.iter().map(|i| i.id), kept), diag)
}
