use serde::{Deserialize, Serialize};

use super::{keep_count, rank_cmp, Selection};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityDiagnostics {
    pub target: usize,
    /// Lowest kept score.
    pub cutoff: Option<f64>,
}

/// Keeps the `ceil(alpha * N)` highest-scoring clips; equal scores keep the
/// smaller clip id first.
pub fn quality_sample(items: &[(&str, f64)], alpha: f64) -> (Selection, QualityDiagnostics) {
    let target = keep_count(alpha, items.len());
    let mut ranked = items.to_vec();
    ranked.sort_by(|a, b| rank_cmp(*a, *b));
    let cutoff = target.checked_sub(1).map(|i| ranked[i].1);
    let sel = Selection::from_kept(
        items.iter().map(|(id, _)| *id),
        ranked[..target].iter().map(|(id, _)| *id),
    );
    (sel, QualityDiagnostics { target, cutoff })
}
