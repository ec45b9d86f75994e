use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::quota::allocate;
use super::{keep_count, rank_cmp, Selection};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CityQuota {
    pub clips: usize,
    pub quota: f64,
    pub kept: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationDiagnostics {
    pub target: usize,
    pub cities: BTreeMap<String, CityQuota>,
}

/// Equal per-city quotas with shortfall redistribution; cities are visited
/// smallest first (ties by key) and fill their quota by score.
pub fn location_diversity_sample(
    groups: &BTreeMap<String, Vec<(&str, f64)>>,
    alpha: f64,
) -> (Selection, LocationDiagnostics) {
    let total: usize = groups.values().map(Vec::len).sum();
    let target = keep_count(alpha, total);
    let mut order: Vec<(&String, &Vec<(&str, f64)>)> = groups.iter().filter(|(_, v)| !v.is_empty()).collect();
    order.sort_by_key(|(k, v)| (v.len(), *k));
    let sizes: Vec<usize> = order.iter().map(|(_, v)| v.len()).collect();
    let slots = allocate(&sizes, target);

    let mut kept = Vec::with_capacity(target);
    let mut diag = LocationDiagnostics { target, cities: BTreeMap::new() };
    for ((key, items), slot) in order.iter().zip(&slots) {
        let mut ranked = (*items).clone();
        ranked.sort_by(|a, b| rank_cmp(*a, *b));
        kept.extend(ranked[..slot.take].iter().map(|(id, _)| *id));
        diag.cities.insert(
            (*key).clone(),
            CityQuota { clips: slot.size, quota: slot.quota, kept: slot.take },
        );
    }
    let all = groups.values().flatten().map(|(id, _)| *id);
    (Selection::from_kept(all, kept), diag)
}
