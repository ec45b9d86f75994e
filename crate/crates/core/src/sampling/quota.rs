//! Equal-share quota allocation with shortfall redistribution.
//!
//! Groups are visited in the given order (callers pass ascending size). Each
//! group's quota is the remaining target divided by the number of groups not
//! yet visited; a group smaller than its quota gives everything it has and
//! the difference flows to the groups after it.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotaSlot {
    pub size: usize,
    /// Fractional share at the time the group was visited.
    pub quota: f64,
    pub take: usize,
}

pub fn allocate(sizes: &[usize], target: usize) -> Vec<QuotaSlot> {
    let mut remaining = target;
    let mut out = Vec::with_capacity(sizes.len());
    for (i, &size) in sizes.iter().enumerate() {
        let groups_left = sizes.len() - i;
        let quota = remaining as f64 / groups_left as f64;
        let take = if (size as f64) <= quota {
            size
        } else {
            size.min((quota + 0.5).floor() as usize)
        };
        remaining = remaining.saturating_sub(take);
        out.push(QuotaSlot { size, quota, take });
    }
    out
}
