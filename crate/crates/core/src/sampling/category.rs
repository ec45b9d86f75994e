//! Inverse-frequency weighted sampling without replacement.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{keep_count, rng_for, Selection};
use crate::labels::{CategoryLabels, Dimension};

pub type LabelCounts = BTreeMap<String, BTreeMap<String, usize>>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryDiagnostics {
    pub target: usize,
    pub input_counts: LabelCounts,
    pub output_counts: LabelCounts,
}

pub fn label_counts<'a>(labels: impl IntoIterator<Item = &'a CategoryLabels>) -> LabelCounts {
    let mut out: LabelCounts = Dimension::ALL.iter().map(|d| (d.name().to_string(), BTreeMap::new())).collect();
    for l in labels {
        for d in Dimension::ALL {
            *out.get_mut(d.name()).unwrap().entry(l.get(d).to_string()).or_insert(0) += 1;
        }
    }
    out
}

/// `prod_d 1 / freq(label_d)` for each item, in input order.
pub fn inverse_frequency_weights(labels: &[&CategoryLabels]) -> Vec<f64> {
    let n = labels.len() as f64;
    let mut counts: Vec<HashMap<&str, usize>> = vec![HashMap::new(); Dimension::ALL.len()];
    for l in labels {
        for (di, d) in Dimension::ALL.iter().enumerate() {
            *counts[di].entry(l.get(*d)).or_insert(0) += 1;
        }
    }
    labels
        .iter()
        .map(|l| {
            Dimension::ALL
                .iter()
                .enumerate()
                .map(|(di, d)| n / counts[di][l.get(*d)] as f64)
                .product()
        })
        .collect()
}

/// Probability of each item being the first draw.
pub fn first_draw_probabilities(labels: &[&CategoryLabels]) -> Vec<f64> {
    let w = inverse_frequency_weights(labels);
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Sum tree over item weights supporting weighted draws and removal.
struct SumTree {
    size: usize,
    tree: Vec<f64>,
}

impl SumTree {
    fn new(weights: &[f64]) -> Self {
        let size = weights.len().next_power_of_two().max(1);
        let mut tree = vec![0.0; 2 * size];
        tree[size..size + weights.len()].copy_from_slice(weights);
        for i in (1..size).rev() {
            tree[i] = tree[2 * i] + tree[2 * i + 1];
        }
        SumTree { size, tree }
    }

    fn total(&self) -> f64 {
        self.tree[1]
    }

    /// Leaf whose cumulative range contains `u` (`0 <= u < total`).
    fn find(&self, mut u: f64) -> usize {
        let mut i = 1;
        while i < self.size {
            let (l, r) = (self.tree[2 * i], self.tree[2 * i + 1]);
            i = if r == 0.0 || (l > 0.0 && u < l) {
                2 * i
            } else {
                u -= l;
                2 * i + 1
            };
        }
        i - self.size
    }

    fn clear(&mut self, leaf: usize) {
        let mut i = leaf + self.size;
        self.tree[i] = 0.0;
        while i > 1 {
            i /= 2;
            // recompute rather than subtract so rounding never accumulates
            self.tree[i] = self.tree[2 * i] + self.tree[2 * i + 1];
        }
    }
}

/// Draws `ceil(alpha * N)` clips one at a time, each with probability
/// proportional to its weight among the clips not yet drawn.
pub fn category_diversity_sample(
    items: &[(&str, &CategoryLabels)],
    alpha: f64,
    seed: u64,
) -> (Selection, CategoryDiagnostics) {
    let mut items = items.to_vec();
    items.sort_by(|a, b| a.0.cmp(b.0));
    let target = keep_count(alpha, items.len());
    let labels: Vec<&CategoryLabels> = items.iter().map(|(_, l)| *l).collect();
    let weights = inverse_frequency_weights(&labels);
    let mut tree = SumTree::new(&weights);
    let mut rng = rng_for(seed, &["category"]);
    let mut picked = Vec::with_capacity(target);
    for _ in 0..target {
        let u = rng.random::<f64>() * tree.total();
        let i = tree.find(u);
        tree.clear(i);
        picked.push(i);
    }
    let diag = CategoryDiagnostics {
        target,
        input_counts: label_counts(labels.iter().copied()),
        output_counts: label_counts(picked.iter().map(|&i| labels[i])),
    };
    let sel = Selection::from_kept(items.iter().map(|(id, _)| *id), picked.iter().map(|&i| items[i].0));
    (sel, diag)
}
