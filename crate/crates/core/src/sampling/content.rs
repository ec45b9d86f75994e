//! Near-duplicate removal inside embedding clusters.
//!
//! Per country the embeddings are clustered. Inside a cluster the clips are
//! ranked by score; the best open clip is the anchor and its most
//! cosine-similar open neighbour is the removal candidate. Each step applies
//! the candidate pair with the highest similarity over all clusters: the
//! neighbour is removed and the anchor is set aside as kept. When no cluster
//! has a pair left, set-aside anchors become eligible again; when that also
//! yields nothing, the survivors are pooled into a single cluster.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kmeans::{assign_all, dot, normalized, MiniBatchKMeans};
use super::{rank_cmp, removal_count, rng_for, Selection};
use crate::par;

#[derive(Clone, Copy, Debug)]
pub struct ContentItem<'a> {
    pub id: &'a str,
    pub score: f64,
    pub embedding: &'a [f32],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContentParams {
    pub k: Option<usize>,
    pub batch_size: usize,
    pub iterations: usize,
}

impl Default for ContentParams {
    fn default() -> Self {
        ContentParams { k: None, batch_size: 1024, iterations: 50 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContentDiagnostics {
    pub countries: BTreeMap<String, CountryDiag>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountryDiag {
    pub clips: usize,
    pub k: usize,
    pub cluster_sizes: Vec<usize>,
    pub target: usize,
    pub removed: usize,
    /// Lowest similarity between a removed clip and its anchor.
    pub min_removed_similarity: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Open,
    Kept,
    Removed,
}

struct Country<'a> {
    items: Vec<ContentItem<'a>>,
    units: Vec<Vec<f32>>,
}

#[derive(Clone, Copy)]
struct Candidate {
    sim: f64,
    anchor: usize,
    neighbour: usize,
}

/// Cluster members are item indices in rank order.
fn candidate(members: &[usize], state: &[State], units: &[Vec<f32>]) -> Option<Candidate> {
    let anchor = *members.iter().find(|&&i| state[i] == State::Open)?;
    let mut best: Option<Candidate> = None;
    for &j in members {
        if j == anchor || state[j] != State::Open {
            continue;
        }
        let sim = dot(&units[anchor], &units[j]);
        // later members rank lower, so `>=` removes the lower-ranked of equals
        if best.is_none_or(|b| sim >= b.sim) {
            best = Some(Candidate { sim, anchor, neighbour: j });
        }
    }
    best
}

fn select_country(c: &Country<'_>, clusters: Vec<Vec<usize>>, target: usize) -> (Vec<State>, Option<f64>) {
    let n = c.items.len();
    let mut state = vec![State::Open; n];
    let mut clusters = clusters;
    let mut cands: Vec<Option<Candidate>> = clusters.iter().map(|m| candidate(m, &state, &c.units)).collect();
    let mut removed = 0;
    let mut merged = false;
    let mut min_sim: Option<f64> = None;
    while removed < target {
        let best = cands
            .iter()
            .enumerate()
            .filter_map(|(ci, x)| x.map(|x| (ci, x)))
            .max_by(|(_, a), (_, b)| {
                a.sim
                    .total_cmp(&b.sim)
                    .then_with(|| c.items[b.anchor].id.cmp(c.items[a.anchor].id))
            });
        let Some((ci, cand)) = best else {
            if state.contains(&State::Kept) {
                state.iter_mut().filter(|s| **s == State::Kept).for_each(|s| *s = State::Open);
                cands = clusters.iter().map(|m| candidate(m, &state, &c.units)).collect();
                if cands.iter().any(Option::is_some) {
                    continue;
                }
            }
            if merged {
                break;
            }
            merged = true;
            let pool: Vec<usize> = (0..n).filter(|&i| state[i] != State::Removed).collect();
            clusters = vec![pool];
            cands = vec![candidate(&clusters[0], &state, &c.units)];
            continue;
        };
        state[cand.neighbour] = State::Removed;
        state[cand.anchor] = State::Kept;
        min_sim = Some(min_sim.map_or(cand.sim, |m: f64| m.min(cand.sim)));
        removed += 1;
        cands[ci] = candidate(&clusters[ci], &state, &c.units);
    }
    (state, min_sim)
}

fn run_country(
    code: &str,
    items: &[ContentItem<'_>],
    alpha: f64,
    params: &ContentParams,
    seed: u64,
) -> (Vec<String>, CountryDiag) {
    let mut items = items.to_vec();
    items.sort_by(|a, b| rank_cmp((a.id, a.score), (b.id, b.score)));
    let n = items.len();
    let units: Vec<Vec<f32>> = items.iter().map(|i| normalized(i.embedding)).collect();
    let k = params.k.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize).clamp(1, n.max(1));
    let target = removal_count(alpha, n);

    let data: Vec<&[f32]> = units.iter().map(Vec::as_slice).collect();
    let (labels, k) = if target == 0 || n == 0 {
        (vec![0; n], k.min(n))
    } else {
        let km = MiniBatchKMeans { k, batch_size: params.batch_size, iterations: params.iterations };
        let cents = km.fit(&data, &mut rng_for(seed, &["content", code]));
        (assign_all(&cents, &data), cents.len())
    };
    let mut clusters = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        clusters[l].push(i);
    }
    let cluster_sizes = clusters.iter().map(Vec::len).collect();
    let country = Country { items, units };
    let (state, min_sim) = select_country(&country, clusters, target);
    let removed: Vec<String> = state
        .iter()
        .zip(&country.items)
        .filter(|(s, _)| **s == State::Removed)
        .map(|(_, i)| i.id.to_string())
        .collect();
    let diag = CountryDiag {
        clips: n,
        k,
        cluster_sizes,
        target,
        removed: removed.len(),
        min_removed_similarity: min_sim,
    };
    (removed, diag)
}

pub fn content_diversity_sample(
    groups: &BTreeMap<String, Vec<ContentItem<'_>>>,
    alpha: f64,
    params: &ContentParams,
    seed: u64,
) -> (Selection, ContentDiagnostics) {
    let countries: Vec<(&String, &Vec<ContentItem<'_>>)> = groups.iter().collect();
    let results = par::map(&countries, |(code, items)| run_country(code, items, alpha, params, seed));
    let mut removed = std::collections::HashSet::new();
    let mut diag = ContentDiagnostics::default();
    for ((code, _), (r, d)) in countries.iter().zip(results) {
        removed.extend(r);
        diag.countries.insert((*code).clone(), d);
    }
    let all = groups.values().flatten().map(|i| i.id);
    let kept: Vec<&str> = groups.values().flatten().map(|i| i.id).filter(|id| !removed.contains(*id)).collect();
    (Selection::from_kept(all, kept), diag)
}
