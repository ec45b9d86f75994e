//! Static augmented interval tree over half-open `[start, end)` intervals.
//!
//! Intervals are sorted by start and laid out as an implicit balanced binary
//! tree (the midpoint of each index range is the node). Every node stores the
//! largest end in its subtree, which lets stabbing queries skip subtrees that
//! end before the query point.

#[derive(Clone, Debug)]
struct Node<T> {
    start: i64,
    end: i64,
    max_end: i64,
    value: T,
}

#[derive(Clone, Debug)]
pub struct IntervalTree<T> {
    nodes: Vec<Node<T>>,
}

impl<T> Default for IntervalTree<T> {
    fn default() -> Self {
        IntervalTree { nodes: Vec::new() }
    }
}

impl<T> IntervalTree<T> {
    /// Builds the tree; empty intervals (`end <= start`) are kept but never match.
    pub fn new(items: impl IntoIterator<Item = (i64, i64, T)>) -> Self {
        let mut nodes: Vec<Node<T>> = items
            .into_iter()
            .map(|(start, end, value)| Node { start, end, max_end: end, value })
            .collect();
        nodes.sort_by_key(|n| (n.start, n.end));
        let len = nodes.len();
        Self::augment(&mut nodes, 0, len);
        IntervalTree { nodes }
    }

    fn augment(nodes: &mut [Node<T>], lo: usize, hi: usize) -> i64 {
        if lo >= hi {
            return i64::MIN;
        }
        let mid = lo + (hi - lo) / 2;
        let left = Self::augment(nodes, lo, mid);
        let right = Self::augment(nodes, mid + 1, hi);
        let m = nodes[mid].end.max(left).max(right);
        nodes[mid].max_end = m;
        m
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Calls `visit` for every interval with `start <= point < end`, in
    /// ascending start order.
    pub fn stab_with<'a>(&'a self, point: i64, mut visit: impl FnMut(i64, i64, &'a T)) {
        self.stab_range(0, self.nodes.len(), point, &mut visit);
    }

    fn stab_range<'a>(&'a self, lo: usize, hi: usize, point: i64, visit: &mut impl FnMut(i64, i64, &'a T)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let node = &self.nodes[mid];
        if node.max_end <= point {
            return;
        }
        self.stab_range(lo, mid, point, visit);
        if node.start <= point {
            if point < node.end {
                visit(node.start, node.end, &node.value);
            }
            self.stab_range(mid + 1, hi, point, visit);
        }
    }

    pub fn stab(&self, point: i64) -> Vec<&T> {
        let mut out = Vec::new();
        self.stab_with(point, |_, _, v| out.push(v));
        out
    }

    /// Intervals that fully contain the non-empty query `[start, end)`.
    pub fn containing(&self, start: i64, end: i64) -> Vec<&T> {
        let mut out = Vec::new();
        if end > start {
            self.stab_with(start, |_, e, v| {
                if end <= e {
                    out.push(v)
                }
            });
        }
        out
    }
}
