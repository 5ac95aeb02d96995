//! The scale-`r` equivalence relation and coarse line segments.
//!
//! Two window points are `r`-equivalent when a chain of window points with
//! steps of length at most `r` joins them. Class sizes across growing windows
//! are the finite-window diagnostic for asymptotic dimension zero; when classes
//! keep growing, [`extract_segments`] pulls out longer and longer separated
//! segments with controlled steps.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{PointId, Space, Window};

/// Partition of a window into `r`-classes, as ascending window indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalePartition {
    pub r: u64,
    pub classes: Vec<Vec<usize>>,
}

impl ScalePartition {
    pub fn max_class_size(&self) -> usize {
        self.classes.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Class index of every window point.
    pub fn class_of(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (c, class) in self.classes.iter().enumerate() {
            for &i in class {
                out[i] = c;
            }
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Exact `r`-classes of the window.
pub fn components_at_scale(w: &Window, r: u64) -> ScalePartition {
    let n = w.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in w.neighbors_within(i, r) {
            if j > i {
                uf.union(i, j);
            }
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = uf.find(i);
        by_root[root].push(i);
    }
    let mut classes: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
    classes.sort_by_key(|c| c[0]);
    ScalePartition { r, classes }
}

/// How a class-size profile behaves on the windows examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileTrend {
    BoundedSoFar,
    Growing,
}

impl ProfileTrend {
    pub fn label(self) -> &'static str {
        match self {
            ProfileTrend::BoundedSoFar => "bounded so far",
            ProfileTrend::Growing => "growing",
        }
    }
}

/// Maximum class size at scale `r` on each window of a nested sequence.
pub fn class_size_profile(r: u64, windows: &[Window]) -> Vec<usize> {
    windows
        .iter()
        .map(|w| components_at_scale(w, r).max_class_size())
        .collect()
}

/// `Growing` when the last window still increased the maximum class size.
pub fn profile_trend(profile: &[usize]) -> ProfileTrend {
    match profile {
        [.., a, b] if b > a => ProfileTrend::Growing,
        _ => ProfileTrend::BoundedSoFar,
    }
}

/// Finite family of coarse line segments at scale `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentFamily {
    pub r: u64,
    pub segments: Vec<Vec<PointId>>,
}

impl SegmentFamily {
    pub fn lengths(&self) -> Vec<usize> {
        self.segments.iter().map(Vec::len).collect()
    }

    pub fn firsts(&self) -> impl Iterator<Item = &PointId> {
        self.segments.iter().filter_map(|s| s.first())
    }

    pub fn lasts(&self) -> impl Iterator<Item = &PointId> {
        self.segments.iter().filter_map(|s| s.last())
    }
}

/// Per-condition verification of a [`SegmentFamily`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentReport {
    /// Per segment: every consecutive step is at most `2r`.
    pub steps_ok: Vec<bool>,
    /// First offending step as `(segment, index of the step's first point)`.
    pub first_bad_step: Option<(usize, usize)>,
    /// Per segment: `d(x_1, x_{i+1}) ∈ [ir, (i+1)r)` for every `i`.
    pub anchored_ok: Vec<bool>,
    pub first_bad_anchor: Option<(usize, usize)>,
    /// `min_{m≠n} d(S_n, S_m)` per segment; `None` with a single segment.
    pub separations: Vec<Option<u64>>,
    pub separation_positive: bool,
    pub separation_nondecreasing: bool,
    pub lengths_increasing: bool,
}

impl SegmentReport {
    pub fn all_pass(&self) -> bool {
        self.steps_ok.iter().all(|&b| b)
            && self.anchored_ok.iter().all(|&b| b)
            && self.separation_positive
            && self.separation_nondecreasing
            && self.lengths_increasing
    }
}

fn set_distance(space: &Space, a: &[PointId], b: &[PointId]) -> u64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| space.dist_unchecked(x, y)))
        .min()
        .unwrap_or(u64::MAX)
}

fn separations(space: &Space, segments: &[Vec<PointId>]) -> Vec<Option<u64>> {
    (0..segments.len())
        .map(|n| {
            (0..segments.len())
                .filter(|&m| m != n)
                .map(|m| set_distance(space, &segments[n], &segments[m]))
                .min()
        })
        .collect()
}

/// Checks every segment condition directly from distances.
pub fn verify_segments(space: &Space, family: &SegmentFamily) -> Result<SegmentReport> {
    for p in family.segments.iter().flatten() {
        if !space.contains(p) {
            return Err(Error::UnknownPoint(p.to_string()));
        }
    }
    let r = family.r;
    let mut steps_ok = Vec::new();
    let mut anchored_ok = Vec::new();
    let mut first_bad_step = None;
    let mut first_bad_anchor = None;
    for (n, seg) in family.segments.iter().enumerate() {
        let bad_step = seg
            .windows(2)
            .position(|p| space.dist_unchecked(&p[0], &p[1]) > 2 * r);
        if let (Some(i), None) = (bad_step, first_bad_step) {
            first_bad_step = Some((n, i));
        }
        steps_ok.push(bad_step.is_none());
        let bad_anchor = seg.iter().enumerate().skip(1).position(|(k, p)| {
            let i = k as u64;
            let d = space.dist_unchecked(&seg[0], p);
            !(i * r <= d && d < (i + 1) * r)
        });
        if let (Some(i), None) = (bad_anchor, first_bad_anchor) {
            first_bad_anchor = Some((n, i + 1));
        }
        anchored_ok.push(bad_anchor.is_none());
    }
    let seps = separations(space, &family.segments);
    let separation_positive = seps.iter().flatten().all(|&d| d > 0);
    let finite: Vec<u64> = seps.iter().flatten().copied().collect();
    let separation_nondecreasing = finite.windows(2).all(|w| w[0] <= w[1]);
    let lengths = family.lengths();
    let lengths_increasing = lengths.windows(2).all(|w| w[0] < w[1]);
    Ok(SegmentReport {
        steps_ok,
        first_bad_step,
        anchored_ok,
        first_bad_anchor,
        separations: seps,
        separation_positive,
        separation_nondecreasing,
        lengths_increasing,
    })
}

/// Recursively extracts `count` segments at scale `r` from the search window.
///
/// `S_1` is the first window point. Given `S_1..S_N`, points closer than
/// `max(N + 1, current separations)` to a chosen segment are excluded, and the
/// next segment (one point longer than the previous) is cut from an `r`-class of
/// what remains: walk a shortest `r`-chain from an anchor to the farthest point
/// of its class and keep the first point entering each annulus `[ir, (i+1)r)`.
/// Chains whose kept points step further than `2r` are trimmed.
pub fn extract_segments(w: &Window, r: u64, count: usize) -> Result<SegmentFamily> {
    if r == 0 {
        return Err(Error::Invalid("segment extraction needs r >= 1".into()));
    }
    if count == 0 {
        return Err(Error::Invalid("segment count must be at least 1".into()));
    }
    if w.is_empty() {
        return Err(Error::NoSegments { r, longest: 0 });
    }
    let space: &Arc<Space> = w.space();
    let mut chosen: Vec<Vec<usize>> = vec![vec![0]];
    while chosen.len() < count {
        let n = chosen.len();
        let seg_points: Vec<Vec<PointId>> = chosen
            .iter()
            .map(|s| s.iter().map(|&i| w.point(i).clone()).collect())
            .collect();
        let sep_floor = separations(space, &seg_points).into_iter().flatten().max().unwrap_or(0);
        let exclusion = (n as u64 + 1).max(sep_floor);
        let used: Vec<usize> = chosen.iter().flatten().copied().collect();
        let remaining: Vec<usize> = (0..w.len())
            .filter(|&i| w.dist_to_set(i, &used).is_none_or(|d| d >= exclusion))
            .collect();
        let target = chosen[n - 1].len() + 1;
        let sub = w.restrict(&remaining);
        let partition = components_at_scale(&sub, r);
        let mut found = None;
        for class in partition.classes.iter().filter(|c| c.len() >= target) {
            if let Some(chain) = chain_in_class(&sub, class, r, target) {
                found = Some(chain.into_iter().map(|i| remaining[i]).collect::<Vec<_>>());
                break;
            }
        }
        match found {
            Some(seg) => chosen.push(seg),
            None => return Err(Error::NoSegments { r, longest: target - 1 }),
        }
    }
    Ok(SegmentFamily {
        r,
        segments: chosen
            .into_iter()
            .map(|s| s.into_iter().map(|i| w.point(i).clone()).collect())
            .collect(),
    })
}

fn chain_in_class(w: &Window, class: &[usize], r: u64, target: usize) -> Option<Vec<usize>> {
    let first = class[0];
    let farthest = *class.iter().max_by_key(|&&i| (w.dist(first, i), std::cmp::Reverse(i)))?;
    for anchor in [first, farthest] {
        let chain = first_entry_chain(w, anchor, r);
        if chain.len() >= target {
            return Some(chain[..target].to_vec());
        }
    }
    None
}

fn first_entry_chain(w: &Window, anchor: usize, r: u64) -> Vec<usize> {
    // BFS over the r-graph of the window; every reached point is in the anchor's class
    let mut parent = vec![usize::MAX; w.len()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([anchor]);
    parent[anchor] = anchor;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for v in w.neighbors_within(u, r) {
            if parent[v] == usize::MAX {
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    let Some(&end) = order
        .iter()
        .max_by_key(|&&i| (w.dist(anchor, i), std::cmp::Reverse(i)))
    else {
        return vec![anchor];
    };
    let mut path = vec![end];
    while *path.last().unwrap() != anchor {
        let p = parent[*path.last().unwrap()];
        path.push(p);
    }
    path.reverse();

    let mut chain = vec![anchor];
    let mut next = 1u64;
    for &p in &path[1..] {
        if w.dist(anchor, p) >= next * r {
            let prev = *chain.last().unwrap();
            if w.dist(prev, p) > 2 * r {
                break;
            }
            chain.push(p);
            next += 1;
        }
    }
    chain
}
