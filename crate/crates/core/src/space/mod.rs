//! Bounded-geometry metric spaces with exact integer distances.
//!
//! A [`Space`] is built from a [`SpaceSpec`] (the JSON-facing description) and
//! answers distance queries and ball enumerations exactly. Finite subsets of a
//! space are [`Window`]s; every other module computes on windows.

mod point;
mod window;

pub use point::{PointId, Word};
pub use window::Window;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Default cap on the number of points a single ball enumeration may produce.
pub const DEFAULT_BALL_CAP: usize = 2_000_000;

/// Description of a space, as read from and written to JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    /// `Z^dim` with the ℓ¹ metric.
    Grid { dim: usize },
    /// Free group on `rank` generators with the word metric.
    FreeGroup { rank: u8 },
    /// Either the infinite rooted tree where every vertex has `branching`
    /// children, or the finite tree given by `edges` on vertices `0..=edges.len()`.
    Tree {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        branching: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<(u64, u64)>>,
    },
    /// Finite subset of `Z` with the induced metric.
    PointLine { coords: Vec<i64> },
    /// Finite blocks laid out in a row with gaps between neighbours.
    DisjointUnion { blocks: Vec<SpaceSpec>, gaps: Vec<u64> },
    /// `base × {1..n}` with the sum of the base metric and the 0/1 metric.
    ProductFinite { base: Box<SpaceSpec>, n: u32 },
    /// Explicit finite metric given by a distance table.
    Custom { points: Vec<Value>, dist: Vec<Vec<u64>> },
}

impl SpaceSpec {
    pub fn grid(dim: usize) -> Self {
        SpaceSpec::Grid { dim }
    }

    pub fn free_group(rank: u8) -> Self {
        SpaceSpec::FreeGroup { rank }
    }

    pub fn regular_tree(branching: u64) -> Self {
        SpaceSpec::Tree { branching: Some(branching), edges: None }
    }

    pub fn finite_tree(edges: Vec<(u64, u64)>) -> Self {
        SpaceSpec::Tree { branching: None, edges: Some(edges) }
    }

    pub fn point_line(coords: Vec<i64>) -> Self {
        SpaceSpec::PointLine { coords }
    }

    pub fn custom(dist: Vec<Vec<u64>>) -> Self {
        let points = (0..dist.len()).map(|i| Value::from(i as u64)).collect();
        SpaceSpec::Custom { points, dist }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SpaceSpec::Grid { .. } => "grid",
            SpaceSpec::FreeGroup { .. } => "free_group",
            SpaceSpec::Tree { .. } => "tree",
            SpaceSpec::PointLine { .. } => "point_line",
            SpaceSpec::DisjointUnion { .. } => "disjoint_union",
            SpaceSpec::ProductFinite { .. } => "product_finite",
            SpaceSpec::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug)]
enum Kind {
    Grid { dim: usize },
    FreeGroup { rank: u8 },
    RegularTree { branching: u64 },
    FiniteTree { adj: Vec<Vec<u64>>, parent: Vec<u64>, depth: Vec<u64> },
    PointLine { coords: Vec<i64> },
    Union { blocks: Vec<Space>, offsets: Vec<u64> },
    Product { base: Box<Space>, n: u32 },
    Custom { dist: Vec<Vec<u64>> },
}

/// A metric space with an exact distance oracle.
#[derive(Debug)]
pub struct Space {
    spec: SpaceSpec,
    kind: Kind,
    cap: usize,
}

impl Space {
    pub fn new(spec: SpaceSpec) -> Result<Space> {
        let kind = compile(&spec)?;
        Ok(Space { spec, kind, cap: DEFAULT_BALL_CAP })
    }

    pub fn from_json(value: &Value) -> Result<Space> {
        let spec: SpaceSpec = serde_json::from_value(value.clone())
            .map_err(|e| Error::MalformedSpec(e.to_string()))?;
        Space::new(spec)
    }

    /// Overrides the ball enumeration cap.
    pub fn with_cap(mut self, cap: usize) -> Space {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn kind_name(&self) -> &'static str {
        self.spec.kind_name()
    }

    pub fn free_group_rank(&self) -> Option<u8> {
        match self.kind {
            Kind::FreeGroup { rank } => Some(rank),
            _ => None,
        }
    }

    pub fn is_treelike(&self) -> bool {
        matches!(
            self.kind,
            Kind::FreeGroup { .. } | Kind::RegularTree { .. } | Kind::FiniteTree { .. }
        )
    }

    /// Spaces whose balls are found by scanning a table rather than by enumeration.
    pub(crate) fn prefers_scan(&self) -> bool {
        matches!(self.kind, Kind::Custom { .. })
    }

    /// A fixed reference point: the origin, the identity, the root, or the first point.
    pub fn base_point(&self) -> PointId {
        match &self.kind {
            Kind::Grid { dim } => PointId::Grid(vec![0; *dim]),
            Kind::FreeGroup { .. } => PointId::Word(Word::identity()),
            Kind::RegularTree { .. } | Kind::FiniteTree { .. } | Kind::Custom { .. } => {
                PointId::Vertex(0)
            }
            Kind::PointLine { coords } => PointId::Coord(coords[0]),
            Kind::Union { blocks, .. } => PointId::Block(0, Box::new(blocks[0].base_point())),
            Kind::Product { base, .. } => PointId::Level(Box::new(base.base_point()), 1),
        }
    }

    pub fn contains(&self, x: &PointId) -> bool {
        match (&self.kind, x) {
            (Kind::Grid { dim }, PointId::Grid(c)) => c.len() == *dim,
            (Kind::FreeGroup { rank }, PointId::Word(w)) => {
                w.letters().iter().all(|l| l.unsigned_abs() <= *rank)
                    && w.letters().windows(2).all(|p| p[0] != -p[1])
            }
            (Kind::RegularTree { .. }, PointId::Vertex(_)) => true,
            (Kind::FiniteTree { adj, .. }, PointId::Vertex(v)) => (*v as usize) < adj.len(),
            (Kind::PointLine { coords }, PointId::Coord(c)) => coords.binary_search(c).is_ok(),
            (Kind::Union { blocks, .. }, PointId::Block(b, inner)) => {
                blocks.get(*b).is_some_and(|s| s.contains(inner))
            }
            (Kind::Product { base, n }, PointId::Level(p, level)) => {
                (1..=*n).contains(level) && base.contains(p)
            }
            (Kind::Custom { dist }, PointId::Vertex(v)) => (*v as usize) < dist.len(),
            _ => false,
        }
    }

    fn check(&self, x: &PointId) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::UnknownPoint(x.to_string()))
        }
    }

    /// Exact ambient distance.
    pub fn dist(&self, x: &PointId, y: &PointId) -> Result<u64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dist_unchecked(x, y))
    }

    /// Distance between points already known to belong to the space.
    pub(crate) fn dist_unchecked(&self, x: &PointId, y: &PointId) -> u64 {
        match (&self.kind, x, y) {
            (Kind::Grid { .. }, PointId::Grid(a), PointId::Grid(b)) => {
                a.iter().zip(b).map(|(p, q)| p.abs_diff(*q)).sum()
            }
            (Kind::FreeGroup { .. }, PointId::Word(a), PointId::Word(b)) => a.distance(b),
            (Kind::RegularTree { branching }, PointId::Vertex(a), PointId::Vertex(b)) => {
                let b_ = *branching;
                tree_distance(*a, *b, |v| (v - 1) / b_, |v| regular_depth(v, b_))
            }
            (Kind::FiniteTree { parent, depth, .. }, PointId::Vertex(a), PointId::Vertex(b)) => {
                tree_distance(*a, *b, |v| parent[v as usize], |v| depth[v as usize])
            }
            (Kind::PointLine { .. }, PointId::Coord(a), PointId::Coord(b)) => a.abs_diff(*b),
            (Kind::Union { blocks, offsets }, PointId::Block(k, p), PointId::Block(l, q)) => {
                if k == l {
                    blocks[*k].dist_unchecked(p, q)
                } else {
                    union_cross(offsets, *k.min(l), *k.max(l))
                }
            }
            (Kind::Product { base, .. }, PointId::Level(p, m), PointId::Level(q, n)) => {
                base.dist_unchecked(p, q) + u64::from(m != n)
            }
            (Kind::Custom { dist }, PointId::Vertex(a), PointId::Vertex(b)) => {
                dist[*a as usize][*b as usize]
            }
            _ => unreachable!("points of a different space"),
        }
    }

    /// All points within distance `r` of `x`, in canonical order.
    pub fn ball(&self, x: &PointId, r: u64) -> Result<Vec<PointId>> {
        self.ball_capped(x, r, self.cap)
    }

    /// Like [`Space::ball`] with an explicit cap.
    pub fn ball_capped(&self, x: &PointId, r: u64, cap: usize) -> Result<Vec<PointId>> {
        self.check(x)?;
        let mut out = Vec::new();
        self.ball_into(x, r, cap, &mut out)?;
        out.sort();
        Ok(out)
    }

    fn ball_into(&self, x: &PointId, r: u64, cap: usize, out: &mut Vec<PointId>) -> Result<()> {
        let overflow = Err(Error::EnumerationOverflow { cap });
        let push = |out: &mut Vec<PointId>, p: PointId| -> Result<()> {
            if out.len() >= cap {
                return Err(Error::EnumerationOverflow { cap });
            }
            out.push(p);
            Ok(())
        };
        match (&self.kind, x) {
            (Kind::Grid { dim }, PointId::Grid(c)) => {
                let mut cur = c.clone();
                grid_ball(&mut cur, c, 0, *dim, r as i64, cap, out)?;
            }
            (Kind::FreeGroup { rank }, PointId::Word(w)) => {
                let mut stack = vec![(w.clone(), 0i8, 0u64)];
                while let Some((word, came, depth)) = stack.pop() {
                    if depth < r {
                        for g in 1..=*rank as i8 {
                            for l in [g, -g] {
                                if l != -came {
                                    stack.push((word.times(l), l, depth + 1));
                                }
                            }
                        }
                    }
                    push(out, PointId::Word(word))?;
                }
            }
            (Kind::RegularTree { branching }, PointId::Vertex(v)) => {
                let b = *branching;
                let mut stack = vec![(*v, u64::MAX, 0u64)];
                while let Some((u, from, depth)) = stack.pop() {
                    if depth < r {
                        if u != 0 {
                            let p = (u - 1) / b;
                            if p != from {
                                stack.push((p, u, depth + 1));
                            }
                        }
                        for i in 1..=b {
                            let Some(child) = u.checked_mul(b).and_then(|m| m.checked_add(i)) else {
                                return overflow;
                            };
                            if child != from {
                                stack.push((child, u, depth + 1));
                            }
                        }
                    }
                    push(out, PointId::Vertex(u))?;
                }
            }
            (Kind::FiniteTree { adj, .. }, PointId::Vertex(v)) => {
                let mut stack = vec![(*v, u64::MAX, 0u64)];
                while let Some((u, from, depth)) = stack.pop() {
                    if depth < r {
                        for &w in &adj[u as usize] {
                            if w != from {
                                stack.push((w, u, depth + 1));
                            }
                        }
                    }
                    push(out, PointId::Vertex(u))?;
                }
            }
            (Kind::PointLine { coords }, PointId::Coord(c)) => {
                let lo = coords.partition_point(|&p| p < c.saturating_sub(r as i64));
                let hi = coords.partition_point(|&p| p <= c.saturating_add(r as i64));
                for &p in &coords[lo..hi] {
                    push(out, PointId::Coord(p))?;
                }
            }
            (Kind::Union { blocks, offsets }, PointId::Block(k, p)) => {
                for (l, block) in blocks.iter().enumerate() {
                    if l == *k {
                        let mut inner = Vec::new();
                        block.ball_into(p, r, cap.saturating_sub(out.len()), &mut inner)?;
                        for q in inner {
                            push(out, PointId::Block(l, Box::new(q)))?;
                        }
                    } else if union_cross(offsets, l.min(*k), l.max(*k)) <= r {
                        for q in block.all_points().expect("union blocks are finite") {
                            push(out, PointId::Block(l, Box::new(q)))?;
                        }
                    }
                }
            }
            (Kind::Product { base, n }, PointId::Level(p, level)) => {
                let mut same = Vec::new();
                base.ball_into(p, r, cap, &mut same)?;
                for q in same {
                    push(out, PointId::Level(Box::new(q), *level))?;
                }
                if r >= 1 {
                    let mut near = Vec::new();
                    base.ball_into(p, r - 1, cap, &mut near)?;
                    for m in (1..=*n).filter(|m| m != level) {
                        for q in &near {
                            push(out, PointId::Level(Box::new(q.clone()), m))?;
                        }
                    }
                }
            }
            (Kind::Custom { dist }, PointId::Vertex(v)) => {
                for (j, &d) in dist[*v as usize].iter().enumerate() {
                    if d <= r {
                        push(out, PointId::Vertex(j as u64))?;
                    }
                }
            }
            _ => return Err(Error::UnknownPoint(x.to_string())),
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        match &self.kind {
            Kind::Grid { dim } => *dim == 0,
            Kind::FreeGroup { rank } => *rank == 0,
            Kind::RegularTree { .. } => false,
            Kind::FiniteTree { .. } | Kind::PointLine { .. } | Kind::Custom { .. } => true,
            Kind::Union { .. } => true,
            Kind::Product { base, .. } => base.is_finite(),
        }
    }

    /// Every point of a finite space, in canonical order; `None` for infinite spaces.
    pub fn all_points(&self) -> Option<Vec<PointId>> {
        let mut pts = match &self.kind {
            Kind::Grid { dim: 0 } => vec![PointId::Grid(Vec::new())],
            Kind::FreeGroup { rank: 0 } => vec![PointId::Word(Word::identity())],
            Kind::FiniteTree { adj, .. } => (0..adj.len() as u64).map(PointId::Vertex).collect(),
            Kind::PointLine { coords } => coords.iter().map(|&c| PointId::Coord(c)).collect(),
            Kind::Custom { dist } => (0..dist.len() as u64).map(PointId::Vertex).collect(),
            Kind::Union { blocks, .. } => blocks
                .iter()
                .enumerate()
                .flat_map(|(k, b)| {
                    b.all_points()
                        .unwrap_or_default()
                        .into_iter()
                        .map(move |p| PointId::Block(k, Box::new(p)))
                })
                .collect(),
            Kind::Product { base, n } => {
                let base_pts = base.all_points()?;
                (1..=*n)
                    .flat_map(|m| {
                        base_pts
                            .iter()
                            .map(move |p| PointId::Level(Box::new(p.clone()), m))
                    })
                    .collect()
            }
            _ => return None,
        };
        pts.sort();
        Some(pts)
    }

    /// Diameter of a finite space.
    pub fn diameter(&self) -> Option<u64> {
        let pts = self.all_points()?;
        let mut best = 0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                best = best.max(self.dist_unchecked(p, q));
            }
        }
        Some(best)
    }

    /// JSON encoding of a point of this space.
    pub fn point_to_json(&self, x: &PointId) -> Value {
        match (&self.kind, x) {
            (Kind::Union { blocks, .. }, PointId::Block(k, p)) => {
                Value::Array(vec![Value::from(*k as u64), blocks[*k].point_to_json(p)])
            }
            (Kind::Product { base, .. }, PointId::Level(p, m)) => {
                Value::Array(vec![base.point_to_json(p), Value::from(*m)])
            }
            (_, PointId::Grid(c)) => Value::Array(c.iter().map(|&v| Value::from(v)).collect()),
            (_, PointId::Word(w)) => Value::String(w.to_string()),
            (_, PointId::Vertex(v)) => Value::from(*v),
            (_, PointId::Coord(c)) => Value::from(*c),
            _ => Value::Null,
        }
    }

    /// Parses and validates a point of this space.
    pub fn point_from_json(&self, v: &Value) -> Result<PointId> {
        let bad = || Error::UnknownPoint(v.to_string());
        let p = match &self.kind {
            Kind::Grid { .. } => PointId::Grid(
                v.as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(|c| c.as_i64().ok_or_else(bad))
                    .collect::<Result<_>>()?,
            ),
            Kind::FreeGroup { rank } => {
                let s = v.as_str().ok_or_else(bad)?;
                // `e` names the identity unless it is the fifth generator
                let s = if s == "e" && *rank < 5 { "" } else { s };
                PointId::Word(Word::parse(s, *rank).ok_or_else(bad)?)
            }
            Kind::RegularTree { .. } | Kind::FiniteTree { .. } | Kind::Custom { .. } => {
                PointId::Vertex(v.as_u64().ok_or_else(bad)?)
            }
            Kind::PointLine { .. } => PointId::Coord(v.as_i64().ok_or_else(bad)?),
            Kind::Union { blocks, .. } => {
                let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
                let k = pair[0].as_u64().ok_or_else(bad)? as usize;
                let block = blocks.get(k).ok_or_else(bad)?;
                PointId::Block(k, Box::new(block.point_from_json(&pair[1])?))
            }
            Kind::Product { base, .. } => {
                let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
                let level = pair[1].as_u64().ok_or_else(bad)? as u32;
                PointId::Level(Box::new(base.point_from_json(&pair[0])?), level)
            }
        };
        self.check(&p)?;
        Ok(p)
    }
}

fn regular_depth(mut v: u64, b: u64) -> u64 {
    let mut d = 0;
    while v != 0 {
        v = (v - 1) / b;
        d += 1;
    }
    d
}

fn tree_distance(
    mut a: u64,
    mut b: u64,
    parent: impl Fn(u64) -> u64,
    depth: impl Fn(u64) -> u64,
) -> u64 {
    let (mut da, mut db) = (depth(a), depth(b));
    let mut steps = 0;
    while da > db {
        a = parent(a);
        da -= 1;
        steps += 1;
    }
    while db > da {
        b = parent(b);
        db -= 1;
        steps += 1;
    }
    while a != b {
        a = parent(a);
        b = parent(b);
        steps += 2;
    }
    steps
}

/// Distance between blocks `k < l`: the diameters of blocks `k..=l` plus the gaps between them.
///
/// `offsets` lays the blocks out on a line, two entries per block (start, start + diameter).
fn union_cross(offsets: &[u64], k: usize, l: usize) -> u64 {
    offsets[2 * l + 1] - offsets[2 * k]
}

fn grid_ball(
    cur: &mut Vec<i64>,
    center: &[i64],
    axis: usize,
    dim: usize,
    budget: i64,
    cap: usize,
    out: &mut Vec<PointId>,
) -> Result<()> {
    if axis == dim {
        if out.len() >= cap {
            return Err(Error::EnumerationOverflow { cap });
        }
        out.push(PointId::Grid(cur.clone()));
        return Ok(());
    }
    for delta in -budget..=budget {
        cur[axis] = center[axis] + delta;
        grid_ball(cur, center, axis + 1, dim, budget - delta.abs(), cap, out)?;
    }
    cur[axis] = center[axis];
    Ok(())
}

fn compile(spec: &SpaceSpec) -> Result<Kind> {
    let malformed = |m: &str| Err(Error::MalformedSpec(m.to_string()));
    Ok(match spec {
        SpaceSpec::Grid { dim } => {
            if *dim > 16 {
                return malformed("grid dimension above 16");
            }
            Kind::Grid { dim: *dim }
        }
        SpaceSpec::FreeGroup { rank } => {
            if *rank > 26 {
                return malformed("free group rank above 26");
            }
            Kind::FreeGroup { rank: *rank }
        }
        SpaceSpec::Tree { branching: Some(b), edges: None } => {
            if *b == 0 {
                return malformed("tree branching must be at least 1");
            }
            Kind::RegularTree { branching: *b }
        }
        SpaceSpec::Tree { branching: None, edges: Some(edges) } => compile_tree(edges)?,
        SpaceSpec::Tree { .. } => {
            return malformed("tree needs exactly one of `branching` or `edges`")
        }
        SpaceSpec::PointLine { coords } => {
            if coords.is_empty() {
                return malformed("point_line needs at least one coordinate");
            }
            if coords.windows(2).any(|w| w[0] >= w[1]) {
                return malformed("point_line coordinates must be strictly increasing");
            }
            Kind::PointLine { coords: coords.clone() }
        }
        SpaceSpec::DisjointUnion { blocks, gaps } => {
            if blocks.is_empty() {
                return malformed("disjoint_union needs at least one block");
            }
            if gaps.len() + 1 != blocks.len() {
                return malformed("disjoint_union needs one gap between consecutive blocks");
            }
            if gaps.contains(&0) {
                return malformed("disjoint_union gaps must be positive");
            }
            let blocks = blocks
                .iter()
                .map(|b| Space::new(b.clone()))
                .collect::<Result<Vec<_>>>()?;
            let mut offsets = Vec::with_capacity(2 * blocks.len());
            let mut pos = 0u64;
            for (k, block) in blocks.iter().enumerate() {
                let Some(diam) = block.diameter() else {
                    return malformed("disjoint_union blocks must be finite");
                };
                offsets.push(pos);
                pos += diam;
                offsets.push(pos);
                if k < gaps.len() {
                    pos += gaps[k];
                }
            }
            Kind::Union { blocks, offsets }
        }
        SpaceSpec::ProductFinite { base, n } => {
            if *n == 0 {
                return malformed("product_finite needs n >= 1");
            }
            Kind::Product { base: Box::new(Space::new((**base).clone())?), n: *n }
        }
        SpaceSpec::Custom { points, dist } => {
            let n = dist.len();
            if n == 0 || points.len() != n || dist.iter().any(|row| row.len() != n) {
                return malformed("custom distance table must be square and match the point list");
            }
            for a in 0..n {
                if dist[a][a] != 0 {
                    return Err(Error::MetricViolation { a, b: a, c: a });
                }
                for b in 0..n {
                    if dist[a][b] != dist[b][a] || (a != b && dist[a][b] == 0) {
                        return Err(Error::MetricViolation { a, b, c: b });
                    }
                }
            }
            for b in 0..n {
                for a in 0..n {
                    for c in 0..n {
                        if dist[a][c] > dist[a][b] + dist[b][c] {
                            return Err(Error::MetricViolation { a, b, c });
                        }
                    }
                }
            }
            Kind::Custom { dist: dist.clone() }
        }
    })
}

fn compile_tree(edges: &[(u64, u64)]) -> Result<Kind> {
    let n = edges.len() + 1;
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a as usize >= n || b as usize >= n || a == b {
            return Err(Error::MalformedSpec(format!("tree edge ({a},{b}) out of range")));
        }
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mut parent = vec![0u64; n];
    let mut depth = vec![0u64; n];
    let mut seen = HashSet::from([0u64]);
    let mut queue = std::collections::VecDeque::from([0u64]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u as usize] {
            if seen.insert(w) {
                parent[w as usize] = u;
                depth[w as usize] = depth[u as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    if seen.len() != n {
        return Err(Error::MalformedSpec("tree edges do not form a connected tree".into()));
    }
    Ok(Kind::FiniteTree { adj, parent, depth })
}
