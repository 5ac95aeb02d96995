//! Colored covers witnessing asymptotic dimension upper bounds at a fixed scale.
//!
//! A cover with `d + 1` colors partitions a window into pieces of diameter at
//! most `bound` such that distinct pieces of one color are more than `r` apart.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scale::components_at_scale;
use crate::space::{PointId, SpaceSpec, Window};

/// `colors[c][k]` is the `k`-th piece of color `c`, as window indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredCover {
    pub r: u64,
    pub bound: u64,
    pub colors: Vec<Vec<Vec<usize>>>,
}

impl ColoredCover {
    pub fn num_colors(&self) -> usize {
        self.colors.len()
    }

    pub fn used_colors(&self) -> usize {
        self.colors.iter().filter(|c| !c.is_empty()).count()
    }

    pub fn pieces(&self) -> impl Iterator<Item = (usize, &Vec<usize>)> {
        self.colors
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |p| (c, p)))
    }
}

/// First counterexample found by [`verify_decomposition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverViolation {
    /// A window point in no piece.
    Uncovered(usize),
    /// A point listed twice, or an index outside the window.
    Overlap(usize),
    /// Two points of distinct same-color pieces at distance `<= r`.
    TooClose { color: usize, a: usize, b: usize, dist: u64 },
    /// Two points of one piece farther apart than the bound.
    TooWide { color: usize, a: usize, b: usize, dist: u64 },
}

impl fmt::Display for CoverViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverViolation::Uncovered(i) => write!(f, "point #{i} is not covered"),
            CoverViolation::Overlap(i) => write!(f, "point #{i} is covered twice or unknown"),
            CoverViolation::TooClose { color, a, b, dist } => {
                write!(f, "color {color}: points #{a} and #{b} of distinct pieces at distance {dist}")
            }
            CoverViolation::TooWide { color, a, b, dist } => {
                write!(f, "color {color}: points #{a} and #{b} of one piece at distance {dist}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    pub partition: bool,
    pub separation: bool,
    pub bound: bool,
    /// Largest piece diameter actually present.
    pub max_diameter: u64,
    pub counterexample: Option<CoverViolation>,
}

impl CoverReport {
    pub fn passed(&self) -> bool {
        self.partition && self.separation && self.bound
    }
}

/// Checks partition, same-color separation and the diameter bound exhaustively.
pub fn verify_decomposition(w: &Window, cover: &ColoredCover) -> CoverReport {
    let n = w.len();
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut counterexample = None;
    let mut partition = true;
    for (c, pieces) in cover.colors.iter().enumerate() {
        for (k, piece) in pieces.iter().enumerate() {
            for &i in piece {
                if i >= n || owner[i].is_some() {
                    partition = false;
                    counterexample.get_or_insert(CoverViolation::Overlap(i));
                } else {
                    owner[i] = Some((c, k));
                }
            }
        }
    }
    if let Some(i) = owner.iter().position(Option::is_none) {
        partition = false;
        counterexample.get_or_insert(CoverViolation::Uncovered(i));
    }

    let close = (0..n).into_par_iter().find_map_first(|i| {
        let (c, k) = owner[i]?;
        w.neighbors_within(i, cover.r).into_iter().find_map(|j| match owner[j] {
            Some((c2, k2)) if j > i && c2 == c && k2 != k => {
                Some(CoverViolation::TooClose { color: c, a: i, b: j, dist: w.dist(i, j) })
            }
            _ => None,
        })
    });
    let separation = close.is_none();
    if let Some(v) = close {
        counterexample.get_or_insert(v);
    }

    let pieces: Vec<(usize, &Vec<usize>)> = cover.pieces().collect();
    let diameters: Vec<(u64, usize, usize, usize)> = pieces
        .par_iter()
        .map(|(c, piece)| {
            let valid: Vec<usize> = piece.iter().copied().filter(|&i| i < n).collect();
            let (d, a, b) = piece_diameter(w, &valid);
            (d, *c, a, b)
        })
        .collect();
    let max_diameter = diameters.iter().map(|d| d.0).max().unwrap_or(0);
    let wide = diameters.iter().find(|d| d.0 > cover.bound);
    let bound = wide.is_none();
    if let Some(&(dist, color, a, b)) = wide {
        counterexample.get_or_insert(CoverViolation::TooWide { color, a, b, dist });
    }
    CoverReport { partition, separation, bound, max_diameter, counterexample }
}

/// Diameter of a set of window points with a realizing pair.
pub fn piece_diameter(w: &Window, piece: &[usize]) -> (u64, usize, usize) {
    if piece.is_empty() {
        return (0, 0, 0);
    }
    if let SpaceSpec::Grid { dim } = w.space().spec() {
        // ℓ¹ diameter is the widest spread of Σ s_i x_i over sign vectors s
        let dim = *dim;
        let mut best = (0, piece[0], piece[0]);
        for signs in 0..(1u32 << dim.saturating_sub(1)) {
            let proj = |i: usize| -> i64 {
                let c = w.point(i).as_grid().expect("grid point");
                c.iter()
                    .enumerate()
                    .map(|(a, x)| if a > 0 && signs >> (a - 1) & 1 == 1 { -x } else { *x })
                    .sum()
            };
            let lo = *piece.iter().min_by_key(|&&i| proj(i)).unwrap();
            let hi = *piece.iter().max_by_key(|&&i| proj(i)).unwrap();
            let d = (proj(hi) - proj(lo)) as u64;
            if d > best.0 {
                best = (d, lo, hi);
            }
        }
        return best;
    }
    let mut best = (0, piece[0], piece[0]);
    for (x, &i) in piece.iter().enumerate() {
        for &j in &piece[x + 1..] {
            let d = w.dist(i, j);
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

fn line_coord(p: &PointId) -> Option<i64> {
    match p {
        PointId::Coord(x) => Some(*x),
        PointId::Grid(c) if c.len() == 1 => Some(c[0]),
        _ => None,
    }
}

fn group_pieces<K: Ord>(n_colors: usize, keyed: impl Iterator<Item = (usize, K, usize)>) -> Vec<Vec<Vec<usize>>> {
    let mut map: BTreeMap<(usize, K), Vec<usize>> = BTreeMap::new();
    for (color, key, i) in keyed {
        map.entry((color, key)).or_default().push(i);
    }
    let mut colors = vec![Vec::new(); n_colors];
    for ((color, _), piece) in map {
        colors[color].push(piece);
    }
    colors
}

/// Two-color cover of a window of `Z`: intervals of length `2r` alternating colors.
pub fn witness_line(r: u64, w: &Window) -> Result<ColoredCover> {
    if r == 0 {
        return Err(Error::Invalid("witness_line needs r >= 1".into()));
    }
    let period = 2 * r as i64;
    let keyed = (0..w.len())
        .map(|i| {
            let x = line_coord(w.point(i)).ok_or_else(|| Error::WrongSpace {
                expected: "a window of Z",
                got: w.space().kind_name().to_string(),
            })?;
            let block = x.div_euclid(period);
            Ok((block.rem_euclid(2) as usize, block, i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ColoredCover { r, bound: 2 * r - 1, colors: group_pieces(2, keyed.into_iter()) })
}

/// Three-color cover of a window of `Z²` built from cells of side `10r`:
/// corner squares, edge strips, and cell interiors.
pub fn witness_grid2(r: u64, w: &Window) -> Result<ColoredCover> {
    if r == 0 {
        return Err(Error::Invalid("witness_grid2 needs r >= 1".into()));
    }
    if w.space().spec() != &SpaceSpec::grid(2) {
        return Err(Error::WrongSpace {
            expected: "a window of Z²",
            got: w.space().kind_name().to_string(),
        });
    }
    let r_ = r as i64;
    let cell = 10 * r_;
    let keyed = (0..w.len()).map(|i| {
        let c = w.point(i).as_grid().expect("grid point");
        let (x, y) = (c[0], c[1]);
        // nearest grid line and offset from it, offset in [-5r, 5r)
        let (lx, ly) = ((x + 5 * r_).div_euclid(cell), (y + 5 * r_).div_euclid(cell));
        let (dx, dy) = (x - lx * cell, y - ly * cell);
        let (cx, cy) = (x.div_euclid(cell), y.div_euclid(cell));
        let corner = |d: i64| (-3 * r_..3 * r_).contains(&d);
        let strip = |d: i64| (-r_..r_).contains(&d);
        if corner(dx) && corner(dy) {
            (0, (lx, ly, 0u8), i)
        } else if strip(dy) {
            (1, (cx, ly, 1), i)
        } else if strip(dx) {
            (1, (lx, cy, 2), i)
        } else {
            (2, (cx, cy, 3), i)
        }
    });
    Ok(ColoredCover { r, bound: 20 * r, colors: group_pieces(3, keyed) })
}

/// Two-color cover of a window of a tree or free group: annuli of width `2r`
/// around `root` alternate colors, pieces are the `r`-classes inside each annulus.
pub fn witness_tree(root: &PointId, r: u64, w: &Window) -> Result<ColoredCover> {
    if r == 0 {
        return Err(Error::Invalid("witness_tree needs r >= 1".into()));
    }
    let space = w.space();
    if !space.is_treelike() {
        return Err(Error::NotTreelike(space.kind_name().to_string()));
    }
    let mut annuli: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for i in 0..w.len() {
        let level = space.dist(root, w.point(i))?;
        annuli.entry(level / (2 * r)).or_default().push(i);
    }
    let mut colors = vec![Vec::new(), Vec::new()];
    for (a, members) in annuli {
        let sub = w.restrict(&members);
        // restrict() keeps canonical order, and members are ascending, so indices map directly
        for class in components_at_scale(&sub, r).classes {
            colors[(a % 2) as usize].push(class.into_iter().map(|k| members[k]).collect());
        }
    }
    Ok(ColoredCover { r, bound: 5 * r, colors })
}

/// Heuristic search for a `(d+1)`-colored cover with pieces of diameter at most `bound`.
///
/// Tries the `r`-classes first (one color), then greedy carving into pieces of
/// diameter `<= bound` followed by a budgeted backtracking coloring of the
/// conflict graph. Only verified covers are returned.
pub fn greedy_cover(w: &Window, r: u64, d: usize, bound: u64) -> Result<ColoredCover> {
    let n_colors = d + 1;
    let classes = components_at_scale(w, r).classes;
    if classes.iter().all(|c| piece_diameter(w, c).0 <= bound) {
        let mut colors = vec![Vec::new(); n_colors];
        colors[0] = classes;
        let cover = ColoredCover { r, bound, colors };
        if verify_decomposition(w, &cover).passed() {
            return Ok(cover);
        }
    }
    if d == 0 {
        return Err(Error::SearchExhausted);
    }

    let pieces = carve(w, bound);
    let mut piece_of = vec![0; w.len()];
    for (k, p) in pieces.iter().enumerate() {
        for &i in p {
            piece_of[i] = k;
        }
    }
    let mut conflicts = vec![Vec::new(); pieces.len()];
    for i in 0..w.len() {
        for j in w.neighbors_within(i, r) {
            let (a, b) = (piece_of[i], piece_of[j]);
            if a != b {
                conflicts[a].push(b);
            }
        }
    }
    for list in &mut conflicts {
        list.sort_unstable();
        list.dedup();
    }
    let coloring = color_graph(&conflicts, n_colors, 200_000).ok_or(Error::SearchExhausted)?;
    let mut colors = vec![Vec::new(); n_colors];
    for (k, piece) in pieces.into_iter().enumerate() {
        colors[coloring[k]].push(piece);
    }
    let cover = ColoredCover { r, bound, colors };
    if verify_decomposition(w, &cover).passed() {
        Ok(cover)
    } else {
        Err(Error::SearchExhausted)
    }
}

fn carve(w: &Window, bound: u64) -> Vec<Vec<usize>> {
    let mut assigned = vec![false; w.len()];
    let mut pieces = Vec::new();
    for seed in 0..w.len() {
        if assigned[seed] {
            continue;
        }
        let mut candidates: Vec<usize> = w
            .neighbors_within(seed, bound)
            .into_iter()
            .filter(|&j| !assigned[j])
            .collect();
        candidates.sort_by_key(|&j| (w.dist(seed, j), j));
        let mut piece: Vec<usize> = Vec::new();
        for j in candidates {
            if piece.iter().all(|&k| w.dist(j, k) <= bound) {
                piece.push(j);
            }
        }
        for &j in &piece {
            assigned[j] = true;
        }
        piece.sort_unstable();
        pieces.push(piece);
    }
    pieces
}

/// DSatur-ordered backtracking coloring within a node budget.
fn color_graph(adj: &[Vec<usize>], k: usize, budget: usize) -> Option<Vec<usize>> {
    fn go(adj: &[Vec<usize>], k: usize, color: &mut [usize], budget: &mut usize) -> bool {
        let uncolored = (0..adj.len()).filter(|&v| color[v] == usize::MAX);
        let Some(v) = uncolored.max_by_key(|&v| {
            let mut seen: Vec<usize> = adj[v]
                .iter()
                .map(|&u| color[u])
                .filter(|&c| c != usize::MAX)
                .collect();
            seen.sort_unstable();
            seen.dedup();
            (seen.len(), adj[v].len(), std::cmp::Reverse(v))
        }) else {
            return true;
        };
        for c in 0..k {
            if adj[v].iter().any(|&u| color[u] == c) {
                continue;
            }
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            color[v] = c;
            if go(adj, k, color, budget) {
                return true;
            }
            color[v] = usize::MAX;
        }
        false
    }
    let mut color = vec![usize::MAX; adj.len()];
    let mut budget = budget;
    go(adj, k, &mut color, &mut budget).then_some(color)
}
