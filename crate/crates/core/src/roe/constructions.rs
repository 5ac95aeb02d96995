use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;

use super::operator::BandedOperator;
use crate::amenability::PartialTranslation;
use crate::error::{Error, Result};
use crate::scale::SegmentFamily;
use crate::space::{PointId, Space, SpaceSpec, Window};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The diagonal projection `1_S` for window indices `S`.
pub fn char_projection(window: Arc<Window>, set: &[usize]) -> Result<BandedOperator> {
    BandedOperator::new(window, set.iter().collect::<BTreeSet<_>>().into_iter().map(|&i| (i, i, ONE)))
}

/// `v δ_x = δ_{t(x)}` for the pairs of `t` with both ends in the window.
pub fn from_partial_translation(t: &PartialTranslation, window: Arc<Window>) -> BandedOperator {
    let triples: Vec<_> = t
        .pairs()
        .iter()
        .filter_map(|(x, y)| Some((window.index_of(y)?, window.index_of(x)?, ONE)))
        .collect();
    BandedOperator::new(window, triples).expect("indices come from the window")
}

fn segment_indices(f: &SegmentFamily, w: &Window) -> Result<Vec<Vec<usize>>> {
    f.segments
        .iter()
        .map(|seg| {
            seg.iter()
                .map(|p| w.index_of(p).ok_or_else(|| Error::SegmentOutsideWindow(p.to_string())))
                .collect()
        })
        .collect()
}

/// Shifts each segment one step forward, kills its last point and fixes everything else.
pub fn segment_shift(f: &SegmentFamily, window: Arc<Window>) -> Result<BandedOperator> {
    let segs = segment_indices(f, &window)?;
    let on_segment: BTreeSet<usize> = segs.iter().flatten().copied().collect();
    let mut triples: Vec<_> = (0..window.len()).filter(|i| !on_segment.contains(i)).map(|i| (i, i, ONE)).collect();
    for seg in &segs {
        triples.extend(seg.windows(2).map(|p| (p[1], p[0], ONE)));
    }
    BandedOperator::new(window, triples)
}

/// `(1 − Σ e_last, 1 − Σ e_first)`: the expected values of `v*v` and `vv*` for the segment shift.
pub fn segment_shift_targets(f: &SegmentFamily, window: Arc<Window>) -> Result<(BandedOperator, BandedOperator)> {
    let segs = segment_indices(f, &window)?;
    let lasts: BTreeSet<usize> = segs.iter().filter_map(|s| s.last().copied()).collect();
    let firsts: BTreeSet<usize> = segs.iter().filter_map(|s| s.first().copied()).collect();
    let keep = |drop: &BTreeSet<usize>| -> Vec<usize> { (0..window.len()).filter(|i| !drop.contains(i)).collect() };
    Ok((char_projection(window.clone(), &keep(&lasts))?, char_projection(window.clone(), &keep(&firsts))?))
}

/// The operators of the cancellation argument for a segment family.
#[derive(Debug, Clone)]
pub struct CancellationWitness {
    /// `1_{A ∪ (w∖C)}` with `A` the non-final segment points.
    pub p: BandedOperator,
    /// `1_{B ∪ (w∖C)}` with `B` the non-initial segment points.
    pub q: BandedOperator,
    /// The segment shift, with `v*v = p` and `vv* = q`.
    pub v: BandedOperator,
    /// Sends each first point to the last point of its segment: `w'*w' = 1 − q`, `w'w'* = 1 − p`.
    pub end_swap: BandedOperator,
    /// A first point farther than `s` from every last point.
    pub probe: usize,
    pub probe_distance: u64,
}

pub fn cancellation_witness(f: &SegmentFamily, window: Arc<Window>, s: u64) -> Result<CancellationWitness> {
    if s == 0 {
        return Err(Error::Invalid("cancellation witness needs s >= 1".into()));
    }
    let segs = segment_indices(f, &window)?;
    let (p, q) = segment_shift_targets(f, window.clone())?;
    let v = segment_shift(f, window.clone())?;
    let lasts: Vec<usize> = segs.iter().filter_map(|s| s.last().copied()).collect();
    let end_swap = BandedOperator::new(
        window.clone(),
        segs.iter().filter(|s| !s.is_empty()).map(|s| (s[s.len() - 1], s[0], ONE)),
    )?;
    let (probe, probe_distance) = segs
        .iter()
        .filter_map(|seg| seg.first())
        .map(|&x| (x, window.dist_to_set(x, &lasts).unwrap_or(u64::MAX)))
        .find(|&(_, d)| d > s)
        .ok_or(Error::NoProbe { s })?;
    Ok(CancellationWitness { p, q, v, end_swap, probe, probe_distance })
}

/// The window `wZ2 × {1..levels}` of the product of `Z²` with a `levels`-point path.
pub fn level_window(wz2: &Window, levels: u32) -> Result<Arc<Window>> {
    if wz2.space().spec() != &SpaceSpec::grid(2) {
        return Err(Error::WrongSpace { expected: "a window of Z²", got: wz2.space().kind_name().into() });
    }
    let product = Arc::new(Space::new(SpaceSpec::ProductFinite { base: Box::new(SpaceSpec::grid(2)), n: levels })?);
    let points = wz2
        .points()
        .iter()
        .flat_map(|p| (1..=levels).map(move |n| PointId::Level(Box::new(p.clone()), n)));
    Ok(Arc::new(Window::new(product, points)?))
}

/// `u_f` on `wZ2 × {1..levels}`: level `n` at column `x` moves one step right when
/// `1 <= n <= f(x)`, one step left when `1 <= n <= −f(x)`, and stays otherwise.
/// Moves leaving the window are dropped.
pub fn build_uf(wz2: &Window, levels: u32, f: impl Fn(i64) -> i64) -> Result<BandedOperator> {
    let needed = wz2
        .points()
        .iter()
        .map(|p| f(p.as_grid().map_or(0, |c| c[0])).unsigned_abs())
        .max()
        .unwrap_or(0);
    if needed > u64::from(levels) {
        return Err(Error::LevelsTooSmall { needed, levels });
    }
    let window = level_window(wz2, levels)?;
    let mut triples = Vec::with_capacity(window.len());
    for (j, point) in window.points().iter().enumerate() {
        let PointId::Level(base, level) = point else { unreachable!("level window points") };
        let c = base.as_grid().expect("grid point");
        let fx = f(c[0]);
        let n = i64::from(*level);
        let step = if fx > 0 && n <= fx {
            1
        } else if fx < 0 && n <= -fx {
            -1
        } else {
            0
        };
        let target = PointId::Level(Box::new(PointId::grid(&[c[0] + step, c[1]])), *level);
        if let Some(i) = window.index_of(&target) {
            triples.push((i, j, ONE));
        }
    }
    BandedOperator::new(window, triples)
}
