use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::space::{PointId, Space, Window};

/// `|N_r(F)|` in the ambient space, where `N_r(F) = {x : d(x, F) <= r}`.
pub fn neighborhood_size(space: &Space, set: &[PointId], r: u64) -> Result<usize> {
    let mut seen = HashSet::new();
    for x in set {
        seen.extend(space.ball(x, r)?);
    }
    Ok(seen.len())
}

fn within(neighborhood: usize, size: usize, eps: Ratio<u64>) -> bool {
    let (num, den) = (*eps.numer() as u128, *eps.denom() as u128);
    neighborhood as u128 * den <= (den + num) * size as u128
}

/// A finite set `F` with `|N_r(F)| <= (1 + ε)|F|`.
#[derive(Debug, Clone)]
pub struct FolnerCertificate {
    pub space: Arc<Space>,
    pub r: u64,
    pub eps: Ratio<u64>,
    pub set: Vec<PointId>,
    pub neighborhood: usize,
}

impl FolnerCertificate {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.neighborhood as u64, self.set.len() as u64)
    }

    /// Recomputes the neighbourhood from `F` alone and checks the stored count and the bound.
    pub fn verify(&self) -> Result<bool> {
        if self.set.is_empty() {
            return Ok(false);
        }
        let distinct: BTreeSet<&PointId> = self.set.iter().collect();
        let n = neighborhood_size(&self.space, &self.set, self.r)?;
        Ok(distinct.len() == self.set.len() && n == self.neighborhood && within(n, self.set.len(), self.eps))
    }
}

/// Largest candidate set the ball phase evaluates.
pub const MAX_BALL_SET: usize = 50_000;
/// Largest set the local-move phase starts from.
pub const MAX_LOCAL_SET: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FolnerBudget {
    /// Balls around the base point, then local add/remove moves; at most this many sets are evaluated.
    Balls(usize),
    /// Every nonempty subset of the ball of this radius around the base point.
    SubsetsOfBall(u64),
}

/// Searches for a Følner set. `None` means nothing was found within the budget.
pub fn folner_search(space: &Arc<Space>, r: u64, eps: Ratio<u64>, budget: FolnerBudget) -> Result<Option<FolnerCertificate>> {
    if r == 0 || *eps.numer() == 0 {
        return Err(Error::Invalid("Følner search needs r >= 1 and ε > 0".into()));
    }
    let certify = |set: Vec<PointId>, neighborhood: usize| {
        within(neighborhood, set.len(), eps).then(|| FolnerCertificate {
            space: space.clone(),
            r,
            eps,
            set,
            neighborhood,
        })
    };
    match budget {
        FolnerBudget::SubsetsOfBall(radius) => {
            let best = subset_minimum(space, &space.base_point(), radius, r)?;
            Ok(certify(best.set, best.neighborhood))
        }
        FolnerBudget::Balls(limit) => {
            let base = space.base_point();
            let mut evaluated = 0;
            let mut best: Option<(Vec<PointId>, usize)> = None;
            let mut prev_len = 0;
            for k in 0.. {
                if evaluated >= limit {
                    break;
                }
                let Ok(ball) = space.ball_capped(&base, k, MAX_BALL_SET) else { break };
                if ball.len() == prev_len {
                    break;
                }
                prev_len = ball.len();
                let n = neighborhood_size(space, &ball, r)?;
                evaluated += 1;
                if within(n, ball.len(), eps) {
                    return Ok(certify(ball, n));
                }
                if best.as_ref().is_none_or(|(s, bn)| n * s.len() < bn * ball.len()) {
                    best = Some((ball, n));
                }
            }
            let Some((mut set, mut n)) = best.filter(|(s, _)| s.len() <= MAX_LOCAL_SET) else { return Ok(None) };
            while evaluated < limit {
                let members: BTreeSet<PointId> = set.iter().cloned().collect();
                let mut moves: Vec<Vec<PointId>> = Vec::new();
                let mut boundary = BTreeSet::new();
                for x in &set {
                    boundary.extend(space.ball(x, r)?.into_iter().filter(|y| !members.contains(y)));
                }
                for y in boundary {
                    let mut s = set.clone();
                    s.push(y);
                    moves.push(s);
                }
                if set.len() > 1 {
                    for k in 0..set.len() {
                        let mut s = set.clone();
                        s.remove(k);
                        moves.push(s);
                    }
                }
                let mut improved = None;
                for s in moves {
                    if evaluated >= limit {
                        break;
                    }
                    evaluated += 1;
                    let m = neighborhood_size(space, &s, r)?;
                    let (bs, bn) = improved.as_ref().map_or((set.len(), n), |(s, m): &(Vec<PointId>, usize)| (s.len(), *m));
                    if m * bs < bn * s.len() {
                        improved = Some((s, m));
                    }
                }
                let Some((s, m)) = improved else { break };
                set = s;
                set.sort();
                n = m;
                if within(n, set.len(), eps) {
                    return Ok(certify(set, n));
                }
            }
            Ok(None)
        }
    }
}

const MAX_SUBSET_POINTS: usize = 24;
const MAX_SUBSET_UNIVERSE: usize = 128;

/// Calls `visit(mask, |N_r(F)|)` for every nonempty subset `F` of `points`.
fn scan_subsets(space: &Space, points: &[PointId], r: u64, mut visit: impl FnMut(usize, usize)) -> Result<()> {
    let n = points.len();
    if n > MAX_SUBSET_POINTS {
        return Err(Error::CapExceeded { size: n, cap: MAX_SUBSET_POINTS });
    }
    let mut universe: HashMap<PointId, usize> = HashMap::new();
    let mut single = Vec::with_capacity(n);
    for x in points {
        let mut bits = 0u128;
        for y in space.ball(x, r)? {
            let next = universe.len();
            let k = *universe.entry(y).or_insert(next);
            if k >= MAX_SUBSET_UNIVERSE {
                return Err(Error::CapExceeded { size: k + 1, cap: MAX_SUBSET_UNIVERSE });
            }
            bits |= 1 << k;
        }
        single.push(bits);
    }
    let mut nb = vec![0u128; 1 << n];
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        nb[mask] = nb[mask & (mask - 1)] | single[low];
        visit(mask, nb[mask].count_ones() as usize);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetMinimum {
    pub set: Vec<PointId>,
    pub neighborhood: usize,
    pub subsets: u64,
}

impl SubsetMinimum {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.neighborhood as u64, self.set.len() as u64)
    }
}

/// The least `|N_r(F)| / |F|` over all nonempty `F ⊆ B_radius(center)`.
pub fn subset_minimum(space: &Space, center: &PointId, radius: u64, r: u64) -> Result<SubsetMinimum> {
    let points = space.ball(center, radius)?;
    let mut best = (0usize, 0usize, 0usize);
    let mut subsets = 0;
    scan_subsets(space, &points, r, |mask, nb| {
        subsets += 1;
        let size = mask.count_ones() as usize;
        if best.1 == 0 || nb * best.1 < best.0 * size {
            best = (nb, size, mask);
        }
    })?;
    let set = (0..points.len()).filter(|k| best.2 >> k & 1 == 1).map(|k| points[k].clone()).collect();
    Ok(SubsetMinimum { set, neighborhood: best.0, subsets })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoMode {
    /// All subsets of the window; at most 20 points.
    Exhaustive,
    /// Window-restricted balls around every point.
    Balls,
    /// Greedy growth from every point, adding the point that enlarges the neighbourhood least.
    Greedy,
}

pub const EXHAUSTIVE_WINDOW_CAP: usize = 20;

/// Per size `k <= size_cap`, the least ratio `|N_r(F)| / k` found for `F ⊆ w`, `|F| = k`.
/// Neighbourhoods are taken in the ambient space.
pub fn isoperimetric_profile(w: &Window, r: u64, mode: IsoMode, size_cap: usize) -> Result<Vec<(usize, Ratio<u64>)>> {
    let space = w.space();
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    let mut record = |size: usize, nb: usize| {
        if size <= size_cap {
            let slot = best.entry(size).or_insert(usize::MAX);
            *slot = (*slot).min(nb);
        }
    };
    match mode {
        IsoMode::Exhaustive => {
            if w.len() > EXHAUSTIVE_WINDOW_CAP {
                return Err(Error::CapExceeded { size: w.len(), cap: EXHAUSTIVE_WINDOW_CAP });
            }
            scan_subsets(space, w.points(), r, |mask, nb| record(mask.count_ones() as usize, nb))?;
        }
        IsoMode::Balls => {
            let diam = w.diameter();
            for i in 0..w.len() {
                let mut last = 0;
                for k in 0..=diam {
                    let set: Vec<PointId> = w.neighbors_within(i, k).into_iter().map(|j| w.point(j).clone()).collect();
                    if set.len() == last {
                        continue;
                    }
                    last = set.len();
                    record(set.len(), neighborhood_size(space, &set, r)?);
                    if set.len() >= size_cap.min(w.len()) {
                        break;
                    }
                }
            }
        }
        IsoMode::Greedy => {
            let balls: Vec<Vec<PointId>> = w.points().iter().map(|x| space.ball(x, r)).collect::<Result<_>>()?;
            for start in 0..w.len() {
                let mut inside = vec![false; w.len()];
                let mut covered: HashSet<&PointId> = HashSet::new();
                inside[start] = true;
                covered.extend(&balls[start]);
                record(1, covered.len());
                for size in 2..=size_cap.min(w.len()) {
                    let pick = (0..w.len())
                        .filter(|&j| !inside[j])
                        .min_by_key(|&j| (balls[j].iter().filter(|y| !covered.contains(y)).count(), j));
                    let Some(j) = pick else { break };
                    inside[j] = true;
                    covered.extend(&balls[j]);
                    record(size, covered.len());
                }
            }
        }
    }
    Ok(best.into_iter().map(|(k, nb)| (k, Ratio::new(nb as u64, k as u64))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceSpec;

    fn space(spec: SpaceSpec) -> Arc<Space> {
        Arc::new(Space::new(spec).unwrap())
    }

    #[test]
    fn line_certificate() {
        let z = space(SpaceSpec::grid(1));
        let cert = folner_search(&z, 1, Ratio::new(1, 10), FolnerBudget::Balls(100)).unwrap().unwrap();
        assert_eq!(cert.set.len(), 21);
        assert_eq!(cert.neighborhood, 23);
        assert!(cert.verify().unwrap());
    }

    #[test]
    fn powers_of_two_certificate() {
        let line = space(SpaceSpec::point_line((0..10).map(|k| 1 << k).collect()));
        let cert = folner_search(&line, 1, Ratio::new(1, 100), FolnerBudget::Balls(100)).unwrap().unwrap();
        assert_eq!(cert.set, vec![PointId::Coord(1), PointId::Coord(2)]);
        assert_eq!(cert.ratio(), Ratio::from_integer(1));
    }

    #[test]
    fn tampered_certificate_fails() {
        let z = space(SpaceSpec::grid(1));
        let mut cert = folner_search(&z, 1, Ratio::new(1, 10), FolnerBudget::Balls(100)).unwrap().unwrap();
        cert.set.pop();
        assert!(!cert.verify().unwrap());
    }

    #[test]
    fn free_group_has_no_small_folner_set() {
        let f2 = space(SpaceSpec::free_group(2));
        let found = folner_search(&f2, 1, Ratio::new(1, 10), FolnerBudget::SubsetsOfBall(1)).unwrap();
        assert!(found.is_none());
        let min = subset_minimum(&f2, &f2.base_point(), 1, 1).unwrap();
        assert_eq!(min.subsets, 31);
        assert_eq!(min.ratio(), Ratio::new(17, 5));
        assert_eq!(min.set.len(), 5);
        assert!(folner_search(&f2, 1, Ratio::new(1, 10), FolnerBudget::Balls(200)).unwrap().is_none());
    }

    #[test]
    fn interval_profiles() {
        let z = space(SpaceSpec::grid(1));
        let w = Window::new(z, (0..12).map(|x| PointId::grid(&[x]))).unwrap();
        for mode in [IsoMode::Exhaustive, IsoMode::Balls, IsoMode::Greedy] {
            let profile = isoperimetric_profile(&w, 1, mode, 12).unwrap();
            for (k, ratio) in profile {
                assert_eq!(ratio, Ratio::new(k as u64 + 2, k as u64), "{mode:?} size {k}");
            }
        }
    }

    #[test]
    fn singleton_ratio_is_ball_size() {
        let f2 = space(SpaceSpec::free_group(2));
        let w = Window::ball(f2, &PointId::word(&[]), 1).unwrap();
        let profile = isoperimetric_profile(&w, 2, IsoMode::Exhaustive, 1).unwrap();
        assert_eq!(profile, vec![(1, Ratio::from_integer(17))]);
    }

    #[test]
    fn exhaustive_mode_is_capped() {
        let z = space(SpaceSpec::grid(1));
        let w = Window::new(z, (0..21).map(|x| PointId::grid(&[x]))).unwrap();
        assert!(matches!(
            isoperimetric_profile(&w, 1, IsoMode::Exhaustive, 5),
            Err(Error::CapExceeded { size: 21, cap: 20 })
        ));
    }
}
