//! Maps between spaces, sampled on a source window, and their coarse classification.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::space::{PointId, Space, Window};

/// A map defined on every point of a source window.
#[derive(Debug, Clone)]
pub struct CoarseMap {
    source: Window,
    target: Arc<Space>,
    images: Vec<PointId>,
}

impl PartialEq for CoarseMap {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.target.spec() == other.target.spec() && self.images == other.images
    }
}

impl CoarseMap {
    /// `images[i]` is the image of `source.point(i)`.
    pub fn new(source: Window, target: Arc<Space>, images: Vec<PointId>) -> Result<CoarseMap> {
        if images.len() != source.len() {
            return Err(Error::DomainMismatch(format!(
                "{} images for {} source points",
                images.len(),
                source.len()
            )));
        }
        if let Some(bad) = images.iter().find(|p| !target.contains(p)) {
            return Err(Error::UnknownPoint(bad.to_string()));
        }
        Ok(CoarseMap { source, target, images })
    }

    pub fn from_fn(source: Window, target: Arc<Space>, f: impl Fn(&PointId) -> PointId) -> Result<CoarseMap> {
        let images = source.points().iter().map(f).collect();
        CoarseMap::new(source, target, images)
    }

    pub fn identity(source: Window) -> CoarseMap {
        let target = source.space().clone();
        let images = source.points().to_vec();
        CoarseMap { source, target, images }
    }

    /// `{"pairs":[[src,tgt],...]}`; the source window is the set of listed sources.
    pub fn from_json(source_space: Arc<Space>, target: Arc<Space>, value: &Value) -> Result<CoarseMap> {
        let pairs = value
            .get("pairs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Invalid("map needs `pairs`".into()))?;
        let mut table = HashMap::new();
        for pair in pairs {
            let (s, t) = match pair.as_array().map(Vec::as_slice) {
                Some([s, t]) => (source_space.point_from_json(s)?, target.point_from_json(t)?),
                _ => return Err(Error::Invalid("each pair is [source, target]".into())),
            };
            if table.insert(s.clone(), t).is_some() {
                return Err(Error::Invalid(format!("source point {s} listed twice")));
            }
        }
        let source = Window::new(source_space, table.keys().cloned())?;
        let images = source.points().iter().map(|p| table[p].clone()).collect();
        CoarseMap::new(source, target, images)
    }

    pub fn to_json(&self) -> Value {
        let pairs: Vec<Value> = (0..self.source.len())
            .map(|i| json!([self.source.point_json(i), self.target.point_to_json(&self.images[i])]))
            .collect();
        json!({ "pairs": pairs })
    }

    pub fn source(&self) -> &Window {
        &self.source
    }

    pub fn target(&self) -> &Arc<Space> {
        &self.target
    }

    pub fn images(&self) -> &[PointId] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &PointId {
        &self.images[i]
    }

    /// Image of a point, if it lies in the source window.
    pub fn apply(&self, p: &PointId) -> Option<&PointId> {
        self.source.index_of(p).map(|i| &self.images[i])
    }

    fn image_dist(&self, i: usize, j: usize) -> u64 {
        self.target.dist_unchecked(&self.images[i], &self.images[j])
    }

    /// A pair of distinct source indices with equal images.
    pub fn collision(&self) -> Option<(usize, usize)> {
        let mut seen: HashMap<&PointId, usize> = HashMap::new();
        for (i, p) in self.images.iter().enumerate() {
            if let Some(&j) = seen.get(p) {
                return Some((j, i));
            }
            seen.insert(p, i);
        }
        None
    }

    pub fn is_injective(&self) -> bool {
        self.collision().is_none()
    }

    /// The image points as a window of the target.
    pub fn image_window(&self) -> Window {
        Window::new(self.target.clone(), self.images.iter().cloned()).expect("images are valid")
    }
}

/// Sampled envelopes, indexed by `t = 0..=diam(source)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionEnvelopes {
    /// `lower[t] = min{ d(fx, fy) : d(x, y) >= t }`.
    pub lower: Vec<u64>,
    /// `upper[t] = max{ d(fx, fy) : d(x, y) <= t }`.
    pub upper: Vec<u64>,
}

impl ExpansionEnvelopes {
    pub fn diameter(&self) -> u64 {
        self.upper.len() as u64 - 1
    }
}

pub fn expansion_envelopes(f: &CoarseMap) -> ExpansionEnvelopes {
    let w = f.source();
    let n = w.len();
    let fold = |mut acc: HashMap<u64, (u64, u64)>, i: usize| {
        for j in i..n {
            let (d, e) = (w.dist(i, j), f.image_dist(i, j));
            let slot = acc.entry(d).or_insert((e, e));
            slot.0 = slot.0.min(e);
            slot.1 = slot.1.max(e);
        }
        acc
    };
    let by_dist = (0..n)
        .into_par_iter()
        .fold(HashMap::new, fold)
        .reduce(HashMap::new, |mut a, b| {
            for (d, (lo, hi)) in b {
                let slot = a.entry(d).or_insert((lo, hi));
                slot.0 = slot.0.min(lo);
                slot.1 = slot.1.max(hi);
            }
            a
        });
    let diam = by_dist.keys().copied().max().unwrap_or(0) as usize;
    let mut upper = vec![0; diam + 1];
    let mut lower = vec![u64::MAX; diam + 1];
    for (&d, &(lo, hi)) in &by_dist {
        upper[d as usize] = hi;
        lower[d as usize] = lo;
    }
    for t in 1..=diam {
        upper[t] = upper[t].max(upper[t - 1]);
    }
    for t in (0..diam).rev() {
        lower[t] = lower[t].min(lower[t + 1]);
    }
    ExpansionEnvelopes { lower, upper }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub envelopes: ExpansionEnvelopes,
    /// Always true on a finite window; `envelopes.upper` is the control function.
    pub uniformly_expansive: bool,
    pub embedding_threshold: u64,
    /// `lower[diam] >= embedding_threshold`: far pairs stay apart at window scale.
    pub coarse_embedding_evidence: bool,
    /// Largest distance from a target-window point to the image.
    pub density: Option<u64>,
    /// Evidence plus `density <= c`.
    pub coarse_equivalence: Option<bool>,
    /// Least integer `L` with `t/L <= lower[t]` and `upper[t] <= L t` for `t >= 1`, if injective.
    pub bi_lipschitz: Option<u64>,
}

/// Classifies a map at window scale. `threshold` defaults to `max(1, diam/4)`.
pub fn classify(f: &CoarseMap, target_window: Option<&Window>, c: u64, threshold: Option<u64>) -> Classification {
    let envelopes = expansion_envelopes(f);
    let diam = envelopes.diameter();
    let embedding_threshold = threshold.unwrap_or((diam / 4).max(1));
    let coarse_embedding_evidence = envelopes.lower[diam as usize] >= embedding_threshold;
    let density = target_window.map(|tw| {
        (0..tw.len())
            .into_par_iter()
            .map(|j| {
                f.images()
                    .iter()
                    .map(|p| f.target().dist_unchecked(tw.point(j), p))
                    .min()
                    .unwrap_or(u64::MAX)
            })
            .max()
            .unwrap_or(0)
    });
    let coarse_equivalence = density.map(|d| coarse_embedding_evidence && d <= c);
    let bi_lipschitz = if f.is_injective() {
        (1..=diam as usize).try_fold(1u64, |l, t| {
            let (lo, hi) = (envelopes.lower[t], envelopes.upper[t]);
            (lo > 0).then(|| l.max(hi.div_ceil(t as u64)).max((t as u64).div_ceil(lo)))
        })
    } else {
        None
    };
    Classification {
        envelopes,
        uniformly_expansive: true,
        embedding_threshold,
        coarse_embedding_evidence,
        density,
        coarse_equivalence,
        bi_lipschitz,
    }
}

/// Largest distance from a window point to its nearest kept point, with a point attaining it.
pub fn covering_radius(w: &Window, kept: &[usize]) -> (u64, usize) {
    (0..w.len())
        .map(|i| (w.dist_to_set(i, kept).unwrap_or(u64::MAX), i))
        .max_by_key(|&(d, i)| (d, std::cmp::Reverse(i)))
        .unwrap_or((0, 0))
}

/// Greedy sub-window on which `f` is injective, checked to be `c`-dense in the source.
pub fn injectivity_net(f: &CoarseMap, c: u64) -> Result<Vec<usize>> {
    let kept = injective_greedy(f);
    let (radius, worst) = covering_radius(f.source(), &kept);
    if radius > c {
        return Err(Error::Infeasible(f.source().point(worst).to_string()));
    }
    Ok(kept)
}

/// The greedy injective sub-window with the least `c` for which it is dense.
pub fn injectivity_net_min_c(f: &CoarseMap) -> (Vec<usize>, u64) {
    let kept = injective_greedy(f);
    let (radius, _) = covering_radius(f.source(), &kept);
    (kept, radius)
}

fn injective_greedy(f: &CoarseMap) -> Vec<usize> {
    let mut used = std::collections::HashSet::new();
    (0..f.source().len()).filter(|&i| used.insert(f.image(i))).collect()
}

/// Greedy maximal `c`-separated subset in canonical order; it is automatically `c`-dense.
pub fn net_extract(w: &Window, c: u64) -> Vec<usize> {
    let mut taken = vec![false; w.len()];
    let mut net = Vec::new();
    for i in 0..w.len() {
        if c == 0 || !w.neighbors_within(i, c).iter().any(|&j| taken[j]) {
            taken[i] = true;
            net.push(i);
        }
    }
    net
}

/// `g ∘ f`; every image of `f` must lie in the source window of `g`.
pub fn compose(f: &CoarseMap, g: &CoarseMap) -> Result<CoarseMap> {
    if f.target().spec() != g.source().space().spec() {
        return Err(Error::DomainMismatch("target of the first map is not the source space of the second".into()));
    }
    let images = f
        .images()
        .iter()
        .map(|p| g.apply(p).cloned().ok_or_else(|| Error::DomainMismatch(format!("{p} is outside the second map's window"))))
        .collect::<Result<Vec<_>>>()?;
    CoarseMap::new(f.source().clone(), g.target().clone(), images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceSpec;

    fn z() -> Arc<Space> {
        Arc::new(Space::new(SpaceSpec::grid(1)).unwrap())
    }

    fn interval(lo: i64, hi: i64) -> Window {
        Window::new(z(), (lo..=hi).map(|x| PointId::grid(&[x]))).unwrap()
    }

    fn affine(w: &Window, a: i64, b: i64) -> CoarseMap {
        CoarseMap::from_fn(w.clone(), z(), |p| PointId::grid(&[a * p.as_grid().unwrap()[0] + b])).unwrap()
    }

    #[test]
    fn envelopes_of_simple_maps() {
        let w = interval(-10, 10);
        let z2 = Arc::new(Space::new(SpaceSpec::grid(2)).unwrap());
        let incl = CoarseMap::from_fn(w.clone(), z2, |p| PointId::grid(&[p.as_grid().unwrap()[0], 0])).unwrap();
        let env = expansion_envelopes(&incl);
        assert_eq!(env.lower, (0..=20).collect::<Vec<u64>>());
        assert_eq!(env.upper, env.lower);

        let env = expansion_envelopes(&affine(&w, 0, 0));
        assert!(env.lower.iter().chain(&env.upper).all(|&v| v == 0));

        let env = expansion_envelopes(&affine(&w, 2, 0));
        assert_eq!(env.upper, (0..=20).map(|t| 2 * t).collect::<Vec<u64>>());
        assert_eq!(env.lower, env.upper);
    }

    #[test]
    fn classify_inclusion_and_projection() {
        let z2 = Arc::new(Space::new(SpaceSpec::grid(2)).unwrap());
        let w = interval(-50, 50);
        let incl = CoarseMap::from_fn(w, z2.clone(), |p| PointId::grid(&[p.as_grid().unwrap()[0], 0])).unwrap();
        let tw = Window::ball(z2.clone(), &PointId::grid(&[0, 0]), 50).unwrap();
        let cls = classify(&incl, Some(&tw), 49, None);
        assert!(cls.coarse_embedding_evidence);
        assert_eq!(cls.density, Some(50));
        assert_eq!(cls.coarse_equivalence, Some(false));
        assert_eq!(classify(&incl, Some(&tw), 50, None).coarse_equivalence, Some(true));

        let sq = Window::ball(z2, &PointId::grid(&[0, 0]), 6).unwrap();
        let proj = CoarseMap::from_fn(sq, z(), |p| PointId::grid(&[p.as_grid().unwrap()[0]])).unwrap();
        let cls = classify(&proj, None, 0, None);
        assert!(cls.uniformly_expansive);
        assert!(cls.envelopes.lower.iter().all(|&v| v == 0));
        assert!(!cls.coarse_embedding_evidence);
        assert_eq!(cls.bi_lipschitz, None);
    }

    #[test]
    fn doubling_is_bi_lipschitz_and_dense() {
        let w = interval(-20, 20);
        let f = affine(&w, 2, 0);
        let tw = interval(-40, 40);
        let cls = classify(&f, Some(&tw), 1, None);
        assert_eq!(cls.density, Some(1));
        assert_eq!(cls.coarse_equivalence, Some(true));
        assert_eq!(cls.bi_lipschitz, Some(2));
    }

    #[test]
    fn injectivity_nets() {
        let w = interval(0, 19);
        assert_eq!(injectivity_net(&affine(&w, 1, 3), 0).unwrap().len(), 20);

        let half = CoarseMap::from_fn(w.clone(), z(), |p| PointId::grid(&[p.as_grid().unwrap()[0].div_euclid(2)])).unwrap();
        let y = injectivity_net(&half, 1).unwrap();
        assert_eq!(y, (0..20).step_by(2).collect::<Vec<_>>());
        assert_eq!(injectivity_net_min_c(&half).1, 1);
        assert!(matches!(injectivity_net(&half, 0), Err(Error::Infeasible(_))));

        let w = interval(0, 10);
        assert!(matches!(injectivity_net(&affine(&w, 0, 0), 3), Err(Error::Infeasible(_))));
    }

    #[test]
    fn nets() {
        let w = interval(0, 11);
        assert_eq!(net_extract(&w, 0).len(), 12);
        assert_eq!(net_extract(&w, 2), vec![0, 3, 6, 9]);
        assert_eq!(covering_radius(&w, &net_extract(&w, 2)).0, 2);
        let single = interval(5, 5);
        assert_eq!(net_extract(&single, 7), vec![0]);
    }

    #[test]
    fn composition() {
        let w = interval(-5, 5);
        let shift = affine(&w, 1, 1);
        let dbl = affine(&interval(-4, 6), 2, 0);
        let both = compose(&shift, &dbl).unwrap();
        assert_eq!(both, affine(&w, 2, 2));
        assert_eq!(compose(&shift, &CoarseMap::identity(interval(-4, 6))).unwrap(), shift);
        assert!(matches!(compose(&shift, &affine(&w, 2, 0)), Err(Error::DomainMismatch(_))));

        let quad = compose(&affine(&w, 2, 0), &affine(&interval(-10, 10), 2, 0)).unwrap();
        assert_eq!(expansion_envelopes(&quad).upper, (0..=10).map(|t| 4 * t).collect::<Vec<u64>>());
    }

    #[test]
    fn json_round_trip() {
        let f = affine(&interval(-3, 3), 2, 1);
        let back = CoarseMap::from_json(z(), z(), &f.to_json()).unwrap();
        assert_eq!(back, f);
    }
}
