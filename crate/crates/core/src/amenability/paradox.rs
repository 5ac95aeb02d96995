use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::maps::CoarseMap;
use crate::space::{PointId, Space, Window, Word};

/// A bijection between two point sets, stored as pairs sorted by source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialTranslation {
    pairs: Vec<(PointId, PointId)>,
    lookup: HashMap<PointId, usize>,
    displacement: u64,
}

impl PartialTranslation {
    pub fn new(space: &Space, mut pairs: Vec<(PointId, PointId)>) -> Result<PartialTranslation> {
        pairs.sort();
        let mut targets = HashSet::new();
        let mut lookup = HashMap::new();
        let mut displacement = 0;
        for (k, (x, y)) in pairs.iter().enumerate() {
            if lookup.insert(x.clone(), k).is_some() {
                return Err(Error::Invalid(format!("{x} has two images")));
            }
            if !targets.insert(y) {
                return Err(Error::NotInjective(x.to_string(), y.to_string()));
            }
            displacement = displacement.max(space.dist(x, y)?);
        }
        Ok(PartialTranslation { pairs, lookup, displacement })
    }

    pub fn pairs(&self) -> &[(PointId, PointId)] {
        &self.pairs
    }

    pub fn apply(&self, x: &PointId) -> Option<&PointId> {
        self.lookup.get(x).map(|&k| &self.pairs[k].1)
    }

    pub fn domain(&self) -> impl Iterator<Item = &PointId> {
        self.pairs.iter().map(|p| &p.0)
    }

    pub fn codomain(&self) -> impl Iterator<Item = &PointId> {
        self.pairs.iter().map(|p| &p.1)
    }

    pub fn displacement(&self) -> u64 {
        self.displacement
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Plus,
    Minus,
}

/// A finite decomposition with all data listed.
#[derive(Debug, Clone)]
pub struct ExplicitParadox {
    pub space: Arc<Space>,
    pub carrier: BTreeSet<PointId>,
    pub plus_part: BTreeSet<PointId>,
    pub minus_part: BTreeSet<PointId>,
    /// Points at which both translations must be defined and both parts must be hit.
    pub core: BTreeSet<PointId>,
    pub plus: PartialTranslation,
    pub minus: PartialTranslation,
    pub displacement: u64,
}

impl PartialEq for ExplicitParadox {
    fn eq(&self, other: &Self) -> bool {
        self.space.spec() == other.space.spec()
            && self.carrier == other.carrier
            && self.plus_part == other.plus_part
            && self.minus_part == other.minus_part
            && self.core == other.core
            && self.plus == other.plus
            && self.minus == other.minus
            && self.displacement == other.displacement
    }
}

impl Eq for ExplicitParadox {}

/// A decomposition `A = A_+ ⊔ A_-` with translations `t_± : A → A_±`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParadoxicalDecomposition {
    /// The closed-form rule on the free group of the given rank; carrier is the whole group.
    FreeGroup { rank: u8 },
    Explicit(ExplicitParadox),
}

const A: i8 = 1;
const B: i8 = 2;

/// The displacement-one decomposition of `F_k`: `A_+` is the identity together
/// with the words ending in `a` or `a⁻¹`.
pub fn paradox_free_group(rank: u8) -> Result<ParadoxicalDecomposition> {
    if rank < 2 {
        return Err(Error::RankTooSmall(rank));
    }
    Ok(ParadoxicalDecomposition::FreeGroup { rank })
}

pub fn rule_plus(x: &Word) -> Word {
    if x.last() == Some(-A) || x.letters().iter().all(|&l| l == A) {
        x.clone()
    } else {
        x.times(A)
    }
}

pub fn rule_minus(x: &Word) -> Word {
    let letters = x.letters();
    let stem = letters.iter().rposition(|&l| l != B).map_or(0, |k| k + 1);
    let ends_in_a = stem == 0 || letters[stem - 1].abs() == A;
    if ends_in_a {
        x.times(B)
    } else {
        x.clone()
    }
}

impl ParadoxicalDecomposition {
    pub fn declared_displacement(&self) -> u64 {
        match self {
            ParadoxicalDecomposition::FreeGroup { .. } => 1,
            ParadoxicalDecomposition::Explicit(e) => e.displacement,
        }
    }

    pub fn in_carrier(&self, x: &PointId) -> bool {
        match self {
            ParadoxicalDecomposition::FreeGroup { .. } => x.as_word().is_some(),
            ParadoxicalDecomposition::Explicit(e) => e.carrier.contains(x),
        }
    }

    /// Membership in `A_+` (or `A_-`), each decided independently of the other.
    pub fn in_part(&self, part: Part, x: &PointId) -> bool {
        match (self, part) {
            (ParadoxicalDecomposition::FreeGroup { .. }, Part::Plus) => {
                x.as_word().is_some_and(|w| w.last().is_none_or(|l| l.abs() == A))
            }
            (ParadoxicalDecomposition::FreeGroup { .. }, Part::Minus) => {
                x.as_word().is_some_and(|w| w.last().is_some_and(|l| l.abs() >= B))
            }
            (ParadoxicalDecomposition::Explicit(e), Part::Plus) => e.plus_part.contains(x),
            (ParadoxicalDecomposition::Explicit(e), Part::Minus) => e.minus_part.contains(x),
        }
    }

    pub fn translate(&self, part: Part, x: &PointId) -> Option<PointId> {
        match self {
            ParadoxicalDecomposition::FreeGroup { .. } => {
                let w = x.as_word()?;
                Some(PointId::Word(match part {
                    Part::Plus => rule_plus(w),
                    Part::Minus => rule_minus(w),
                }))
            }
            ParadoxicalDecomposition::Explicit(e) => match part {
                Part::Plus => e.plus.apply(x).cloned(),
                Part::Minus => e.minus.apply(x).cloned(),
            },
        }
    }

    /// Restricts to an explicit decomposition over the window points, keeping
    /// the pairs whose image also lies in the window.
    pub fn restrict(&self, w: &Window) -> Result<ExplicitParadox> {
        let ident = CoarseMap::identity(w.clone());
        transport_paradox(self, &ident, None)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParadoxReport {
    /// Every carrier point of the window lies in exactly one of `A_+`, `A_-`.
    pub partition: bool,
    /// `t_+` and `t_-` are injective on the window.
    pub injective: bool,
    /// `t_±` lands in `A_±`, so the two images are disjoint.
    pub disjoint_images: bool,
    /// Every required point of `A_±` has a preimage in the window.
    pub onto_parts: bool,
    /// Every required carrier point has both images defined.
    pub total: bool,
    pub displacement_ok: bool,
    pub observed_displacement: u64,
    pub carrier_points: usize,
    pub counterexample: Option<String>,
}

impl ParadoxReport {
    pub fn passed(&self) -> bool {
        self.partition && self.injective && self.disjoint_images && self.onto_parts && self.total && self.displacement_ok
    }
}

/// Checks a decomposition on a window.
///
/// Totality and surjectivity are required on the displacement-interior for the
/// rule form, and on the recorded core for explicit decompositions.
pub fn verify_paradox(p: &ParadoxicalDecomposition, w: &Window) -> Result<ParadoxReport> {
    match p {
        ParadoxicalDecomposition::FreeGroup { rank } => {
            if w.space().free_group_rank() != Some(*rank) {
                return Err(Error::WrongSpace { expected: "the free group of the rule's rank", got: w.space().kind_name().into() });
            }
        }
        ParadoxicalDecomposition::Explicit(e) => {
            if e.space.spec() != w.space().spec() {
                return Err(Error::WindowMismatch);
            }
        }
    }
    let space = w.space();
    let declared = p.declared_displacement();
    let mut report = ParadoxReport {
        partition: true,
        injective: true,
        disjoint_images: true,
        onto_parts: true,
        total: true,
        displacement_ok: true,
        observed_displacement: 0,
        carrier_points: 0,
        counterexample: None,
    };
    let fail = |flag: &mut bool, msg: String, slot: &mut Option<String>| {
        *flag = false;
        slot.get_or_insert(msg);
    };

    if let ParadoxicalDecomposition::Explicit(e) = p {
        if let Some(x) = e.plus_part.intersection(&e.minus_part).next() {
            fail(&mut report.partition, format!("{x} lies in both parts"), &mut report.counterexample);
        }
        if let Some(x) = e.plus_part.iter().chain(&e.minus_part).find(|x| !e.carrier.contains(*x)) {
            fail(&mut report.partition, format!("{x} is in a part but not the carrier"), &mut report.counterexample);
        }
    }

    let interior: HashSet<usize> = match p {
        ParadoxicalDecomposition::FreeGroup { .. } => w.interior(declared).into_iter().collect(),
        ParadoxicalDecomposition::Explicit(e) => e.core.iter().filter_map(|x| w.index_of(x)).collect(),
    };
    let mut hits: [HashMap<PointId, PointId>; 2] = [HashMap::new(), HashMap::new()];
    for (i, x) in w.points().iter().enumerate() {
        if !p.in_carrier(x) {
            continue;
        }
        report.carrier_points += 1;
        let (plus, minus) = (p.in_part(Part::Plus, x), p.in_part(Part::Minus, x));
        if plus == minus {
            let msg = if plus { format!("{x} lies in both parts") } else { format!("{x} lies in neither part") };
            fail(&mut report.partition, msg, &mut report.counterexample);
        }
        for (k, part) in [Part::Plus, Part::Minus].into_iter().enumerate() {
            let Some(y) = p.translate(part, x) else {
                if interior.contains(&i) {
                    fail(&mut report.total, format!("t_{part:?}({x}) is undefined"), &mut report.counterexample);
                }
                continue;
            };
            let d = space.dist(x, &y)?;
            report.observed_displacement = report.observed_displacement.max(d);
            if d > declared {
                fail(&mut report.displacement_ok, format!("d({x}, {y}) = {d}"), &mut report.counterexample);
            }
            if !p.in_part(part, &y) {
                fail(&mut report.disjoint_images, format!("t_{part:?}({x}) = {y} leaves its part"), &mut report.counterexample);
            }
            if let Some(prev) = hits[k].insert(y.clone(), x.clone()) {
                fail(&mut report.injective, format!("t_{part:?}({prev}) = t_{part:?}({x}) = {y}"), &mut report.counterexample);
            }
        }
    }
    let images: Vec<HashSet<&PointId>> = hits.iter().map(|h| h.keys().collect()).collect();
    if let Some(y) = images[0].intersection(&images[1]).min() {
        fail(&mut report.disjoint_images, format!("{y} is hit by both translations"), &mut report.counterexample);
    }
    let mut interior_sorted: Vec<usize> = interior.into_iter().collect();
    interior_sorted.sort_unstable();
    for i in interior_sorted {
        let y = w.point(i);
        for (k, part) in [Part::Plus, Part::Minus].into_iter().enumerate() {
            if p.in_part(part, y) && !hits[k].contains_key(y) {
                fail(&mut report.onto_parts, format!("{y} has no t_{part:?}-preimage"), &mut report.counterexample);
            }
        }
    }
    Ok(report)
}

/// Pushes a decomposition forward along an injective map: `σ_±(f x) = f(t_± x)`.
///
/// Only carrier points of the source window whose translate also lies in the
/// window contribute pairs; the core is the image of the source window's
/// displacement-interior. With `bound` set, a pair moved farther than the bound
/// is an error.
pub fn transport_paradox(p: &ParadoxicalDecomposition, f: &CoarseMap, bound: Option<u64>) -> Result<ExplicitParadox> {
    if let Some((i, j)) = f.collision() {
        return Err(Error::NotInjective(f.source().point(i).to_string(), f.source().point(j).to_string()));
    }
    let target = f.target().clone();
    let src = f.source();
    let mut carrier = BTreeSet::new();
    let mut parts = [BTreeSet::new(), BTreeSet::new()];
    let mut pairs = [Vec::new(), Vec::new()];
    let mut displacement = 0;
    let core = src
        .interior(p.declared_displacement())
        .into_iter()
        .filter(|&i| p.in_carrier(src.point(i)))
        .map(|i| f.image(i).clone())
        .collect();
    for (i, x) in src.points().iter().enumerate() {
        if !p.in_carrier(x) {
            continue;
        }
        let fx = f.image(i).clone();
        carrier.insert(fx.clone());
        for (k, part) in [Part::Plus, Part::Minus].into_iter().enumerate() {
            if p.in_part(part, x) {
                parts[k].insert(fx.clone());
            }
            let Some(fy) = p.translate(part, x).and_then(|y| f.apply(&y).cloned()) else {
                continue;
            };
            let d = target.dist(&fx, &fy)?;
            if let Some(bound) = bound.filter(|&b| d > b) {
                return Err(Error::ExpansionUnbounded {
                    from: fx.to_string(),
                    to: fy.to_string(),
                    observed: d,
                    bound,
                });
            }
            displacement = displacement.max(d);
            pairs[k].push((fx.clone(), fy));
        }
    }
    let [plus_part, minus_part] = parts;
    let [plus, minus] = pairs;
    Ok(ExplicitParadox {
        plus: PartialTranslation::new(&target, plus)?,
        minus: PartialTranslation::new(&target, minus)?,
        space: target,
        carrier,
        plus_part,
        minus_part,
        core,
        displacement,
    })
}
