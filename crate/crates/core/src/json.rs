//! Versioned JSON encodings of certificates and their from-scratch verification.
//!
//! Every document carries `"schema": "coarsekit/1"`, a `"type"` and the space
//! specification, so [`verify_document`] can re-check it without other context.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_rational::Ratio;
use serde_json::{json, Map, Value};

use crate::amenability::{
    verify_cut, verify_doubling, verify_paradox, ExplicitParadox, FolnerCertificate, ParadoxicalDecomposition,
    PartialTranslation, WindowedDoubling,
};
use crate::asdim::{verify_decomposition, ColoredCover};
use crate::error::{Error, Result};
use crate::roe::{block, mv_split, omega_membership, AfApproximation, BandedOperator, OmegaDecomposition, OmegaPart};
use crate::scale::{components_at_scale, verify_segments, SegmentFamily};
use crate::space::{PointId, Space, SpaceSpec, Window};

pub const SCHEMA: &str = "coarsekit/1";

/// Wraps a body object with the schema tag, document type and space.
pub fn tagged(kind: &str, space: &Space, body: Value) -> Value {
    let mut map = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    map.insert("schema".into(), json!(SCHEMA));
    map.insert("type".into(), json!(kind));
    map.insert("space".into(), serde_json::to_value(space.spec()).expect("specs serialize"));
    Value::Object(map)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Invalid(format!("missing field `{key}`")))
}

fn u64_field(v: &Value, key: &str) -> Result<u64> {
    field(v, key)?.as_u64().ok_or_else(|| Error::Invalid(format!("`{key}` must be a nonnegative integer")))
}

fn array<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>> {
    field(v, key)?.as_array().ok_or_else(|| Error::Invalid(format!("`{key}` must be an array")))
}

/// Checks the schema tag and returns the document type.
pub fn document_type(v: &Value) -> Result<&str> {
    match v.get("schema").and_then(Value::as_str) {
        Some(SCHEMA) => {}
        Some(other) => return Err(Error::Invalid(format!("unsupported schema `{other}`"))),
        None => return Err(Error::Invalid("missing schema tag".into())),
    }
    field(v, "type")?.as_str().ok_or_else(|| Error::Invalid("`type` must be a string".into()))
}

/// A space from either a bare specification or a document with a `space` field.
pub fn read_space(v: &Value) -> Result<Arc<Space>> {
    let spec = if v.get("kind").is_some() { v } else { field(v, "space")? };
    Ok(Arc::new(Space::from_json(spec)?))
}

pub fn read_window(space: &Arc<Space>, v: &Value) -> Result<Arc<Window>> {
    Ok(Arc::new(Window::from_json(space.clone(), field(v, "window")?)?))
}

pub fn points_json(w: &Window, idx: &[usize]) -> Value {
    Value::Array(idx.iter().map(|&i| w.point_json(i)).collect())
}

fn point_list(space: &Space, v: &Value) -> Result<Vec<PointId>> {
    v.as_array()
        .ok_or_else(|| Error::Invalid("expected a list of points".into()))?
        .iter()
        .map(|p| space.point_from_json(p))
        .collect()
}

fn indices(w: &Window, v: &Value) -> Result<Vec<usize>> {
    point_list(w.space(), v)?
        .into_iter()
        .map(|p| w.index_of(&p).ok_or_else(|| Error::UnknownPoint(format!("{p} is not in the window"))))
        .collect()
}

fn ratio_text(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `0.1`, `"0.1"` or `"1/10"` as an exact rational.
pub fn parse_ratio(v: &Value) -> Result<Ratio<u64>> {
    let bad = || Error::Invalid(format!("not a nonnegative rational: {v}"));
    match v {
        Value::String(s) => parse_ratio_text(s).ok_or_else(bad),
        Value::Number(n) => parse_ratio_text(&n.to_string()).ok_or_else(bad),
        _ => Err(bad()),
    }
}

pub fn parse_ratio_text(s: &str) -> Option<Ratio<u64>> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let (n, d): (u64, u64) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
        return (d != 0).then(|| Ratio::new(n, d));
    }
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 18 || (whole.is_empty() && frac.is_empty()) {
        return None;
    }
    let den = 10u64.checked_pow(frac.len() as u32)?;
    let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Ratio::new(whole.checked_mul(den)?.checked_add(frac)?, den))
}

// ---- covers ----

pub fn cover_to_json(w: &Window, cover: &ColoredCover) -> Value {
    let colors: Vec<Value> = cover
        .colors
        .iter()
        .map(|pieces| Value::Array(pieces.iter().map(|p| points_json(w, p)).collect()))
        .collect();
    tagged("cover", w.space(), json!({ "window": w.to_json(), "r": cover.r, "bound": cover.bound, "colors": colors }))
}

pub fn cover_from_json(v: &Value) -> Result<(Arc<Window>, ColoredCover)> {
    let space = read_space(v)?;
    let w = read_window(&space, v)?;
    let colors = array(v, "colors")?
        .iter()
        .map(|pieces| {
            pieces
                .as_array()
                .ok_or_else(|| Error::Invalid("each color is a list of pieces".into()))?
                .iter()
                .map(|p| indices(&w, p))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((w, ColoredCover { r: u64_field(v, "r")?, bound: u64_field(v, "bound")?, colors }))
}

// ---- segments ----

pub fn segments_to_json(space: &Space, f: &SegmentFamily) -> Value {
    let segs: Vec<Value> = f
        .segments
        .iter()
        .map(|s| Value::Array(s.iter().map(|p| space.point_to_json(p)).collect()))
        .collect();
    tagged("segments", space, json!({ "r": f.r, "segments": segs }))
}

pub fn segments_from_json(v: &Value) -> Result<(Arc<Space>, SegmentFamily)> {
    let space = read_space(v)?;
    let segments = array(v, "segments")?.iter().map(|s| point_list(&space, s)).collect::<Result<_>>()?;
    Ok((space, SegmentFamily { r: u64_field(v, "r")?, segments }))
}

// ---- paradoxical decompositions ----

fn pairs_json(space: &Space, t: &PartialTranslation) -> Value {
    Value::Array(t.pairs().iter().map(|(x, y)| json!([space.point_to_json(x), space.point_to_json(y)])).collect())
}

fn set_json(space: &Space, s: &BTreeSet<PointId>) -> Value {
    Value::Array(s.iter().map(|p| space.point_to_json(p)).collect())
}

/// A decomposition together with the window it is checked on.
pub fn paradox_to_json(p: &ParadoxicalDecomposition, w: &Window) -> Value {
    let space = w.space();
    let body = match p {
        ParadoxicalDecomposition::FreeGroup { rank } => json!({ "form": "free_group_rule", "rank": rank }),
        ParadoxicalDecomposition::Explicit(e) => json!({
            "form": "explicit",
            "displacement": e.displacement,
            "carrier": set_json(space, &e.carrier),
            "plus_part": set_json(space, &e.plus_part),
            "minus_part": set_json(space, &e.minus_part),
            "core": set_json(space, &e.core),
            "plus": pairs_json(space, &e.plus),
            "minus": pairs_json(space, &e.minus),
        }),
    };
    let mut body = body;
    body["window"] = w.to_json();
    tagged("paradox", space, body)
}

pub fn paradox_from_json(v: &Value) -> Result<(Arc<Window>, ParadoxicalDecomposition)> {
    let space = read_space(v)?;
    let w = read_window(&space, v)?;
    let p = match field(v, "form")?.as_str() {
        Some("free_group_rule") => {
            let rank = u64_field(v, "rank")?;
            crate::amenability::paradox_free_group(u8::try_from(rank).map_err(|_| Error::RankTooSmall(u8::MAX))?)?
        }
        Some("explicit") => {
            let set = |key: &str| -> Result<BTreeSet<PointId>> { Ok(point_list(&space, field(v, key)?)?.into_iter().collect()) };
            let pairs = |key: &str| -> Result<PartialTranslation> {
                let list = array(v, key)?
                    .iter()
                    .map(|pair| match pair.as_array().map(Vec::as_slice) {
                        Some([x, y]) => Ok((space.point_from_json(x)?, space.point_from_json(y)?)),
                        _ => Err(Error::Invalid("translation pairs are [x, y]".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                PartialTranslation::new(&space, list)
            };
            ParadoxicalDecomposition::Explicit(ExplicitParadox {
                space: space.clone(),
                carrier: set("carrier")?,
                plus_part: set("plus_part")?,
                minus_part: set("minus_part")?,
                core: set("core")?,
                plus: pairs("plus")?,
                minus: pairs("minus")?,
                displacement: u64_field(v, "displacement")?,
            })
        }
        _ => return Err(Error::Invalid("paradox `form` is `free_group_rule` or `explicit`".into())),
    };
    Ok((w, p))
}

// ---- Følner sets and doublings ----

pub fn folner_to_json(c: &FolnerCertificate) -> Value {
    let set: Vec<Value> = c.set.iter().map(|p| c.space.point_to_json(p)).collect();
    tagged(
        "folner",
        &c.space,
        json!({ "r": c.r, "eps": ratio_text(c.eps), "set": set, "neighborhood": c.neighborhood, "ratio": ratio_text(c.ratio()) }),
    )
}

pub fn folner_from_json(v: &Value) -> Result<FolnerCertificate> {
    let space = read_space(v)?;
    Ok(FolnerCertificate {
        set: point_list(&space, field(v, "set")?)?,
        space,
        r: u64_field(v, "r")?,
        eps: parse_ratio(field(v, "eps")?)?,
        neighborhood: u64_field(v, "neighborhood")? as usize,
    })
}

pub fn doubling_to_json(w: &Window, d: &WindowedDoubling) -> Value {
    tagged(
        "doubling",
        w.space(),
        json!({
            "window": w.to_json(),
            "r": d.r,
            "interior": points_json(w, &d.interior),
            "plus": points_json(w, &d.plus),
            "minus": points_json(w, &d.minus),
        }),
    )
}

pub fn doubling_from_json(v: &Value) -> Result<(Arc<Window>, WindowedDoubling)> {
    let space = read_space(v)?;
    let w = read_window(&space, v)?;
    let d = WindowedDoubling {
        r: u64_field(v, "r")?,
        interior: indices(&w, field(v, "interior")?)?,
        plus: indices(&w, field(v, "plus")?)?,
        minus: indices(&w, field(v, "minus")?)?,
    };
    Ok((w, d))
}

pub fn hall_cut_to_json(w: &Window, r: u64, cut: &[usize], neighborhood: usize) -> Value {
    tagged(
        "hall_cut",
        w.space(),
        json!({ "window": w.to_json(), "r": r, "cut": points_json(w, cut), "neighborhood": neighborhood }),
    )
}

// ---- operators ----

pub fn operator_to_json(a: &BandedOperator) -> Value {
    let mut body = a.to_json();
    body["propagation"] = json!(a.propagation());
    tagged("operator", a.window().space(), body)
}

pub fn operator_from_json(v: &Value) -> Result<BandedOperator> {
    BandedOperator::from_json(read_space(v)?, v)
}

/// An operator stored under `key` of a document, sharing the document's window.
fn operator_in(space: &Arc<Space>, w: &Arc<Window>, v: &Value, key: &str) -> Result<BandedOperator> {
    let body = field(v, key)?;
    let entries = array(body, "entries")?;
    let doc = json!({ "window": w.to_json(), "entries": entries });
    let a = BandedOperator::from_json(space.clone(), &doc)?;
    BandedOperator::new(w.clone(), a.entries())
}

fn entries_json(a: &BandedOperator) -> Value {
    json!({ "entries": a.to_json()["entries"].clone() })
}

pub fn af_to_json(a: &BandedOperator, eps: f64, af: &AfApproximation) -> Value {
    tagged(
        "af",
        a.window().space(),
        json!({
            "window": a.window().to_json(),
            "eps": eps,
            "error": af.error,
            "a": entries_json(a),
            "b": entries_json(&af.b),
            "coloring": af.coloring.to_json(),
        }),
    )
}

pub fn mv_split_to_json(a: &BandedOperator, omega: &OmegaDecomposition, b: &BandedOperator, c: &BandedOperator) -> Value {
    let w = &omega.window;
    let colors: Vec<Value> = omega
        .cover
        .colors
        .iter()
        .map(|pieces| Value::Array(pieces.iter().map(|p| points_json(w, p)).collect()))
        .collect();
    tagged(
        "mv_split",
        w.space(),
        json!({
            "window": w.to_json(),
            "cover": { "r": omega.cover.r, "bound": omega.cover.bound, "colors": colors },
            "a": entries_json(a),
            "b": entries_json(b),
            "c": entries_json(c),
        }),
    )
}

// ---- verification ----

/// Outcome of re-checking a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub report: Value,
}

/// Re-verifies any certificate document from scratch, dispatching on its type.
pub fn verify_document(v: &Value) -> Result<Verdict> {
    let kind = document_type(v)?.to_string();
    let verdict = match kind.as_str() {
        "cover" => {
            let (w, cover) = cover_from_json(v)?;
            let rep = verify_decomposition(&w, &cover);
            Verdict {
                passed: rep.passed(),
                report: json!({
                    "partition": rep.partition,
                    "separation": rep.separation,
                    "bound": rep.bound,
                    "max_diameter": rep.max_diameter,
                    "counterexample": rep.counterexample.map(|c| c.to_string()),
                }),
            }
        }
        "components" => {
            let space = read_space(v)?;
            let w = read_window(&space, v)?;
            let classes = array(v, "classes")?.iter().map(|c| indices(&w, c)).collect::<Result<Vec<_>>>()?;
            let expected = components_at_scale(&w, u64_field(v, "r")?).classes;
            Verdict { passed: classes == expected, report: json!({ "classes": expected.len() }) }
        }
        "segments" => {
            let (space, f) = segments_from_json(v)?;
            let rep = verify_segments(&space, &f)?;
            Verdict {
                passed: rep.all_pass(),
                report: json!({
                    "steps": rep.steps_ok,
                    "anchored": rep.anchored_ok,
                    "separations": rep.separations,
                    "separation_positive": rep.separation_positive,
                    "separation_nondecreasing": rep.separation_nondecreasing,
                    "lengths_increasing": rep.lengths_increasing,
                }),
            }
        }
        "paradox" => {
            let (w, p) = paradox_from_json(v)?;
            let rep = verify_paradox(&p, &w)?;
            Verdict {
                passed: rep.passed(),
                report: json!({
                    "partition": rep.partition,
                    "injective": rep.injective,
                    "disjoint_images": rep.disjoint_images,
                    "onto_parts": rep.onto_parts,
                    "total": rep.total,
                    "displacement": rep.displacement_ok,
                    "observed_displacement": rep.observed_displacement,
                    "carrier_points": rep.carrier_points,
                    "counterexample": rep.counterexample,
                }),
            }
        }
        "folner" => {
            let c = folner_from_json(v)?;
            let ok = c.verify()?;
            Verdict { passed: ok, report: json!({ "bound": ok, "size": c.set.len() }) }
        }
        "doubling" => {
            let (w, d) = doubling_from_json(v)?;
            let rep = verify_doubling(&w, &d);
            Verdict {
                passed: rep.passed(),
                report: json!({
                    "interior": rep.interior,
                    "injective": rep.injective,
                    "disjoint_images": rep.disjoint_images,
                    "displacement": rep.displacement_ok,
                }),
            }
        }
        "hall_cut" => {
            let space = read_space(v)?;
            let w = read_window(&space, v)?;
            let cut = indices(&w, field(v, "cut")?)?;
            let ok = verify_cut(&w, u64_field(v, "r")?, &cut);
            Verdict { passed: ok, report: json!({ "hall_violation": ok }) }
        }
        "operator" => {
            let a = operator_from_json(v)?;
            let declared = v.get("propagation").and_then(Value::as_u64);
            let ok = declared.is_none_or(|p| p == a.recompute_propagation());
            Verdict { passed: ok, report: json!({ "propagation": a.recompute_propagation() }) }
        }
        "af" => verify_af(v)?,
        "mv_split" => verify_mv_split(v)?,
        other => return Err(Error::Invalid(format!("cannot verify documents of type `{other}`"))),
    };
    Ok(verdict)
}

fn verify_af(v: &Value) -> Result<Verdict> {
    let space = read_space(v)?;
    let w = read_window(&space, v)?;
    let a = operator_in(&space, &w, v, "a")?;
    let b = operator_in(&space, &w, v, "b")?;
    let eps = field(v, "eps")?.as_f64().ok_or_else(|| Error::Invalid("`eps` must be a number".into()))?;
    let coloring = field(v, "coloring")?;
    let r = u64_field(coloring, "r")?;
    let classes: Vec<Vec<usize>> = serde_json::from_value(field(coloring, "classes")?.clone())?;
    let colors: Vec<usize> = serde_json::from_value(field(coloring, "colors")?.clone())?;
    let classes_ok = classes == components_at_scale(&w, r).classes && colors.len() == classes.len();
    let propagation_ok = a.propagation() <= r;
    // same-color classes must carry identical blocks in b
    let mut constant = true;
    let mut sizes_ok = true;
    let mut error: f64 = 0.0;
    if classes_ok {
        let mut first: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for (k, class) in classes.iter().enumerate() {
            let bb = block(&b, class);
            match first.get(&colors[k]) {
                Some(&k0) if classes[k0].len() != class.len() => sizes_ok = false,
                Some(&k0) => constant &= block(&b, &classes[k0]) == bb,
                None => {
                    first.insert(colors[k], k);
                }
            }
            let diff = block(&a, class) - bb;
            if !diff.is_empty() {
                error = error.max(diff.singular_values().max());
            }
        }
    }
    // b must not have entries outside the blocks
    let blocky = classes_ok && {
        let class_of = components_at_scale(&w, r).class_of(w.len());
        b.entries().all(|(i, j, _)| class_of[i] == class_of[j])
    };
    let passed = classes_ok && propagation_ok && constant && sizes_ok && blocky && error < eps;
    Ok(Verdict {
        passed,
        report: json!({
            "classes": classes_ok,
            "propagation": propagation_ok,
            "block_constant": constant && sizes_ok && blocky,
            "error": error,
            "eps": eps,
        }),
    })
}

fn verify_mv_split(v: &Value) -> Result<Verdict> {
    let space = read_space(v)?;
    let w = read_window(&space, v)?;
    let mut cover_doc = field(v, "cover")?.clone();
    cover_doc["window"] = w.to_json();
    cover_doc["space"] = serde_json::to_value(space.spec())?;
    let (_, cover) = cover_from_json(&cover_doc)?;
    let omega = OmegaDecomposition::new(w.clone(), cover)?;
    let a = operator_in(&space, &w, v, "a")?;
    let b = operator_in(&space, &w, v, "b")?;
    let c = operator_in(&space, &w, v, "c")?;
    let sum_ok = b.add(&c)? == a;
    let (eb, ec) = mv_split(&a, &omega)?;
    let matches = eb == b && ec == c;
    let r = a.propagation();
    let in_u = omega_membership(&b, &omega, r, OmegaPart::U)?.passed();
    let in_v = omega_membership(&c, &omega, r, OmegaPart::V)?.passed();
    Ok(Verdict {
        passed: sum_ok && matches && in_u && in_v,
        report: json!({ "sum": sum_ok, "matches_split": matches, "b_in_u": in_u, "c_in_v": in_v, "r": r }),
    })
}

/// Serializes a space specification document.
pub fn space_to_json(spec: &SpaceSpec) -> Value {
    serde_json::to_value(spec).expect("specs serialize")
}
