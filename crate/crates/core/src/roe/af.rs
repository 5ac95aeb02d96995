use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use super::operator::BandedOperator;
use crate::error::{Error, Result};
use crate::scale::components_at_scale;
use crate::space::Window;

/// The `~_r` classes of a window, a coloring of them, and one model matrix per color.
///
/// Classes list window indices in canonical order, which fixes the identification
/// of each class with `{1..|A|}`. Same-color classes have equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockColoring {
    pub r: u64,
    pub classes: Vec<Vec<usize>>,
    pub color_of: Vec<usize>,
    pub models: Vec<DMatrix<Complex64>>,
}

impl BlockColoring {
    pub fn num_colors(&self) -> usize {
        self.models.len()
    }

    /// The block-diagonal operator carrying each color's model on every class of that color.
    pub fn reconstruct(&self, window: Arc<Window>) -> Result<BandedOperator> {
        let mut triples = Vec::new();
        for (class, &c) in self.classes.iter().zip(&self.color_of) {
            let m = &self.models[c];
            if m.nrows() != class.len() {
                return Err(Error::Invalid(format!("color {c} has a {}×{} model for a class of {}", m.nrows(), m.ncols(), class.len())));
            }
            for (a, &i) in class.iter().enumerate() {
                for (b, &j) in class.iter().enumerate() {
                    triples.push((i, j, m[(a, b)]));
                }
            }
        }
        BandedOperator::new(window, triples)
    }

    pub fn to_json(&self) -> Value {
        let model = |m: &DMatrix<Complex64>| -> Value {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect::<Vec<_>>()).collect()
        };
        json!({
            "r": self.r,
            "classes": self.classes,
            "colors": self.color_of,
            "models": self.models.iter().map(model).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct AfApproximation {
    pub coloring: BlockColoring,
    pub b: BandedOperator,
    /// `max_A ‖a_A − b_A‖`, which equals `‖a − b‖` for block-diagonal operators.
    pub error: f64,
}

/// The compression `a_A` of an operator to a class, indexed in class order.
pub fn block(a: &BandedOperator, class: &[usize]) -> DMatrix<Complex64> {
    let n = class.len();
    DMatrix::from_fn(n, n, |x, y| a.get(class[x], class[y]))
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.clone().singular_values().max()
    }
}

/// Approximates `a` within `ε` by an operator that is constant on each color of `~_r` classes.
///
/// Classes are scanned in canonical order; each class joins the first earlier
/// representative of its size whose block is closer than `ε`, and otherwise
/// becomes a representative with its own color. Every class of a color carries
/// the representative's block, so the error is below `ε` by construction.
pub fn af_approximate(a: &BandedOperator, r: u64, eps: f64, class_cap: usize) -> Result<AfApproximation> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("ε must be positive".into()));
    }
    if a.propagation() > r {
        return Err(Error::PropagationTooLarge { prop: a.propagation(), r });
    }
    let w = a.window();
    let classes = components_at_scale(w, r).classes;
    if let Some(big) = classes.iter().find(|c| c.len() > class_cap) {
        return Err(Error::ClassTooLarge { size: big.len(), cap: class_cap, first: w.point(big[0]).to_string() });
    }
    let strict = eps * (1.0 - 1e-9);
    let blocks: Vec<DMatrix<Complex64>> = classes.iter().map(|c| block(a, c)).collect();
    let mut models: Vec<DMatrix<Complex64>> = Vec::new();
    let mut color_of = Vec::with_capacity(classes.len());
    let mut error: f64 = 0.0;
    for m in &blocks {
        let hit = models
            .iter()
            .enumerate()
            .filter(|(_, rep)| rep.nrows() == m.nrows())
            .map(|(c, rep)| (c, spectral_norm(&(m - rep))))
            .find(|&(_, d)| d < strict);
        match hit {
            Some((c, d)) => {
                color_of.push(c);
                error = error.max(d);
            }
            None => {
                color_of.push(models.len());
                models.push(m.clone());
            }
        }
    }
    let coloring = BlockColoring { r, classes, color_of, models };
    let b = coloring.reconstruct(w.clone())?;
    Ok(AfApproximation { coloring, b, error })
}
