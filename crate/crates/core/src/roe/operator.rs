use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::space::{Space, Window};

/// Integers up to this magnitude are represented exactly in `f64` arithmetic.
const EXACT_LIMIT: f64 = (1u64 << 40) as f64;

fn is_integral(z: Complex64) -> bool {
    z.re.fract() == 0.0 && z.im.fract() == 0.0 && z.re.abs() < EXACT_LIMIT && z.im.abs() < EXACT_LIMIT
}

/// A finite-propagation matrix over the points of a window, stored sparsely.
///
/// Only nonzero entries are kept. When every entry is a small Gaussian integer
/// the operator is flagged exact and all arithmetic on exact operators is
/// carried out without rounding.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    window: Arc<Window>,
    entries: BTreeMap<(usize, usize), Complex64>,
    propagation: u64,
    exact: bool,
}

impl PartialEq for BandedOperator {
    fn eq(&self, other: &Self) -> bool {
        self.same_window(other) && self.entries == other.entries
    }
}

impl BandedOperator {
    /// Builds from `(row, column, value)` triples; repeated positions are summed.
    pub fn new(window: Arc<Window>, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<BandedOperator> {
        let n = window.len();
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (i, j, z) in entries {
            if i >= n || j >= n {
                return Err(Error::Invalid(format!("entry ({i}, {j}) outside a window of {n} points")));
            }
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Invalid(format!("entry ({i}, {j}) is not finite")));
            }
            *map.entry((i, j)).or_default() += z;
        }
        Ok(Self::from_map(window, map))
    }

    fn from_map(window: Arc<Window>, mut entries: BTreeMap<(usize, usize), Complex64>) -> BandedOperator {
        entries.retain(|_, z| *z != Complex64::new(0.0, 0.0));
        let propagation = entries.keys().map(|&(i, j)| window.dist(i, j)).max().unwrap_or(0);
        let exact = entries.values().all(|&z| is_integral(z));
        BandedOperator { window, entries, propagation, exact }
    }

    pub fn zero(window: Arc<Window>) -> BandedOperator {
        Self::from_map(window, BTreeMap::new())
    }

    pub fn identity(window: Arc<Window>) -> BandedOperator {
        let n = window.len();
        Self::diagonal(window, vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn diagonal(window: Arc<Window>, diag: Vec<Complex64>) -> BandedOperator {
        let map = diag.into_iter().enumerate().map(|(i, z)| ((i, i), z)).collect();
        Self::from_map(window, map)
    }

    /// The matrix unit `e_{ij}`.
    pub fn unit(window: Arc<Window>, i: usize, j: usize) -> Result<BandedOperator> {
        Self::new(window, [(i, j, Complex64::new(1.0, 0.0))])
    }

    pub fn window(&self) -> &Arc<Window> {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries.get(&(i, j)).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(i, j), &z)| (i, j, z))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `max{ d(x, y) : a_xy != 0 }`, zero for the zero operator.
    pub fn propagation(&self) -> u64 {
        self.propagation
    }

    /// Recomputes the propagation from the entries.
    pub fn recompute_propagation(&self) -> u64 {
        self.entries.keys().map(|&(i, j)| self.window.dist(i, j)).max().unwrap_or(0)
    }

    /// Largest entry modulus.
    pub fn entry_bound(&self) -> f64 {
        self.entries.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Whether every entry is a Gaussian integer, so products are computed exactly.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn same_window(&self, other: &BandedOperator) -> bool {
        Arc::ptr_eq(&self.window, &other.window) || *self.window == *other.window
    }

    fn check_window(&self, other: &BandedOperator) -> Result<()> {
        if self.same_window(other) {
            Ok(())
        } else {
            Err(Error::WindowMismatch)
        }
    }

    pub fn add(&self, other: &BandedOperator) -> Result<BandedOperator> {
        self.check_window(other)?;
        let mut map = self.entries.clone();
        for (&k, &z) in &other.entries {
            *map.entry(k).or_default() += z;
        }
        Ok(Self::from_map(self.window.clone(), map))
    }

    pub fn sub(&self, other: &BandedOperator) -> Result<BandedOperator> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> BandedOperator {
        let map = self.entries.iter().map(|(&k, &z)| (k, c * z)).collect();
        Self::from_map(self.window.clone(), map)
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BandedOperator) -> Result<BandedOperator> {
        self.check_window(other)?;
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.dim()];
        for (&(k, j), &z) in &other.entries {
            rows[k].push((j, z));
        }
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (&(i, k), &x) in &self.entries {
            for &(j, y) in &rows[k] {
                *map.entry((i, j)).or_default() += x * y;
            }
        }
        Ok(Self::from_map(self.window.clone(), map))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> BandedOperator {
        let map = self.entries.iter().map(|(&(i, j), z)| ((j, i), z.conj())).collect();
        Self::from_map(self.window.clone(), map)
    }

    /// Entrywise comparison within `tol` (zero tolerance means exact equality).
    pub fn approx_eq(&self, other: &BandedOperator, tol: f64) -> bool {
        self.same_window(other) && self.entries.keys().chain(other.entries.keys()).all(|&(i, j)| (self.get(i, j) - other.get(i, j)).norm() <= tol)
    }

    /// The submatrix on the given rows and columns, keyed by positions in the index lists.
    pub fn compress(&self, rows: &[usize], cols: &[usize]) -> BTreeMap<(usize, usize), Complex64> {
        let row_pos: BTreeMap<usize, usize> = rows.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let col_pos: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(p, &j)| (j, p)).collect();
        self.entries
            .iter()
            .filter_map(|(&(i, j), &z)| Some(((*row_pos.get(&i)?, *col_pos.get(&j)?), z)))
            .collect()
    }

    /// Whether the two operators agree on `rows × cols`, exactly or within `tol`.
    pub fn agrees_on(&self, other: &BandedOperator, rows: &[usize], cols: &[usize], tol: f64) -> bool {
        let (a, b) = (self.compress(rows, cols), other.compress(rows, cols));
        a.keys().chain(b.keys()).all(|k| {
            let d = a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default();
            d.norm() <= tol
        })
    }

    /// Column `j` as sparse `(row, value)` pairs.
    pub fn column(&self, j: usize) -> Vec<(usize, Complex64)> {
        self.entries.iter().filter(|(&(_, c), _)| c == j).map(|(&(i, _), &z)| (i, z)).collect()
    }

    /// `P_rows · a` where `P_rows` is the diagonal projection onto `rows`.
    pub fn restrict_rows(&self, keep: &[bool]) -> BandedOperator {
        let map = self.entries.iter().filter(|(&(i, _), _)| keep[i]).map(|(&k, &z)| (k, z)).collect();
        Self::from_map(self.window.clone(), map)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), &z) in &self.entries {
            m[(i, j)] = z;
        }
        m
    }

    /// `{"window": .., "entries": [[x, y, re, im], ..]}` with points in the space's JSON encoding.
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(&(i, j), z)| json!([self.window.point_json(i), self.window.point_json(j), z.re, z.im]))
            .collect();
        json!({ "window": self.window.to_json(), "entries": entries })
    }

    pub fn from_json(space: Arc<Space>, value: &Value) -> Result<BandedOperator> {
        let window = Arc::new(Window::from_json(
            space.clone(),
            value.get("window").ok_or_else(|| Error::Invalid("operator needs a window".into()))?,
        )?);
        let raw = value
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Invalid("operator needs `entries`".into()))?;
        let mut triples = Vec::with_capacity(raw.len());
        for e in raw {
            let parts = e.as_array().filter(|p| p.len() == 4).ok_or_else(|| Error::Invalid("entry is [x, y, re, im]".into()))?;
            let locate = |v: &Value| -> Result<usize> {
                let p = space.point_from_json(v)?;
                window.index_of(&p).ok_or_else(|| Error::UnknownPoint(format!("{p} is not in the operator's window")))
            };
            let num = |v: &Value| v.as_f64().ok_or_else(|| Error::Invalid("entry parts are numbers".into()));
            triples.push((locate(&parts[0])?, locate(&parts[1])?, Complex64::new(num(&parts[2])?, num(&parts[3])?)));
        }
        BandedOperator::new(window, triples)
    }
}

/// A random operator with propagation at most `prop` and entry moduli at most `bound`.
///
/// Each pair within distance `prop` carries a nonzero entry with probability one half.
pub fn random_operator(window: Arc<Window>, prop: u64, bound: f64, rng: &mut impl Rng) -> BandedOperator {
    let half = bound / std::f64::consts::SQRT_2;
    let mut triples = Vec::new();
    for i in 0..window.len() {
        for j in window.neighbors_within(i, prop) {
            if rng.gen_bool(0.5) {
                triples.push((i, j, Complex64::new(rng.gen_range(-half..=half), rng.gen_range(-half..=half))));
            }
        }
    }
    BandedOperator::new(window, triples).expect("indices come from the window")
}
