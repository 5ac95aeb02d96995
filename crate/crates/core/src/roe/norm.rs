use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operator::BandedOperator;
use crate::error::Result;

/// Windows up to this size get an exact dense singular value decomposition.
pub const DENSE_LIMIT: usize = 512;
pub const POWER_TOLERANCE: f64 = 1e-9;
pub const POWER_MAX_ITERATIONS: usize = 10_000;
/// Comparison tolerance for operators that are not exact.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest singular value: dense SVD for small windows, power iteration on `a*a` otherwise.
pub fn op_norm(a: &BandedOperator) -> NormEstimate {
    if a.is_zero() {
        return NormEstimate { value: 0.0, converged: true, iterations: 0 };
    }
    if a.dim() <= DENSE_LIMIT {
        let value = a.to_dense().singular_values().max();
        return NormEstimate { value, converged: true, iterations: 0 };
    }
    power_norm(a)
}

fn power_norm(a: &BandedOperator) -> NormEstimate {
    let n = a.dim();
    let entries: Vec<(usize, usize, Complex64)> = a.entries().collect();
    let apply = |v: &[Complex64], adjoint: bool| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n];
        for &(i, j, z) in &entries {
            if adjoint {
                out[j] += z.conj() * v[i];
            } else {
                out[i] += z * v[j];
            }
        }
        out
    };
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // a fixed, generic start vector keeps the estimate reproducible
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + (i as f64 * 0.618_033_988_7).fract(), 0.0)).collect();
    let v0 = norm(&v);
    v.iter_mut().for_each(|z| *z /= v0);
    let mut lambda = 0.0;
    for it in 1..=POWER_MAX_ITERATIONS {
        let w = apply(&apply(&v, false), true);
        let next = norm(&w);
        if next == 0.0 {
            return NormEstimate { value: 0.0, converged: true, iterations: it };
        }
        v = w.into_iter().map(|z| z / next).collect();
        if (next - lambda).abs() <= POWER_TOLERANCE * next {
            return NormEstimate { value: next.sqrt(), converged: true, iterations: it };
        }
        lambda = next;
    }
    NormEstimate { value: lambda.sqrt(), converged: false, iterations: POWER_MAX_ITERATIONS }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuasiKind {
    Projection,
    Unitary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiReport {
    pub kind: QuasiKind,
    pub eps: f64,
    /// `‖a² − a‖` or `‖a*a − 1‖`.
    pub first_defect: f64,
    /// `‖a − a*‖` or `‖aa* − 1‖`.
    pub second_defect: f64,
    pub propagation: u64,
    pub propagation_ok: bool,
    pub passed: bool,
}

/// The tolerance used for quasi-projections and quasi-unitaries.
pub const QUASI_EPS: f64 = 0.125;

/// Checks the quasi-projection or quasi-unitary relations up to `eps` with propagation at most `r`.
pub fn quasi_check(a: &BandedOperator, kind: QuasiKind, r: u64, eps: f64) -> Result<QuasiReport> {
    let one = BandedOperator::identity(a.window().clone());
    let (x, y) = match kind {
        QuasiKind::Projection => (a.mul(a)?.sub(a)?, a.sub(&a.adjoint())?),
        QuasiKind::Unitary => (a.adjoint().mul(a)?.sub(&one)?, a.mul(&a.adjoint())?.sub(&one)?),
    };
    let (first_defect, second_defect) = (op_norm(&x).value, op_norm(&y).value);
    let propagation_ok = a.propagation() <= r;
    let slack = eps + FLOAT_TOLERANCE;
    Ok(QuasiReport {
        kind,
        eps,
        first_defect,
        second_defect,
        propagation: a.propagation(),
        propagation_ok,
        passed: propagation_ok && first_defect <= slack && second_defect <= slack,
    })
}

/// Whether the compression of a self-adjoint operator to `idx` is positive semidefinite.
pub fn is_psd_on(a: &BandedOperator, idx: &[usize]) -> bool {
    let block = a.compress(idx, idx);
    let tol = if a.is_exact() { 0.0 } else { FLOAT_TOLERANCE };
    if block.keys().all(|&(i, j)| i == j) {
        return block.values().all(|z| z.im.abs() <= tol && z.re >= -tol);
    }
    let n = idx.len();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (&(i, j), &z) in &block {
        m[(i, j)] = z;
    }
    if (&m - m.adjoint()).iter().any(|z| z.norm() > FLOAT_TOLERANCE) {
        return false;
    }
    m.symmetric_eigenvalues().iter().all(|&l| l >= -FLOAT_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProperlyInfiniteReport {
    pub rows: usize,
    pub exact: bool,
    pub xx_equals_p: bool,
    pub yy_equals_p: bool,
    /// `p − (xx* + yy*) ⪰ 0` on the interior.
    pub dominated: bool,
    /// `xx* · yy* = 0` on the interior.
    pub orthogonal: bool,
}

impl ProperlyInfiniteReport {
    pub fn passed(&self) -> bool {
        self.xx_equals_p && self.yy_equals_p && self.dominated
    }
}

/// Checks `x*x = y*y = p` and `xx* + yy* ≤ p` on rows and columns in `Interior_m(w)`.
pub fn verify_properly_infinite(p: &BandedOperator, x: &BandedOperator, y: &BandedOperator, m: u64) -> Result<ProperlyInfiniteReport> {
    let idx = p.window().interior(m);
    let exact = p.is_exact() && x.is_exact() && y.is_exact();
    let tol = if exact { 0.0 } else { FLOAT_TOLERANCE };
    let (xs, ys) = (x.adjoint(), y.adjoint());
    let xx = x.mul(&xs)?;
    let yy = y.mul(&ys)?;
    let rest = p.sub(&xx.add(&yy)?)?;
    let zero = BandedOperator::zero(p.window().clone());
    Ok(ProperlyInfiniteReport {
        rows: idx.len(),
        exact,
        xx_equals_p: xs.mul(x)?.agrees_on(p, &idx, &idx, tol),
        yy_equals_p: ys.mul(y)?.agrees_on(p, &idx, &idx, tol),
        dominated: is_psd_on(&rest, &idx),
        orthogonal: xx.mul(&yy)?.agrees_on(&zero, &idx, &idx, tol),
    })
}
