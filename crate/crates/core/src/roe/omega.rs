use std::sync::Arc;

use super::operator::BandedOperator;
use crate::asdim::ColoredCover;
use crate::error::{Error, Result};
use crate::space::Window;

/// A two-colored cover `w = U ⊔ V`, `U = ⊔ U_i`, `V = ⊔ V_j`.
#[derive(Debug, Clone)]
pub struct OmegaDecomposition {
    pub window: Arc<Window>,
    pub cover: ColoredCover,
}

impl OmegaDecomposition {
    pub fn new(window: Arc<Window>, cover: ColoredCover) -> Result<OmegaDecomposition> {
        if cover.num_colors() != 2 {
            return Err(Error::Invalid(format!("a decomposition needs 2 colors, got {}", cover.num_colors())));
        }
        Ok(OmegaDecomposition { window, cover })
    }

    pub fn u_pieces(&self) -> &[Vec<usize>] {
        &self.cover.colors[0]
    }

    pub fn v_pieces(&self) -> &[Vec<usize>] {
        &self.cover.colors[1]
    }

    /// For each window point, the pieces whose `r`-neighbourhood contains it.
    fn memberships(&self, pieces: &[Vec<usize>], r: u64) -> Vec<Vec<usize>> {
        let mut member = vec![Vec::new(); self.window.len()];
        for (k, piece) in pieces.iter().enumerate() {
            for &x in piece {
                for y in self.window.neighbors_within(x, r) {
                    if member[y].last() != Some(&k) {
                        member[y].push(k);
                    }
                }
            }
        }
        for m in &mut member {
            m.sort_unstable();
            m.dedup();
        }
        member
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaPart {
    /// Support in `⋃ U_i^(r) × U_i^(r)` and propagation at most `r`.
    U,
    /// Support in `⋃ V_j^(r) × V_j^(r)` and propagation at most `r`.
    V,
    /// Support in `⋃ (U_i^(r) ∩ V_j^(r))²`, no propagation condition.
    Intersection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipReport {
    pub support_ok: bool,
    pub propagation_ok: bool,
    /// First support entry `(row, column)` outside the allowed region.
    pub violation: Option<(usize, usize)>,
}

impl MembershipReport {
    pub fn passed(&self) -> bool {
        self.support_ok && self.propagation_ok
    }
}

fn share(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

pub fn omega_membership(a: &BandedOperator, omega: &OmegaDecomposition, r: u64, part: OmegaPart) -> Result<MembershipReport> {
    if !(Arc::ptr_eq(a.window(), &omega.window) || **a.window() == *omega.window) {
        return Err(Error::WindowMismatch);
    }
    let u = omega.memberships(omega.u_pieces(), r);
    let v = omega.memberships(omega.v_pieces(), r);
    let allowed = |x: usize, y: usize| match part {
        OmegaPart::U => share(&u[x], &u[y]),
        OmegaPart::V => share(&v[x], &v[y]),
        OmegaPart::Intersection => share(&u[x], &u[y]) && share(&v[x], &v[y]),
    };
    let violation = a.entries().map(|(i, j, _)| (i, j)).find(|&(i, j)| !allowed(i, j));
    let propagation_ok = part == OmegaPart::Intersection || a.propagation() <= r;
    Ok(MembershipReport { support_ok: violation.is_none(), propagation_ok, violation })
}

/// `b = Σ_i 1_{U_i} a` and `c = Σ_j 1_{V_j} a`, so `b + c = a`.
pub fn mv_split(a: &BandedOperator, omega: &OmegaDecomposition) -> Result<(BandedOperator, BandedOperator)> {
    if !(Arc::ptr_eq(a.window(), &omega.window) || **a.window() == *omega.window) {
        return Err(Error::WindowMismatch);
    }
    let mut in_u = vec![false; a.dim()];
    for &x in omega.u_pieces().iter().flatten() {
        in_u[x] = true;
    }
    let in_v: Vec<bool> = in_u.iter().map(|b| !b).collect();
    Ok((a.restrict_rows(&in_u), a.restrict_rows(&in_v)))
}
