use std::collections::BTreeSet;

use crate::space::Window;

/// Dinic max-flow on integer capacities. Edges are explored in insertion order.
struct FlowNet {
    to: Vec<usize>,
    cap: Vec<u64>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(nodes: usize) -> FlowNet {
        FlowNet { to: Vec::new(), cap: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: u64) -> usize {
        let e = self.to.len();
        self.to.extend([v, u]);
        self.cap.extend([cap, 0]);
        self.adj[u].push(e);
        self.adj[v].push(e + 1);
        e
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        let mut queue = std::collections::VecDeque::from([s]);
        level[s] = 0;
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn push(&mut self, u: usize, t: usize, limit: u64, level: &[usize], next: &mut [usize]) -> u64 {
        if u == t {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u] + 1 {
                let got = self.push(v, t, limit.min(self.cap[e]), level, next);
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            next[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut total = 0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.adj.len()];
            loop {
                let got = self.push(s, t, u64::MAX, &level, &mut next);
                if got == 0 {
                    break;
                }
                total += got;
            }
        }
    }
}

/// Two injections `u_+`, `u_-` from `Interior_r(w)` into `w` with disjoint
/// images and displacement at most `r`; all entries are window indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowedDoubling {
    pub r: u64,
    pub interior: Vec<usize>,
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchingOutcome {
    Certificate(WindowedDoubling),
    /// No doubling exists: `cut ⊆ Interior_r(w)` has `|N_r(cut) ∩ w| < 2|cut|`.
    Infeasible { flow: u64, needed: u64, cut: Vec<usize>, cut_neighborhood: usize },
}

/// Max-flow search for a 2-to-1 doubling of the `r`-interior into the window.
pub fn matching_certificate(w: &Window, r: u64) -> MatchingOutcome {
    let interior = w.interior(r);
    let (m, n) = (interior.len(), w.len());
    let (source, sink) = (m + n, m + n + 1);
    let mut net = FlowNet::new(m + n + 2);
    let mut arcs = Vec::with_capacity(m);
    for (k, &i) in interior.iter().enumerate() {
        net.add_edge(source, k, 2);
        let targets = w.neighbors_within(i, r);
        arcs.push(targets.iter().map(|&j| (j, net.add_edge(k, m + j, 2))).collect::<Vec<_>>());
    }
    for j in 0..n {
        net.add_edge(m + j, sink, 1);
    }
    let needed = 2 * m as u64;
    let flow = net.max_flow(source, sink);
    if flow == needed {
        let mut plus = Vec::with_capacity(m);
        let mut minus = Vec::with_capacity(m);
        for node in &arcs {
            let used: Vec<usize> = node.iter().filter(|(_, e)| net.cap[*e] < 2).map(|&(j, _)| j).collect();
            plus.push(used[0]);
            minus.push(used[1]);
        }
        return MatchingOutcome::Certificate(WindowedDoubling { r, interior, plus, minus });
    }
    let level = net.levels(source);
    let cut: Vec<usize> = (0..m).filter(|&k| level[k] != usize::MAX).map(|k| interior[k]).collect();
    let cut_neighborhood = neighborhood_in_window(w, &cut, r);
    MatchingOutcome::Infeasible { flow, needed, cut, cut_neighborhood }
}

/// `|N_r(F) ∩ w|` for a set of window indices.
pub fn neighborhood_in_window(w: &Window, set: &[usize], r: u64) -> usize {
    let mut seen = BTreeSet::new();
    for &i in set {
        seen.extend(w.neighbors_within(i, r));
    }
    seen.len()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoublingReport {
    /// The recorded interior is exactly `Interior_r(w)`.
    pub interior: bool,
    pub injective: bool,
    pub disjoint_images: bool,
    pub displacement_ok: bool,
}

impl DoublingReport {
    pub fn passed(&self) -> bool {
        self.interior && self.injective && self.disjoint_images && self.displacement_ok
    }
}

pub fn verify_doubling(w: &Window, d: &WindowedDoubling) -> DoublingReport {
    let n = w.len();
    let interior = d.interior == w.interior(d.r);
    let shapes = d.plus.len() == d.interior.len() && d.minus.len() == d.interior.len();
    let in_range = d.plus.iter().chain(&d.minus).chain(&d.interior).all(|&j| j < n);
    if !(shapes && in_range) {
        return DoublingReport { interior, injective: false, disjoint_images: false, displacement_ok: false };
    }
    let distinct = |v: &[usize]| v.iter().collect::<BTreeSet<_>>().len() == v.len();
    let injective = distinct(&d.plus) && distinct(&d.minus);
    let disjoint_images = d.plus.iter().collect::<BTreeSet<_>>().is_disjoint(&d.minus.iter().collect());
    let displacement_ok = d
        .interior
        .iter()
        .zip(d.plus.iter().zip(&d.minus))
        .all(|(&x, (&p, &q))| w.dist(x, p) <= d.r && w.dist(x, q) <= d.r);
    DoublingReport { interior, injective, disjoint_images, displacement_ok }
}

/// A Hall violation: `cut ⊆ Interior_r(w)`, nonempty, with `|N_r(cut) ∩ w| < 2|cut|`.
pub fn verify_cut(w: &Window, r: u64, cut: &[usize]) -> bool {
    let interior: BTreeSet<usize> = w.interior(r).into_iter().collect();
    !cut.is_empty()
        && cut.iter().all(|i| interior.contains(i))
        && neighborhood_in_window(w, cut, r) < 2 * cut.iter().collect::<BTreeSet<_>>().len()
}
