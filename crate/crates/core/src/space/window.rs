use std::collections::HashMap;
use std::sync::Arc;

use serde_json::{json, Value};

use super::{PointId, Space};
use crate::error::{Error, Result};

/// A finite subset of a space, sorted in canonical point order.
///
/// Distances between window points are ambient distances, never path
/// distances inside the window.
#[derive(Debug, Clone)]
pub struct Window {
    space: Arc<Space>,
    points: Vec<PointId>,
    index: HashMap<PointId, usize>,
}

impl PartialEq for Window {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.space.spec() == other.space.spec()
    }
}

impl Window {
    /// Builds a window from arbitrary points; duplicates are dropped.
    pub fn new(space: Arc<Space>, points: impl IntoIterator<Item = PointId>) -> Result<Window> {
        let mut points: Vec<PointId> = points.into_iter().collect();
        for p in &points {
            if !space.contains(p) {
                return Err(Error::UnknownPoint(p.to_string()));
            }
        }
        points.sort();
        points.dedup();
        let index = points.iter().cloned().zip(0..).collect();
        Ok(Window { space, points, index })
    }

    /// The closed ball `B_r(center)`.
    pub fn ball(space: Arc<Space>, center: &PointId, r: u64) -> Result<Window> {
        let pts = space.ball(center, r)?;
        Window::new(space, pts)
    }

    /// Every point of a finite space.
    pub fn whole(space: Arc<Space>) -> Result<Window> {
        let pts = space
            .all_points()
            .ok_or_else(|| Error::Invalid(format!("{} space is infinite", space.kind_name())))?;
        Window::new(space, pts)
    }

    /// `{"ball":{"center":..,"radius":R}}` or `{"points":[..]}`.
    pub fn from_json(space: Arc<Space>, value: &Value) -> Result<Window> {
        if let Some(ball) = value.get("ball") {
            let center = match ball.get("center") {
                Some(c) => space.point_from_json(c)?,
                None => space.base_point(),
            };
            let radius = ball
                .get("radius")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::Invalid("window ball needs a radius".into()))?;
            Window::ball(space, &center, radius)
        } else if let Some(points) = value.get("points").and_then(Value::as_array) {
            let pts = points
                .iter()
                .map(|p| space.point_from_json(p))
                .collect::<Result<Vec<_>>>()?;
            Window::new(space, pts)
        } else {
            Err(Error::Invalid("window needs `ball` or `points`".into()))
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "points": self.points.iter().map(|p| self.space.point_to_json(p)).collect::<Vec<_>>() })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &PointId {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &PointId) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &PointId) -> bool {
        self.index.contains_key(p)
    }

    pub fn dist(&self, i: usize, j: usize) -> u64 {
        self.space.dist_unchecked(&self.points[i], &self.points[j])
    }

    pub fn point_json(&self, i: usize) -> Value {
        self.space.point_to_json(&self.points[i])
    }

    /// Indices of window points within distance `r` of point `i` (including `i`), ascending.
    pub fn neighbors_within(&self, i: usize, r: u64) -> Vec<usize> {
        if !self.space.prefers_scan() {
            let cap = (4 * self.len()).max(4096);
            if let Ok(ball) = self.space.ball_capped(&self.points[i], r, cap) {
                let mut out: Vec<usize> = ball.iter().filter_map(|p| self.index_of(p)).collect();
                out.sort_unstable();
                return out;
            }
        }
        (0..self.len()).filter(|&j| self.dist(i, j) <= r).collect()
    }

    /// Whether the ambient ball `B_r(x_i)` lies inside the window.
    pub fn is_interior(&self, i: usize, r: u64) -> bool {
        match self.space.ball_capped(&self.points[i], r, self.len()) {
            Ok(ball) => ball.iter().all(|p| self.contains(p)),
            Err(_) => false,
        }
    }

    /// `Interior_r(W) = {x ∈ W : B_r(x) ⊆ W}` as ascending indices.
    pub fn interior(&self, r: u64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i, r)).collect()
    }

    pub fn diameter(&self) -> u64 {
        let mut best = 0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// Distance from point `i` to the nearest point of `set` (`None` when `set` is empty).
    pub fn dist_to_set(&self, i: usize, set: &[usize]) -> Option<u64> {
        set.iter().map(|&j| self.dist(i, j)).min()
    }

    /// The window restricted to the given indices.
    pub fn restrict(&self, indices: &[usize]) -> Window {
        Window::new(self.space.clone(), indices.iter().map(|&i| self.points[i].clone()))
            .expect("points of a window are valid")
    }

    /// `max_x |B_r(x) ∩ W|`.
    pub fn bounded_geometry_profile(&self, r: u64) -> usize {
        (0..self.len())
            .map(|i| self.neighbors_within(i, r).len())
            .max()
            .unwrap_or(0)
    }

    /// Exhaustive metric-axiom check; returns an offending `(a, b, c)` triple.
    pub fn check_metric(&self) -> Result<(), (usize, usize, usize)> {
        let n = self.len();
        for a in 0..n {
            for b in 0..n {
                let dab = self.dist(a, b);
                if (dab == 0) != (a == b) || dab != self.dist(b, a) {
                    return Err((a, b, b));
                }
                for c in 0..n {
                    if self.dist(a, c) > dab + self.dist(b, c) {
                        return Err((a, b, c));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceSpec;

    fn line_window(lo: i64, hi: i64) -> Window {
        let z = Arc::new(Space::new(SpaceSpec::grid(1)).unwrap());
        Window::new(z, (lo..=hi).map(|x| PointId::grid(&[x]))).unwrap()
    }

    #[test]
    fn profile_on_line_and_singleton() {
        let w = line_window(-10, 10);
        assert_eq!(w.bounded_geometry_profile(1), 3);
        let single = line_window(4, 4);
        assert_eq!(single.bounded_geometry_profile(7), 1);
    }

    #[test]
    fn free_group_profile_at_interior_vertex() {
        let f2 = Arc::new(Space::new(SpaceSpec::free_group(2)).unwrap());
        let w = Window::ball(f2.clone(), &f2.base_point(), 4).unwrap();
        assert_eq!(w.len(), 161);
        assert_eq!(w.bounded_geometry_profile(1), 5);
    }

    #[test]
    fn interior_of_interval() {
        let w = line_window(0, 9);
        assert_eq!(w.interior(0).len(), 10);
        assert_eq!(w.interior(2), (2..8).collect::<Vec<_>>());
    }

    #[test]
    fn window_distances_are_ambient() {
        // {0, 10} on the line: the window has no path between them, distance stays 10
        let line = Arc::new(Space::new(SpaceSpec::point_line(vec![0, 5, 10])).unwrap());
        let w = Window::new(line, [PointId::Coord(0), PointId::Coord(10)]).unwrap();
        assert_eq!(w.dist(0, 1), 10);
    }

    #[test]
    fn window_json_forms() {
        let f2 = Arc::new(Space::new(SpaceSpec::free_group(2)).unwrap());
        let w = Window::from_json(f2.clone(), &json!({"ball": {"center": "e", "radius": 2}})).unwrap();
        assert_eq!(w.len(), 17);
        let back = Window::from_json(f2, &w.to_json()).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn metric_check_passes_on_tree_window() {
        let t = Arc::new(Space::new(SpaceSpec::regular_tree(3)).unwrap());
        let w = Window::ball(t, &PointId::Vertex(2), 2).unwrap();
        assert!(w.check_metric().is_ok());
    }
}
