//! Zero level curve extraction by marching squares.
//!
//! Grid nodes sit at pixel centers, so a node for pixel `(x, y)` has
//! coordinates `(x + 0.5, y + 0.5)`, the same frame the seed polygons use.
//! A node is "inside" when `phi > 0`. Crossings are placed by linear
//! interpolation along cell edges; saddle cells are resolved with the cell
//! mean.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::grid::ScalarField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let seg = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let mut total: f64 = self.points.windows(2).map(|p| seg(p[0], p[1])).sum();
        if self.closed && self.points.len() > 1 {
            total += seg(self.points[self.points.len() - 1], self.points[0]);
        }
        total
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.points.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p[0]), b.min(p[1]), c.max(p[0]), d.max(p[1])),
        )
    }
}

type EdgeId = usize;

/// Returns every `phi = 0` curve. Empty when `phi` has a single sign.
pub fn extract_contours(phi: &ScalarField) -> Vec<Polyline> {
    let (w, h) = phi.dims();
    if w < 2 || h < 2 {
        return Vec::new();
    }
    let v = phi.values();
    let inside = |x: usize, y: usize| v[y * w + x] > 0.0;
    let any_in = v.iter().any(|&p| p > 0.0);
    let any_out = v.iter().any(|&p| p <= 0.0);
    if !(any_in && any_out) {
        return Vec::new();
    }

    let h_edge = |x: usize, y: usize| -> EdgeId { (y * w + x) * 2 };
    let v_edge = |x: usize, y: usize| -> EdgeId { (y * w + x) * 2 + 1 };

    let mut segments: Vec<[EdgeId; 2]> = Vec::new();
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let a = inside(x, y);
            let b = inside(x + 1, y);
            let c = inside(x + 1, y + 1);
            let d = inside(x, y + 1);
            let top = h_edge(x, y);
            let right = v_edge(x + 1, y);
            let bottom = h_edge(x, y + 1);
            let left = v_edge(x, y);
            let mut crossing = Vec::with_capacity(4);
            if a != b {
                crossing.push(top);
            }
            if b != c {
                crossing.push(right);
            }
            if c != d {
                crossing.push(bottom);
            }
            if d != a {
                crossing.push(left);
            }
            match crossing.len() {
                2 => segments.push([crossing[0], crossing[1]]),
                4 => {
                    let mean = (v[y * w + x] + v[y * w + x + 1] + v[(y + 1) * w + x + 1] + v[(y + 1) * w + x]) / 4.0;
                    if (mean > 0.0) == a {
                        // a and c joined through the center: cut off b and d
                        segments.push([top, right]);
                        segments.push([bottom, left]);
                    } else {
                        segments.push([left, top]);
                        segments.push([right, bottom]);
                    }
                }
                _ => {}
            }
        }
    }

    let point = |e: EdgeId| -> [f64; 2] {
        let node = e / 2;
        let (x, y) = (node % w, node / w);
        let (x2, y2) = if e.is_multiple_of(2) { (x + 1, y) } else { (x, y + 1) };
        let p = v[y * w + x];
        let q = v[y2 * w + x2];
        let t = if p == q { 0.5 } else { p / (p - q) };
        [
            x as f64 + 0.5 + t * (x2 as f64 - x as f64),
            y as f64 + 0.5 + t * (y2 as f64 - y as f64),
        ]
    };

    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (i, s) in segments.iter().enumerate() {
        for &e in s {
            by_edge.entry(e).or_default().push(i);
        }
    }
    let mut used = vec![false; segments.len()];

    let walk = |start_seg: usize, start_edge: EdgeId, used: &mut Vec<bool>| -> (Vec<EdgeId>, bool) {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let [e0, e1] = segments[seg];
            let next = if e0 == at { e1 } else { e0 };
            if next == start_edge {
                return (chain, true);
            }
            chain.push(next);
            at = next;
            match by_edge[&next].iter().copied().find(|&s| !used[s]) {
                Some(s) => seg = s,
                None => return (chain, false),
            }
        }
    };

    let mut out = Vec::new();
    // Open chains start at edges touched by a single segment (grid border).
    let mut starts: Vec<(EdgeId, usize)> = by_edge
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(&e, segs)| (e, segs[0]))
        .collect();
    starts.sort_unstable();
    for (edge, seg) in starts {
        if used[seg] {
            continue;
        }
        let (chain, _) = walk(seg, edge, &mut used);
        out.push(Polyline {
            points: chain.into_iter().map(point).collect(),
            closed: false,
        });
    }
    for seg in 0..segments.len() {
        if used[seg] {
            continue;
        }
        let (chain, closed) = walk(seg, segments[seg][0], &mut used);
        out.push(Polyline {
            points: chain.into_iter().map(point).collect(),
            closed,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sign_has_no_contour() {
        let phi = ScalarField::filled(6, 6, -1.0).unwrap();
        assert!(extract_contours(&phi).is_empty());
        let phi = ScalarField::filled(6, 6, 2.0).unwrap();
        assert!(extract_contours(&phi).is_empty());
    }

    #[test]
    fn binary_square_gives_one_closed_loop() {
        let phi = ScalarField::from_fn(20, 20, |x, y| {
            if (5..12).contains(&x) && (6..15).contains(&y) {
                1.0
            } else {
                -1.0
            }
        })
        .unwrap();
        let c = extract_contours(&phi);
        assert_eq!(c.len(), 1);
        assert!(c[0].closed);
        let (x0, y0, x1, y1) = c[0].bounds();
        assert!((x0 - 5.0).abs() <= 1.0 && (x1 - 12.0).abs() <= 1.0);
        assert!((y0 - 6.0).abs() <= 1.0 && (y1 - 15.0).abs() <= 1.0);
    }

    #[test]
    fn region_touching_border_is_open() {
        let phi = ScalarField::from_fn(10, 10, |x, _| if x < 4 { 1.0 } else { -1.0 }).unwrap();
        let c = extract_contours(&phi);
        assert_eq!(c.len(), 1);
        assert!(!c[0].closed);
        assert_eq!(c[0].points.len(), 10);
        assert!(c[0].points.iter().all(|p| (p[0] - 4.0).abs() < 1e-12));
    }

    #[test]
    fn two_blobs_two_loops() {
        let phi = ScalarField::from_fn(30, 12, |x, y| {
            let in_a = (3..8).contains(&x) && (3..8).contains(&y);
            let in_b = (18..25).contains(&x) && (2..9).contains(&y);
            if in_a || in_b {
                1.0
            } else {
                -1.0
            }
        })
        .unwrap();
        let c = extract_contours(&phi);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|p| p.closed));
    }
}
