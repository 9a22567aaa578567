//! Exact arithmetic on centrally symmetric planar polygons.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use std::cmp::Ordering;

pub type P2 = [f64; 2];

/// Relative threshold below which three points count as collinear.
pub const COLLINEAR_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot2(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn len2(a: P2) -> f64 {
    a[0].hypot(a[1])
}

fn angle_0_2pi(p: P2) -> f64 {
    let a = p[1].atan2(p[0]);
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Symmetric polygon in canonical form: counterclockwise, no redundant
/// vertices, `v[i + n/2] == -v[i]`, starting at the vertex of smallest
/// angle in `[0, 2 pi)`.
///
/// Zero vertices encode `{0}`; two vertices encode a segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SymPolygon {
    verts: Vec<P2>,
}

impl SymPolygon {
    pub fn zero() -> Self {
        SymPolygon { verts: Vec::new() }
    }

    /// Convex hull of `points` and their negations.
    pub fn from_points(points: &[P2]) -> Self {
        let mut pts: Vec<P2> = Vec::with_capacity(2 * points.len());
        for &p in points {
            if p[0] != 0.0 || p[1] != 0.0 {
                pts.push(p);
                pts.push([-p[0], -p[1]]);
            }
        }
        SymPolygon { verts: canonical_start(symmetric_hull(pts)) }
    }

    /// Segment `conv{v, -v}`.
    pub fn segment(v: P2) -> Self {
        Self::from_points(&[v])
    }

    pub fn verts(&self) -> &[P2] {
        &self.verts
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.verts.len() >= 3
    }

    pub fn scale(&self, s: f64) -> Self {
        let s = s.abs();
        if s == 0.0 {
            return Self::zero();
        }
        SymPolygon { verts: self.verts.iter().map(|v| [v[0] * s, v[1] * s]).collect() }
    }

    /// Image under a linear map (re-canonicalized).
    pub fn transform(&self, m: &Mat<f64>) -> Self {
        let pts: Vec<P2> = self
            .verts
            .iter()
            .map(|v| {
                let w = m.mul_vec(v);
                [w[0], w[1]]
            })
            .collect();
        Self::from_points(&pts)
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        self.verts.iter().fold(0.0f64, |acc, v| acc.max(v[0] * u[0] + v[1] * u[1]))
    }

    /// `max |W v|` over the vertices.
    pub fn set_norm(&self, w: &Mat<f64>) -> f64 {
        self.verts.iter().fold(0.0f64, |acc, v| {
            let x = w.mul_vec(v);
            acc.max(x[0].hypot(x[1]))
        })
    }

    /// Minkowski sum by merging edge sequences.
    pub fn minkowski_sum(&self, other: &Self) -> Self {
        if self.verts.is_empty() {
            return other.clone();
        }
        if other.verts.is_empty() {
            return self.clone();
        }
        let p = from_lowest(&self.verts);
        let q = from_lowest(&other.verts);
        let (n, m) = (p.len(), q.len());
        let mut out = Vec::with_capacity(n + m);
        let (mut i, mut j) = (0usize, 0usize);
        while i < n || j < m {
            let (a, b) = (p[i % n], q[j % m]);
            out.push([a[0] + b[0], a[1] + b[1]]);
            let ep = sub(p[(i + 1) % n], p[i % n]);
            let eq = sub(q[(j + 1) % m], q[j % m]);
            let c = cross(ep, eq);
            if c >= 0.0 && i < n {
                i += 1;
            }
            if c <= 0.0 && j < m {
                j += 1;
            }
        }
        Self::from_points(&out)
    }

    /// Hull of a union.
    pub fn hull_union<'a>(polys: impl IntoIterator<Item = &'a SymPolygon>) -> Self {
        let pts: Vec<P2> = polys.into_iter().flat_map(|p| p.verts.iter().copied()).collect();
        Self::from_points(&pts)
    }

    /// Vertices `y_i` of the polar body, one per edge `(v_i, v_{i+1})`.
    pub fn polar_vertices(&self) -> Result<Vec<P2>> {
        if !self.is_full_dimensional() {
            return Err(Error::DegenerateBody);
        }
        let n = self.verts.len();
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            let det = cross(a, b);
            if !(det > 0.0) {
                return Err(Error::DegenerateBody);
            }
            ys.push([(b[1] - a[1]) / det, (a[0] - b[0]) / det]);
        }
        Ok(ys)
    }

    pub fn polar(&self) -> Result<Self> {
        Ok(Self::from_points(&self.polar_vertices()?))
    }

    /// Minkowski functional.
    pub fn gauge(&self, v: &[f64]) -> Result<f64> {
        let v = [v[0], v[1]];
        if v == [0.0, 0.0] {
            return Ok(0.0);
        }
        match self.verts.len() {
            0 => Err(Error::DegenerateBody),
            2 => {
                let a = self.verts[0];
                let aa = dot2(a, a);
                let s = dot2(a, v) / aa;
                let resid = len2(sub(v, [a[0] * s, a[1] * s]));
                if resid > 1e-12 * len2(v).max(aa.sqrt()) {
                    return Err(Error::DegenerateBody);
                }
                Ok(s.abs())
            }
            _ => Ok(self.polar_vertices()?.iter().fold(0.0f64, |acc, y| acc.max(dot2(*y, v)))),
        }
    }

    /// Outward edge normals (unnormalized), one per edge.
    pub(crate) fn edge_normals(&self) -> Vec<P2> {
        let n = self.verts.len();
        (0..n)
            .map(|i| {
                let e = sub(self.verts[(i + 1) % n], self.verts[i]);
                [e[1], -e[0]]
            })
            .collect()
    }

    /// Euclidean distance from a point to the polygon (zero inside).
    pub fn distance_to(&self, x: P2) -> f64 {
        match self.verts.len() {
            0 => len2(x),
            2 => seg_dist(x, self.verts[0], self.verts[1]),
            n => {
                let inside = (0..n).all(|i| cross(sub(self.verts[(i + 1) % n], self.verts[i]), sub(x, self.verts[i])) >= 0.0);
                if inside {
                    return 0.0;
                }
                (0..n).map(|i| seg_dist(x, self.verts[i], self.verts[(i + 1) % n])).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

fn seg_dist(x: P2, a: P2, b: P2) -> f64 {
    let ab = sub(b, a);
    let l = dot2(ab, ab);
    let t = if l == 0.0 { 0.0 } else { (dot2(sub(x, a), ab) / l).clamp(0.0, 1.0) };
    len2(sub(x, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Rotate a counterclockwise cycle to start at its lowest (then leftmost) vertex.
fn from_lowest(v: &[P2]) -> Vec<P2> {
    let k = (0..v.len())
        .min_by(|&i, &j| v[i][1].partial_cmp(&v[j][1]).unwrap_or(Ordering::Equal).then(v[i][0].partial_cmp(&v[j][0]).unwrap_or(Ordering::Equal)))
        .unwrap_or(0);
    v[k..].iter().chain(v[..k].iter()).copied().collect()
}

fn canonical_start(h: Vec<P2>) -> Vec<P2> {
    if h.len() < 2 {
        return h;
    }
    let k = (0..h.len()).min_by(|&i, &j| angle_0_2pi(h[i]).partial_cmp(&angle_0_2pi(h[j])).unwrap_or(Ordering::Equal)).unwrap_or(0);
    h[k..].iter().chain(h[..k].iter()).copied().collect()
}

#[inline]
fn turns_left(o: P2, a: P2, b: P2) -> bool {
    let oa = sub(a, o);
    let ob = sub(b, o);
    cross(oa, ob) > COLLINEAR_TOL * len2(oa) * len2(ob)
}

/// Monotone-chain hull of a point set closed under exact negation.
///
/// The upper chain is computed from the reversed order, which for such a
/// set is the negation of the lower chain's input, so the result is exactly
/// symmetric.  Collinear and near-collinear points are dropped.
fn symmetric_hull(mut pts: Vec<P2>) -> Vec<P2> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && !turns_left(lower[lower.len() - 2], lower[lower.len() - 1], p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && !turns_left(upper[upper.len() - 2], upper[upper.len() - 1], p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Convex hull (counterclockwise, collinear points removed) of an arbitrary
/// point set, keeping the original indices.
pub(crate) fn hull_indices(pts: &[P2]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]).then(pts[a][1].total_cmp(&pts[b][1])));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let chain = |order: &mut dyn Iterator<Item = usize>| {
        let mut c: Vec<usize> = Vec::new();
        for i in order {
            while c.len() >= 2 && !turns_left(pts[c[c.len() - 2]], pts[c[c.len() - 1]], pts[i]) {
                c.pop();
            }
            c.push(i);
        }
        c
    };
    let mut lower = chain(&mut idx.iter().copied());
    let mut upper = chain(&mut idx.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> SymPolygon {
        SymPolygon::from_points(&[[1.0, 1.0], [-1.0, 1.0]])
    }

    #[test]
    fn canonical_square() {
        let s = square();
        assert_eq!(s.verts(), &[[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]);
    }

    #[test]
    fn collinear_points_are_dropped() {
        let p = SymPolygon::from_points(&[[1.0, 0.0], [1.0, 0.5], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn segment_and_zero() {
        let s = SymPolygon::segment([1.0, 1.0]);
        assert_eq!(s.verts(), &[[1.0, 1.0], [-1.0, -1.0]]);
        assert!(SymPolygon::from_points(&[[0.0, 0.0]]).is_empty());
        assert_eq!(s.gauge(&[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(s.gauge(&[1.0, 0.0]), Err(Error::DegenerateBody));
    }

    #[test]
    fn sum_of_diagonal_segments() {
        let a = SymPolygon::segment([1.0, 1.0]);
        let b = SymPolygon::segment([-1.0, 1.0]);
        let s = a.minkowski_sum(&b);
        assert_eq!(s.verts(), &[[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]]);
    }

    #[test]
    fn polar_of_square_is_diamond() {
        let p = square().polar().unwrap();
        assert_eq!(p.verts(), &[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn distances() {
        let s = square();
        assert_eq!(s.distance_to([0.5, 0.2]), 0.0);
        assert!((s.distance_to([2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.distance_to([3.0, 0.0]), 2.0);
    }
}
