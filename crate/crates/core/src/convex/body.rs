//! Bounded symmetric convex bodies and their arithmetic.

use super::directions::DirectionGrid;
use super::lp::support_lp;
use super::polygon::{cross, dot2, SymPolygon, P2};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Mat};
use crate::norm_kernel::golden_max;
use std::sync::{Arc, OnceLock};

/// Relative threshold for rank and zero-support decisions.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Relative tolerance for treating two ellipsoid matrices as proportional.
const PROPORTIONAL_TOL: f64 = 1e-13;

/// Support values on a direction grid, read as the outer polyhedron
/// `{x : <x, u_i> <= h_i}`.  Values are kept canonical: each `h_i` is the
/// support of that polyhedron.
#[derive(Clone, Debug)]
pub struct SupportBody {
    grid: Arc<DirectionGrid>,
    h: Vec<f64>,
    vertices: OnceLock<Vec<Vec<f64>>>,
}

impl PartialEq for SupportBody {
    fn eq(&self, other: &Self) -> bool {
        self.grid.dim() == other.grid.dim() && self.grid.len() == other.grid.len() && self.h == other.h
    }
}

impl SupportBody {
    /// Canonicalize arbitrary support values.  Asymmetric input is replaced
    /// by the largest symmetric body inside the polyhedron.
    pub fn new(grid: Arc<DirectionGrid>, h: Vec<f64>) -> Result<Self> {
        if h.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: h.len() });
        }
        if h.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::SchemaMismatch("support values must be finite and nonnegative".into()));
        }
        let mut h: Vec<f64> = (0..h.len()).map(|i| h[i].min(h[grid.neg(i)])).collect();
        let scale = h.iter().cloned().fold(0.0, f64::max);
        h.iter_mut().for_each(|x| {
            if *x <= DEGENERACY_TOL * scale {
                *x = 0.0
            }
        });
        let h = match grid.dim() {
            1 => h,
            2 => canonicalize_planar(&grid, &h),
            d => {
                let mut out = vec![0.0; h.len()];
                for i in 0..h.len() / 2 {
                    let v = support_lp(d, flat(&grid), &h, grid.dir(i))?.value.min(h[i]);
                    out[i] = v;
                    out[grid.neg(i)] = v;
                }
                out
            }
        };
        Ok(Self::from_canonical(grid, h))
    }

    pub(crate) fn from_canonical(grid: Arc<DirectionGrid>, h: Vec<f64>) -> Self {
        SupportBody { grid, h, vertices: OnceLock::new() }
    }

    pub fn grid(&self) -> &Arc<DirectionGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|&x| x == 0.0)
    }

    pub fn is_full_dimensional(&self) -> bool {
        let scale = self.h.iter().cloned().fold(0.0, f64::max);
        scale > 0.0 && self.h.iter().all(|&x| x > DEGENERACY_TOL * scale)
    }

    /// Vertex between facet lines `i` and `i + 1` (d = 2).
    fn planar_vertex(&self, i: usize) -> P2 {
        let n = self.h.len();
        let j = (i + 1) % n;
        let (a, b) = (self.grid.dir(i), self.grid.dir(j));
        let det = a[0] * b[1] - a[1] * b[0];
        let (hi, hj) = (self.h[i], self.h[j]);
        [(hi * b[1] - hj * a[1]) / det, (hj * a[0] - hi * b[0]) / det]
    }

    /// Vertices of the outer polygon, one per consecutive pair of grid lines.
    pub fn outer_vertices(&self) -> Vec<P2> {
        assert_eq!(self.dim(), 2, "outer polygon only exists at d = 2");
        (0..self.h.len()).map(|i| self.planar_vertex(i)).collect()
    }

    /// The outer polygon as an exact symmetric polygon (d = 2).
    pub fn to_polygon(&self) -> SymPolygon {
        SymPolygon::from_points(&self.outer_vertices())
    }

    /// LP-optimal vertices for every grid objective (d >= 3), cached.
    fn spatial_vertices(&self) -> Result<&[Vec<f64>]> {
        if let Some(v) = self.vertices.get() {
            return Ok(v);
        }
        let d = self.dim();
        let mut vs = Vec::with_capacity(self.h.len());
        for i in 0..self.h.len() {
            vs.push(support_lp(d, flat(&self.grid), &self.h, self.grid.dir(i))?.vertex);
        }
        Ok(self.vertices.get_or_init(|| vs))
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        match self.dim() {
            1 => {
                if u[0] >= 0.0 {
                    self.h[0] * u[0]
                } else {
                    -self.h[1] * u[0]
                }
            }
            2 => {
                let n = self.h.len();
                let mut th = u[1].atan2(u[0]);
                if th < 0.0 {
                    th += 2.0 * std::f64::consts::PI;
                }
                let k = ((th / self.grid.step_angle()).floor() as isize).rem_euclid(n as isize) as usize;
                [k + n - 1, k, k + 1].iter().map(|&i| dot2(self.planar_vertex(i % n), [u[0], u[1]])).fold(0.0f64, f64::max)
            }
            d => support_lp(d, flat(&self.grid), &self.h, u).map(|s| s.value).unwrap_or(f64::NAN),
        }
    }

    pub fn gauge(&self, v: &[f64]) -> Result<f64> {
        let mut g = 0.0f64;
        for (i, u) in self.grid.iter().enumerate() {
            let s = dot(u, v);
            if s <= 0.0 {
                continue;
            }
            if self.h[i] == 0.0 {
                if s > DEGENERACY_TOL * norm(v) {
                    return Err(Error::DegenerateBody);
                }
                continue;
            }
            g = g.max(s / self.h[i]);
        }
        Ok(g)
    }

    pub fn set_norm(&self, w: &Mat<f64>) -> f64 {
        match self.dim() {
            1 => w[(0, 0)].abs() * self.h[0],
            2 => (0..self.h.len())
                .map(|i| {
                    let x = w.mul_vec(&self.planar_vertex(i));
                    x[0].hypot(x[1])
                })
                .fold(0.0, f64::max),
            _ => match self.spatial_vertices() {
                Ok(vs) => vs.iter().map(|x| norm(&w.mul_vec(x))).fold(0.0, f64::max),
                Err(_) => f64::NAN,
            },
        }
    }
}

fn flat(grid: &DirectionGrid) -> &[f64] {
    grid.as_flat()
}

/// Canonical support values at d = 2 through the polar hull of `u_i / h_i`.
fn canonicalize_planar(grid: &DirectionGrid, h: &[f64]) -> Vec<f64> {
    let n = h.len();
    if h.iter().all(|&x| x == 0.0) {
        return h.to_vec();
    }
    let zeros: Vec<usize> = (0..n).filter(|&i| h[i] == 0.0).collect();
    if !zeros.is_empty() {
        let z = grid.dir(zeros[0]);
        if zeros.iter().any(|&i| cross([z[0], z[1]], [grid.dir(i)[0], grid.dir(i)[1]]).abs() > 1e-9) {
            return vec![0.0; n];
        }
        let w = [-z[1], z[0]];
        let mut len = f64::INFINITY;
        for i in 0..n {
            let c = dot2([grid.dir(i)[0], grid.dir(i)[1]], w);
            if c > 1e-9 {
                len = len.min(h[i] / c);
            }
        }
        return (0..n).map(|i| len * dot2([grid.dir(i)[0], grid.dir(i)[1]], w).abs()).collect();
    }
    let pts: Vec<P2> = (0..n).map(|i| [grid.dir(i)[0] / h[i], grid.dir(i)[1] / h[i]]).collect();
    let mut hull = super::polygon::hull_indices(&pts);
    hull.sort_unstable();
    let mut out = h.to_vec();
    let m = hull.len();
    for k in 0..m {
        let a = hull[k];
        let b = hull[(k + 1) % m];
        let span = (b + n - a) % n;
        let (ua, ub) = (grid.dir(a), grid.dir(b));
        let det = ua[0] * ub[1] - ua[1] * ub[0];
        for s in 1..span {
            let j = (a + s) % n;
            let uj = grid.dir(j);
            let alpha = (uj[0] * ub[1] - uj[1] * ub[0]) / det;
            let beta = (ua[0] * uj[1] - ua[1] * uj[0]) / det;
            out[j] = (alpha * h[a] + beta * h[b]).min(h[j]);
        }
    }
    out
}

/// A bounded, symmetric, convex body.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexBody {
    /// `m * closed unit ball` for a symmetric positive semidefinite `m`.
    Ellipsoid(Mat<f64>),
    /// Exact symmetric polygon (d = 2).
    Polygon(SymPolygon),
    /// Outer polyhedron of sampled support values.
    Support(SupportBody),
}

impl ConvexBody {
    pub fn unit_ball(d: usize) -> Self {
        ConvexBody::Ellipsoid(Mat::identity(d))
    }

    pub fn zero(d: usize) -> Self {
        if d == 2 {
            ConvexBody::Polygon(SymPolygon::zero())
        } else {
            ConvexBody::Ellipsoid(Mat::zeros(d))
        }
    }

    /// Ellipsoid `m B`; `m` must be symmetric positive semidefinite.
    pub fn ellipsoid(m: Mat<f64>) -> Result<Self> {
        let scale = m.max_abs();
        if !m.is_finite() || m.asymmetry() > 1e-12 * scale {
            return Err(Error::NotSpd { cell: None });
        }
        let m = m.symmetrize();
        if scale > 0.0 {
            let (vals, _) = m.sym_eigen();
            if vals[0] < -1e-12 * vals[vals.len() - 1].abs() {
                return Err(Error::NotSpd { cell: None });
            }
        }
        Ok(ConvexBody::Ellipsoid(m))
    }

    pub fn from_spd(m: &crate::norm_kernel::Spd<f64>) -> Self {
        ConvexBody::Ellipsoid(m.mat().clone())
    }

    /// Symmetric polygon hull of the points and their negations.
    pub fn polygon(points: &[P2]) -> Self {
        ConvexBody::Polygon(SymPolygon::from_points(points))
    }

    /// Symmetric segment `conv{v, -v}`.
    pub fn segment(v: &[f64]) -> Self {
        match v.len() {
            2 => ConvexBody::Polygon(SymPolygon::segment([v[0], v[1]])),
            d => {
                let n = norm(v);
                if n == 0.0 {
                    return ConvexBody::zero(d);
                }
                ConvexBody::Ellipsoid(Mat::outer(v, v).scale(1.0 / n))
            }
        }
    }

    pub fn from_support_values(grid: Arc<DirectionGrid>, h: Vec<f64>) -> Result<Self> {
        Ok(ConvexBody::Support(SupportBody::new(grid, h)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ellipsoid(m) => m.dim(),
            ConvexBody::Polygon(_) => 2,
            ConvexBody::Support(s) => s.dim(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ConvexBody::Ellipsoid(m) => m.max_abs() == 0.0,
            ConvexBody::Polygon(p) => p.is_empty(),
            ConvexBody::Support(s) => s.is_zero(),
        }
    }

    pub fn is_full_dimensional(&self) -> bool {
        match self {
            ConvexBody::Ellipsoid(m) => {
                let (vals, _) = m.sym_eigen();
                vals[vals.len() - 1] > 0.0 && vals[0] > DEGENERACY_TOL * vals[vals.len() - 1]
            }
            ConvexBody::Polygon(p) => p.is_full_dimensional(),
            ConvexBody::Support(s) => s.is_full_dimensional(),
        }
    }

    /// `h_K(u) = sup_{x in K} <u, x>`.
    pub fn support(&self, u: &[f64]) -> f64 {
        match self {
            ConvexBody::Ellipsoid(m) => norm(&m.mul_vec(u)),
            ConvexBody::Polygon(p) => p.support(u),
            ConvexBody::Support(s) => s.support(u),
        }
    }

    /// Support values at every direction of `grid`.
    pub fn support_values(&self, grid: &Arc<DirectionGrid>) -> Vec<f64> {
        if let ConvexBody::Support(s) = self {
            if s.grid.dim() == grid.dim() && s.grid.len() == grid.len() {
                return s.h.clone();
            }
        }
        grid.iter().map(|u| self.support(u)).collect()
    }

    /// The same body (or its outer approximation) as support values on `grid`.
    pub fn to_support(&self, grid: &Arc<DirectionGrid>) -> SupportBody {
        SupportBody::from_canonical(grid.clone(), self.support_values(grid))
    }

    /// Minkowski functional.
    pub fn gauge(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        if v.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        match self {
            ConvexBody::Ellipsoid(m) => {
                let (vals, vecs) = m.sym_eigen();
                let top = vals[vals.len() - 1];
                let d = m.dim();
                let mut acc = 0.0;
                for k in 0..d {
                    let c: f64 = (0..d).map(|i| vecs[(i, k)] * v[i]).sum();
                    if vals[k] > DEGENERACY_TOL * top {
                        acc += (c / vals[k]).powi(2);
                    } else if c.abs() > DEGENERACY_TOL * norm(v) {
                        return Err(Error::DegenerateBody);
                    }
                }
                Ok(acc.sqrt())
            }
            ConvexBody::Polygon(p) => p.gauge(v),
            ConvexBody::Support(s) => s.gauge(v),
        }
    }

    /// `|alpha| K`.
    pub fn scale(&self, alpha: f64) -> Self {
        let a = alpha.abs();
        match self {
            ConvexBody::Ellipsoid(m) => ConvexBody::Ellipsoid(m.scale(a)),
            ConvexBody::Polygon(p) => ConvexBody::Polygon(p.scale(a)),
            ConvexBody::Support(s) => ConvexBody::Support(SupportBody::from_canonical(s.grid.clone(), s.h.iter().map(|x| x * a).collect())),
        }
    }

    /// `sup_{x in K} |W x|`.
    pub fn set_norm(&self, w: &Mat<f64>) -> f64 {
        match self {
            ConvexBody::Ellipsoid(m) => (w * m).op_norm(),
            ConvexBody::Polygon(p) => p.set_norm(w),
            ConvexBody::Support(s) => s.set_norm(w),
        }
    }

    /// Euclidean set norm `sup_{x in K} |x|`.
    pub fn radius(&self) -> f64 {
        self.set_norm(&Mat::identity(self.dim()))
    }

    /// Grid shared by two operands when one of them is support-sampled.
    fn promotion_grid(a: &ConvexBody, b: &ConvexBody) -> Arc<DirectionGrid> {
        match (a, b) {
            (ConvexBody::Support(s), _) | (_, ConvexBody::Support(s)) => s.grid.clone(),
            _ => DirectionGrid::default_for(a.dim()),
        }
    }

    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        match (self, other) {
            (ConvexBody::Polygon(a), ConvexBody::Polygon(b)) => Ok(ConvexBody::Polygon(a.minkowski_sum(b))),
            (ConvexBody::Ellipsoid(a), ConvexBody::Ellipsoid(b)) if proportional(a, b).is_some() => Ok(ConvexBody::Ellipsoid(a + b)),
            _ => {
                let g = Self::promotion_grid(self, other);
                let h: Vec<f64> = self.support_values(&g).iter().zip(other.support_values(&g)).map(|(x, y)| x + y).collect();
                Ok(ConvexBody::Support(SupportBody::from_canonical(g, h)))
            }
        }
    }

    /// Closed convex hull of a union.
    pub fn hull_union(bodies: &[ConvexBody]) -> Result<Self> {
        let first = bodies.first().ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
        let d = first.dim();
        for b in bodies {
            check_dim(d, b.dim())?;
        }
        if bodies.len() == 1 {
            return Ok(first.clone());
        }
        if bodies.iter().all(|b| matches!(b, ConvexBody::Polygon(_))) {
            let polys = bodies.iter().filter_map(|b| match b {
                ConvexBody::Polygon(p) => Some(p),
                _ => None,
            });
            return Ok(ConvexBody::Polygon(SymPolygon::hull_union(polys)));
        }
        if bodies.iter().all(|b| matches!(b, ConvexBody::Ellipsoid(_))) {
            if let Some(k) = ellipsoid_containing_all(bodies) {
                return Ok(bodies[k].clone());
            }
        }
        let g = bodies
            .iter()
            .find_map(|b| match b {
                ConvexBody::Support(s) => Some(s.grid.clone()),
                _ => None,
            })
            .unwrap_or_else(|| DirectionGrid::default_for(d));
        let mut h = vec![0.0f64; g.len()];
        for b in bodies {
            for (x, y) in h.iter_mut().zip(b.support_values(&g)) {
                *x = x.max(y);
            }
        }
        Ok(ConvexBody::Support(SupportBody::from_canonical(g, h)))
    }

    /// Polar body `{y : <x, y> <= 1 for x in K}`.
    pub fn polar(&self) -> Result<Self> {
        match self {
            ConvexBody::Ellipsoid(m) => {
                if !self.is_full_dimensional() {
                    return Err(Error::DegenerateBody);
                }
                Ok(ConvexBody::Ellipsoid(m.sym_apply(|l| 1.0 / l)))
            }
            ConvexBody::Polygon(p) => Ok(ConvexBody::Polygon(p.polar()?)),
            ConvexBody::Support(s) => {
                if !s.is_full_dimensional() {
                    return Err(Error::DegenerateBody);
                }
                match s.dim() {
                    1 => Ok(ConvexBody::Ellipsoid(Mat::from_diag(&[1.0 / s.h[0]]))),
                    2 => Ok(ConvexBody::Polygon(s.to_polygon().polar()?)),
                    _ => {
                        let g = &s.grid;
                        let h = g.iter().map(|uj| g.iter().zip(&s.h).map(|(ui, hi)| dot(uj, ui) / hi).fold(0.0, f64::max)).collect();
                        Ok(ConvexBody::Support(SupportBody::from_canonical(g.clone(), h)))
                    }
                }
            }
        }
    }

    /// Smallest `c` with `self ⊆ c * other`, and whether `c <= scale`.
    pub fn contains_scaled(&self, other: &Self, scale: f64) -> Result<(bool, f64)> {
        check_dim(self.dim(), other.dim())?;
        if !other.is_full_dimensional() {
            return Err(Error::DegenerateBody);
        }
        let margin = match other {
            ConvexBody::Polygon(p) => p.polar_vertices()?.iter().map(|y| self.support(y)).fold(0.0, f64::max),
            ConvexBody::Ellipsoid(m) => self.set_norm(&m.sym_apply(|l| 1.0 / l)),
            ConvexBody::Support(s) => {
                let h1 = self.support_values(&s.grid);
                h1.iter().zip(&s.h).map(|(a, b)| a / b).fold(0.0, f64::max)
            }
        };
        Ok((margin <= scale * (1.0 + 1e-12), margin))
    }

    /// Hausdorff distance in the norm `|W .|` (Euclidean when `w` is `None`).
    pub fn hausdorff(&self, other: &Self, w: Option<&Mat<f64>>) -> Result<f64> {
        let d = self.dim();
        check_dim(d, other.dim())?;
        let ident = Mat::identity(d);
        let w = w.unwrap_or(&ident);
        check_dim(d, w.dim())?;
        match d {
            1 => Ok((self.support(&[1.0]) - other.support(&[1.0])).abs() * w[(0, 0)].abs()),
            2 => match (self.as_polygon(), other.as_polygon()) {
                (Some(a), Some(b)) => Ok(polygon_hausdorff(&a.transform(w), &b.transform(w))),
                _ => {
                    let f = |th: f64| {
                        let z = w.mul_vec(&[th.cos(), th.sin()]);
                        (self.support(&z) - other.support(&z)).abs()
                    };
                    Ok(sampled_max(f, 2048))
                }
            },
            _ => {
                let g = DirectionGrid::default_for(d);
                Ok(g.iter()
                    .map(|z| {
                        let wz = w.mul_vec(z);
                        (self.support(&wz) - other.support(&wz)).abs()
                    })
                    .fold(0.0, f64::max))
            }
        }
    }

    /// Exact polygon for polygon and planar support bodies.
    pub fn as_polygon(&self) -> Option<SymPolygon> {
        match self {
            ConvexBody::Polygon(p) => Some(p.clone()),
            ConvexBody::Support(s) if s.dim() == 2 => Some(s.to_polygon()),
            _ => None,
        }
    }

    /// Boundary polygon for drawing (ellipses are sampled at `n` points).
    pub fn outline(&self, n: usize) -> Result<Vec<P2>> {
        check_dim(2, self.dim())?;
        Ok(match self {
            ConvexBody::Ellipsoid(m) => (0..n)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    let x = m.mul_vec(&[th.cos(), th.sin()]);
                    [x[0], x[1]]
                })
                .collect(),
            _ => self.as_polygon().map(|p| p.verts().to_vec()).unwrap_or_default(),
        })
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `Some(c)` with `b = c a` when the matrices are proportional.
pub(crate) fn proportional(a: &Mat<f64>, b: &Mat<f64>) -> Option<f64> {
    let aa: f64 = a.as_slice().iter().map(|x| x * x).sum();
    let bb: f64 = b.as_slice().iter().map(|x| x * x).sum();
    if aa == 0.0 {
        return if bb == 0.0 { Some(0.0) } else { None };
    }
    let ab: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum();
    let c = ab / aa;
    let resid: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (y - c * x).powi(2)).sum::<f64>().sqrt();
    (c >= 0.0 && resid <= PROPORTIONAL_TOL * bb.sqrt()).then_some(c)
}

fn ellipsoid_containing_all(bodies: &[ConvexBody]) -> Option<usize> {
    let mats: Vec<&Mat<f64>> = bodies
        .iter()
        .map(|b| match b {
            ConvexBody::Ellipsoid(m) => m,
            _ => unreachable!("caller checked variants"),
        })
        .collect();
    let base = mats.iter().position(|m| m.max_abs() > 0.0)?;
    let coeffs: Option<Vec<f64>> = mats.iter().map(|m| proportional(mats[base], m)).collect();
    if let Some(c) = coeffs {
        let k = (0..c.len()).fold(0, |best, i| if c[i] > c[best] { i } else { best });
        return Some(k);
    }
    (0..bodies.len()).find(|&k| bodies[k].is_full_dimensional() && bodies.iter().all(|b| b.contains_scaled(&bodies[k], 1.0).map(|r| r.0).unwrap_or(false)))
}

/// Euclidean Hausdorff distance of two polygons, exact up to rounding.
///
/// Between consecutive edge normals of either polygon both support
/// functions are linear, so the difference `<a - b, z>` peaks at an arc end
/// or at the direction of `a - b`.
fn polygon_hausdorff(a: &SymPolygon, b: &SymPolygon) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let ang = |p: P2| {
        let t = p[1].atan2(p[0]);
        if t < 0.0 {
            t + two_pi
        } else {
            t
        }
    };
    let mut cuts: Vec<f64> = a.edge_normals().into_iter().chain(b.edge_normals()).map(ang).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.is_empty() {
        cuts.push(0.0);
    }
    let active = |p: &SymPolygon, z: P2| -> P2 {
        p.verts()
            .iter()
            .copied()
            .fold((f64::NEG_INFINITY, [0.0, 0.0]), |(bv, bp), v| {
                let s = dot2(v, z);
                if s > bv {
                    (s, v)
                } else {
                    (bv, bp)
                }
            })
            .1
    };
    let f = |th: f64| {
        let z = [th.cos(), th.sin()];
        (a.support(&z) - b.support(&z)).abs()
    };
    let mut best = 0.0f64;
    let m = cuts.len();
    for k in 0..m {
        let lo = cuts[k];
        let hi = if k + 1 < m { cuts[k + 1] } else { cuts[0] + two_pi };
        best = best.max(f(lo));
        let mid = 0.5 * (lo + hi);
        let zm = [mid.cos(), mid.sin()];
        let (pa, pb) = (active(a, zm), active(b, zm));
        let diff = [pa[0] - pb[0], pa[1] - pb[1]];
        if diff != [0.0, 0.0] {
            for cand in [ang(diff), ang([-diff[0], -diff[1]])] {
                for shifted in [cand, cand + two_pi] {
                    if shifted > lo && shifted < hi {
                        best = best.max(f(shifted));
                    }
                }
            }
        }
    }
    best
}

/// Maximum of a pi-periodic function by dense sampling plus golden polish.
fn sampled_max(f: impl Fn(f64) -> f64, samples: usize) -> f64 {
    let step = std::f64::consts::PI / samples as f64;
    let vals: Vec<f64> = (0..samples).map(|k| f(k as f64 * step)).collect();
    let mut idx: Vec<usize> = (0..samples).filter(|&k| vals[k] >= vals[(k + samples - 1) % samples] && vals[k] >= vals[(k + 1) % samples]).collect();
    idx.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
    idx.truncate(8);
    let mut best = vals.iter().cloned().fold(0.0, f64::max);
    for k in idx {
        let c = k as f64 * step;
        best = best.max(golden_max(&f, c - step, c + step, 60));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexBody {
        ConvexBody::polygon(&[[1.0, 1.0], [-1.0, 1.0]])
    }

    #[test]
    fn support_examples() {
        assert_eq!(ConvexBody::unit_ball(2).support(&[3.0, 4.0]), 5.0);
        assert_eq!(square().support(&[1.0, 0.0]), 1.0);
        let e = ConvexBody::ellipsoid(Mat::from_diag(&[2.0, 1.0])).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.support(&[s, s]) - 2.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(ConvexBody::unit_ball(2).gauge(&[0.0, 2.0]).unwrap(), 2.0);
        let e = ConvexBody::ellipsoid(Mat::from_diag(&[2.0, 1.0])).unwrap();
        assert_eq!(e.gauge(&[2.0, 0.0]).unwrap(), 1.0);
        assert!((square().gauge(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let flat = ConvexBody::ellipsoid(Mat::from_diag(&[1.0, 0.0])).unwrap();
        assert_eq!(flat.gauge(&[0.0, 1.0]), Err(Error::DegenerateBody));
        assert_eq!(flat.gauge(&[0.5, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn ball_sums_stay_ellipsoids() {
        let b = ConvexBody::unit_ball(2);
        assert_eq!(b.minkowski_sum(&b).unwrap(), ConvexBody::Ellipsoid(Mat::from_diag(&[2.0, 2.0])));
        assert_eq!(b.minkowski_sum(&ConvexBody::zero(2)).unwrap(), b);
    }

    #[test]
    fn mixed_sum_is_support_sampled() {
        let s = square().minkowski_sum(&ConvexBody::unit_ball(2)).unwrap();
        let ConvexBody::Support(sb) = &s else { panic!("expected support body") };
        for (i, u) in sb.grid().iter().enumerate() {
            assert_eq!(sb.values()[i], square().support(u) + ConvexBody::unit_ball(2).support(u));
        }
    }

    #[test]
    fn scale_examples() {
        assert_eq!(ConvexBody::unit_ball(2).scale(-2.0), ConvexBody::Ellipsoid(Mat::from_diag(&[2.0, 2.0])));
        assert_eq!(square().scale(0.5), ConvexBody::polygon(&[[0.5, 0.5], [-0.5, 0.5]]));
    }

    #[test]
    fn hull_of_diagonals_is_square() {
        let a = ConvexBody::segment(&[1.0, 1.0]);
        let b = ConvexBody::segment(&[-1.0, 1.0]);
        assert_eq!(ConvexBody::hull_union(&[a, b]).unwrap(), square());
        let ball = ConvexBody::unit_ball(2);
        let big = ball.scale(2.0);
        assert_eq!(ConvexBody::hull_union(&[ball, big.clone()]).unwrap(), big);
    }

    #[test]
    fn polar_examples() {
        let m = Mat::from_row_major(&[2.0, 0.5, 0.5, 1.0]).unwrap();
        let ConvexBody::Ellipsoid(p) = ConvexBody::Ellipsoid(m.clone()).polar().unwrap() else { panic!() };
        assert!((&(&p * &m) - &Mat::identity(2)).max_abs() < 1e-14);
        assert_eq!(ConvexBody::segment(&[1.0, 0.0]).polar(), Err(Error::DegenerateBody));
    }

    #[test]
    fn containment_examples() {
        let ball = ConvexBody::unit_ball(2);
        let (ok, m) = square().contains_scaled(&square(), 1.0).unwrap();
        assert!(ok && (m - 1.0).abs() < 1e-15);
        let (ok, m) = ball.scale(2.0).contains_scaled(&ball, 1.0).unwrap();
        assert!(!ok && m == 2.0);
        let (ok, m) = square().contains_scaled(&ball, 2f64.sqrt()).unwrap();
        assert!(ok && m == 2f64.sqrt());
    }

    #[test]
    fn set_norm_examples() {
        assert_eq!(ConvexBody::unit_ball(2).set_norm(&Mat::identity(2)), 1.0);
        assert_eq!(square().set_norm(&Mat::from_diag(&[2.0, 1.0])), 5f64.sqrt());
    }

    #[test]
    fn hausdorff_of_balls() {
        let b = ConvexBody::unit_ball(2);
        assert!((b.hausdorff(&b.scale(2.0), None).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(square().hausdorff(&square(), None).unwrap(), 0.0);
    }

    #[test]
    fn support_values_are_canonicalized() {
        let g = DirectionGrid::default_for(2);
        // Inflate one constraint: it cannot be attained, so it must drop.
        let mut h = square().support_values(&g);
        h[5] += 0.3;
        let n = g.len();
        h[(5 + n / 2) % n] += 0.3;
        let s = SupportBody::new(g.clone(), h).unwrap();
        assert!((s.values()[5] - square().support(g.dir(5))).abs() < 1e-14);
        // A canonical input is a fixed point.
        let h0 = square().support_values(&g);
        let s0 = SupportBody::new(g, h0.clone()).unwrap();
        for (a, b) in s0.values().iter().zip(&h0) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_support_values() {
        let g = DirectionGrid::default_for(2);
        let seg = ConvexBody::segment(&[0.0, 2.0]);
        let s = SupportBody::new(g.clone(), seg.support_values(&g)).unwrap();
        assert!((s.support(&[0.0, 1.0]) - 2.0).abs() < 1e-14);
        assert_eq!(s.support(&[1.0, 0.0]), 0.0);
        let z = SupportBody::new(g.clone(), vec![0.0; g.len()]).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn spatial_support_body() {
        let g = DirectionGrid::default_for(3);
        let e = ConvexBody::ellipsoid(Mat::from_diag(&[2.0, 1.0, 0.5])).unwrap();
        let s = SupportBody::new(g.clone(), e.support_values(&g)).unwrap();
        for (i, u) in g.iter().enumerate().step_by(37) {
            assert!((s.values()[i] - e.support(u)).abs() < 1e-10);
        }
        let off = [0.3, -0.4, 0.866];
        let v = s.support(&off);
        assert!(v >= e.support(&off) - 1e-12 && v <= e.support(&off) * 1.01);
        let sn = s.set_norm(&Mat::identity(3));
        assert!(sn >= 2.0 - 1e-9 && sn < 2.05, "{sn}");
    }
}
