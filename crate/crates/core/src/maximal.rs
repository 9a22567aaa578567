//! Averaging and maximal operators on set-valued and vector-valued functions.

use crate::convex::{ConvexBody, DirectionGrid, SupportBody};
use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicDomain, MatrixWeight, ScalarField, SetFunction, VectorField};
use crate::linalg::{norm, Mat};
use rayon::prelude::*;
use std::sync::Arc;

/// Knobs for the maximal operators.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalOptions {
    /// Grid shift in unit coordinates, each entry in `{0, 1/3, -1/3}`.
    pub shift: Option<Vec<f64>>,
    /// Whether the base cube itself is one of the averaging cubes.
    pub include_base_cube: bool,
    /// Direction count for support-sampled results (default per dimension).
    pub directions: Option<usize>,
}

impl Default for MaximalOptions {
    fn default() -> Self {
        MaximalOptions { shift: None, include_base_cube: true, directions: None }
    }
}

/// Weighted Minkowski average `sum w_i K_i / sum w_i`.
///
/// Polygons and common-shape ellipsoids are averaged exactly; anything else
/// is averaged as support values on `grid`.
pub fn average_bodies(bodies: &[&ConvexBody], weights: &[f64], grid: &Arc<DirectionGrid>) -> Result<ConvexBody> {
    let total: f64 = weights.iter().sum();
    let d = bodies.first().map(|b| b.dim()).ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
    if !(total > 0.0) {
        return Ok(ConvexBody::zero(d));
    }
    let live: Vec<(&ConvexBody, f64)> = bodies.iter().zip(weights).filter(|(b, w)| **w > 0.0 && !b.is_zero()).map(|(b, w)| (*b, *w / total)).collect();
    if live.is_empty() {
        return Ok(ConvexBody::zero(d));
    }
    if live.iter().all(|(b, _)| matches!(b, ConvexBody::Polygon(_))) {
        let mut acc = ConvexBody::zero(2);
        for (b, w) in &live {
            acc = acc.minkowski_sum(&b.scale(*w))?;
        }
        return Ok(acc);
    }
    if let Some((base, coeffs)) = common_shape(live.iter().map(|(b, _)| *b)) {
        let c: f64 = coeffs.iter().zip(&live).map(|(c, (_, w))| c * w).sum();
        return Ok(ConvexBody::Ellipsoid(base.scale(c)));
    }
    let mut h = vec![0.0; grid.len()];
    for (b, w) in &live {
        for (x, s) in h.iter_mut().zip(b.support_values(grid)) {
            *x += w * s;
        }
    }
    Ok(ConvexBody::Support(SupportBody::from_canonical(grid.clone(), h)))
}

/// `(base, c_i)` with every body equal to `c_i * base` as ellipsoids.
fn common_shape<'a>(bodies: impl Iterator<Item = &'a ConvexBody>) -> Option<(Mat<f64>, Vec<f64>)> {
    let mut base: Option<&Mat<f64>> = None;
    let mut coeffs = Vec::new();
    for b in bodies {
        let ConvexBody::Ellipsoid(m) = b else {
            return None;
        };
        match base {
            None => {
                if m.max_abs() == 0.0 {
                    coeffs.push(0.0);
                    continue;
                }
                base = Some(m);
                coeffs.iter_mut().for_each(|c| *c = 0.0);
                coeffs.push(1.0);
            }
            Some(b0) => coeffs.push(crate::convex::proportional(b0, m)?),
        }
    }
    base.map(|b| (b.clone(), coeffs))
}

/// Direction grid used when a result must be support-sampled.
fn result_grid(f: &SetFunction, opts: &MaximalOptions) -> Result<Arc<DirectionGrid>> {
    if let Some(n) = opts.directions {
        return DirectionGrid::shared(f.d, n);
    }
    Ok(f.cells
        .iter()
        .find_map(|k| match k {
            ConvexBody::Support(s) => Some(s.grid().clone()),
            _ => None,
        })
        .unwrap_or_else(|| DirectionGrid::default_for(f.d)))
}

/// `A_Q F`: the Aumann average of `F` over a dyadic cube.
pub fn aumann_average(f: &SetFunction, q: Cube) -> Result<ConvexBody> {
    f.domain.check_cube(q)?;
    let cells = f.domain.cells_in(q);
    let bodies: Vec<&ConvexBody> = cells.iter().map(|&i| &f.cells[i]).collect();
    average_bodies(&bodies, &vec![1.0; bodies.len()], &result_grid(f, &MaximalOptions::default())?)
}

/// Averages of a cell vector over every dyadic cube, indexed `[level][cube]`.
pub fn level_averages(domain: &DyadicDomain, values: &[f64]) -> Vec<Vec<f64>> {
    let j = domain.level();
    let n = domain.n();
    let mut out = vec![Vec::new(); j as usize + 1];
    out[j as usize] = values.to_vec();
    for l in (0..j).rev() {
        let fine = &out[l as usize + 1];
        let k = domain.per_axis(l);
        let coarse: Vec<f64> = match n {
            1 => (0..k).map(|i| 0.5 * (fine[2 * i] + fine[2 * i + 1])).collect(),
            _ => {
                let kf = 2 * k;
                (0..k * k)
                    .map(|idx| {
                        let (a, b) = (idx / k, idx % k);
                        0.25 * (fine[2 * a * kf + 2 * b] + fine[2 * a * kf + 2 * b + 1] + fine[(2 * a + 1) * kf + 2 * b] + fine[(2 * a + 1) * kf + 2 * b + 1])
                    })
                    .collect()
            }
        };
        out[l as usize] = coarse;
    }
    out
}

/// Per finest cell, the maximum of `levels[l][ancestor]` over `l >= min_level`.
fn ancestor_max(domain: &DyadicDomain, levels: &[Vec<f64>], min_level: u32) -> Vec<f64> {
    (0..domain.len()).map(|i| (min_level..=domain.level()).map(|l| levels[l as usize][domain.ancestor(i, l).index]).fold(f64::NEG_INFINITY, f64::max)).collect()
}

/// Scalar dyadic maximal function `sup_{Q ∋ x} avg_Q |s|`.
pub fn scalar_dyadic_maximal(s: &ScalarField, include_base_cube: bool) -> ScalarField {
    let abs: Vec<f64> = s.values.iter().map(|x| x.abs()).collect();
    let levels = level_averages(&s.domain, &abs);
    let values = ancestor_max(&s.domain, &levels, if include_base_cube { 0 } else { 1 });
    ScalarField { domain: s.domain.clone(), values }
}

/// `M^d F`: the closed convex hull of all dyadic averages containing each cell.
pub fn dyadic_maximal(f: &SetFunction, opts: &MaximalOptions) -> Result<SetFunction> {
    if let Some(tau) = &opts.shift {
        if tau.iter().any(|&t| t != 0.0) {
            return shifted_maximal(f, tau, opts);
        }
    }
    let dom = &f.domain;
    let min_level = if opts.include_base_cube { 0 } else { 1 };
    if f.cells.iter().all(|k| matches!(k, ConvexBody::Ellipsoid(_))) {
        if let Some((base, coeffs)) = common_shape(f.cells.iter()) {
            let c = ScalarField { domain: dom.clone(), values: coeffs };
            let mc = scalar_dyadic_maximal(&c, opts.include_base_cube);
            let cells = mc.values.iter().map(|&x| ConvexBody::Ellipsoid(base.scale(x))).collect();
            return SetFunction::new(dom.clone(), cells);
        }
    }
    if f.cells.iter().all(|k| matches!(k, ConvexBody::Polygon(_))) && opts.directions.is_none() {
        let levels = body_level_averages(f)?;
        let cells = (0..dom.len())
            .into_par_iter()
            .map(|i| {
                let anc: Vec<ConvexBody> = (min_level..=dom.level()).map(|l| levels[l as usize][dom.ancestor(i, l).index].clone()).collect();
                ConvexBody::hull_union(&anc)
            })
            .collect::<Result<Vec<_>>>()?;
        return SetFunction::new(dom.clone(), cells);
    }
    let grid = result_grid(f, opts)?;
    let per_dir: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let u = grid.dir(i);
            let s: Vec<f64> = f.cells.iter().map(|k| k.support(u)).collect();
            ancestor_max(dom, &level_averages(dom, &s), min_level)
        })
        .collect();
    support_field(dom, &grid, &per_dir)
}

/// Exact body averages over every dyadic cube, indexed `[level][cube]`.
pub fn body_level_averages(f: &SetFunction) -> Result<Vec<Vec<ConvexBody>>> {
    let dom = &f.domain;
    let grid = result_grid(f, &MaximalOptions::default())?;
    let j = dom.level() as usize;
    let mut out: Vec<Vec<ConvexBody>> = vec![Vec::new(); j + 1];
    out[j] = f.cells.clone();
    for l in (0..j).rev() {
        let k = dom.per_axis(l as u32);
        let fine = &out[l + 1];
        let count = if dom.n() == 1 { k } else { k * k };
        let coarse = (0..count)
            .into_par_iter()
            .map(|idx| {
                let kids: Vec<&ConvexBody> = if dom.n() == 1 {
                    vec![&fine[2 * idx], &fine[2 * idx + 1]]
                } else {
                    let (a, b, kf) = (idx / k, idx % k, 2 * k);
                    vec![&fine[2 * a * kf + 2 * b], &fine[2 * a * kf + 2 * b + 1], &fine[(2 * a + 1) * kf + 2 * b], &fine[(2 * a + 1) * kf + 2 * b + 1]]
                };
                average_bodies(&kids, &vec![1.0; kids.len()], &grid)
            })
            .collect::<Result<Vec<_>>>()?;
        out[l] = coarse;
    }
    Ok(out)
}

/// Assemble per-direction cell values into support bodies.
fn support_field(dom: &DyadicDomain, grid: &Arc<DirectionGrid>, per_dir: &[Vec<f64>]) -> Result<SetFunction> {
    let cells = (0..dom.len())
        .map(|c| {
            let h: Vec<f64> = per_dir.iter().map(|v| v[c].max(0.0)).collect();
            ConvexBody::Support(SupportBody::from_canonical(grid.clone(), h))
        })
        .collect();
    SetFunction::new(dom.clone(), cells)
}

/// 1-D cubes of one shifted level in unit coordinates, clipped to `[0, 1)`:
/// `(first cell, per-cell overlap weights, [lo, hi))`.
fn shifted_intervals(cells: usize, k: i32, tau: f64) -> Vec<(usize, Vec<f64>, f64, f64)> {
    let side = 2f64.powi(-k);
    let off = if k.rem_euclid(2) == 0 { tau } else { -tau } * side;
    let h = 1.0 / cells as f64;
    let m_lo = ((0.0 - off) / side).floor() as i64 - 1;
    let m_hi = ((1.0 - off) / side).ceil() as i64 + 1;
    let mut out = Vec::new();
    for m in m_lo..=m_hi {
        let lo = (m as f64 * side + off).max(0.0);
        let hi = ((m + 1) as f64 * side + off).min(1.0);
        if hi <= lo {
            continue;
        }
        let first = ((lo / h).floor() as usize).min(cells - 1);
        let last = (((hi / h).ceil() as usize).max(first + 1)).min(cells);
        let w: Vec<f64> = (first..last)
            .map(|c| {
                let (a, b) = (c as f64 * h, (c + 1) as f64 * h);
                (b.min(hi) - a.max(lo)).max(0.0)
            })
            .collect();
        out.push((first, w, lo, hi));
    }
    out
}

/// `M^tau F` on the shifted cubes `2^-k([0,1)^n + m + (-1)^k tau)` for
/// `k = -2..=J+2`, clipped to the domain; a cell belongs to a cube when its
/// midpoint does.  Results are support-sampled.
pub fn shifted_maximal(f: &SetFunction, tau: &[f64], opts: &MaximalOptions) -> Result<SetFunction> {
    let dom = &f.domain;
    let n = dom.n();
    if tau.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: tau.len() });
    }
    if tau.iter().any(|t| ![0.0, 1.0 / 3.0, -1.0 / 3.0].iter().any(|s| (t - s).abs() < 1e-15)) {
        return Err(Error::SchemaMismatch("grid shifts must be 0 or ±1/3".into()));
    }
    if tau.iter().all(|&t| t == 0.0) {
        let plain = MaximalOptions { shift: None, ..opts.clone() };
        return dyadic_maximal(f, &plain);
    }
    let grid = result_grid(f, opts)?;
    let per_axis = dom.per_axis(dom.level());
    let h = 1.0 / per_axis as f64;
    let j = dom.level() as i32;
    let levels: Vec<[Vec<(usize, Vec<f64>, f64, f64)>; 2]> =
        (-2..=j + 2).map(|k| [shifted_intervals(per_axis, k, tau[0]), shifted_intervals(per_axis, k, tau[n - 1])]).collect();
    let mid_in = |c: usize, lo: f64, hi: f64| {
        let m = (c as f64 + 0.5) * h;
        m >= lo && m < hi
    };
    let per_dir: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let u = grid.dir(i);
            let s: Vec<f64> = f.cells.iter().map(|k| k.support(u)).collect();
            let mut best = vec![0.0f64; dom.len()];
            for lv in &levels {
                if n == 1 {
                    for (first, w, lo, hi) in &lv[0] {
                        let tot: f64 = w.iter().sum();
                        let avg = w.iter().enumerate().map(|(t, wt)| wt * s[first + t]).sum::<f64>() / tot;
                        for c in *first..first + w.len() {
                            if mid_in(c, *lo, *hi) {
                                best[c] = best[c].max(avg);
                            }
                        }
                    }
                } else {
                    for (f0, w0, lo0, hi0) in &lv[0] {
                        for (f1, w1, lo1, hi1) in &lv[1] {
                            let tot: f64 = w0.iter().sum::<f64>() * w1.iter().sum::<f64>();
                            let mut acc = 0.0;
                            for (a, wa) in w0.iter().enumerate() {
                                for (b, wb) in w1.iter().enumerate() {
                                    acc += wa * wb * s[(f0 + a) * per_axis + f1 + b];
                                }
                            }
                            let avg = acc / tot;
                            for a in *f0..f0 + w0.len() {
                                if !mid_in(a, *lo0, *hi0) {
                                    continue;
                                }
                                for b in *f1..f1 + w1.len() {
                                    if mid_in(b, *lo1, *hi1) {
                                        let c = a * per_axis + b;
                                        best[c] = best[c].max(avg);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            best
        })
        .collect();
    support_field(dom, &grid, &per_dir)
}

/// All `3^n` shifts `{0, 1/3, -1/3}^n`.
pub fn all_shifts(n: usize) -> Vec<Vec<f64>> {
    let base = [0.0, 1.0 / 3.0, -1.0 / 3.0];
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| base.iter().map(move |&t| [v.clone(), vec![t]].concat())).collect();
    }
    out
}

/// `sum_tau M^tau F` over all shifts, as support-sampled bodies.
pub fn combined_bound(f: &SetFunction, opts: &MaximalOptions) -> Result<SetFunction> {
    let grid = result_grid(f, opts)?;
    let mut total = vec![vec![0.0; grid.len()]; f.domain.len()];
    for tau in all_shifts(f.domain.n()) {
        let m = shifted_maximal(f, &tau, &MaximalOptions { shift: None, ..opts.clone() })?;
        for (acc, k) in total.iter_mut().zip(&m.cells) {
            for (x, s) in acc.iter_mut().zip(k.support_values(&grid)) {
                *x += s;
            }
        }
    }
    let cells = total.into_iter().map(|h| ConvexBody::Support(SupportBody::from_canonical(grid.clone(), h))).collect();
    SetFunction::new(f.domain.clone(), cells)
}

/// How the interval oracle treats the line outside the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalMode {
    /// Only intervals inside the domain.
    Domain,
    /// `F` extended by its end values on a window of length `1/delta` on
    /// each side, approximating intervals of the whole line.
    ConstantExtension,
}

/// Non-dyadic maximal function at cell midpoints (n = 1): the hull of
/// averages over all intervals `[a, b] ∋ x` with endpoints on the grid
/// `origin + delta Z`.
///
/// For fixed `b` the average is a Möbius function of `a` on each piece
/// where `F` is constant, hence monotone there, so only the extreme grid
/// points of each piece are candidates; likewise for `b`.
pub fn interval_maximal(f: &SetFunction, delta: f64, mode: IntervalMode, grid: &Arc<DirectionGrid>) -> Result<SetFunction> {
    let dom = &f.domain;
    if dom.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: dom.n() });
    }
    if !(delta > 0.0) {
        return Err(Error::SchemaMismatch("oracle resolution must be positive".into()));
    }
    let o = dom.origin()[0];
    let hcell = dom.side(dom.level());
    let ncell = dom.len();
    let ext = match mode {
        IntervalMode::Domain => 0.0,
        IntervalMode::ConstantExtension => (1.0 / delta / hcell).ceil() * hcell,
    };
    // Breakpoints of the piecewise-constant profile.
    let mut bps = Vec::with_capacity(ncell + 3);
    if ext > 0.0 {
        bps.push(o - ext);
    }
    bps.extend((0..=ncell).map(|c| o + c as f64 * hcell));
    if ext > 0.0 {
        bps.push(o + dom.size() + ext);
    }
    let piece_cell = |p: usize| -> usize {
        if ext > 0.0 {
            p.saturating_sub(1).min(ncell - 1)
        } else {
            p
        }
    };
    let npieces = bps.len() - 1;
    let snap_up = |t: f64| o + ((t - o) / delta - 1e-9).ceil() * delta;
    let snap_down = |t: f64| o + ((t - o) / delta + 1e-9).floor() * delta;
    let per_dir: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let u = grid.dir(i);
            let s: Vec<f64> = (0..npieces).map(|p| f.cells[piece_cell(p)].support(u)).collect();
            let mut prefix = vec![0.0; npieces + 1];
            for p in 0..npieces {
                prefix[p + 1] = prefix[p] + s[p] * (bps[p + 1] - bps[p]);
            }
            let integral = |t: f64| -> f64 {
                let p = bps.partition_point(|&b| b <= t).clamp(1, npieces) - 1;
                prefix[p] + s[p] * (t - bps[p])
            };
            (0..ncell)
                .map(|c| {
                    let x = dom.midpoint(c)[0];
                    let mut ca = Vec::new();
                    let mut cb = Vec::new();
                    for p in 0..npieces {
                        let (lo, hi) = (bps[p], bps[p + 1]);
                        if lo <= x {
                            let (a0, a1) = (snap_up(lo), snap_down(hi.min(x)));
                            if a0 <= a1 {
                                ca.extend([a0, a1]);
                            }
                        }
                        if hi >= x {
                            let (b0, b1) = (snap_up(lo.max(x)), snap_down(hi));
                            if b0 <= b1 {
                                cb.extend([b0, b1]);
                            }
                        }
                    }
                    let mut best = 0.0f64;
                    for &a in &ca {
                        let ia = integral(a);
                        for &b in &cb {
                            if b > a {
                                best = best.max((integral(b) - ia) / (b - a));
                            }
                        }
                    }
                    best
                })
                .collect()
        })
        .collect();
    support_field(dom, grid, &per_dir)
}

/// Christ–Goldberg maximal function `sup_{Q ∋ x} avg_Q |W(x) W^{-1}(y) f(y)|`.
pub fn christ_goldberg(w: &MatrixWeight, f: &VectorField, opts: &MaximalOptions) -> Result<ScalarField> {
    let dom = w.domain();
    if dom != &f.domain {
        return Err(Error::DomainMismatch);
    }
    if f.d != w.d() {
        return Err(Error::DimensionMismatch { expected: w.d(), got: f.d });
    }
    let g: Vec<Vec<f64>> = w.cells().iter().zip(&f.cells).map(|(m, v)| m.inverse().mul_vec(v)).collect();
    let min_level = if opts.include_base_cube { 0 } else { 1 };
    let values = (0..dom.len())
        .into_par_iter()
        .map(|x| {
            let wx = w.cell(x);
            (min_level..=dom.level())
                .map(|l| {
                    let cells = dom.cells_in(dom.ancestor(x, l));
                    cells.iter().map(|&y| norm(&wx.mul_vec(&g[y]))).sum::<f64>() / cells.len() as f64
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ScalarField { domain: dom.clone(), values })
}

/// `N_W H(x) = |W(x) H(x)| W(x)^{-1} B`.
pub fn exhaust(w: &MatrixWeight, h: &SetFunction) -> Result<SetFunction> {
    if w.domain() != &h.domain {
        return Err(Error::DomainMismatch);
    }
    let cells = w.cells().iter().zip(&h.cells).map(|(m, k)| ConvexBody::Ellipsoid(m.inverse().mat().scale(k.set_norm(m.mat())))).collect();
    SetFunction::new(h.domain.clone(), cells)
}

/// `||F||_{L^p_K(W)}`, with `W = I` when `w` is `None`.
pub fn lpk_norm(f: &SetFunction, w: Option<&MatrixWeight>, p: f64) -> Result<f64> {
    Ok(f.set_norms(w)?.lp_norm(p))
}

/// Measure of `{x : |M^d F(x)| > lambda}`.
pub fn weak_level_measure(f: &SetFunction, lambda: f64) -> Result<f64> {
    let mf = dyadic_maximal(f, &MaximalOptions::default())?;
    Ok(level_measure(&mf, lambda))
}

/// Measure of `{x : |G(x)| > lambda}` for a precomputed field.
pub fn level_measure(g: &SetFunction, lambda: f64) -> f64 {
    g.cells.iter().filter(|k| k.radius() > lambda).count() as f64 * g.domain.cell_measure()
}

/// `d_p(F, G)` with the cellwise Hausdorff distance in `|W(x) .|`.
pub fn dp_metric(f: &SetFunction, g: &SetFunction, w: Option<&MatrixWeight>, p: f64) -> Result<f64> {
    if f.domain != g.domain {
        return Err(Error::DomainMismatch);
    }
    if let Some(w) = w {
        if w.domain() != &f.domain {
            return Err(Error::DomainMismatch);
        }
    }
    let values = (0..f.cells.len()).map(|i| f.cells[i].hausdorff(&g.cells[i], w.map(|w| w.cell(i).mat()))).collect::<Result<Vec<_>>>()?;
    Ok(ScalarField { domain: f.domain.clone(), values }.lp_norm(p))
}
