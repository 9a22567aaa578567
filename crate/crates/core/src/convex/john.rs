//! Maximal-volume inscribed ellipsoid of a symmetric body.
//!
//! With `X = M^2` the containment `M B ⊆ K` reads `b_j' X b_j <= 1` for the
//! normalized facet normals `b_j = u_j / h_K(u_j)`, which is linear in `X`.
//! `log det X` is maximized by a log-barrier Newton method.

use super::body::ConvexBody;
use crate::error::{Error, Result};
use crate::linalg::{norm, Mat};

const MAX_NEWTON_STEPS: usize = 10_000;
const GAP_TOL: f64 = 1e-11;
/// Newton steps per barrier parameter before the rounding floor is assumed.
const CENTERING_STEPS: usize = 200;

/// John ellipsoid `m B` together with its containment margins.
#[derive(Clone, Debug)]
pub struct JohnResult {
    pub m: Mat<f64>,
    pub inner_ok: bool,
    pub outer_ok: bool,
    /// Smallest `c` with `m B ⊆ c K`.
    pub inner_margin: f64,
    /// Smallest `c` with `K ⊆ c m B`; at most `sqrt(d)` in exact arithmetic.
    pub outer_margin: f64,
    /// Worst relative excess over the two containments, zero when both hold.
    pub slack: f64,
}

/// Slack tolerated on the outer containment `K ⊆ sqrt(d) E`.
pub const JOHN_SLACK_TOL: f64 = 1e-7;

pub fn john_ellipsoid(k: &ConvexBody) -> Result<JohnResult> {
    let d = k.dim();
    if !k.is_full_dimensional() {
        return Err(Error::DegenerateBody);
    }
    let sd = (d as f64).sqrt();
    let fit = |m: Mat<f64>| -> Result<(Mat<f64>, bool, f64, f64)> {
        let e = ConvexBody::Ellipsoid(m.clone());
        let (inner_ok, inner_margin) = e.contains_scaled(k, 1.0)?;
        let (_, outer_margin) = k.contains_scaled(&e, sd)?;
        Ok((m, inner_ok, inner_margin, outer_margin))
    };
    let (m, inner_ok, inner_margin, outer_margin) = match k {
        ConvexBody::Ellipsoid(m) => fit(m.clone())?,
        _ => {
            let b = constraints(k)?;
            let scaled = |x: &Mat<f64>| {
                let m = x.sym_apply(|l| l.max(0.0).sqrt());
                let worst = b.iter().map(|bj| norm(&m.mul_vec(bj))).fold(0.0, f64::max);
                if worst > 1.0 {
                    m.scale(1.0 / worst)
                } else {
                    m
                }
            };
            let x = whitened_solve(d, &b, None)?;
            let first = fit(scaled(&x))?;
            if first.3 <= sd * (1.0 + JOHN_SLACK_TOL) {
                first
            } else {
                // One more pass in the frame of the first solution.
                let again = fit(scaled(&whitened_solve(d, &b, Some(&x.sym_apply(|l| l.max(0.0).sqrt())))?))?;
                if again.3 < first.3 {
                    again
                } else {
                    first
                }
            }
        }
    };
    let slack = (inner_margin - 1.0).max(outer_margin / sd - 1.0).max(0.0);
    Ok(JohnResult { m, inner_ok, outer_ok: outer_margin <= sd * (1.0 + JOHN_SLACK_TOL), inner_margin, outer_margin, slack })
}

/// Normalized constraint vectors, one per antipodal pair.
fn constraints(k: &ConvexBody) -> Result<Vec<Vec<f64>>> {
    match k {
        ConvexBody::Polygon(p) => {
            let pv = p.polar_vertices()?;
            Ok(pv[..pv.len() / 2].iter().map(|y| y.to_vec()).collect())
        }
        ConvexBody::Support(s) => {
            let g = s.grid();
            Ok((0..g.len() / 2).map(|i| g.dir(i).iter().map(|x| x / s.values()[i]).collect()).collect())
        }
        ConvexBody::Ellipsoid(_) => unreachable!("ellipsoids are their own John ellipsoid"),
    }
}

fn basis_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for p in 0..d {
        for q in p..d {
            out.push((p, q));
        }
    }
    out
}

fn assemble(d: usize, pairs: &[(usize, usize)], x: &[f64]) -> Mat<f64> {
    let mut m = Mat::zeros(d);
    for (&(p, q), &v) in pairs.iter().zip(x) {
        m[(p, q)] += v;
        if p != q {
            m[(q, p)] += v;
        }
    }
    m
}

/// `b' E_k b` for every basis element.
fn quad_coeffs(pairs: &[(usize, usize)], b: &[f64]) -> Vec<f64> {
    pairs.iter().map(|&(p, q)| if p == q { b[p] * b[p] } else { 2.0 * b[p] * b[q] }).collect()
}

/// `t * (-log det X) - sum log(1 - b' X b)`, or `None` outside the domain.
fn barrier(x: &Mat<f64>, a: &[Vec<f64>], xs: &[f64], t: f64) -> Option<f64> {
    let (vals, _) = x.sym_eigen();
    if vals[0] <= 0.0 {
        return None;
    }
    let mut f = -t * vals.iter().map(|l| l.ln()).sum::<f64>();
    for ak in a {
        let s = 1.0 - ak.iter().zip(xs).map(|(c, v)| c * v).sum::<f64>();
        if s <= 0.0 {
            return None;
        }
        f -= s.ln();
    }
    Some(f)
}

/// Solves in coordinates `c_j = S b_j`; `S = (sum b_j b_j')^{-1/2}` when not given.
/// Thin bodies otherwise leave the barrier method stuck at the rounding floor.
fn whitened_solve(d: usize, b: &[Vec<f64>], s: Option<&Mat<f64>>) -> Result<Mat<f64>> {
    let s = match s {
        Some(s) => s.clone(),
        None => {
            let mut cov: Mat<f64> = Mat::zeros(d);
            for bj in b {
                for p in 0..d {
                    for q in 0..d {
                        cov[(p, q)] += bj[p] * bj[q];
                    }
                }
            }
            cov.sym_apply(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt())
        }
    };
    let c: Vec<Vec<f64>> = b.iter().map(|bj| s.mul_vec(bj)).collect();
    let xc = solve(d, &c)?;
    Ok(&(&s * &xc) * &s)
}

fn solve(d: usize, b: &[Vec<f64>]) -> Result<Mat<f64>> {
    let pairs = basis_pairs(d);
    let np = pairs.len();
    let a: Vec<Vec<f64>> = b.iter().map(|bj| quad_coeffs(&pairs, bj)).collect();
    let bmax = b.iter().map(|bj| bj.iter().map(|x| x * x).sum::<f64>()).fold(0.0, f64::max);
    let mut xs: Vec<f64> = pairs.iter().map(|&(p, q)| if p == q { 0.5 / bmax } else { 0.0 }).collect();
    let m = b.len() as f64;
    let mut t = 1.0;
    let mut steps = 0usize;
    loop {
        // Centering at the current t.
        for _ in 0..CENTERING_STEPS {
            steps += 1;
            if steps > MAX_NEWTON_STEPS {
                return Err(Error::SolverFailure("John ellipsoid iteration cap reached".into()));
            }
            let x = assemble(d, &pairs, &xs);
            let y = x.inverse()?;
            let mut g = vec![0.0; np];
            let mut h = vec![0.0; np * np];
            for (k, &(p, q)) in pairs.iter().enumerate() {
                g[k] = -t * if p == q { y[(p, p)] } else { 2.0 * y[(p, q)] };
            }
            let ek: Vec<Mat<f64>> = (0..np)
                .map(|k| {
                    let mut e = vec![0.0; np];
                    e[k] = 1.0;
                    &y * &assemble(d, &pairs, &e)
                })
                .collect();
            for k in 0..np {
                for l in k..np {
                    let tr: f64 = (0..d).map(|i| (0..d).map(|j| ek[k][(i, j)] * ek[l][(j, i)]).sum::<f64>()).sum();
                    h[k * np + l] = t * tr;
                    h[l * np + k] = t * tr;
                }
            }
            for ak in &a {
                let s = 1.0 - ak.iter().zip(&xs).map(|(c, v)| c * v).sum::<f64>();
                for k in 0..np {
                    g[k] += ak[k] / s;
                    for l in 0..np {
                        h[k * np + l] += ak[k] * ak[l] / (s * s);
                    }
                }
            }
            let step = solve_dense(np, &h, &g).ok_or_else(|| Error::SolverFailure("singular Newton system".into()))?;
            let decrement: f64 = step.iter().zip(&g).map(|(s, gi)| s * gi).sum();
            if decrement.abs() / 2.0 <= 1e-10 {
                break;
            }
            let f0 = barrier(&x, &a, &xs, t).expect("iterate stays feasible");
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = xs.iter().zip(&step).map(|(v, s)| v - alpha * s).collect();
                if let Some(f1) = barrier(&assemble(d, &pairs, &trial), &a, &trial, t) {
                    if f1 <= f0 - 0.25 * alpha * decrement {
                        moved = trial != xs;
                        xs = trial;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                // Rounding floor reached at this t.
                break;
            }
        }
        if m / t < GAP_TOL {
            break;
        }
        t *= 10.0;
    }
    Ok(assemble(d, &pairs, &xs))
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_dense(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut r = b.to_vec();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs()))?;
        if m[piv * n + c] == 0.0 {
            return None;
        }
        if piv != c {
            for j in 0..n {
                m.swap(c * n + j, piv * n + j);
            }
            r.swap(c, piv);
        }
        for i in c + 1..n {
            let f = m[i * n + c] / m[c * n + c];
            if f != 0.0 {
                for j in c..n {
                    m[i * n + j] -= f * m[c * n + j];
                }
                r[i] -= f * r[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|j| m[c * n + j] * x[j]).sum();
        x[c] = (r[c] - s) / m[c * n + c];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipsoid_is_fixed_point() {
        let m0 = Mat::from_row_major(&[2.0, 0.3, 0.3, 1.0]).unwrap();
        let r = john_ellipsoid(&ConvexBody::Ellipsoid(m0.clone())).unwrap();
        assert!((&r.m - &m0).max_abs() < 1e-9 * m0.max_abs());
        assert!(r.inner_ok && r.outer_ok);
    }

    #[test]
    fn square_gives_disc() {
        let sq = ConvexBody::polygon(&[[1.0, 1.0], [-1.0, 1.0]]);
        let r = john_ellipsoid(&sq).unwrap();
        assert!((&r.m - &Mat::identity(2)).max_abs() < 1e-8, "{:?}", r.m);
        assert!(r.inner_ok && r.outer_ok);
        assert!((r.outer_margin - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn segment_is_rejected() {
        assert!(matches!(john_ellipsoid(&ConvexBody::segment(&[1.0, 0.0])), Err(Error::DegenerateBody)));
    }

    #[test]
    fn cube_at_three_dimensions() {
        let g = super::super::DirectionGrid::default_for(3);
        let h: Vec<f64> = g.iter().map(|u| u.iter().map(|x| x.abs()).sum()).collect();
        let k = ConvexBody::from_support_values(g, h).unwrap();
        let r = john_ellipsoid(&k).unwrap();
        assert!(r.inner_ok);
        assert!(r.outer_margin <= 3f64.sqrt() * 1.01, "{}", r.outer_margin);
    }
}
