//! Dense simplex for the support of an outer polyhedron at d >= 3.
//!
//! Solves `min sum_i h_i y_i` subject to `sum_i y_i u_i = u`, `y >= 0`,
//! whose value is the support at `u` of `{x : <x, u_i> <= h_i}`; the
//! simplex multipliers give a maximizing vertex `x`.

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 20_000;

/// Value of the support and a maximizing vertex of the polyhedron.
pub struct LpSolution {
    pub value: f64,
    pub vertex: Vec<f64>,
}

/// `dirs` is a flat list of `n` unit vectors of length `d`.
pub fn support_lp(d: usize, dirs: &[f64], h: &[f64], u: &[f64]) -> Result<LpSolution> {
    let n = h.len();
    let cols = n + d;
    let width = cols + 1;
    // Tableau rows 0..d are constraints, row d is the objective.
    let mut t = vec![0.0f64; (d + 1) * width];
    let mut sign = vec![1.0f64; d];
    for r in 0..d {
        if u[r] < 0.0 {
            sign[r] = -1.0;
        }
        for j in 0..n {
            t[r * width + j] = sign[r] * dirs[j * d + r];
        }
        t[r * width + n + r] = 1.0;
        t[r * width + cols] = sign[r] * u[r];
    }
    let mut basis: Vec<usize> = (n..n + d).collect();

    // Phase 1: minimize the sum of artificials.
    let mut cost1 = vec![0.0f64; cols];
    cost1[n..].iter_mut().for_each(|c| *c = 1.0);
    set_objective(&mut t, d, width, &cost1, &basis);
    run(&mut t, d, width, &mut basis, n)?;
    if t[d * width + cols].abs() > 1e-9 * (1.0 + crate::linalg::norm(u)) {
        return Err(Error::SolverFailure("support direction outside the cone of the grid".into()));
    }
    // Drive zero-level artificials out of the basis.
    for r in 0..d {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t[r * width + j].abs() > 1e-9) {
                pivot(&mut t, d, width, r, j);
                basis[r] = j;
            }
        }
    }
    // Phase 2 with artificials barred from entering.
    let mut cost2 = vec![0.0f64; cols];
    cost2[..n].copy_from_slice(h);
    set_objective(&mut t, d, width, &cost2, &basis);
    run(&mut t, d, width, &mut basis, n)?;
    let value = -t[d * width + cols];
    // Reduced cost of artificial column r is -sign_r * x_r.
    let vertex = (0..d).map(|r| -t[d * width + n + r] * sign[r]).collect();
    Ok(LpSolution { value: value.max(0.0), vertex })
}

fn set_objective(t: &mut [f64], d: usize, width: usize, cost: &[f64], basis: &[usize]) {
    let obj = d * width;
    t[obj..obj + width].iter_mut().for_each(|x| *x = 0.0);
    t[obj..obj + cost.len()].copy_from_slice(cost);
    for (r, &b) in basis.iter().enumerate() {
        let cb = cost[b];
        if cb != 0.0 {
            for j in 0..width {
                t[obj + j] -= cb * t[r * width + j];
            }
        }
    }
}

/// Minimize with Dantzig's rule, falling back to Bland's rule after a run
/// of degenerate pivots.  Only columns `< enter_limit` may enter.
fn run(t: &mut [f64], d: usize, width: usize, basis: &mut [usize], enter_limit: usize) -> Result<()> {
    let obj = d * width;
    let rhs = width - 1;
    let mut degenerate = 0usize;
    for _ in 0..MAX_PIVOTS {
        let bland = degenerate > 50;
        let mut enter = None;
        let mut best = -EPS;
        for j in 0..enter_limit {
            let rc = t[obj + j];
            if rc < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = rc;
            }
        }
        let Some(e) = enter else { return Ok(()) };
        let mut leave = None;
        let mut ratio = f64::INFINITY;
        for r in 0..d {
            let a = t[r * width + e];
            if a > EPS {
                let q = t[r * width + rhs] / a;
                if q < ratio - 1e-15 || (q <= ratio + 1e-15 && leave.is_some_and(|l: usize| basis[r] < basis[l])) {
                    ratio = q;
                    leave = Some(r);
                }
            }
        }
        let Some(l) = leave else {
            return Err(Error::SolverFailure("unbounded support program".into()));
        };
        degenerate = if ratio.abs() < 1e-15 { degenerate + 1 } else { 0 };
        pivot(t, d, width, l, e);
        basis[l] = e;
    }
    Err(Error::SolverFailure("simplex pivot limit reached".into()))
}

fn pivot(t: &mut [f64], d: usize, width: usize, l: usize, e: usize) {
    let p = t[l * width + e];
    for j in 0..width {
        t[l * width + j] /= p;
    }
    for r in 0..=d {
        if r == l {
            continue;
        }
        let f = t[r * width + e];
        if f != 0.0 {
            for j in 0..width {
                t[r * width + j] -= f * t[l * width + j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_support() {
        // Axis directions of R^3 and their negations, unit cube.
        let dirs = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0];
        let h = [1.0; 6];
        let s = support_lp(3, &dirs, &h, &[1.0, -2.0, 0.5]).unwrap();
        assert!((s.value - 3.5).abs() < 1e-12);
        assert_eq!(s.vertex.iter().map(|x| x.round()).collect::<Vec<_>>(), vec![1.0, -1.0, 1.0]);
    }
}
