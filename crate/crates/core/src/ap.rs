//! Muckenhoupt-type constants of matrix weights and set-valued functions.
//!
//! Every supremum runs over the dyadic subcubes of the base cube, so the
//! reported constants are lower bounds for suprema over all cubes.

use crate::convex::{john_ellipsoid, ConvexBody, DirectionGrid};
use crate::error::{Error, Result};
use crate::grid::{Cube, MatrixWeight, ScalarField, SetFunction};
use crate::linalg::{norm, Mat};
use crate::maximal::body_level_averages;
use crate::norm_kernel::NormEvaluator;
use crate::scalar::conjugate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApVariant {
    /// `sup_Q |R'_Q R_Q|` with reducing operators.
    Reducing,
    /// Double-average form for `1 < p < inf`.
    Roudenko,
    /// `sup_Q max_x avg_Q |W^{-1}(x) W(y)|`, `p = 1`.
    A1,
    /// `sup_Q max_x avg_Q |W(x) W^{-1}(y)|`, `p = inf`.
    Ainfty,
    /// Containment constant of the body field `x -> W(x) B`, `p = 1`.
    A1k,
    /// Classical constant of a scalar weight `w I`.
    ScalarOracle,
}

impl ApVariant {
    pub fn name(self) -> &'static str {
        match self {
            ApVariant::Reducing => "reducing",
            ApVariant::Roudenko => "roudenko",
            ApVariant::A1 => "a1",
            ApVariant::Ainfty => "ainfty",
            ApVariant::A1k => "a1k",
            ApVariant::ScalarOracle => "scalar-oracle",
        }
    }

    pub fn accepts(self, p: f64) -> bool {
        match self {
            ApVariant::Reducing | ApVariant::ScalarOracle => p >= 1.0,
            ApVariant::Roudenko => p > 1.0 && p.is_finite(),
            ApVariant::A1 | ApVariant::A1k => p == 1.0,
            ApVariant::Ainfty => p.is_infinite(),
        }
    }
}

impl fmt::Display for ApVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ApVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "reducing" => ApVariant::Reducing,
            "roudenko" => ApVariant::Roudenko,
            "a1" => ApVariant::A1,
            "ainfty" => ApVariant::Ainfty,
            "a1k" => ApVariant::A1k,
            "scalar-oracle" | "scalar" => ApVariant::ScalarOracle,
            other => return Err(Error::SchemaMismatch(format!("unknown variant '{other}'"))),
        })
    }
}

/// A computed constant and the cube where it is attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub variant: ApVariant,
    #[serde(with = "crate::io::exponent")]
    pub p: f64,
    pub constant: f64,
    pub cube: Cube,
    /// Accumulated John-solver slack (reducing variant), else zero.
    pub slack: f64,
}

/// Running maximum with ties going to the earliest cube.
fn best_of(items: impl Iterator<Item = (Cube, f64, f64)>) -> (Cube, f64, f64) {
    let mut best = (Cube { level: 0, index: 0 }, f64::NEG_INFINITY, 0.0f64);
    let mut slack = 0.0f64;
    for (c, v, s) in items {
        slack = slack.max(s);
        if v > best.1 {
            best = (c, v, 0.0);
        }
    }
    (best.0, best.1, slack)
}

/// `v -> (avg_Q |W(x) v|^p)^(1/p)`, the maximum over `Q` at `p = inf`.
pub fn avg_norm(w: &MatrixWeight, q: Cube, p: f64) -> Result<NormEvaluator> {
    w.domain().check_cube(q)?;
    if !(p >= 1.0) {
        return Err(Error::ExponentOutOfRange(format!("p = {p} must be at least 1")));
    }
    let mats: Vec<Mat<f64>> = w.domain().cells_in(q).iter().map(|&i| w.cell(i).mat().clone()).collect();
    let label = format!("avg-norm(p={p})");
    Ok(NormEvaluator::from_fn(w.d(), label, move |v| average_norm(&mats, v, p)))
}

fn average_norm(mats: &[Mat<f64>], v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return mats.iter().map(|m| norm(&m.mul_vec(v))).fold(0.0, f64::max);
    }
    let s: f64 = mats.iter().map(|m| norm(&m.mul_vec(v)).powf(p)).sum();
    (s / mats.len() as f64).powf(1.0 / p)
}

/// Reducing operator of a cube together with its John containment data.
#[derive(Clone, Debug)]
pub struct ReducingOperator {
    pub r: Mat<f64>,
    /// Relative John slack; zero when the averaged norm is exactly Euclidean.
    pub slack: f64,
}

/// SPD `R` with `|R v| <= avg_norm(v) <= sqrt(d) |R v|`.
///
/// The averaged norm is the support function of a body `K`; `R` is the
/// matrix of the John ellipsoid of `K`.  When the cube's cells are all
/// multiples of one matrix, or at `p = 2`, `K` is itself an ellipsoid and
/// `R` is exact.
pub fn reducing_operator(w: &MatrixWeight, q: Cube, p: f64) -> Result<ReducingOperator> {
    reducing_with(w, q, p, &DirectionGrid::default_for(w.d()))
}

/// [`reducing_operator`] on an explicit direction grid.
pub fn reducing_with(w: &MatrixWeight, q: Cube, p: f64, grid: &std::sync::Arc<DirectionGrid>) -> Result<ReducingOperator> {
    w.domain().check_cube(q)?;
    if !(p >= 1.0) {
        return Err(Error::ExponentOutOfRange(format!("p = {p} must be at least 1")));
    }
    let cells = w.domain().cells_in(q);
    let mats: Vec<&Mat<f64>> = cells.iter().map(|&i| w.cell(i).mat()).collect();
    if let Some(r) = exact_reducing(&mats, p) {
        return Ok(ReducingOperator { r, slack: 0.0 });
    }
    let owned: Vec<Mat<f64>> = mats.iter().map(|m| (*m).clone()).collect();
    let h: Vec<f64> = grid.iter().map(|u| average_norm(&owned, u, p)).collect();
    let body = ConvexBody::from_support_values(grid.clone(), h)?;
    let john = john_ellipsoid(&body)?;
    Ok(ReducingOperator { r: john.m.symmetrize(), slack: john.slack })
}

/// Closed forms: proportional cells, and `p = 2` where the average is a
/// quadratic form.
fn exact_reducing(mats: &[&Mat<f64>], p: f64) -> Option<Mat<f64>> {
    let base = mats[0];
    let coeffs: Option<Vec<f64>> = mats.iter().map(|m| crate::convex::proportional(base, m)).collect();
    if let Some(c) = coeffs {
        let s = if p.is_infinite() { c.iter().cloned().fold(0.0, f64::max) } else { (c.iter().map(|x| x.powf(p)).sum::<f64>() / c.len() as f64).powf(1.0 / p) };
        return Some(base.scale(s));
    }
    if p == 2.0 {
        let d = base.dim();
        let mut acc = Mat::zeros(d);
        for m in mats {
            acc = &acc + &(*m * *m);
        }
        return Some(acc.scale(1.0 / mats.len() as f64).symmetrize().sym_apply(|l| l.max(0.0).sqrt()));
    }
    None
}

/// `[W]_{A_p}` in the requested form.
pub fn ap_constant(w: &MatrixWeight, p: f64, variant: ApVariant) -> Result<ApReport> {
    if !variant.accepts(p) {
        return Err(Error::VariantMismatch { variant: variant.name().into(), p });
    }
    let dom = w.domain();
    let cubes = dom.cubes();
    let (cube, constant, slack) = match variant {
        ApVariant::Reducing => {
            let pp = conjugate(p);
            let inv = w.inverse();
            let vals = cubes
                .par_iter()
                .map(|&q| {
                    let a = reducing_operator(w, q, p)?;
                    let b = reducing_operator(&inv, q, pp)?;
                    Ok((q, (&b.r * &a.r).op_norm(), a.slack.max(b.slack)))
                })
                .collect::<Result<Vec<_>>>()?;
            best_of(vals.into_iter())
        }
        ApVariant::Roudenko | ApVariant::A1 | ApVariant::Ainfty => {
            let pairs = &PairTable::new(w, variant == ApVariant::A1);
            let pp = conjugate(p);
            let vals: Vec<(Cube, f64, f64)> = cubes
                .par_iter()
                .map(|&q| {
                    let cells = dom.cells_in(q);
                    let m = cells.len() as f64;
                    let rows = cells.iter().map(|&x| (x, cells.iter().map(move |&y| pairs.get(x, y))));
                    let v = match variant {
                        ApVariant::Roudenko => {
                            let outer: f64 = rows.map(|(_, row)| (row.map(|e| e.powf(pp)).sum::<f64>() / m).powf(p / pp)).sum::<f64>() / m;
                            outer.powf(1.0 / p)
                        }
                        _ => rows.map(|(_, row)| row.sum::<f64>() / m).fold(0.0, f64::max),
                    };
                    (q, v, 0.0)
                })
                .collect();
            best_of(vals.into_iter())
        }
        ApVariant::A1k => {
            let f = SetFunction::new(dom.clone(), w.cells().iter().map(|m| ConvexBody::Ellipsoid(m.mat().clone())).collect())?;
            let r = a1k_constant(&f)?;
            (r.cube, r.constant, 0.0)
        }
        ApVariant::ScalarOracle => {
            let s = scalar_part(w)?;
            let r = scalar_oracle(&s, p)?;
            (r.cube, r.constant, 0.0)
        }
    };
    Ok(ApReport { variant, p, constant, cube, slack })
}

/// `|W(x) W^{-1}(y)|` (or `|W^{-1}(x) W(y)|` when `inverse_first`) for all pairs.
struct PairTable {
    n: usize,
    e: Vec<f64>,
}

impl PairTable {
    fn new(w: &MatrixWeight, inverse_first: bool) -> Self {
        let n = w.len();
        let fwd: Vec<Mat<f64>> = w.cells().iter().map(|m| m.mat().clone()).collect();
        let inv: Vec<Mat<f64>> = w.cells().iter().map(|m| m.inverse().into_mat()).collect();
        let (left, right) = if inverse_first { (&inv, &fwd) } else { (&fwd, &inv) };
        let e = (0..n * n).into_par_iter().map(|k| (&left[k / n] * &right[k % n]).op_norm()).collect();
        PairTable { n, e }
    }

    fn get(&self, x: usize, y: usize) -> f64 {
        self.e[x * self.n + y]
    }
}

/// `w` when every cell of `W` is `w(x) I`.
fn scalar_part(w: &MatrixWeight) -> Result<ScalarField> {
    let d = w.d();
    let values = w
        .cells()
        .iter()
        .map(|m| {
            let a = m.mat()[(0, 0)];
            let err = (m.mat() - &Mat::identity(d).scale(a)).max_abs();
            if err > 1e-14 * a {
                Err(Error::SchemaMismatch("scalar oracle needs a weight of the form w(x) I".into()))
            } else {
                Ok(a)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(w.domain().clone(), values)
}

/// `sup_Q (avg_Q w^p)^(1/p) (avg_Q w^{-p'})^(1/p')`, the scalar dyadic
/// Muckenhoupt constant (esssup forms at `p = inf` and `p' = inf`).
pub fn scalar_oracle(w: &ScalarField, p: f64) -> Result<ApReport> {
    if !(p >= 1.0) {
        return Err(Error::ExponentOutOfRange(format!("p = {p} must be at least 1")));
    }
    if w.values.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::NotInAp("scalar weight must be positive and finite".into()));
    }
    let pp = conjugate(p);
    let dom = &w.domain;
    let vals = dom.cubes().into_iter().map(|q| {
        let xs: Vec<f64> = dom.cells_in(q).iter().map(|&i| w.values[i]).collect();
        let a = power_mean(&xs, p);
        let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let b = power_mean(&inv, pp);
        (q, a * b, 0.0)
    });
    let (cube, constant, _) = best_of(vals);
    Ok(ApReport { variant: ApVariant::ScalarOracle, p, constant, cube, slack: 0.0 })
}

fn power_mean(xs: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return xs.iter().cloned().fold(0.0, f64::max);
    }
    (xs.iter().map(|x| x.powf(p)).sum::<f64>() / xs.len() as f64).powf(1.0 / p)
}

/// Smallest `C` with `avg_Q F ⊆ C F(x)` for every cell `x` and dyadic `Q ∋ x`.
pub fn a1k_constant(f: &SetFunction) -> Result<ApReport> {
    if f.cells.iter().any(|k| !k.is_full_dimensional()) {
        return Err(Error::DegenerateBody);
    }
    let dom = &f.domain;
    let levels = body_level_averages(f)?;
    let per_cube: Vec<(Cube, f64)> = dom
        .cubes()
        .par_iter()
        .map(|&q| {
            let avg = &levels[q.level as usize][q.index];
            let worst = dom
                .cells_in(q)
                .iter()
                .map(|&x| avg.contains_scaled(&f.cells[x], 1.0).map(|r| r.1))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((q, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let (cube, constant, _) = best_of(per_cube.into_iter().map(|(q, v)| (q, v, 0.0)));
    Ok(ApReport { variant: ApVariant::A1k, p: 1.0, constant, cube, slack: 0.0 })
}

/// Reducing constants of `W` at `p` and of `W^{-1}` at `p'`.
#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub forward: ApReport,
    pub dual: ApReport,
    pub ratio: f64,
}

pub fn duality_check(w: &MatrixWeight, p: f64) -> Result<DualityReport> {
    let forward = ap_constant(w, p, ApVariant::Reducing)?;
    let dual = ap_constant(&w.inverse(), conjugate(p), ApVariant::Reducing)?;
    let ratio = forward.constant / dual.constant;
    Ok(DualityReport { forward, dual, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicDomain;
    use crate::norm_kernel::Spd;

    #[test]
    fn step_weight_closed_form() {
        let dom = DyadicDomain::unit(1, 1);
        let t: f64 = 4.0;
        let w = ScalarField::new(dom, vec![1.0, t]).unwrap();
        let r = scalar_oracle(&w, 2.0).unwrap();
        let want = ((1.0 + t * t) / 2.0).sqrt() * ((1.0 + 1.0 / (t * t)) / 2.0).sqrt();
        assert!((r.constant - want).abs() < 1e-12);
        assert_eq!(r.cube, Cube { level: 0, index: 0 });
    }

    #[test]
    fn identity_gives_one() {
        let dom = DyadicDomain::unit(1, 3);
        let w = MatrixWeight::identity(&dom, 2);
        for (v, p) in [
            (ApVariant::Reducing, 2.0),
            (ApVariant::Reducing, 3.0),
            (ApVariant::Roudenko, 1.5),
            (ApVariant::A1, 1.0),
            (ApVariant::Ainfty, f64::INFINITY),
            (ApVariant::A1k, 1.0),
            (ApVariant::ScalarOracle, 2.0),
        ] {
            let r = ap_constant(&w, p, v).unwrap();
            assert!((r.constant - 1.0).abs() < 1e-9, "{v}: {}", r.constant);
        }
        assert!(matches!(ap_constant(&w, 2.0, ApVariant::A1), Err(Error::VariantMismatch { .. })));
    }

    #[test]
    fn constant_weight_reduces_to_itself() {
        let dom = DyadicDomain::unit(1, 2);
        let a = Spd::from_row_major(&[2.0, 0.5, 0.5, 1.0]).unwrap();
        let w = MatrixWeight::constant(&dom, &a);
        let r = reducing_operator(&w, dom.root(), 3.0).unwrap();
        assert!((&r.r - a.mat()).max_abs() < 1e-12);
    }
}
