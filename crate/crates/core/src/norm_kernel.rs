//! SPD matrix functions and norm calculus.

use crate::convex::DirectionGrid;
use crate::error::{Error, Result};
use crate::linalg::{norm, Mat};
use crate::scalar::Real;
use std::fmt;
use std::sync::Arc;

/// Symmetric positive-definite matrix, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Spd<T>(Mat<T>);

impl<T: Real> Spd<T> {
    /// Validate symmetry (relative tolerance) and strict positivity of the spectrum.
    pub fn new(m: Mat<T>) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NotSpd { cell: None });
        }
        let scale = m.max_abs();
        if scale == T::zero() || m.asymmetry() > T::CHECK_TOL * scale {
            return Err(Error::NotSpd { cell: None });
        }
        let s = m.symmetrize();
        let (vals, _) = s.sym_eigen();
        if vals[0] <= T::zero() {
            return Err(Error::NotSpd { cell: None });
        }
        Ok(Spd(s))
    }

    pub fn identity(d: usize) -> Self {
        Spd(Mat::identity(d))
    }

    pub fn from_diag(diag: &[T]) -> Result<Self> {
        Self::new(Mat::from_diag(diag))
    }

    pub fn from_row_major(entries: &[T]) -> Result<Self> {
        Self::new(Mat::from_row_major(entries)?)
    }

    #[inline]
    pub fn mat(&self) -> &Mat<T> {
        &self.0
    }

    pub fn into_mat(self) -> Mat<T> {
        self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Inverse through the eigendecomposition (keeps the result symmetric).
    pub fn inverse(&self) -> Self {
        Spd(self.0.sym_apply(|l| T::one() / l))
    }

    /// Multiply by a positive scalar.
    pub fn scale(&self, s: T) -> Result<Self> {
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::NotSpd { cell: None });
        }
        Ok(Spd(self.0.scale(s)))
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.0.sym_eigen().0
    }

    pub fn condition(&self) -> T {
        let v = self.eigenvalues();
        v[v.len() - 1] / v[0]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        self.0.mul_vec(v)
    }

    pub fn cast<U: Real>(&self) -> Spd<U> {
        Spd(self.0.cast())
    }
}

/// Principal square root.
pub fn spd_sqrt<T: Real>(a: &Spd<T>) -> Spd<T> {
    Spd(a.mat().sym_apply(|l| l.sqrt()))
}

/// Real power `A^t` through the eigendecomposition.
pub fn spd_power<T: Real>(a: &Spd<T>, t: T) -> Spd<T> {
    if t == T::one() {
        return a.clone();
    }
    if t == T::zero() {
        return Spd::identity(a.dim());
    }
    Spd(a.mat().sym_apply(|l| l.powf(t)))
}

/// Polar decomposition `A = U W` with `U` orthogonal and `W = (A^T A)^{1/2}`.
pub fn polar_decompose<T: Real>(a: &Mat<T>) -> Result<(Mat<T>, Spd<T>)> {
    let ata = (&a.transpose() * a).symmetrize();
    let w = Spd::new(ata).map_err(|_| Error::Singular)?;
    let w = spd_sqrt(&w);
    let u = a * &w.inverse().into_mat();
    Ok((u, w))
}

/// Simultaneous congruence `A = S^T D_A S`, `B = S^T D_B S` with `D_A = I`.
pub struct SimDiag<T> {
    pub s: Mat<T>,
    pub d_a: Vec<T>,
    pub d_b: Vec<T>,
}

pub fn sim_diag<T: Real>(a: &Spd<T>, b: &Spd<T>) -> Result<SimDiag<T>> {
    check_same_dim(a.dim(), b.dim())?;
    let a_half = spd_sqrt(a);
    let a_mhalf = a_half.inverse();
    let c = (&(a_mhalf.mat() * b.mat()) * a_mhalf.mat()).symmetrize();
    let (vals, v) = c.sym_eigen();
    if vals[0] <= T::zero() {
        return Err(Error::NotSpd { cell: None });
    }
    let s = &v.transpose() * a_half.mat();
    Ok(SimDiag { s, d_a: vec![T::one(); a.dim()], d_b: vals })
}

/// Weighted geometric mean `A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`.
pub fn geo_mean<T: Real>(a: &Spd<T>, b: &Spd<T>, t: T) -> Result<Spd<T>> {
    check_same_dim(a.dim(), b.dim())?;
    let a_half = spd_sqrt(a);
    let a_mhalf = a_half.inverse();
    let c = (&(a_mhalf.mat() * b.mat()) * a_mhalf.mat()).symmetrize();
    let ct = c.sym_apply(|l| l.max(T::zero()).powf(t));
    let g = (&(a_half.mat() * &ct) * a_half.mat()).symmetrize();
    Ok(Spd(g))
}

/// The same mean computed through the congruence `S^T D_A^{1-t} D_B^t S`.
pub fn geo_mean_congruence<T: Real>(a: &Spd<T>, b: &Spd<T>, t: T) -> Result<Spd<T>> {
    let sd = sim_diag(a, b)?;
    let mid: Vec<T> = sd.d_a.iter().zip(&sd.d_b).map(|(&x, &y)| x.powf(T::one() - t) * y.powf(t)).collect();
    let g = (&(&sd.s.transpose() * &Mat::from_diag(&mid)) * &sd.s).symmetrize();
    Ok(Spd(g))
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

type NormFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A (semi)norm on `R^d` given either by a matrix or by a closure.
#[derive(Clone)]
pub enum NormEvaluator {
    /// `v -> |W v|`.
    Matrix(Mat<f64>),
    /// Arbitrary positively homogeneous function; `is_norm` is false for
    /// evaluators that may fail the triangle inequality.
    Function { dim: usize, label: String, is_norm: bool, f: NormFn },
}

impl fmt::Debug for NormEvaluator {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormEvaluator::Matrix(m) => fm.debug_tuple("Matrix").field(m).finish(),
            NormEvaluator::Function { dim, label, is_norm, .. } => {
                fm.debug_struct("Function").field("dim", dim).field("label", label).field("is_norm", is_norm).finish()
            }
        }
    }
}

impl NormEvaluator {
    pub fn euclidean(d: usize) -> Self {
        NormEvaluator::Matrix(Mat::identity(d))
    }

    pub fn from_fn(dim: usize, label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        NormEvaluator::Function { dim, label: label.into(), is_norm: true, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        match self {
            NormEvaluator::Matrix(m) => m.dim(),
            NormEvaluator::Function { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            NormEvaluator::Matrix(m) => norm(&m.mul_vec(v)),
            NormEvaluator::Function { f, .. } => f(v),
        }
    }

    pub fn is_matrix_backed(&self) -> bool {
        matches!(self, NormEvaluator::Matrix(_))
    }

    /// False when the evaluator is only known to be homogeneous.
    pub fn is_norm(&self) -> bool {
        match self {
            NormEvaluator::Matrix(_) => true,
            NormEvaluator::Function { is_norm, .. } => *is_norm,
        }
    }

    pub fn label(&self) -> String {
        match self {
            NormEvaluator::Matrix(_) => "matrix".into(),
            NormEvaluator::Function { label, .. } => label.clone(),
        }
    }
}

/// Default number of directions used by grid maximizations at d = 2.
pub const DUAL_GRID_DIRS: usize = 256;
/// Golden-section refinement steps around the best grid direction at d = 2.
pub const DUAL_POLISH_STEPS: usize = 20;

/// Dual norm `sup_w |<v, w>| / rho(w)`.
pub fn dual_norm(rho: &NormEvaluator, v: &[f64]) -> Result<f64> {
    dual_norm_with(rho, v, DUAL_GRID_DIRS)
}

/// [`dual_norm`] with an explicit direction count (d = 2) for refinement studies.
pub fn dual_norm_with(rho: &NormEvaluator, v: &[f64], n_dirs: usize) -> Result<f64> {
    let d = rho.dim();
    if v.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    if let NormEvaluator::Matrix(w) = rho {
        let wt_inv = w.transpose().inverse().map_err(|_| Error::DegenerateNorm)?;
        return Ok(norm(&wt_inv.mul_vec(v)));
    }
    let dirs: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0]],
        2 => {
            let half = (n_dirs / 2).max(2);
            let step = std::f64::consts::PI / half as f64;
            (0..half).map(|k| vec![(k as f64 * step).cos(), (k as f64 * step).sin()]).collect()
        }
        _ => DirectionGrid::default_for(d).iter().map(|u| u.to_vec()).collect(),
    };
    let values: Vec<f64> = dirs.iter().map(|w| rho.eval(w)).collect();
    let scale = values.iter().cloned().fold(0.0, f64::max);
    if !scale.is_finite() || values.iter().any(|&r| !(r > 1e-12 * scale)) {
        return Err(Error::DegenerateNorm);
    }
    let ratios = dirs.iter().zip(&values).map(|(w, r)| crate::linalg::dot(v, w).abs() / r);
    let (k, best) = ratios.enumerate().fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    if d != 2 {
        return Ok(best);
    }
    let step = std::f64::consts::PI / dirs.len() as f64;
    let at = |th: f64| {
        let w = [th.cos(), th.sin()];
        crate::linalg::dot(v, &w).abs() / rho.eval(&w)
    };
    let centre = k as f64 * step;
    Ok(best.max(golden_max(at, centre - step, centre + step, DUAL_POLISH_STEPS)))
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, steps: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = fc.max(fd);
    for _ in 0..steps {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
            best = best.max(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
            best = best.max(fd);
        }
    }
    best
}

/// Evaluator of the dual norm of `rho`.
pub fn dual_evaluator(rho: &NormEvaluator, n_dirs: usize) -> Result<NormEvaluator> {
    if let NormEvaluator::Matrix(w) = rho {
        let wt_inv = w.transpose().inverse().map_err(|_| Error::DegenerateNorm)?;
        return Ok(NormEvaluator::Matrix(wt_inv));
    }
    let inner = rho.clone();
    let dim = rho.dim();
    Ok(NormEvaluator::Function {
        dim,
        label: format!("dual({})", rho.label()),
        is_norm: true,
        f: Arc::new(move |v| dual_norm_with(&inner, v, n_dirs).unwrap_or(f64::NAN)),
    })
}

/// Pointwise weighted geometric mean `rho0^{1-t} rho1^t`; homogeneous but
/// not necessarily subadditive.
pub fn geo_mean_norm(rho0: &NormEvaluator, rho1: &NormEvaluator, t: f64) -> Result<NormEvaluator> {
    check_same_dim(rho0.dim(), rho1.dim())?;
    let (a, b) = (rho0.clone(), rho1.clone());
    Ok(NormEvaluator::Function {
        dim: rho0.dim(),
        label: format!("geo_mean({}, {}, {t})", rho0.label(), rho1.label()),
        is_norm: false,
        f: Arc::new(move |v| {
            let (x, y) = (a.eval(v), b.eval(v));
            if t == 0.0 {
                x
            } else if t == 1.0 {
                y
            } else {
                x.powf(1.0 - t) * y.powf(t)
            }
        }),
    })
}

/// Result of [`double_dual_geo`].
#[derive(Clone, Debug)]
pub struct DoubleDualGeo {
    /// `(A #_t B)^{1/2}`.
    pub root: Spd<f64>,
    /// Range of `p_t^{**}(v) / |root v|` over the probe directions.
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// Double dual of the geometric mean of `|A^{1/2} .|` and `|B^{1/2} .|`,
/// compared against `|(A #_t B)^{1/2} .|`.
pub fn double_dual_geo(a: &Spd<f64>, b: &Spd<f64>, t: f64, n_dirs: usize, probes: usize) -> Result<DoubleDualGeo> {
    let root = spd_sqrt(&geo_mean(a, b, t)?);
    let p0 = NormEvaluator::Matrix(spd_sqrt(a).into_mat());
    let p1 = NormEvaluator::Matrix(spd_sqrt(b).into_mat());
    let pt = geo_mean_norm(&p0, &p1, t)?;
    let pt_star = dual_evaluator(&pt, n_dirs)?;
    let d = a.dim();
    let probe_dirs: Vec<Vec<f64>> = if d == 2 {
        (0..probes)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / probes as f64;
                vec![th.cos(), th.sin()]
            })
            .collect()
    } else {
        DirectionGrid::default_for(d).iter().take(probes).map(|u| u.to_vec()).collect()
    };
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in &probe_dirs {
        let pss = dual_norm_with(&pt_star, v, n_dirs)?;
        let q = norm(&root.mul_vec(v));
        let r = pss / q;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(DoubleDualGeo { root, ratio_min: lo, ratio_max: hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
        (a - b).frobenius() / b.frobenius()
    }

    #[test]
    fn sqrt_and_power_of_diagonal() {
        let a = Spd::from_diag(&[4.0, 9.0]).unwrap();
        assert_eq!(spd_sqrt(&a).mat(), &Mat::from_diag(&[2.0, 3.0]));
        assert!(rel(spd_power(&a, 0.5).mat(), &Mat::from_diag(&[2.0, 3.0])) < 1e-15);
        assert_eq!(spd_power(&a, 0.0).mat(), &Mat::identity(2));
    }

    #[test]
    fn rejects_non_spd() {
        assert!(Spd::from_row_major(&[1.0, 2.0, 0.0, 1.0]).is_err());
        assert!(Spd::from_row_major(&[1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(Spd::from_row_major(&[1.0, 0.0, 0.0, f64::NAN]).is_err());
    }

    #[test]
    fn polar_of_orthogonal_and_spd() {
        let th: f64 = 0.7;
        let q = Mat::from_row_major(&[th.cos(), -th.sin(), th.sin(), th.cos()]).unwrap();
        let (u, w) = polar_decompose(&q).unwrap();
        assert!(rel(&u, &q) < 1e-14);
        assert!(rel(w.mat(), &Mat::identity(2)) < 1e-14);
        assert_eq!(polar_decompose(&Mat::from_row_major(&[1.0, 1.0, 1.0, 1.0]).unwrap()).unwrap_err(), Error::Singular);
    }

    #[test]
    fn dual_of_diagonal_matrix_norm() {
        let rho = NormEvaluator::Matrix(Mat::from_diag(&[2.0, 1.0]));
        assert!((dual_norm(&rho, &[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dual_of_max_norm_is_l1() {
        let rho = NormEvaluator::from_fn(2, "max", |v| v[0].abs().max(v[1].abs()));
        let got = dual_norm(&rho, &[1.0, 1.0]).unwrap();
        assert!((got - 2.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn degenerate_norm_is_reported() {
        let rho = NormEvaluator::from_fn(2, "first", |v| v[0].abs());
        assert_eq!(dual_norm(&rho, &[1.0, 1.0]).unwrap_err(), Error::DegenerateNorm);
    }

    #[test]
    fn geo_mean_limits() {
        let r0 = NormEvaluator::Matrix(Mat::from_diag(&[2.0, 1.0]));
        let r1 = NormEvaluator::Matrix(Mat::from_diag(&[1.0, 5.0]));
        let g = geo_mean_norm(&r0, &r1, 1e-12).unwrap();
        for v in [[1.0, 0.3], [-0.2, 1.0]] {
            assert!((g.eval(&v) - r0.eval(&v)).abs() < 1e-9);
        }
        let same = geo_mean_norm(&r0, &r0, 0.3).unwrap();
        assert!((same.eval(&[0.4, 0.9]) - r0.eval(&[0.4, 0.9])).abs() < 1e-14);
        assert!(!same.is_norm());
    }

    #[test]
    fn single_precision_sqrt() {
        let a: Spd<f32> = Spd::from_row_major(&[5.0, 2.0, 2.0, 3.0]).unwrap();
        let r = spd_sqrt(&a);
        let back = r.mat() * r.mat();
        assert!((&back - a.mat()).max_abs() < 1e-5);
    }
}
