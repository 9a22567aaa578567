//! Rubio de Francia iteration, the factorization operators and
//! (reverse) Jones factorization of matrix weights.

use crate::ap::{ap_constant, ApReport, ApVariant};
use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::{DyadicDomain, MatrixWeight, ScalarField, SetFunction};
use crate::maximal::{dyadic_maximal, exhaust, MaximalOptions};
use crate::norm_kernel::{geo_mean, spd_power, spd_sqrt};
use crate::scalar::conjugate;
use crate::SpdMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Relative tolerance on the per-step bound check.
const STEP_TOL: f64 = 1e-9;
const MAX_ESCALATIONS: u32 = 5;

/// A space the iteration can run in.
pub trait IterSpace: Clone + Send + Sync {
    /// `L^p` norm, weighted by `w` where the space supports it.
    fn norm(&self, p: f64, w: Option<&MatrixWeight>) -> Result<f64>;
    /// `self + c * other`.
    fn add_scaled(&self, c: f64, other: &Self) -> Result<Self>;
    fn scaled(&self, c: f64) -> Self;
    /// Smallest `c` with `self(x) ⊆ c other(x)` in every cell.
    fn containment(&self, other: &Self) -> Result<f64>;
    /// Size of the cellwise excess of `self` over `other`, as a field whose
    /// `L^p` norm measures how far `self ⊆ other` fails.
    fn excess(&self, other: &Self, w: Option<&MatrixWeight>) -> Result<ScalarField>;
    fn domain(&self) -> &DyadicDomain;
    /// Cells rotated by one, used by the operator probes.
    fn rotated(&self) -> Self;
}

impl IterSpace for ScalarField {
    fn norm(&self, p: f64, _w: Option<&MatrixWeight>) -> Result<f64> {
        Ok(self.lp_norm(p))
    }

    fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + c * b)
    }

    fn scaled(&self, c: f64) -> Self {
        self.map(|x| c * x)
    }

    fn containment(&self, other: &Self) -> Result<f64> {
        self.domain.check_same(&other.domain)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| ratio(*a, *b)).fold(0.0, f64::max))
    }

    fn excess(&self, other: &Self, _w: Option<&MatrixWeight>) -> Result<ScalarField> {
        self.zip(other, |a, b| (a - b).max(0.0))
    }

    fn domain(&self) -> &DyadicDomain {
        &self.domain
    }

    fn rotated(&self) -> Self {
        let mut values = self.values.clone();
        values.rotate_left(1);
        ScalarField { domain: self.domain.clone(), values }
    }
}

impl IterSpace for SetFunction {
    fn norm(&self, p: f64, w: Option<&MatrixWeight>) -> Result<f64> {
        Ok(self.set_norms(w)?.lp_norm(p))
    }

    fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        self.sum(&other.map(|k| k.scale(c)))
    }

    fn scaled(&self, c: f64) -> Self {
        self.map(|k| k.scale(c))
    }

    fn containment(&self, other: &Self) -> Result<f64> {
        self.domain.check_same(&other.domain)?;
        let mut worst = 0.0f64;
        for (a, b) in self.cells.iter().zip(&other.cells) {
            if a.is_zero() {
                continue;
            }
            worst = worst.max(a.contains_scaled(b, 1.0)?.1);
        }
        Ok(worst)
    }

    fn excess(&self, other: &Self, w: Option<&MatrixWeight>) -> Result<ScalarField> {
        self.domain.check_same(&other.domain)?;
        let values = (0..self.cells.len())
            .map(|i| {
                let (a, b) = (&self.cells[i], &other.cells[i]);
                if a.is_zero() {
                    return Ok(0.0);
                }
                let scale = match w {
                    Some(w) => a.set_norm(w.cell(i).mat()),
                    None => a.radius(),
                };
                // a ⊆ c b, so the part of a outside b is at most (1 - 1/c) |a|.
                let c = if b.is_full_dimensional() { a.contains_scaled(b, 1.0)?.1 } else { f64::INFINITY };
                Ok(if c <= 1.0 { 0.0 } else { (1.0 - 1.0 / c) * scale })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScalarField { domain: self.domain.clone(), values })
    }

    fn domain(&self) -> &DyadicDomain {
        &self.domain
    }

    fn rotated(&self) -> Self {
        let mut cells = self.cells.clone();
        cells.rotate_left(1);
        SetFunction { domain: self.domain.clone(), d: self.d, cells }
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// A positively homogeneous, sublinear, monotone operator.
pub trait Operator<X: IterSpace>: Sync {
    fn apply(&self, x: &X) -> Result<X>;
    fn name(&self) -> String;
}

/// Truncation depth, bound and norm used by [`iterate`].
#[derive(Clone, Debug)]
pub struct IterationConfig {
    /// Certified bound `B` on the operator norm.
    pub bound: f64,
    /// Number of terms kept in the series.
    pub k_max: usize,
    pub p: f64,
    /// Factor applied to `B` on a failed step check.
    pub safety: f64,
    /// Weight of the `L^p_K(W)` norm for set-valued iterates.
    pub weight: Option<MatrixWeight>,
    /// Run the sublinearity and monotonicity probes before iterating.
    pub validate: bool,
}

impl IterationConfig {
    pub fn new(bound: f64, p: f64) -> Self {
        IterationConfig { bound, k_max: 30, p, safety: 2.0, weight: None, validate: true }
    }

    fn check(&self) -> Result<()> {
        if !(self.bound > 0.0) || !self.bound.is_finite() {
            return Err(Error::SchemaMismatch(format!("bound must be positive, got {}", self.bound)));
        }
        if self.k_max == 0 {
            return Err(Error::SchemaMismatch("k_max must be at least 1".into()));
        }
        if !(self.safety > 1.0) {
            return Err(Error::SchemaMismatch("safety factor must exceed 1".into()));
        }
        if !(self.p >= 1.0) {
            return Err(Error::ExponentOutOfRange(format!("p = {} must be at least 1", self.p)));
        }
        Ok(())
    }

    /// Additive tolerance `2^(1-k_max) ||G||` on the iteration properties.
    pub fn tail(&self, g_norm: f64) -> f64 {
        2f64.powi(1 - self.k_max as i32) * g_norm
    }
}

/// Output of [`iterate`].
#[derive(Clone, Debug)]
pub struct IterationResult<X> {
    pub s: X,
    /// Bound actually used, after escalations.
    pub bound: f64,
    pub escalations: u32,
    /// `||T^k G||` for the kept terms.
    pub term_norms: Vec<f64>,
}

/// Per-cell checks of the three iteration properties.
#[derive(Clone, Debug, Serialize)]
pub struct IterationProperties {
    /// Largest `c` with `G(x) ⊆ c SG(x)`; at most 1.
    pub containment: f64,
    /// `||SG|| / ||G||`; at most 2.
    pub norm_ratio: f64,
    /// `||(T SG - 2B SG)_+||`, the failure of `T SG ⊆ 2B SG`.
    pub absorption_slack: f64,
    pub g_norm: f64,
    pub bound: f64,
}

/// Spot checks that `t` is homogeneous, sublinear and monotone near `g`.
pub fn validate_operator<X: IterSpace>(t: &dyn Operator<X>, g: &X) -> Result<()> {
    let h = g.rotated();
    let tg = t.apply(g)?;
    let th = t.apply(&h)?;
    let sum = g.add_scaled(1.0, &h)?;
    let tsum = t.apply(&sum)?;
    let t2g = t.apply(&g.scaled(2.0))?;
    let tol = 1.0 + 1e-9;
    if t2g.containment(&tg.scaled(2.0))? > tol || tg.scaled(2.0).containment(&t2g)? > tol {
        return Err(Error::NonMonotoneOperator(format!("homogeneity ({})", t.name())));
    }
    if tsum.containment(&tg.add_scaled(1.0, &th)?)? > tol {
        return Err(Error::NonMonotoneOperator(format!("sublinearity ({})", t.name())));
    }
    if tg.containment(&tsum)? > tol {
        return Err(Error::NonMonotoneOperator(format!("monotonicity ({})", t.name())));
    }
    Ok(())
}

/// `S G = sum_{k < k_max} (2B)^{-k} T^k G`.
///
/// Every step checks `||T^{k+1} G|| <= B ||T^k G||`.  On failure `B` is
/// multiplied by the safety factor and the series restarts, at most five
/// times.
pub fn iterate<X: IterSpace>(t: &dyn Operator<X>, g: &X, cfg: &IterationConfig) -> Result<IterationResult<X>> {
    cfg.check()?;
    if cfg.validate {
        validate_operator(t, g)?;
    }
    let w = cfg.weight.as_ref();
    let mut bound = cfg.bound;
    let mut escalations = 0;
    'restart: loop {
        let mut term = g.clone();
        let mut term_norm = g.norm(cfg.p, w)?;
        let mut s = g.clone();
        let mut norms = vec![term_norm];
        for k in 1..cfg.k_max {
            if term_norm == 0.0 {
                break;
            }
            let next = t.apply(&term)?;
            let next_norm = next.norm(cfg.p, w)?;
            if next_norm > bound * term_norm * (1.0 + STEP_TOL) {
                let r = next_norm / term_norm;
                if escalations == MAX_ESCALATIONS {
                    return Err(Error::BoundViolation { escalations, ratio: r, bound });
                }
                escalations += 1;
                bound *= cfg.safety;
                continue 'restart;
            }
            s = s.add_scaled((2.0 * bound).powi(-(k as i32)), &next)?;
            term = next;
            term_norm = next_norm;
            norms.push(term_norm);
        }
        return Ok(IterationResult { s, bound, escalations, term_norms: norms });
    }
}

/// Evaluates the three iteration properties of `res` against `g`.
pub fn check_properties<X: IterSpace>(t: &dyn Operator<X>, g: &X, res: &IterationResult<X>, cfg: &IterationConfig) -> Result<IterationProperties> {
    let w = cfg.weight.as_ref();
    let g_norm = g.norm(cfg.p, w)?;
    let s_norm = res.s.norm(cfg.p, w)?;
    let ts = t.apply(&res.s)?;
    let slack = ts.excess(&res.s.scaled(2.0 * res.bound), w)?.lp_norm(cfg.p);
    Ok(IterationProperties {
        containment: g.containment(&res.s)?,
        norm_ratio: if g_norm > 0.0 { s_norm / g_norm } else { 0.0 },
        absorption_slack: slack,
        g_norm,
        bound: res.bound,
    })
}

/// `safety * max ||T G|| / ||G||` over the probes.
pub fn certify_bound<X: IterSpace>(t: &dyn Operator<X>, probes: &[X], p: f64, w: Option<&MatrixWeight>, safety: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for g in probes {
        let n = g.norm(p, w)?;
        if n > 0.0 {
            worst = worst.max(t.apply(g)?.norm(p, w)? / n);
        }
    }
    Ok(safety * worst.max(f64::MIN_POSITIVE))
}

/// Positive random scalar fields with log-uniform values in `[e^-2, e^2]`,
/// plus the constant field and a single spike.
pub fn scalar_probes(domain: &DyadicDomain, count: usize, seed: u64) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![ScalarField::constant(domain, 1.0)];
    let mut spike = vec![1e-3; domain.len()];
    spike[0] = 1.0;
    out.push(ScalarField { domain: domain.clone(), values: spike });
    while out.len() < count {
        let values = (0..domain.len()).map(|_| rng.gen_range(-2.0f64..2.0).exp()).collect();
        out.push(ScalarField { domain: domain.clone(), values });
    }
    out
}

/// The zero operator.
pub struct ZeroOp;

impl Operator<ScalarField> for ZeroOp {
    fn apply(&self, x: &ScalarField) -> Result<ScalarField> {
        Ok(x.map(|_| 0.0))
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

impl Operator<SetFunction> for ZeroOp {
    fn apply(&self, x: &SetFunction) -> Result<SetFunction> {
        Ok(SetFunction::constant(&x.domain, &ConvexBody::zero(x.d)))
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

/// The identity operator.
pub struct IdentityOp;

impl<X: IterSpace> Operator<X> for IdentityOp {
    fn apply(&self, x: &X) -> Result<X> {
        Ok(x.clone())
    }
    fn name(&self) -> String {
        "identity".into()
    }
}

/// The dyadic maximal operator `M^d`.
#[derive(Default)]
pub struct MaximalOp {
    pub opts: MaximalOptions,
}

impl Operator<SetFunction> for MaximalOp {
    fn apply(&self, x: &SetFunction) -> Result<SetFunction> {
        dyadic_maximal(x, &self.opts)
    }
    fn name(&self) -> String {
        "maximal".into()
    }
}

/// `P_W = N_W ∘ M^d` on set-valued functions.
pub struct ProjectedMaximal {
    pub w: MatrixWeight,
}

impl Operator<SetFunction> for ProjectedMaximal {
    fn apply(&self, x: &SetFunction) -> Result<SetFunction> {
        exhaust(&self.w, &dyadic_maximal(x, &MaximalOptions::default())?)
    }
    fn name(&self) -> String {
        "P_W".into()
    }
}

/// `P_W` on ellipsoid fields `r(x) W(x)^{-1} B`, acting on the radius `r`:
/// `r -> |W(x) M^d(r W^{-1} B)(x)|`.
pub struct ScalarProjected {
    w: MatrixWeight,
    inv: MatrixWeight,
}

impl ScalarProjected {
    pub fn new(w: &MatrixWeight) -> Self {
        ScalarProjected { w: w.clone(), inv: w.inverse() }
    }

    pub fn weight(&self) -> &MatrixWeight {
        &self.w
    }
}

impl Operator<ScalarField> for ScalarProjected {
    fn apply(&self, r: &ScalarField) -> Result<ScalarField> {
        let f = SetFunction::ellipsoids(r, &self.inv)?;
        dyadic_maximal(&f, &MaximalOptions::default())?.set_norms(Some(&self.w))
    }
    fn name(&self) -> String {
        "P_W radius".into()
    }
}

/// `r -> P(r^e)^(1/e)`, the `L^e`-averaged form of an operator `P`.
pub struct PowerConjugated<P> {
    pub inner: P,
    pub e: f64,
}

impl<P: Operator<ScalarField>> Operator<ScalarField> for PowerConjugated<P> {
    fn apply(&self, r: &ScalarField) -> Result<ScalarField> {
        let e = self.e;
        Ok(self.inner.apply(&r.map(|x| x.abs().powf(e)))?.map(|y| y.powf(1.0 / e)))
    }
    fn name(&self) -> String {
        format!("({})^(1/{})", self.inner.name(), self.e)
    }
}

/// `T1 r = |W(x) M^d(r^{p'} W^{-1} B)(x)|^{1/p'}`.
pub fn op_t1(w: &MatrixWeight, p: f64) -> PowerConjugated<ScalarProjected> {
    PowerConjugated { inner: ScalarProjected::new(w), e: conjugate(p) }
}

/// `T2 r = |W(x)^{-1} M^d(r^p W B)(x)|^{1/p}`.
pub fn op_t2(w: &MatrixWeight, p: f64) -> PowerConjugated<ScalarProjected> {
    PowerConjugated { inner: ScalarProjected::new(&w.inverse()), e: p }
}

/// Cellwise sum of two scalar operators.
pub struct SumOp<A, B>(pub A, pub B);

impl<A: Operator<ScalarField>, B: Operator<ScalarField>> Operator<ScalarField> for SumOp<A, B> {
    fn apply(&self, r: &ScalarField) -> Result<ScalarField> {
        self.0.apply(r)?.add_scaled(1.0, &self.1.apply(r)?)
    }
    fn name(&self) -> String {
        format!("{} + {}", self.0.name(), self.1.name())
    }
}

/// Factorization `W = W0^{1/p} W1^{1/p'}` with `W0 ∈ A_1`, `W1 ∈ A_∞`.
#[derive(Clone, Debug)]
pub struct FactorizationResult {
    pub p: f64,
    pub w0: MatrixWeight,
    pub w1: MatrixWeight,
    pub rbar: ScalarField,
    pub seed: ScalarField,
    /// Reducing constant of the input weight.
    pub w_report: ApReport,
    pub a1_report: ApReport,
    pub ainfty_report: ApReport,
    /// Largest relative deviation of `W0^{1/p} W1^{1/p'}` from `W`.
    pub product_residual: f64,
    pub bound: f64,
    pub escalations: u32,
}

/// Knobs for [`factorize`].
#[derive(Clone, Debug)]
pub struct FactorizeOptions {
    pub k_max: usize,
    pub safety: f64,
    pub probes: usize,
    pub probe_seed: u64,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        FactorizeOptions { k_max: 30, safety: 2.0, probes: 32, probe_seed: 0 }
    }
}

/// Jones factorization through the iteration of `T1 + T2` on `L^{pp'}`.
///
/// `seed` defaults to the constant field of unit `L^{pp'}` norm.  The
/// iterate `rbar` gives `W0 = rbar^p W` and `W1 = rbar^{-p'} W`.
pub fn factorize(w: &MatrixWeight, p: f64, seed: Option<&ScalarField>, opts: &FactorizeOptions) -> Result<FactorizationResult> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::ExponentOutOfRange(format!("factorization needs 1 < p < inf, got {p}")));
    }
    let pp = conjugate(p);
    let q = p * pp;
    let dom = w.domain();
    let w_report = ap_constant(w, p, ApVariant::Reducing)?;
    if !w_report.constant.is_finite() {
        return Err(Error::NotInAp(format!("reducing constant is {}", w_report.constant)));
    }
    let seed = match seed {
        Some(s) => {
            dom.check_same(&s.domain)?;
            if s.values.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::SchemaMismatch("seed must be positive".into()));
            }
            s.clone()
        }
        None => ScalarField::constant(dom, dom.total_measure().powf(-1.0 / q)),
    };
    let t = SumOp(op_t1(w, p), op_t2(w, p));
    let probes = scalar_probes(dom, opts.probes, opts.probe_seed);
    let bound = certify_bound(&t, &probes, q, None, opts.safety)?;
    let cfg = IterationConfig { bound, k_max: opts.k_max, p: q, safety: opts.safety, weight: None, validate: true };
    let res = iterate(&t, &seed, &cfg)?;
    let rbar = res.s;
    let w0 = w.scaled_by(&rbar, p)?;
    let w1 = w.scaled_by(&rbar, -pp)?;
    let product_residual = product_residual(w, &w0, &w1, p)?;
    let a1_report = ap_constant(&w0, 1.0, ApVariant::A1)?;
    let ainfty_report = ap_constant(&w1, f64::INFINITY, ApVariant::Ainfty)?;
    Ok(FactorizationResult { p, w0, w1, rbar, seed, w_report, a1_report, ainfty_report, product_residual, bound: res.bound, escalations: res.escalations })
}

/// `max_x |W0^{1/p} W1^{1/p'} - W| / |W|`.
pub fn product_residual(w: &MatrixWeight, w0: &MatrixWeight, w1: &MatrixWeight, p: f64) -> Result<f64> {
    w.domain().check_same(w0.domain())?;
    w.domain().check_same(w1.domain())?;
    let pp = conjugate(p);
    let e1 = if pp.is_infinite() { 0.0 } else { 1.0 / pp };
    let mut worst = 0.0f64;
    for i in 0..w.len() {
        let a = spd_power(w0.cell(i), 1.0 / p);
        let b = spd_power(w1.cell(i), e1);
        let prod = a.mat() * b.mat();
        let target = w.cell(i).mat();
        worst = worst.max((&prod - target).op_norm() / target.op_norm());
    }
    Ok(worst)
}

/// `W̄ = (W0^2 #_t W1^2)^{1/2}` and its measured constant.
#[derive(Clone, Debug)]
pub struct ReverseFactorization {
    pub w: MatrixWeight,
    pub q: f64,
    pub report: ApReport,
    pub w0_report: ApReport,
    pub w1_report: ApReport,
    /// `[W̄]_{A_q} / ([W0]_{A_q0}^{1-t} [W1]_{A_q1}^t)`.
    pub ratio: f64,
}

/// `1/q = (1-t)/q0 + t/q1`.
pub fn interpolated_exponent(q0: f64, q1: f64, t: f64) -> f64 {
    let inv = |q: f64| if q.is_infinite() { 0.0 } else { 1.0 / q };
    let s = (1.0 - t) * inv(q0) + t * inv(q1);
    if s == 0.0 {
        f64::INFINITY
    } else {
        1.0 / s
    }
}

/// Cellwise `(W0^2 #_t W1^2)^{1/2}` without the constant reports.
pub fn reverse_weight(w0: &MatrixWeight, w1: &MatrixWeight, t: f64) -> Result<MatrixWeight> {
    w0.domain().check_same(w1.domain())?;
    if w0.d() != w1.d() {
        return Err(Error::DimensionMismatch { expected: w0.d(), got: w1.d() });
    }
    let cells = (0..w0.len())
        .map(|i| {
            let a = SpdMatrix::new(w0.cell(i).mat() * w0.cell(i).mat()).map_err(|e| e.at_cell(i))?;
            let b = SpdMatrix::new(w1.cell(i).mat() * w1.cell(i).mat()).map_err(|e| e.at_cell(i))?;
            Ok(spd_sqrt(&geo_mean(&a, &b, t).map_err(|e| e.at_cell(i))?))
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixWeight::new(w0.domain().clone(), cells)
}

pub fn reverse_factorize(w0: &MatrixWeight, w1: &MatrixWeight, q0: f64, q1: f64, t: f64) -> Result<ReverseFactorization> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::ExponentOutOfRange(format!("t = {t} must lie in (0, 1)")));
    }
    for q in [q0, q1] {
        if !(q >= 1.0) {
            return Err(Error::ExponentOutOfRange(format!("q = {q} must be at least 1")));
        }
    }
    let w = reverse_weight(w0, w1, t)?;
    let q = interpolated_exponent(q0, q1, t);
    let report = ap_constant(&w, q, ApVariant::Reducing)?;
    let w0_report = ap_constant(w0, q0, ApVariant::Reducing)?;
    let w1_report = ap_constant(w1, q1, ApVariant::Reducing)?;
    let ratio = report.constant / (w0_report.constant.powf(1.0 - t) * w1_report.constant.powf(t));
    Ok(ReverseFactorization { w, q, report, w0_report, w1_report, ratio })
}

/// Which side of `p` the target exponent lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `p0 >= p`, through `W1 = s W ∈ A_∞`.
    Up,
    /// `p0 <= p`, through `W0 = r W ∈ A_1`.
    Down,
}

/// Rescaled weight for a nearby exponent.
#[derive(Clone, Debug)]
pub struct DuoResult {
    pub w: MatrixWeight,
    pub p0: f64,
    pub report: ApReport,
    /// `[W]_{A_p}` and the constant of the auxiliary `A_1`/`A_∞` weight.
    pub w_constant: f64,
    pub aux_constant: f64,
    /// `report.constant / ([W]^a [aux]^{1-a})` with the branch exponent `a`.
    pub ratio: f64,
}

/// `W̄ = s^{1-p/p0} W` (up) or `r^{1-p'/p0'} W` (down).
pub fn duo_rescale(w: &MatrixWeight, p: f64, field: &ScalarField, p0: f64, branch: Branch) -> Result<DuoResult> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::ExponentOutOfRange(format!("p = {p} must lie in (1, inf)")));
    }
    let (a, aux, aux_variant, aux_p) = match branch {
        Branch::Up => {
            if !(p0 >= p) {
                return Err(Error::ExponentOutOfRange(format!("up branch needs p0 >= p, got p0 = {p0}")));
            }
            let a = if p0.is_infinite() { 0.0 } else { p / p0 };
            (a, w.scaled_by(field, 1.0)?, ApVariant::Ainfty, f64::INFINITY)
        }
        Branch::Down => {
            if !(p0 >= 1.0 && p0 <= p) {
                return Err(Error::ExponentOutOfRange(format!("down branch needs 1 <= p0 <= p, got p0 = {p0}")));
            }
            let p0c = conjugate(p0);
            let a = if p0c.is_infinite() { 0.0 } else { conjugate(p) / p0c };
            (a, w.scaled_by(field, 1.0)?, ApVariant::A1, 1.0)
        }
    };
    let rescaled = w.scaled_by(field, 1.0 - a)?;
    let report = ap_constant(&rescaled, p0, ApVariant::Reducing)?;
    let w_constant = ap_constant(w, p, ApVariant::Reducing)?.constant;
    let aux_constant = ap_constant(&aux, aux_p, aux_variant)?.constant;
    let ratio = report.constant / (w_constant.powf(a) * aux_constant.powf(1.0 - a));
    Ok(DuoResult { w: rescaled, p0, report, w_constant, aux_constant, ratio })
}
