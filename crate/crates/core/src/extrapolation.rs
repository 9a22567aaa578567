//! Weight rescaling behind matrix extrapolation, and an empirical harness
//! comparing hypothesis and conclusion ratios.

use crate::ap::{ap_constant, ApVariant};
use crate::error::{Error, Result};
use crate::grid::{lift_vector_field, MatrixWeight, ScalarField, VectorField};
use crate::maximal::{christ_goldberg, dyadic_maximal, MaximalOptions};
use crate::rdf::{certify_bound, iterate, scalar_probes, IterationConfig, ScalarProjected};
use crate::scalar::conjugate;
use crate::suite::SuiteWeight;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseId {
    /// `1 < p < p0 < inf`
    I,
    /// `p0 = inf`
    II,
    /// `1 < p0 < p`
    III,
    /// `p0 = 1`
    IV,
}

impl CaseId {
    /// The case matching the exponent pair, if any.
    pub fn classify(p: f64, p0: f64) -> Result<CaseId> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::CaseMismatch(format!("p = {p} must lie in (1, inf)")));
        }
        if p0.is_infinite() {
            Ok(CaseId::II)
        } else if p0 == 1.0 {
            Ok(CaseId::IV)
        } else if p0 > p {
            Ok(CaseId::I)
        } else if p0 > 1.0 && p0 < p {
            Ok(CaseId::III)
        } else {
            Err(Error::CaseMismatch(format!("no case for p = {p}, p0 = {p0}")))
        }
    }

    pub fn accepts(self, p: f64, p0: f64) -> bool {
        CaseId::classify(p, p0).map(|c| c == self).unwrap_or(false)
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::III => "III",
            CaseId::IV => "IV",
        })
    }
}

/// One extrapolation instance.
#[derive(Clone, Debug)]
pub struct ExtrapolationCase {
    pub case_id: CaseId,
    pub p: f64,
    pub p0: f64,
    pub f: VectorField,
    pub g: VectorField,
    pub w: MatrixWeight,
}

impl ExtrapolationCase {
    pub fn new(p: f64, p0: f64, f: VectorField, g: VectorField, w: MatrixWeight) -> Result<Self> {
        let case_id = CaseId::classify(p, p0)?;
        Ok(ExtrapolationCase { case_id, p, p0, f, g, w })
    }

    fn check(&self) -> Result<()> {
        if !self.case_id.accepts(self.p, self.p0) {
            return Err(Error::CaseMismatch(format!("case {} does not match p = {}, p0 = {}", self.case_id, self.p, self.p0)));
        }
        let dom = self.w.domain();
        dom.check_same(&self.f.domain)?;
        dom.check_same(&self.g.domain)?;
        Ok(())
    }
}

/// Iteration knobs for [`rescale_weight`].
#[derive(Clone, Debug)]
pub struct RescaleConfig {
    pub k_max: usize,
    pub safety: f64,
    pub probes: usize,
    pub probe_seed: u64,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        RescaleConfig { k_max: 30, safety: 2.0, probes: 32, probe_seed: 0 }
    }
}

/// `lhs <= rhs`, with `excess = lhs / rhs - 1`.
#[derive(Clone, Debug, Serialize)]
pub struct ChainCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub excess: f64,
}

impl ChainCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let excess = if rhs > 0.0 {
            lhs / rhs - 1.0
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        ChainCheck { name: name.into(), lhs, rhs, excess }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.excess <= tol
    }
}

/// Rescaled weight and the inequalities along its construction.
#[derive(Clone, Debug)]
pub struct ChainReport {
    pub case_id: CaseId,
    pub p: f64,
    pub p0: f64,
    pub w0: MatrixWeight,
    /// The iterated scalar field (`R_W hbar` or `R'_I h`).
    pub r: ScalarField,
    pub bound: f64,
    pub w_constant: f64,
    pub w0_constant: f64,
    /// `max{p/p0, p'/p0'}`.
    pub exponent: f64,
    /// `w0_constant / w_constant^exponent`.
    pub constant_ratio: f64,
    /// Inequalities with the constants stated for the rescaling.
    pub chain: Vec<ChainCheck>,
    /// The same norm comparisons with the constants that follow from
    /// `||R h||_{p'} <= 2` alone.
    pub provable: Vec<ChainCheck>,
}

impl ChainReport {
    pub fn worst_excess(&self) -> f64 {
        self.chain.iter().map(|c| c.excess).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn worst_provable_excess(&self) -> f64 {
        self.provable.iter().map(|c| c.excess).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `|W f| / ||f|| + |W g| / ||g||` in `L^p(W)`.
pub fn build_hbar(w: &MatrixWeight, p: f64, f: &VectorField, g: &VectorField) -> Result<ScalarField> {
    let nf = f.lp_norm(w, p)?;
    let ng = g.lp_norm(w, p)?;
    if !(nf > 0.0) || !(ng > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let a = f.weighted_norms(w)?;
    let b = g.weighted_norms(w)?;
    a.zip(&b, |x, y| x / nf + y / ng)
}

/// `h = |W f|^{p-1} / ||f||^{p-1}`, the norming function of `|W f|` in `L^p`.
pub fn dualizing_field(w: &MatrixWeight, p: f64, f: &VectorField) -> Result<ScalarField> {
    let nf = f.lp_norm(w, p)?;
    if !(nf > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(f.weighted_norms(w)?.map(|x| (x / nf).powf(p - 1.0)))
}

/// `max{p/p0, p'/p0'}` with the limits at `p0 in {1, inf}`.
pub fn rescale_exponent(p: f64, p0: f64) -> f64 {
    let a = if p0.is_infinite() { 0.0 } else { p / p0 };
    let p0c = conjugate(p0);
    let b = if p0c.is_infinite() { 0.0 } else { conjugate(p) / p0c };
    a.max(b)
}

fn run_iteration(op: &ScalarProjected, seed: &ScalarField, q: f64, cfg: &RescaleConfig) -> Result<(ScalarField, f64)> {
    let probes = scalar_probes(&seed.domain, cfg.probes, cfg.probe_seed);
    let bound = certify_bound(op, &probes, q, None, cfg.safety)?;
    let icfg = IterationConfig { bound, k_max: cfg.k_max, p: q, safety: cfg.safety, weight: None, validate: true };
    let res = iterate(op, seed, &icfg)?;
    Ok((res.s, res.bound))
}

/// `||f||_{L^q(W)}` for a weight given as `s(x)^e W(x)`.
fn scaled_norm(f: &VectorField, w: &MatrixWeight, s: &ScalarField, e: f64, q: f64) -> Result<f64> {
    let base = f.weighted_norms(w)?;
    Ok(base.zip(s, |x, r| x * r.powf(e))?.lp_norm(q))
}

/// Builds `W0` for the case and evaluates the norm chain.
pub fn rescale_weight(case: &ExtrapolationCase, cfg: &RescaleConfig) -> Result<ChainReport> {
    case.check()?;
    let (p, p0, w) = (case.p, case.p0, &case.w);
    let (f, g) = (&case.f, &case.g);
    let nf = f.lp_norm(w, p)?;
    let ng = g.lp_norm(w, p)?;
    if !(nf > 0.0) || !(ng > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let pc = conjugate(p);
    let mut chain = Vec::new();
    let mut provable = Vec::new();
    let (r, bound, e) = match case.case_id {
        CaseId::I | CaseId::II => {
            let hbar = build_hbar(w, p, f, g)?;
            let (r, bound) = run_iteration(&ScalarProjected::new(w), &hbar, p, cfg)?;
            let e = if case.case_id == CaseId::I { -(p0 - p) / p0 } else { -1.0 };
            let i2: f64 = r.values.iter().map(|x| x.powf(p)).sum::<f64>() * r.domain.cell_measure();
            chain.push(ChainCheck::new("I2 <= 4^p", i2, 4f64.powf(p)));
            for (name, v, n) in [("f", f, nf), ("g", g, ng)] {
                let lhs = scaled_norm(v, w, &r, e, p0)?;
                let label = if p0.is_infinite() {
                    format!("||{name}||_(L^inf(W0)) <= ||{name}||_(L^p(W))")
                } else {
                    format!("||{name}||_(L^p0(W0)) <= ||{name}||_(L^p(W))")
                };
                chain.push(ChainCheck::new(&label, lhs, n));
            }
            // ||f||_p <= ||f||_{p0,W0} I2^{(p0-p)/(p p0)}; the Case II form at p0 = inf.
            let i2_pow = if p0.is_infinite() { 1.0 / p } else { (p0 - p) / (p * p0) };
            let lhs = nf;
            let rhs = scaled_norm(f, w, &r, e, p0)? * i2.powf(i2_pow);
            provable.push(ChainCheck::new("||f||_(L^p(W)) <= ||f||_(W0) I2^e", lhs, rhs));
            provable.extend(chain.iter().cloned());
            (r, bound, e)
        }
        CaseId::III | CaseId::IV => {
            let h = dualizing_field(w, p, f)?;
            let (r, bound) = run_iteration(&ScalarProjected::new(&w.inverse()), &h, pc, cfg)?;
            let e = if case.case_id == CaseId::III { 1.0 - pc / conjugate(p0) } else { 1.0 };
            let f0 = scaled_norm(f, w, &r, e, p0)?;
            let g0 = scaled_norm(g, w, &r, e, p0)?;
            if case.case_id == CaseId::III {
                let stated = 2f64.powf(1.0 / conjugate(p / p0));
                let proved = 2f64.powf(pc / conjugate(p / p0));
                chain.push(ChainCheck::new("||f||_(L^p(W)) <= ||f||_(L^p0(W0))", nf, f0));
                chain.push(ChainCheck::new("||f||^p0_(L^p0(W0)) <= 2^(1/(p/p0)') ||f||^p0_(L^p(W))", f0.powf(p0), stated * nf.powf(p0)));
                chain.push(ChainCheck::new("||g||^p0_(L^p0(W0)) <= 2^(1/(p/p0)') ||g||^p0_(L^p(W))", g0.powf(p0), stated * ng.powf(p0)));
                provable.push(chain[0].clone());
                provable.push(ChainCheck::new("||f||^p0_(L^p0(W0)) <= 2^(p'/(p/p0)') ||f||^p0_(L^p(W))", f0.powf(p0), proved * nf.powf(p0)));
                provable.push(ChainCheck::new("||g||^p0_(L^p0(W0)) <= 2^(p'/(p/p0)') ||g||^p0_(L^p(W))", g0.powf(p0), proved * ng.powf(p0)));
            } else {
                let stated = 2f64.powf(1.0 / pc);
                chain.push(ChainCheck::new("||f||_(L^p(W)) <= ||f||_(L^1(W0))", nf, f0));
                chain.push(ChainCheck::new("||f||_(L^1(W0)) <= 2^(1/p') ||f||_(L^p(W))", f0, stated * nf));
                chain.push(ChainCheck::new("||g||_(L^1(W0)) <= 2^(1/p') ||g||_(L^p(W))", g0, stated * ng));
                provable.push(chain[0].clone());
                provable.push(ChainCheck::new("||f||_(L^1(W0)) <= 2 ||f||_(L^p(W))", f0, 2.0 * nf));
                provable.push(ChainCheck::new("||g||_(L^1(W0)) <= 2 ||g||_(L^p(W))", g0, 2.0 * ng));
            }
            let rn = r.lp_norm(pc);
            provable.push(ChainCheck::new("||R'h||_(p') <= 2", rn, 2.0));
            (r, bound, e)
        }
    };
    let w0 = w.scaled_by(&r, e)?;
    let w_constant = ap_constant(w, p, ApVariant::Reducing)?.constant;
    let w0_constant = ap_constant(&w0, p0, ApVariant::Reducing)?.constant;
    let exponent = rescale_exponent(p, p0);
    Ok(ChainReport {
        case_id: case.case_id,
        p,
        p0,
        w0,
        r,
        bound,
        w_constant,
        w0_constant,
        exponent,
        constant_ratio: w0_constant / w_constant.powf(exponent),
        chain,
        provable,
    })
}

/// Operators generating the `(f, g)` pairs of the demo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoOperator {
    /// `|W f| = M_W g`.
    ChristGoldberg,
    /// `f` the constant average of `g` over the base cube.
    DyadicAverage,
    /// `|W f| = |W M^d(conv{±g})|`.
    ExhaustMaximal,
}

impl DemoOperator {
    pub fn name(self) -> &'static str {
        match self {
            DemoOperator::ChristGoldberg => "christ-goldberg",
            DemoOperator::DyadicAverage => "dyadic-average",
            DemoOperator::ExhaustMaximal => "exhaust-maximal",
        }
    }

    /// `f` for the input `g`.
    pub fn image(self, w: &MatrixWeight, g: &VectorField) -> Result<VectorField> {
        let dom = w.domain();
        let e1 = {
            let mut v = vec![0.0; w.d()];
            v[0] = 1.0;
            v
        };
        let along = |s: &ScalarField| -> Result<VectorField> {
            let cells = (0..dom.len()).map(|i| w.cell(i).inverse().mul_vec(&e1).iter().map(|x| x * s.values[i]).collect()).collect();
            VectorField::new(dom.clone(), cells)
        };
        match self {
            DemoOperator::ChristGoldberg => along(&christ_goldberg(w, g, &MaximalOptions::default())?),
            DemoOperator::DyadicAverage => {
                let n = dom.len() as f64;
                let mut avg = vec![0.0; w.d()];
                for v in &g.cells {
                    for (a, x) in avg.iter_mut().zip(v) {
                        *a += x / n;
                    }
                }
                VectorField::new(dom.clone(), vec![avg; dom.len()])
            }
            DemoOperator::ExhaustMaximal => {
                let m = dyadic_maximal(&lift_vector_field(g), &MaximalOptions::default())?;
                along(&m.set_norms(Some(w))?)
            }
        }
    }
}

impl FromStr for DemoOperator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "christ-goldberg" => Ok(DemoOperator::ChristGoldberg),
            "dyadic-average" => Ok(DemoOperator::DyadicAverage),
            "exhaust-maximal" => Ok(DemoOperator::ExhaustMaximal),
            other => Err(Error::SchemaMismatch(format!("unknown operator '{other}'"))),
        }
    }
}

/// One row of the demo table.
#[derive(Clone, Debug, Serialize)]
pub struct DemoRow {
    pub weight_id: String,
    pub w_constant: f64,
    pub case: String,
    pub w0_constant: f64,
    pub hypothesis_ratio: f64,
    pub conclusion_ratio: f64,
    pub envelope: f64,
    pub slack: f64,
}

/// `conclusion <= c * hypothesis` with the constant `c` of the norm chain.
pub fn chain_constant(p: f64, p0: f64) -> Result<f64> {
    if p == p0 {
        return Ok(1.0);
    }
    Ok(match CaseId::classify(p, p0)? {
        CaseId::I => 4f64.powf(1.0 - p / p0),
        CaseId::II => 4.0,
        CaseId::III => 2f64.powf(conjugate(p) / (p0 * conjugate(p / p0))),
        CaseId::IV => 2.0,
    })
}

/// Hypothesis and conclusion ratios of `(op g, g)` over a weight suite.
///
/// The hypothesis ratio is measured in `L^{p0}(W0)` with the rescaled
/// weight, the conclusion ratio in `L^p(W)`.  The envelope is the chain
/// constant times the hypothesis ratio, so `slack = envelope - conclusion`
/// is nonnegative whenever the chain holds.
pub fn extrapolation_demo(
    op: DemoOperator,
    p0: f64,
    p: f64,
    suite: &[SuiteWeight],
    g_of: &(dyn Fn(&MatrixWeight) -> VectorField + Sync),
    cfg: &RescaleConfig,
) -> Result<Vec<DemoRow>> {
    let c = chain_constant(p, p0)?;
    suite
        .par_iter()
        .map(|sw| {
            let w = &sw.weight;
            let g = g_of(w);
            let f = op.image(w, &g)?;
            let conclusion = f.lp_norm(w, p)? / g.lp_norm(w, p)?;
            let (case, w_constant, w0_constant, hypothesis) = if p == p0 {
                let k = ap_constant(w, p, ApVariant::Reducing)?.constant;
                ("-".to_string(), k, k, conclusion)
            } else {
                let case = ExtrapolationCase::new(p, p0, f.clone(), g.clone(), w.clone())?;
                let rep = rescale_weight(&case, cfg)?;
                let h = f.lp_norm(&rep.w0, p0)? / g.lp_norm(&rep.w0, p0)?;
                (rep.case_id.to_string(), rep.w_constant, rep.w0_constant, h)
            };
            let envelope = c * hypothesis;
            Ok(DemoRow {
                weight_id: sw.id.clone(),
                w_constant,
                case,
                w0_constant,
                hypothesis_ratio: hypothesis,
                conclusion_ratio: conclusion,
                envelope,
                slack: envelope - conclusion,
            })
        })
        .collect()
}

/// CSV rendering of the demo table.
pub fn demo_csv(rows: &[DemoRow]) -> String {
    let mut out = String::from("weight_id,W_Ap,case,W0_Ap0,hypothesis_ratio,conclusion_ratio,K_p_envelope,slack\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.weight_id, r.w_constant, r.case, r.w0_constant, r.hypothesis_ratio, r.conclusion_ratio, r.envelope, r.slack
        ));
    }
    out
}

/// Least-squares fit `log y = a + b log x`; `None` with fewer than two
/// distinct abscissae.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicDomain;

    #[test]
    fn exponent_limits() {
        assert_eq!(rescale_exponent(2.0, 4.0), 2.0 / (4.0 / 3.0));
        assert_eq!(rescale_exponent(3.0, 2.0), 1.5);
        assert_eq!(rescale_exponent(2.0, f64::INFINITY), 2.0);
        assert_eq!(rescale_exponent(2.0, 1.0), 2.0);
        assert!((rescale_exponent(2.0, 2.0 + 1e-9) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn classification() {
        assert_eq!(CaseId::classify(2.0, 4.0).unwrap(), CaseId::I);
        assert_eq!(CaseId::classify(2.0, f64::INFINITY).unwrap(), CaseId::II);
        assert_eq!(CaseId::classify(3.0, 2.0).unwrap(), CaseId::III);
        assert_eq!(CaseId::classify(2.0, 1.0).unwrap(), CaseId::IV);
        assert!(matches!(CaseId::classify(2.0, 2.0), Err(Error::CaseMismatch(_))));
    }

    #[test]
    fn identity_weight_chain() {
        let dom = DyadicDomain::unit(1, 3);
        let w = MatrixWeight::identity(&dom, 2);
        let f = VectorField::from_fn(&dom, 2, |_| vec![1.0, 0.5]).unwrap();
        let case = ExtrapolationCase::new(2.0, 4.0, f.clone(), f, w).unwrap();
        let rep = rescale_weight(&case, &RescaleConfig::default()).unwrap();
        assert!(rep.worst_excess() <= 1e-10, "{:?}", rep.chain);
        assert!((rep.w0_constant - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hbar_of_equal_fields() {
        let dom = DyadicDomain::unit(1, 2);
        let w = MatrixWeight::identity(&dom, 2);
        let f = VectorField::from_fn(&dom, 2, |x| vec![x[0], 1.0]).unwrap();
        let h = build_hbar(&w, 2.0, &f, &f).unwrap();
        let nf = f.lp_norm(&w, 2.0).unwrap();
        for (i, v) in f.cells.iter().enumerate() {
            assert!((h.values[i] - 2.0 * crate::linalg::norm(v) / nf).abs() < 1e-15);
        }
    }
}
