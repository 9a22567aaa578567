//! Named test weights on one-dimensional domains with `d = 2`.

use crate::error::Result;
use crate::grid::{gen_power_weight, gen_rotating_weight, DyadicDomain, MatrixWeight, VectorField};
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct SuiteWeight {
    pub id: String,
    pub weight: MatrixWeight,
}

/// `|x|^alpha I` on `[0, 1)` for each exponent.
pub fn power_sweep(level: u32, alphas: &[f64]) -> Result<Vec<SuiteWeight>> {
    let dom = DyadicDomain::unit(1, level);
    alphas.iter().map(|&a| Ok(SuiteWeight { id: format!("power{a:+}"), weight: gen_power_weight(&dom, 2, a, &[0.0])? })).collect()
}

/// `R(omega x) diag(e^{s x}, e^{-s x}) R(omega x)'` on `[0, 1)`.
pub fn rotating(level: u32, s: f64, omega: f64) -> Result<SuiteWeight> {
    let dom = DyadicDomain::unit(1, level);
    let weight = gen_rotating_weight(&dom, move |x| s * x, move |x| -s * x, omega)?;
    Ok(SuiteWeight { id: format!("rotating(s={s},w={:.3})", omega), weight })
}

/// Ten weights: the identity, four power weights and five rotating weights.
pub fn standard_suite(level: u32) -> Result<Vec<SuiteWeight>> {
    let dom = DyadicDomain::unit(1, level);
    let mut out = vec![SuiteWeight { id: "identity".into(), weight: MatrixWeight::identity(&dom, 2) }];
    out.extend(power_sweep(level, &[-0.4, -0.2, 0.2, 0.4])?);
    for (s, omega) in [(0.5, PI), (1.0, PI), (1.0, 2.0 * PI), (2.0, PI), (1.5, 3.0 * PI)] {
        out.push(rotating(level, s, omega)?);
    }
    Ok(out)
}

/// Smooth nonvanishing test field `(1 + x/2, cos 3x)`.
pub fn test_field(w: &MatrixWeight) -> VectorField {
    VectorField::from_fn(w.domain(), w.d(), |x| {
        let mut v = vec![0.0; w.d()];
        v[0] = 1.0 + 0.5 * x[0];
        if let Some(y) = v.get_mut(1) {
            *y = (3.0 * x[0]).cos();
        }
        v
    })
    .expect("field matches the weight dimension")
}
