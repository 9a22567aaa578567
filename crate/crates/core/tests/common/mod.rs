#![allow(dead_code)]

use mwlab::grid::{DyadicDomain, MatrixWeight, ScalarField, SetFunction};
use mwlab::norm_kernel::Spd;
use mwlab::{ConvexBody, Matrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric hull of 2 to 4 random points, scaled log-uniformly.
pub fn random_polygon(rng: &mut ChaCha8Rng) -> ConvexBody {
    let k = rng.gen_range(2..=4);
    let s = rng.gen_range(-1.5f64..1.5).exp();
    let pts: Vec<[f64; 2]> = (0..k).map(|_| [s * rng.gen_range(-1.0..1.0), s * rng.gen_range(-1.0..1.0)]).collect();
    ConvexBody::polygon(&pts)
}

/// Polygon-valued field, about a fifth of the cells set to zero.
pub fn random_setfn(rng: &mut ChaCha8Rng, dom: &DyadicDomain) -> SetFunction {
    let cells = (0..dom.len()).map(|_| if rng.gen_bool(0.2) { ConvexBody::zero(2) } else { random_polygon(rng) }).collect();
    SetFunction::new(dom.clone(), cells).unwrap()
}

pub fn random_spd(rng: &mut ChaCha8Rng, spread: f64) -> Spd<f64> {
    let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (c, s) = (th.cos(), th.sin());
    let l1 = rng.gen_range(-spread..spread).exp();
    let l2 = rng.gen_range(-spread..spread).exp();
    let m = Matrix::from_row_major(&[c * c * l1 + s * s * l2, c * s * (l1 - l2), c * s * (l1 - l2), s * s * l1 + c * c * l2]).unwrap().symmetrize();
    Spd::new(m).unwrap()
}

pub fn random_weight(rng: &mut ChaCha8Rng, dom: &DyadicDomain, spread: f64) -> MatrixWeight {
    let cells = (0..dom.len()).map(|_| random_spd(rng, spread)).collect();
    MatrixWeight::new(dom.clone(), cells).unwrap()
}

/// Five positive scalar weights on `[0, 1)`.
pub fn scalar_weights(dom: &DyadicDomain) -> Vec<(&'static str, ScalarField)> {
    let mut r = rng(11);
    let random = ScalarField::new(dom.clone(), (0..dom.len()).map(|_| r.gen_range(-1.5f64..1.5).exp()).collect()).unwrap();
    vec![
        ("power-0.5", ScalarField::from_fn(dom, |x| x[0].powf(-0.5))),
        ("power+1.5", ScalarField::from_fn(dom, |x| x[0].powf(1.5))),
        ("step", ScalarField::from_fn(dom, |x| if x[0] < 0.5 { 1.0 } else { 7.0 })),
        ("exp-sin", ScalarField::from_fn(dom, |x| (2.0 * (6.0 * x[0]).sin()).exp())),
        ("random", random),
    ]
}

/// Support function of the body at `n` equally spaced planar directions.
pub fn planar_support(k: &ConvexBody, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            k.support(&[th.cos(), th.sin()])
        })
        .collect()
}
