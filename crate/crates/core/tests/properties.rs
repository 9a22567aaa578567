//! Invariants over random inputs.

mod common;

use common::*;
use mwlab::ap::{ap_constant, ApVariant};
use mwlab::extrapolation::build_hbar;
use mwlab::grid::{DyadicDomain, VectorField};
use mwlab::maximal::{dyadic_maximal, MaximalOptions};
use mwlab::norm_kernel::geo_mean;
use mwlab::rdf::reverse_weight;
use mwlab::{john_ellipsoid, ConvexBody};
use proptest::prelude::*;
use rand::Rng;

fn support_gap(a: &ConvexBody, b: &ConvexBody) -> f64 {
    planar_support(a, 97).iter().zip(planar_support(b, 97)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn john_ellipsoid_of_thin_polygon() {
    let k = random_polygon(&mut rng(6858046237140290862));
    let j = john_ellipsoid(&k).unwrap();
    assert!(j.inner_ok && j.outer_ok, "{j:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn minkowski_sum_adds_support(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_polygon(&mut r), random_polygon(&mut r));
        let s = a.minkowski_sum(&b).unwrap();
        for u in [[1.0, 0.0], [0.6, 0.8], [-0.28, 0.96]] {
            prop_assert!((s.support(&u) - a.support(&u) - b.support(&u)).abs() <= 1e-12 * (1.0 + s.support(&u)));
        }
    }

    #[test]
    fn polar_is_an_involution(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = random_polygon(&mut r);
        prop_assume!(k.is_full_dimensional());
        let back = k.polar().unwrap().polar().unwrap();
        prop_assert!(support_gap(&k, &back) <= 1e-9 * (1.0 + k.radius()));
    }

    #[test]
    fn john_ellipsoid_is_sandwiched(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = random_polygon(&mut r);
        prop_assume!(k.is_full_dimensional());
        let j = john_ellipsoid(&k).unwrap();
        prop_assert!(j.inner_ok && j.outer_ok, "{:?}", j);
    }

    #[test]
    fn geometric_mean_is_symmetric_and_multiplicative(seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut r = rng(seed);
        let (a, b) = (random_spd(&mut r, 2.0), random_spd(&mut r, 2.0));
        let ab = geo_mean(&a, &b, t).unwrap();
        let ba = geo_mean(&b, &a, 1.0 - t).unwrap();
        prop_assert!((ab.mat() - ba.mat()).max_abs() <= 1e-9 * ab.mat().max_abs());
        let want = a.mat().det().powf(1.0 - t) * b.mat().det().powf(t);
        prop_assert!((ab.mat().det() - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn maximal_contains_input_and_is_homogeneous(seed in any::<u64>(), c in 0.1f64..10.0) {
        let dom = DyadicDomain::unit(1, 4);
        let mut r = rng(seed);
        let f = random_setfn(&mut r, &dom);
        let opts = MaximalOptions::default();
        let mf = dyadic_maximal(&f, &opts).unwrap();
        let mcf = dyadic_maximal(&f.map(|k| k.scale(c)), &opts).unwrap();
        for i in 0..dom.len() {
            if !f.cells[i].is_zero() {
                prop_assert!(support_gap(&f.cells[i], &ConvexBody::zero(2)) <= support_gap(&mf.cells[i], &ConvexBody::zero(2)) * (1.0 + 1e-12));
                for u in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
                    prop_assert!(f.cells[i].support(&u) <= mf.cells[i].support(&u) * (1.0 + 1e-12) + 1e-15);
                }
            }
            prop_assert!(support_gap(&mcf.cells[i], &mf.cells[i].scale(c)) <= 1e-12 * c * (1.0 + mf.cells[i].radius()));
        }
    }

    #[test]
    fn ap_constant_ignores_scalar_multiples(seed in any::<u64>(), c in 0.01f64..100.0) {
        let dom = DyadicDomain::unit(1, 3);
        let mut r = rng(seed);
        let w = random_weight(&mut r, &dom, 1.0);
        for (p, v) in [(2.0, ApVariant::Reducing), (1.0, ApVariant::A1), (f64::INFINITY, ApVariant::Ainfty)] {
            let a = ap_constant(&w, p, v).unwrap().constant;
            let b = ap_constant(&w.scale(c).unwrap(), p, v).unwrap().constant;
            prop_assert!((a - b).abs() <= 1e-10 * a, "{v}: {a} vs {b}");
        }
    }

    #[test]
    fn hbar_has_norm_at_most_two(seed in any::<u64>(), p in 1.1f64..6.0) {
        let dom = DyadicDomain::unit(1, 4);
        let mut r = rng(seed);
        let w = random_weight(&mut r, &dom, 1.5);
        let mut field = || VectorField::new(dom.clone(), (0..dom.len()).map(|_| vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]).collect()).unwrap();
        let (f, g) = (field(), field());
        let h = build_hbar(&w, p, &f, &g).unwrap();
        prop_assert!(h.lp_norm(p) <= 2.0 * (1.0 + 1e-12));
    }

    #[test]
    fn reverse_weight_endpoints(seed in any::<u64>()) {
        let dom = DyadicDomain::unit(1, 3);
        let mut r = rng(seed);
        let (w0, w1) = (random_weight(&mut r, &dom, 1.0), random_weight(&mut r, &dom, 1.0));
        let at0 = reverse_weight(&w0, &w1, 0.0).unwrap();
        let at1 = reverse_weight(&w0, &w1, 1.0).unwrap();
        let same = reverse_weight(&w0, &w0, 0.3).unwrap();
        for i in 0..dom.len() {
            prop_assert!((at0.cell(i).mat() - w0.cell(i).mat()).max_abs() <= 1e-10 * w0.cell(i).mat().max_abs());
            prop_assert!((at1.cell(i).mat() - w1.cell(i).mat()).max_abs() <= 1e-10 * w1.cell(i).mat().max_abs());
            prop_assert!((same.cell(i).mat() - w0.cell(i).mat()).max_abs() <= 1e-10 * w0.cell(i).mat().max_abs());
        }
    }
}
