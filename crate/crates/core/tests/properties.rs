use mdlab::clifford::{build_gamma_rep, commutation_defect, max_abs, pi_projector, spinor_null_ratio, CMat};
use mdlab::grid::multiplier::{divergence, leray};
use mdlab::grid::{Domain, Field, Grid, Kind};
use mdlab::nonlinearity::WaveStep;
use mdlab::nullform::{h_via_inner, h_via_outer, resonance_h, shortest_last, FreqTriple};
use mdlab::parametrix::fitted_rate;
use mdlab::spinor::{free_halfwave, Sign};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn vec_in(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0f64..4.0, d).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

fn dim_and_pair() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (2usize..=4).prop_flat_map(|d| (Just(d), vec_in(d), vec_in(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projectors_are_complementary_idempotents((d, xi, _) in dim_and_pair()) {
        let rep = build_gamma_rep(d).unwrap();
        let p = pi_projector(&rep, &xi, 1.0).unwrap().matrix;
        let m = pi_projector(&rep, &xi, -1.0).unwrap().matrix;
        let id = CMat::identity(rep.n, rep.n);
        prop_assert!(max_abs(&(&p * &p - &p)) < 1e-14);
        prop_assert!(max_abs(&(&p + &m - id)) < 1e-15);
        prop_assert!(max_abs(&(&p * &m)) < 1e-14);
    }

    #[test]
    fn commutation_defect_vanishes((d, xi, _) in dim_and_pair(), j in 0usize..4) {
        let rep = build_gamma_rep(d).unwrap();
        let j = 1 + j % d;
        for s in [1.0, -1.0] {
            prop_assert_eq!(max_abs(&commutation_defect(&rep, &xi, j, s).unwrap()), 0.0);
        }
    }

    #[test]
    fn null_ratio_is_scale_invariant((d, xi, eta) in dim_and_pair(), a in 0.01f64..100.0, b in 0.01f64..100.0) {
        let rep = build_gamma_rep(d).unwrap();
        let r = spinor_null_ratio(&rep, &xi, &eta);
        prop_assume!(r.is_ok());
        let r = r.unwrap();
        let xs: Vec<f64> = xi.iter().map(|x| a * x).collect();
        let es: Vec<f64> = eta.iter().map(|x| b * x).collect();
        let rs = spinor_null_ratio(&rep, &xs, &es).unwrap();
        prop_assert!(r.is_finite());
        prop_assert!((r - rs).abs() <= 1e-9 * r.max(1.0));
    }

    #[test]
    fn resonance_rearrangements((d, x1, x2) in dim_and_pair(), s in prop::bool::ANY) {
        let t = shortest_last(FreqTriple::new(x1.clone(), x2.clone(), [-1.0, 1.0, 1.0]));
        let a = t.abs();
        prop_assume!(a[0] > 1e-9 && a[2] > 1e-9);
        let scale = a.iter().cloned().fold(0.0, f64::max);
        let h = resonance_h(&t);
        prop_assert!((h - h_via_inner(&t)).abs() <= 1e-12 * scale);
        prop_assert!((h - h_via_outer(&t)).abs() <= 1e-12 * scale);
        let sign = if s { 1.0 } else { -1.0 };
        let same = FreqTriple::new(x1, x2, [sign; 3]);
        prop_assert!(resonance_h(&same).abs() >= same.abs().iter().cloned().fold(0.0, f64::max));
        prop_assert!(d >= 2);
    }

    #[test]
    fn unforced_wave_step_conserves_energy(omega in 0.0f64..20.0, h in 0.001f64..1.0, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let st = WaveStep::new(omega, h);
        let a = C64::new(re, im);
        let ad = C64::new(im, -re);
        let zero = C64::new(0.0, 0.0);
        let (a1, ad1) = st.apply(h, a, ad, zero, zero);
        let e0 = omega * omega * a.norm_sqr() + ad.norm_sqr();
        let e1 = omega * omega * a1.norm_sqr() + ad1.norm_sqr();
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1e-300));
    }

    #[test]
    fn fitted_rate_recovers_power_laws(p in -3.0f64..3.0, c in 0.1f64..10.0) {
        let eps: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let vals: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        prop_assert!((fitted_rate(&eps, &vals) - p).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn leray_is_a_divergence_free_projection(seed in 0u64..1000) {
        let g = Grid::new(3, 8, 2.0 * PI).unwrap();
        let k = (seed % 3 + 1) as f64;
        let mut v = Field::from_fn(&g, Kind::Vector, 3, Domain::Space, |x, _| {
            vec![C64::new((k * x[1]).sin(), 0.0), C64::new((x[0] + k * x[2]).cos(), 0.0), C64::new((x[0] - x[1]).sin() * k, 0.0)]
        });
        v.remove_mean();
        let p = leray(&v).unwrap();
        prop_assert!(divergence(&p).unwrap().norm_l2() < 1e-12 * v.norm_l2());
        prop_assert!(leray(&p).unwrap().rel_dist(&p).unwrap() < 1e-14);
    }

    #[test]
    fn free_halfwave_is_a_unitary_group(t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, plus in prop::bool::ANY) {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::new(x[0].sin() * (2.0 * x[1]).cos(), (x[0] + x[1]).cos())]);
        let s = if plus { Sign::Plus } else { Sign::Minus };
        let a = free_halfwave(&free_halfwave(&f, s, t1), s, t2);
        let b = free_halfwave(&f, s, t1 + t2);
        prop_assert!(a.rel_dist(&b).unwrap() < 1e-13);
        prop_assert!((free_halfwave(&f, s, t1).norm_l2() - f.norm_l2()).abs() < 1e-13 * f.norm_l2());
    }
}
