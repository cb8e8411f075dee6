use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use lie_sampling::bandlimited::BandlimitedFunction;
use lie_sampling::grid::{convolve, Exponent, FnKernel, GridFunction, HaarGrid, Side};
use lie_sampling::group::{adjoint_coeffs, bch_swap, exp_coords, inverse, multiply, Basis, GroupElement};
use lie_sampling::sampling::{build_bupu, generate_separated_set, oscillation_sup, BupuKind, LatticeParams};
use lie_sampling::{Complex64, Error};

fn element() -> impl Strategy<Value = GroupElement> {
    (-3.0..3.0f64, -10.0..10.0f64).prop_map(|(t, b)| GroupElement::from_log_scale(t, b))
}

fn small_grid() -> Arc<HaarGrid> {
    Arc::new(HaarGrid::affine(0.25, 4.0, 16, -4.0, 4.0, 32).unwrap())
}

fn values(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(r, i)| Complex64::new(r, i)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn product_is_associative(x in element(), y in element(), z in element()) {
        let l = multiply(multiply(x, y).unwrap(), z).unwrap();
        let r = multiply(x, multiply(y, z).unwrap()).unwrap();
        prop_assert!(l.approx_eq(&r, 1e-12));
    }

    #[test]
    fn inverse_cancels(x in element()) {
        let xi = inverse(x).unwrap();
        prop_assert!(multiply(x, xi).unwrap().approx_eq(&GroupElement::IDENTITY, 1e-12));
        prop_assert!(multiply(xi, x).unwrap().approx_eq(&GroupElement::IDENTITY, 1e-12));
        prop_assert!(x.inverse_times(&x).approx_eq(&GroupElement::IDENTITY, 1e-12));
    }

    #[test]
    fn swap_reorders_factors(t1 in -4.0..4.0f64, t2 in -10.0..10.0f64) {
        let lhs = multiply(exp_coords(0.0, t2), exp_coords(t1, 0.0)).unwrap();
        let (s1, s2) = bch_swap(t1, t2);
        let rhs = multiply(exp_coords(s1, 0.0), exp_coords(0.0, s2)).unwrap();
        prop_assert!(lhs.approx_eq(&rhs, 1e-14));
        prop_assert!((s2 - t2 * (-t1).exp()).abs() <= 1e-14 * t2.abs().max(1.0));
    }

    #[test]
    fn adjoint_matches_conjugation(y in element(), k in 1usize..=2) {
        let h = 1e-4;
        let (c1, c2) = adjoint_coeffs(y, k).unwrap();
        let basis = Basis::from_index(k).unwrap();
        let conj = multiply(multiply(inverse(y).unwrap(), basis.exp(h)).unwrap(), y).unwrap();
        let (t1, t2) = conj.exp_coordinates();
        let err = (t1 - h * c1).abs().max((t2 - h * c2).abs());
        prop_assert!(err <= h * h * (1.0 + c1.abs() + c2.abs()), "{err}");
    }

    #[test]
    fn norms_are_solid(f in values(16 * 32), shrink in prop::collection::vec(0.0..=1.0f64, 16 * 32), p in 1.0..6.0f64) {
        let g = small_grid();
        let p = Exponent::new(p).unwrap();
        let big = GridFunction::new(g.clone(), f.clone(), p).unwrap();
        let small = GridFunction::new(g, f.iter().zip(&shrink).map(|(v, s)| v * *s).collect(), p).unwrap();
        prop_assert!(small.lp_norm() <= big.lp_norm() * (1.0 + 1e-14));
        prop_assert!(small.norm_with(Exponent::INFINITY) <= big.norm_with(Exponent::INFINITY));
    }

    #[test]
    fn convolution_is_linear(f in values(16 * 32), h in values(16 * 32), cr in -2.0..2.0f64, ci in -2.0..2.0f64) {
        let g = small_grid();
        let k = FnKernel::new(|x: GroupElement| Complex64::new((-4.0 * x.log_a().powi(2) - x.b().powi(2)).exp(), 0.2 * x.b()));
        let f = GridFunction::new(g.clone(), f, Exponent::TWO).unwrap();
        let h = GridFunction::new(g, h, Exponent::TWO).unwrap();
        let c = Complex64::new(cr, ci);
        let lhs = convolve(&f.axpy(c, &h).unwrap(), &k);
        let rhs = convolve(&f, &k).axpy(c, &convolve(&h, &k)).unwrap();
        let scale = lhs.max_abs().max(1e-300);
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bupu_reassembles_any_function(seed in 0u64..1000, eps in 0.25..1.0f64, f in values(16 * 32), smooth in any::<bool>()) {
        let g = small_grid();
        let set = generate_separated_set(LatticeParams::new(eps, 0.8, 0.2, seed), g.clone()).unwrap();
        let kind = if smooth { BupuKind::Smooth } else { BupuKind::Indicator };
        let bupu = build_bupu(&set, kind).unwrap();
        let f = GridFunction::new(g.clone(), f, Exponent::TWO).unwrap();
        let mut sum = vec![Complex64::new(0.0, 0.0); g.len()];
        for i in 0..bupu.len() {
            for &(k, w) in bupu.entries(i) {
                sum[k as usize] += f.values()[k as usize] * w;
            }
        }
        for k in 0..g.len() {
            if !set.samples_at(k).is_empty() {
                prop_assert!((sum[k] - f.values()[k]).norm() <= 1e-14 * f.values()[k].norm().max(1.0));
            }
        }
    }

    #[test]
    fn overlap_matches_pairwise_recount(seed in 0u64..1000, eps in 0.3..1.2f64, jitter in 0.0..=0.25f64) {
        // rho (1 + jitter) <= 1 keeps every cell inside its neighbourhood
        let g = small_grid();
        let set = generate_separated_set(LatticeParams::new(eps, 0.8, jitter, seed), g).unwrap();
        let nodes: Vec<BTreeSet<u32>> = (0..set.len()).map(|i| set.nodes_of(i).iter().copied().collect()).collect();
        let mut worst = 0;
        for i in 0..set.len() {
            let hits = (0..set.len()).filter(|&j| j == i || !nodes[i].is_disjoint(&nodes[j])).count();
            worst = worst.max(hits);
        }
        prop_assert_eq!(worst, set.overlap_n());
        prop_assert!(set.overlap_n() >= 1);
    }

    #[test]
    fn wide_jitter_covers_or_reports(seed in 0u64..1000, eps in 0.3..1.2f64, jitter in 0.25..0.99f64) {
        match generate_separated_set(LatticeParams::new(eps, 0.8, jitter, seed), small_grid()) {
            Ok(set) => prop_assert!(set.covering_ok() && set.uncovered() == 0),
            Err(Error::CoveringFailed { uncovered }) => prop_assert!(uncovered > 0),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn oscillation_grows_with_radius(eps in 0.05..0.6f64, w in 0.3..2.0f64, side in prop::bool::ANY) {
        let g = small_grid();
        let side = if side { Side::Right } else { Side::Left };
        let f = GridFunction::from_fn(g, Exponent::TWO, |x| Complex64::from_polar((-x.b() * x.b() / 4.0).exp(), w * x.log_a() + 0.3 * x.b()));
        // the half-radius lattice with 5 points sits inside the 9-point one
        let inner = oscillation_sup(&f, eps / 2.0, side, 5).unwrap();
        let outer = oscillation_sup(&f, eps, side, 9).unwrap();
        for (a, b) in inner.values().iter().zip(outer.values()) {
            prop_assert!(a.re <= b.re + 1e-12);
        }
    }

    #[test]
    fn band_projection_is_idempotent(c in values(41), limit in 0.2..3.0f64) {
        let f = BandlimitedFunction::from_harmonics((-20.0, 20.0), -20, c).unwrap();
        let once = f.project(limit).unwrap();
        let twice = once.project(limit).unwrap();
        let (a, b) = (once.harmonics().unwrap(), twice.harmonics().unwrap());
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
        let whole = f.project(f.omega()).unwrap();
        prop_assert_eq!(whole.harmonics().unwrap(), f.harmonics().unwrap());
    }
}
