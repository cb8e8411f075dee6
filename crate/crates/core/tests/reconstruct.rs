use std::sync::Arc;

use lie_sampling::grid::{Exponent, GridFunction, HaarGrid};
use lie_sampling::reconstruct::*;
use lie_sampling::report::OperatorKind;
use lie_sampling::sampling::{build_bupu, generate_separated_set, BupuKind, LatticeParams, SampleSet, SequenceCoefficients};
use lie_sampling::wavelet::{AnalyticTransform, MotherWavelet};
use lie_sampling::{Complex64, Error};

const KINDS: [OperatorKind; 3] = [OperatorKind::T1, OperatorKind::T2, OperatorKind::T3];

fn grid() -> Arc<HaarGrid> {
    Arc::new(HaarGrid::default_affine())
}

fn lattice(eps: f64, g: &Arc<HaarGrid>) -> SampleSet {
    generate_separated_set(LatticeParams::new(eps, 0.8, 0.2, 7), g.clone()).unwrap()
}

fn nearest_identity(set: &SampleSet) -> usize {
    let d = |i: usize| set.points()[i].log_a().powi(2) + set.points()[i].b().powi(2);
    (0..set.len()).min_by(|&i, &j| d(i).total_cmp(&d(j))).unwrap()
}

fn unit_at(j: usize, n: usize, p: Exponent) -> SequenceCoefficients {
    SequenceCoefficients::new((0..n).map(|i| Complex64::new(f64::from(u8::from(i == j)), 0.0)).collect(), p)
}

#[test]
fn contraction_decays_under_refinement() {
    let g = grid();
    let u = MotherWavelet::paul_normalized(1).unwrap();
    let k = AnalyticTransform::kernel(&u);
    for p in [Exponent::TWO, Exponent::ONE] {
        let f = member_suite([11], 4, &u, g.clone(), p).unwrap().remove(0);
        let mut last = [f64::INFINITY; 3];
        for eps in eps_levels(DEFAULT_EPS) {
            let set = lattice(eps, &g);
            let bupu = build_bupu(&set, BupuKind::Indicator).unwrap();
            for (slot, kind) in KINDS.into_iter().enumerate() {
                let op = SamplingOperator::new(kind, &set, &bupu, &k).unwrap();
                let q = contraction(&op, &f).unwrap();
                assert!(q < 1.0 && q < last[slot], "{kind:?} p={} eps={eps}: {q} after {}", p.value(), last[slot]);
                last[slot] = q;
            }
        }
    }
}

#[test]
fn neumann_recovers_from_samples() {
    let g = grid();
    let u = MotherWavelet::paul_normalized(1).unwrap();
    let k = AnalyticTransform::kernel(&u);
    let tol = 1e-4;
    for p in [Exponent::TWO, Exponent::ONE] {
        let f = member_suite([5], 4, &u, g.clone(), p).unwrap().remove(0);
        let set = lattice(DEFAULT_EPS, &g);
        let bupu = build_bupu(&set, BupuKind::Indicator).unwrap();
        let op = SamplingOperator::new(OperatorKind::T1, &set, &bupu, &k).unwrap();

        let y = data_term(&SequenceCoefficients::sample(&f, &set), &bupu, &k, g.clone()).unwrap();
        let ty = op.apply(&f).unwrap();
        assert!(y.relative_distance(&ty).unwrap() < 1e-14);

        let (h, rep) = neumann_invert(&op, &y, tol, 50).unwrap();
        assert!(rep.converged && rep.iterations <= 50);
        assert!(rep.residuals.iter().all(|r| r.is_finite()));
        assert!(*rep.residuals.last().unwrap() <= tol);
        assert!(h.relative_distance(&f).unwrap() < 1e-2);
        // T(T^{-1} y) = y up to the truncated tail
        assert!(op.apply(&h).unwrap().relative_distance(&y).unwrap() <= 2.0 * tol);
    }
}

#[test]
fn atoms_resynthesize_members() {
    let g = grid();
    let u = MotherWavelet::paul_normalized(1).unwrap();
    let k = AnalyticTransform::kernel(&u);
    let set = lattice(DEFAULT_EPS / 2.0, &g);
    let bupu = build_bupu(&set, BupuKind::Indicator).unwrap();
    let suite = member_suite(20..23, 4, &u, g.clone(), Exponent::TWO).unwrap();
    let mut ratios = vec![];
    for f in &suite {
        let (lam, rep) = atomic_decompose(f, &set, &bupu, &k, 1e-4, 50).unwrap();
        assert!(rep.final_error.unwrap() < 2e-2);
        ratios.push(lie_sampling::sampling::bseq_norm(&lam, &set).unwrap() / f.lp_norm());
        let out = synthesize_atoms(&lam, set.points(), &k, g.clone()).unwrap();
        assert!(membership_residual(&out, &k).unwrap() < 2e-2);
        assert!(synthesis_constant(&lam, &out, &set).unwrap().is_finite());
    }
    let c = ratios.iter().map(|r| r.max(1.0 / r)).fold(0.0, f64::max);
    assert!(c <= 10.0, "{ratios:?}");

    let j = nearest_identity(&set);
    let atom = synthesize_atoms(&unit_at(j, set.len(), Exponent::TWO), set.points(), &k, g.clone()).unwrap();
    let (_, rep) = atomic_decompose(&atom, &set, &bupu, &k, 1e-4, 50).unwrap();
    assert!(rep.final_error.unwrap() < 2e-2);
}

#[test]
fn synthesis_is_linear_and_single_atoms_stay_in_space() {
    let g = grid();
    let u = MotherWavelet::paul_normalized(2).unwrap();
    let k = AnalyticTransform::kernel(&u);
    let set = lattice(DEFAULT_EPS, &g);
    let j = nearest_identity(&set);
    let p = Exponent::TWO;
    let atom = synthesize_atoms(&unit_at(j, set.len(), p), set.points(), &k, g.clone()).unwrap();
    assert!(membership_residual(&atom, &k).unwrap() < 2e-2);

    let a = unit_at(j, set.len(), p);
    let b = unit_at(j + 1, set.len(), p);
    let c = Complex64::new(0.3, -1.2);
    let mix = SequenceCoefficients::new(a.values.iter().zip(&b.values).map(|(x, y)| x + c * y).collect(), p);
    let sa = synthesize_atoms(&a, set.points(), &k, g.clone()).unwrap();
    let sb = synthesize_atoms(&b, set.points(), &k, g.clone()).unwrap();
    let lhs = synthesize_atoms(&mix, set.points(), &k, g.clone()).unwrap();
    assert!(lhs.relative_distance(&sa.axpy(c, &sb).unwrap()).unwrap() < 1e-12);
}

#[test]
fn frame_bounds_hold_out_of_sample() {
    let g = grid();
    let u = MotherWavelet::paul_normalized(1).unwrap();
    let k = AnalyticTransform::kernel(&u);
    let fit = member_suite(0..6, 4, &u, g.clone(), Exponent::TWO).unwrap();
    let held = member_suite(100..104, 4, &u, g.clone(), Exponent::TWO).unwrap();
    let mut prev: Option<f64> = None;
    for eps in eps_levels(DEFAULT_EPS) {
        let set = lattice(eps, &g);
        let fb = estimate_frame_bounds(&set, &k, &fit, Exponent::TWO).unwrap();
        assert!(fb.a_hat > 0.0 && fb.a_hat <= fb.b_hat);
        for f in &held {
            assert!(fb.admits(sampling_ratio(f, &set).unwrap(), 0.9, 1.1));
        }
        if let Some(c) = prev {
            assert!(fb.conditioning() <= 1.1 * c);
        }
        prev = Some(fb.conditioning());
    }
    assert!(prev.unwrap() <= 10.0);
}

struct Diagonal(Vec<f64>);

impl LinearOperator for Diagonal {
    fn apply(&self, f: &GridFunction) -> lie_sampling::Result<GridFunction> {
        let v = f.values().iter().zip(&self.0).map(|(x, d)| x * *d).collect();
        GridFunction::new(f.grid().clone(), v, f.p())
    }
}

#[test]
fn divergence_is_reported() {
    let g = Arc::new(HaarGrid::affine(0.5, 2.0, 4, -1.0, 1.0, 4).unwrap());
    let y = GridFunction::from_fn(g.clone(), Exponent::TWO, |x| Complex64::new(if x.b() < 0.5 { 1.0 } else { 1e-3 }, 0.0));

    let expanding = Diagonal(vec![3.0; g.len()]);
    match neumann_invert(&expanding, &y, 1e-8, 20) {
        Err(Error::Diverged(rep)) => assert_eq!(rep.iterations, 1),
        other => panic!("{other:?}"),
    }

    // I - T is 0.5 on most nodes and -1.5 on a few: shrinks first, then grows
    let d = (0..g.len()).map(|k| if g.node(k).b() < 0.5 { 0.5 } else { 2.5 }).collect();
    match neumann_invert(&Diagonal(d), &y, 1e-12, 200) {
        Err(Error::Diverged(rep)) => {
            assert!(!rep.converged);
            let r = &rep.residuals;
            let n = r.len();
            assert!(r[n - 1] > r[n - 2] && r[n - 2] > r[n - 3] && r[n - 3] > r[n - 4]);
        }
        other => panic!("{other:?}"),
    }
}
