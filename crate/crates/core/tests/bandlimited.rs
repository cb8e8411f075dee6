use std::f64::consts::PI;

use lie_sampling::bandlimited::*;

const WINDOW: (f64, f64) = (-80.0, 80.0);

fn suite(n: u64) -> Vec<BandlimitedFunction> {
    (0..n).map(|s| synthesize_random(PI, 1000 + s, 16, SynthesisParams::default()).unwrap()).collect()
}

#[test]
fn spectrum_stays_in_band() {
    for f in suite(3) {
        for w in [PI + 1e-9, PI + 0.5, -PI - 1e-9, 10.0] {
            assert_eq!(f.spectrum(w).norm(), 0.0);
        }
        assert!(f.spectrum(0.3).norm() > 0.0 || f.spectrum(-0.3).norm() > 0.0);
    }
}

#[test]
fn sampling_inequalities_on_a_small_suite() {
    let fs = suite(8);
    for level in [0.25, 0.5, 0.75] {
        // with Ω = π the gap δ equals δΩ/π
        let delta = level;
        let (lo, hi) = ((1.0 - level) * (1.0 - level), (1.0 + level) * (1.0 + level));
        for seed in 0..3 {
            let x = SamplingSequence::jittered(delta, 0.5, seed, WINDOW).unwrap();
            assert!(x.delta() <= delta * (1.0 + 1e-12));
            for f in &fs {
                let (r, ok) = frame_ratio(f, &x).unwrap();
                assert!(ok);
                assert!(r >= lo * 0.98 && r <= hi * 1.02, "level {level}: {r}");
                let d1 = f.derivative_norm();
                let step = step_approximation_error(f, &x);
                assert!(step <= x.delta() / PI * d1 * 1.01);
                assert!(step <= 2f64.sqrt() * x.delta() * d1 * 1.01);
                let (m, bound) = oscillation_bound_check(f, x.delta(), 16).unwrap();
                assert!(m <= bound * 1.01);
                assert!(bernstein_ratio(f) <= PI * 1.01);
            }
        }
    }
}

#[test]
fn oscillation_settles_under_lattice_refinement() {
    let f = &suite(1)[0];
    let coarse = oscillation_norm(f, 0.5, 16).unwrap();
    let fine = oscillation_norm(f, 0.5, 32).unwrap();
    assert!((coarse - fine).abs() < 0.01 * fine);
}

#[test]
fn gap_beyond_nyquist_is_flagged() {
    let f = &suite(1)[0];
    let x = SamplingSequence::jittered(1.2, 0.0, 0, WINDOW).unwrap();
    let (r, ok) = frame_ratio(f, &x).unwrap();
    assert!(!ok && r.is_finite());
}

#[test]
fn reconstruction_rate_matches_gap() {
    let f = &suite(1)[0];
    let x = SamplingSequence::jittered(0.5, 0.5, 9, WINDOW).unwrap();
    let s = x.sample(f);
    let (g, rep) = reconstruct(&s, &x, PI, 1e-10, 30).unwrap();
    assert!(rep.converged && rep.iterations <= 30);
    assert!(g.relative_error(f) < 1e-6);
    let rate = rep.fitted_rate.unwrap();
    assert!(rate <= 0.5 + 0.1, "{rate}");

    // error after m steps follows the fitted geometric rate
    let first = reconstruct(&s, &x, PI, 1e-300, 1).unwrap().0.relative_error(f);
    for m in 2..=6 {
        let e = reconstruct(&s, &x, PI, 1e-300, m).unwrap().0.relative_error(f);
        assert!(e <= 2.0 * first * rate.powi(m as i32 - 1) + 1e-12, "m={m}: {e}");
    }

    let slow = SamplingSequence::jittered(0.9, 0.5, 9, WINDOW).unwrap();
    let (h, rep9) = reconstruct(&slow.sample(f), &slow, PI, 1e-10, 200).unwrap();
    assert!(rep9.converged && h.relative_error(f) < 1e-6);
    let rate9 = rep9.fitted_rate.unwrap();
    assert!(rate9 > rate && rate9 <= 0.9 + 0.1, "{rate9}");
}
