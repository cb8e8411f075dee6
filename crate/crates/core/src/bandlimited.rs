//! Band-limited functions on the real line: irregular sampling, step
//! approximation, oscillation and iterative reconstruction.
//!
//! Fourier convention: `f(x) = (1/2π) ∫ f̂(ω) e^{iωx} dω`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::report::{fit_geometric_rate, OperatorKind, ReconstructionReport};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Leakage above this fraction makes [`synthesize_random`] draw again.
pub const LEAKAGE_CAP: f64 = 1e-8;

/// Shape of random test functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisParams {
    /// Half-width of the spectral bump around each mode.
    pub taper: f64,
    /// B-spline order of the bump; spatial decay is `|x|^{-order}`.
    pub order: usize,
    /// Sampling window `[-half_window, half_window]`.
    pub half_window: f64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self { taper: 1.0, order: 8, half_window: 80.0 }
    }
}

/// Centered cardinal B-spline of order `n` with unit knot spacing,
/// support `[-n/2, n/2]`.
fn cardinal_bspline(n: usize, t: f64) -> f64 {
    let half = n as f64 / 2.0;
    if t <= -half || t >= half {
        return 0.0;
    }
    // Cox–de Boor on knots 0..=n for s = t + n/2
    let s = t + half;
    let j = s.floor() as usize;
    let mut b = vec![0.0; n + 1];
    b[j] = 1.0;
    for k in 1..n {
        for i in 0..(n - k) {
            let left = (s - i as f64) / k as f64 * b[i];
            let right = (i as f64 + k as f64 + 1.0 - s) / k as f64 * b[i + 1];
            b[i] = left + right;
        }
    }
    b[0]
}

#[inline]
fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

#[inline]
fn sinc_prime(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        -y / 3.0
    } else {
        (y * y.cos() - y.sin()) / (y * y)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    /// `f̂ = Σ c_k B(ω − ω_k)` with `B` a B-spline bump of half-width `taper`.
    Modes { freqs: Vec<f64>, coeffs: Vec<Complex64>, taper: f64, order: usize },
    /// `f(x) = (1/P) Σ_q c_q e^{i q Δω x}` with period `P = 2π/Δω`.
    Periodic { d_omega: f64, q_min: i64, coeffs: Vec<Complex64> },
}

/// A band-limited function with spectrum in `[-Ω, Ω]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandlimitedFunction {
    omega: f64,
    window: (f64, f64),
    repr: Repr,
}

impl BandlimitedFunction {
    /// Modes at `freqs` with coefficients `coeffs`; every bump must lie inside the band.
    pub fn from_modes(omega: f64, freqs: Vec<f64>, coeffs: Vec<Complex64>, params: SynthesisParams) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!("band limit {omega}")));
        }
        if !(params.taper > 0.0) || params.order < 2 || !(params.half_window > 0.0) {
            return Err(Error::InvalidParameter("synthesis parameters".into()));
        }
        if freqs.len() != coeffs.len() || freqs.is_empty() {
            return Err(Error::Empty("modes"));
        }
        if freqs.iter().any(|w| w.abs() + params.taper > omega * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter("mode bump leaves the band".into()));
        }
        Ok(Self {
            omega,
            window: (-params.half_window, params.half_window),
            repr: Repr::Modes { freqs, coeffs, taper: params.taper, order: params.order },
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.repr, Repr::Periodic { .. })
    }

    /// `f(x)`.
    pub fn eval(&self, x: f64) -> Complex64 {
        match &self.repr {
            Repr::Modes { freqs, coeffs, taper, order } => {
                let env = sinc(taper * x / *order as f64).powi(*order as i32) / (2.0 * PI);
                mode_sum(freqs, coeffs, x) * env
            }
            Repr::Periodic { d_omega, q_min, coeffs } => {
                let base = Complex64::from_polar(1.0, *q_min as f64 * d_omega * x);
                let step = Complex64::from_polar(1.0, d_omega * x);
                let mut ph = base;
                let mut s = ZERO;
                for c in coeffs {
                    s += c * ph;
                    ph *= step;
                }
                s * (d_omega / (2.0 * PI))
            }
        }
    }

    /// `f'(x)`.
    pub fn eval_derivative(&self, x: f64) -> Complex64 {
        match &self.repr {
            Repr::Modes { freqs, coeffs, taper, order } => {
                let n = *order as f64;
                let y = taper * x / n;
                let sy = sinc(y);
                let env = sy.powi(*order as i32) / (2.0 * PI);
                let denv = n * sy.powi(*order as i32 - 1) * sinc_prime(y) * taper / n / (2.0 * PI);
                let mut t = ZERO;
                let mut dt = ZERO;
                for (w, c) in freqs.iter().zip(coeffs) {
                    let e = c * Complex64::from_polar(1.0, w * x);
                    t += e;
                    dt += e * Complex64::new(0.0, *w);
                }
                t * denv + dt * env
            }
            Repr::Periodic { d_omega, q_min, coeffs } => {
                let s: Complex64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| {
                        let w = (*q_min + j as i64) as f64 * d_omega;
                        c * Complex64::new(0.0, w) * Complex64::from_polar(1.0, w * x)
                    })
                    .sum();
                s * (d_omega / (2.0 * PI))
            }
        }
    }

    /// `f̂(ω)`; for the periodic form, the coefficient of the nearest harmonic.
    pub fn spectrum(&self, omega: f64) -> Complex64 {
        match &self.repr {
            Repr::Modes { freqs, coeffs, taper, order } => {
                let w = 2.0 * taper / *order as f64;
                freqs.iter().zip(coeffs).map(|(f, c)| c * (cardinal_bspline(*order, (omega - f) / w) / w)).sum()
            }
            Repr::Periodic { d_omega, q_min, coeffs } => {
                let q = (omega / d_omega).round() as i64 - q_min;
                if q < 0 || q as usize >= coeffs.len() {
                    ZERO
                } else {
                    coeffs[q as usize]
                }
            }
        }
    }

    /// `(1/2π) ∫ |ω|^{2k} |f̂|² dω` for `k = 0, 1`, by exact Gauss rules between knots.
    fn spectral_moment(&self, k: i32) -> f64 {
        match &self.repr {
            Repr::Modes { freqs, taper, order, .. } => {
                let w = 2.0 * taper / *order as f64;
                let mut knots: Vec<f64> = freqs
                    .iter()
                    .flat_map(|f| (0..=*order).map(move |j| f + (j as f64 - *order as f64 / 2.0) * w))
                    .collect();
                knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
                knots.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
                // piecewise polynomial of degree 2(order-1) + 2k
                let nodes = *order + 2;
                let mut s = 0.0;
                for win in knots.windows(2) {
                    if win[1] - win[0] < 1e-14 {
                        continue;
                    }
                    let (x, wt) = gauss_legendre_on(nodes, win[0], win[1]);
                    for (xi, wi) in x.iter().zip(&wt) {
                        s += wi * xi.powi(2 * k) * self.spectrum(*xi).norm_sqr();
                    }
                }
                s / (2.0 * PI)
            }
            Repr::Periodic { d_omega, q_min, coeffs } => {
                let p = 2.0 * PI / d_omega;
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| ((*q_min + j as i64) as f64 * d_omega).powi(2 * k) * c.norm_sqr())
                    .sum::<f64>()
                    / p
            }
        }
    }

    /// `‖f‖₂` by Parseval (over ℝ, or over one period for the periodic form).
    pub fn norm(&self) -> f64 {
        self.spectral_moment(0).sqrt()
    }

    /// `‖f'‖₂` through the multiplier `iω`.
    pub fn derivative_norm(&self) -> f64 {
        self.spectral_moment(1).sqrt()
    }

    /// `(∫_lo^hi |f|²)^{1/2}` by panel Gauss–Legendre quadrature.
    pub fn window_norm(&self, lo: f64, hi: f64) -> f64 {
        integrate_panels(lo, hi, |x| self.eval(x).norm_sqr()).sqrt()
    }

    /// `‖f‖₂` over the sampling window widened four times.
    pub fn spatial_norm(&self) -> f64 {
        let (lo, hi) = self.window;
        match self.repr {
            Repr::Periodic { .. } => self.window_norm(lo, hi),
            Repr::Modes { .. } => self.window_norm(4.0 * lo, 4.0 * hi),
        }
    }

    /// Fraction of the mass in the widened window that lies outside the sampling window.
    pub fn leakage(&self) -> f64 {
        let (lo, hi) = self.window;
        let inner = self.window_norm(lo, hi).powi(2);
        let outer = integrate_panels(4.0 * lo, lo, |x| self.eval(x).norm_sqr())
            + integrate_panels(hi, 4.0 * hi, |x| self.eval(x).norm_sqr());
        outer / (inner + outer)
    }

    /// `‖f − g‖ / ‖g‖` over the sampling window.
    pub fn relative_error(&self, reference: &BandlimitedFunction) -> f64 {
        let (lo, hi) = reference.window;
        let num = integrate_panels(lo, hi, |x| (self.eval(x) - reference.eval(x)).norm_sqr());
        let den = integrate_panels(lo, hi, |x| reference.eval(x).norm_sqr());
        (num / den).sqrt()
    }

    /// `f(x) = (Δω/2π) Σ_j c_j e^{i(q_min + j)Δω x}` with `Δω = 2π/|window|`.
    pub fn from_harmonics(window: (f64, f64), q_min: i64, coeffs: Vec<Complex64>) -> Result<Self> {
        let (lo, hi) = window;
        if !(hi > lo) || coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("harmonics need a proper window and finite coefficients".into()));
        }
        let d_omega = 2.0 * PI / (hi - lo);
        let top = q_min.abs().max((q_min + coeffs.len() as i64 - 1).abs());
        Ok(Self { omega: top as f64 * d_omega, window, repr: Repr::Periodic { d_omega, q_min, coeffs } })
    }

    /// Zeroes harmonics beyond `limit` (periodic form only).
    pub fn project(&self, limit: f64) -> Result<BandlimitedFunction> {
        match &self.repr {
            Repr::Periodic { d_omega, q_min, coeffs } => {
                let coeffs = coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| if ((*q_min + j as i64) as f64 * d_omega).abs() <= limit * (1.0 + 1e-12) { *c } else { ZERO })
                    .collect();
                Ok(Self {
                    omega: self.omega.min(limit),
                    window: self.window,
                    repr: Repr::Periodic { d_omega: *d_omega, q_min: *q_min, coeffs },
                })
            }
            Repr::Modes { .. } => Err(Error::InvalidParameter("projection acts on the periodic form".into())),
        }
    }

    /// Harmonic coefficients of the periodic form.
    pub fn harmonics(&self) -> Option<&[Complex64]> {
        match &self.repr {
            Repr::Periodic { coeffs, .. } => Some(coeffs),
            Repr::Modes { .. } => None,
        }
    }
}

/// `Σ c_k e^{iω_k x}`, by phase recurrence when the modes are evenly spaced.
fn mode_sum(freqs: &[f64], coeffs: &[Complex64], x: f64) -> Complex64 {
    let n = freqs.len();
    if n > 2 {
        let d = (freqs[n - 1] - freqs[0]) / (n - 1) as f64;
        if freqs.iter().enumerate().all(|(k, w)| (w - freqs[0] - k as f64 * d).abs() < 1e-12) {
            let step = Complex64::from_polar(1.0, d * x);
            let mut ph = Complex64::from_polar(1.0, freqs[0] * x);
            let mut s = ZERO;
            for c in coeffs {
                s += c * ph;
                ph *= step;
            }
            return s;
        }
    }
    freqs.iter().zip(coeffs).map(|(w, c)| c * Complex64::from_polar(1.0, w * x)).sum()
}

/// `∫_lo^hi g` with 8-point Gauss rules on panels of length at most 1/2.
fn integrate_panels<G: Fn(f64) -> f64>(lo: f64, hi: f64, g: G) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let panels = ((hi - lo) / 0.5).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    let (x, w) = gauss_legendre_on(8, 0.0, h);
    let mut s = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * g(a + xi);
        }
    }
    s
}

/// Random test function: `n_modes` complex Gaussian coefficients on a uniform
/// grid of mode centres in `[-Ω + taper, Ω − taper]`.
///
/// Draws again (with a derived seed) while the leakage exceeds [`LEAKAGE_CAP`].
pub fn synthesize_random(omega: f64, seed: u64, n_modes: usize, params: SynthesisParams) -> Result<BandlimitedFunction> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("n_modes must be at least 1".into()));
    }
    if !(params.taper < omega) {
        return Err(Error::InvalidParameter(format!("taper {} must be below the band limit {omega}", params.taper)));
    }
    let span = omega - params.taper;
    let freqs: Vec<f64> = if n_modes == 1 {
        vec![0.0]
    } else {
        (0..n_modes).map(|k| -span + 2.0 * span * k as f64 / (n_modes - 1) as f64).collect()
    };
    let mut last = None;
    for attempt in 0..16u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let coeffs: Vec<Complex64> = (0..n_modes)
            .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let f = BandlimitedFunction::from_modes(omega, freqs.clone(), coeffs, params)?;
        if f.leakage() <= LEAKAGE_CAP {
            return Ok(f);
        }
        last = Some(f);
    }
    Ok(last.expect("at least one draw"))
}

/// Increasing sample positions in a window with cells `I_k` around each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSequence {
    points: Vec<f64>,
    window: (f64, f64),
    delta: f64,
    cells: Vec<(f64, f64)>,
}

impl SamplingSequence {
    /// Cells run between midpoints of consecutive samples, the outer two to the window edges.
    ///
    /// The gap `delta` counts a window edge as a mirrored neighbour, so every
    /// cell lies in `[x_k − δ/2, x_k + δ/2]`.
    pub fn new(points: Vec<f64>, window: (f64, f64)) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("sampling sequence"));
        }
        let (lo, hi) = window;
        if !(hi > lo) {
            return Err(Error::InvalidParameter("empty window".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("samples must be strictly increasing".into()));
        }
        if points[0] < lo || *points.last().unwrap() > hi {
            return Err(Error::InvalidParameter("samples outside the window".into()));
        }
        let n = points.len();
        let mut delta = 2.0 * (points[0] - lo);
        delta = delta.max(2.0 * (hi - points[n - 1]));
        for w in points.windows(2) {
            delta = delta.max(w[1] - w[0]);
        }
        let mut cells = Vec::with_capacity(n);
        for k in 0..n {
            let l = if k == 0 { lo } else { 0.5 * (points[k - 1] + points[k]) };
            let r = if k + 1 == n { hi } else { 0.5 * (points[k] + points[k + 1]) };
            cells.push((l.max(points[k] - delta / 2.0), r.min(points[k] + delta / 2.0)));
        }
        Ok(Self { points, window, delta, cells })
    }

    /// `x_k = lo + (k + 1/2) h + u_k`, `u_k` uniform in `±jitter·h/2`, with
    /// `h` chosen so that the gap never exceeds `delta`.
    pub fn jittered(delta: f64, jitter: f64, seed: u64, window: (f64, f64)) -> Result<Self> {
        if !(delta > 0.0) || !(0.0..1.0).contains(&jitter) {
            return Err(Error::InvalidParameter(format!("delta {delta}, jitter {jitter}")));
        }
        let (lo, hi) = window;
        let base = delta / (1.0 + jitter);
        let n = ((hi - lo) / base).ceil() as usize;
        let h = (hi - lo) / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let pts: Vec<f64> = (0..n)
                .map(|k| lo + (k as f64 + 0.5) * h + rng.random_range(-0.5..=0.5) * jitter * h)
                .collect();
            if pts.windows(2).all(|w| w[1] > w[0]) {
                return Self::new(pts, window);
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cells(&self) -> &[(f64, f64)] {
        &self.cells
    }

    /// `w_k = (x_{k+1} − x_{k−1})/2`, with the window edges mirrored; equals `|I_k|`.
    pub fn weights(&self) -> Vec<f64> {
        self.cells.iter().map(|(l, r)| r - l).collect()
    }

    /// `f(x_k)`.
    pub fn sample(&self, f: &BandlimitedFunction) -> Vec<Complex64> {
        self.points.iter().map(|x| f.eval(*x)).collect()
    }
}

/// `Σ_k w_k |f(x_k)|² / ‖f‖₂²` and whether `δ < π/Ω`.
pub fn frame_ratio(f: &BandlimitedFunction, x: &SamplingSequence) -> Result<(f64, bool)> {
    let n2 = f.norm().powi(2);
    if !(n2 > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let s: f64 = x.points.iter().zip(x.weights()).map(|(p, w)| w * f.eval(*p).norm_sqr()).sum();
    Ok((s / n2, x.delta * f.omega() < PI))
}

/// `‖f − Σ_k f(x_k) 1_{I_k}‖₂` over ℝ: Gauss rules on each cell, plus the
/// mass of `f` outside the window.
pub fn step_approximation_error(f: &BandlimitedFunction, x: &SamplingSequence) -> f64 {
    let mut s = 0.0;
    let mut inside = 0.0;
    let (gx, gw) = gauss_legendre_on(10, 0.0, 1.0);
    for (p, (l, r)) in x.points.iter().zip(&x.cells) {
        let fx = f.eval(*p);
        let len = r - l;
        for (t, w) in gx.iter().zip(&gw) {
            let v = f.eval(l + t * len);
            s += w * len * (v - fx).norm_sqr();
            inside += w * len * v.norm_sqr();
        }
    }
    let outside = if f.is_periodic() { 0.0 } else { (f.norm().powi(2) - inside).max(0.0) };
    (s + outside).sqrt()
}

/// `M^δ f(x) = sup_{|u| <= δ} |f(x + u) − f(x)|` on a lattice of spacing
/// `δ/resolution`, and its `L²` norm over the sampling window.
pub fn oscillation_norm(f: &BandlimitedFunction, delta: f64, resolution: usize) -> Result<f64> {
    if !(delta > 0.0) || resolution == 0 {
        return Err(Error::InvalidParameter(format!("delta {delta}, resolution {resolution}")));
    }
    let (lo, hi) = f.window();
    let h = delta / resolution as f64;
    let n = ((hi - lo) / h).ceil() as usize;
    let r = resolution as i64;
    let total = n + 2 * resolution;
    let vals: Vec<Complex64> = (0..total).map(|j| f.eval(lo - delta + (j as f64 + 0.5) * h)).collect();
    let mut s = 0.0;
    for i in 0..n {
        let c = i + resolution;
        let fc = vals[c];
        let mut m = 0.0f64;
        for d in -r..=r {
            m = m.max((vals[(c as i64 + d) as usize] - fc).norm_sqr());
        }
        s += m * h;
    }
    Ok(s.sqrt())
}

/// `(‖M^δ f‖₂, √2 δ ‖f'‖₂)`.
pub fn oscillation_bound_check(f: &BandlimitedFunction, delta: f64, resolution: usize) -> Result<(f64, f64)> {
    Ok((oscillation_norm(f, delta, resolution)?, 2f64.sqrt() * delta * f.derivative_norm()))
}

/// `‖f'‖₂ / ‖f‖₂`, zero for the zero function.
pub fn bernstein_ratio(f: &BandlimitedFunction) -> f64 {
    let n = f.norm();
    if n == 0.0 {
        0.0
    } else {
        f.derivative_norm() / n
    }
}

/// Frame iteration `f_{m+1} = f_m + P_Ω[Σ_k (s_k − f_m(x_k)) 1_{I_k}]` from
/// `f_0 = P_Ω[Σ_k s_k 1_{I_k}]`.
///
/// Iterates live in the band-limited functions that are periodic over the
/// sampling window, written through their harmonics `qΔω`, `Δω = 2π/|window|`.
pub fn reconstruct(
    samples: &[Complex64],
    x: &SamplingSequence,
    omega: f64,
    tol: f64,
    maxiter: usize,
) -> Result<(BandlimitedFunction, ReconstructionReport)> {
    if samples.len() != x.len() {
        return Err(Error::InvalidParameter(format!("{} samples for {} points", samples.len(), x.len())));
    }
    if !(omega > 0.0) || !(tol > 0.0) || maxiter == 0 {
        return Err(Error::InvalidParameter("omega, tol and maxiter must be positive".into()));
    }
    let (lo, hi) = x.window();
    let d_omega = 2.0 * PI / (hi - lo);
    let qmax = (omega / d_omega * (1.0 + 1e-12)).floor() as i64;
    let nq = (2 * qmax + 1) as usize;
    let freqs: Vec<f64> = (0..nq).map(|j| (j as i64 - qmax) as f64 * d_omega).collect();
    let evals: Vec<Vec<Complex64>> = x
        .points()
        .iter()
        .map(|p| freqs.iter().map(|w| Complex64::from_polar(d_omega / (2.0 * PI), w * p)).collect())
        .collect();
    // ∫_{I_k} e^{-iωx} dx
    let cells: Vec<Vec<Complex64>> = x
        .cells()
        .iter()
        .map(|(l, r)| {
            freqs
                .iter()
                .map(|w| {
                    if *w == 0.0 {
                        Complex64::new(r - l, 0.0)
                    } else {
                        (Complex64::from_polar(1.0, -w * l) - Complex64::from_polar(1.0, -w * r)) / Complex64::new(0.0, *w)
                    }
                })
                .collect()
        })
        .collect();
    let project = |r: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![ZERO; nq];
        for (rk, row) in r.iter().zip(&cells) {
            if *rk == ZERO {
                continue;
            }
            for (o, c) in out.iter_mut().zip(row) {
                *o += rk * c;
            }
        }
        out
    };
    let at_samples = |c: &[Complex64]| -> Vec<Complex64> {
        evals.iter().map(|row| row.iter().zip(c).map(|(e, v)| e * v).sum()).collect()
    };
    let norm = |c: &[Complex64]| (c.iter().map(|v| v.norm_sqr()).sum::<f64>() / (hi - lo)).sqrt();

    let build = |coeffs: Vec<Complex64>| BandlimitedFunction {
        omega,
        window: (lo, hi),
        repr: Repr::Periodic { d_omega, q_min: -qmax, coeffs },
    };

    let mut report = ReconstructionReport::new(OperatorKind::Bandlimited);
    let mut f = project(samples);
    let f0 = norm(&f);
    if f0 == 0.0 {
        report.iterations = 1;
        report.residuals.push(0.0);
        report.converged = true;
        return Ok((build(f), report));
    }
    let mut rising = 0;
    for _ in 0..maxiter {
        let fx = at_samples(&f);
        let r: Vec<Complex64> = samples.iter().zip(&fx).map(|(s, v)| s - v).collect();
        let inc = project(&r);
        for (a, b) in f.iter_mut().zip(&inc) {
            *a += b;
        }
        let step = norm(&inc) / f0;
        if let Some(&prev) = report.residuals.last() {
            rising = if step > prev { rising + 1 } else { 0 };
        }
        report.residuals.push(step);
        report.iterations += 1;
        if step <= tol {
            report.converged = true;
            break;
        }
        if rising >= 3 {
            report.fitted_rate = fit_geometric_rate(&report.residuals);
            return Err(Error::Diverged(Box::new(report)));
        }
    }
    report.fitted_rate = fit_geometric_rate(&report.residuals);
    Ok((build(f), report))
}
