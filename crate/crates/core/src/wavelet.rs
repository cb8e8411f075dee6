//! Continuous wavelet transform on the affine group.
//!
//! Fourier convention: `f̂(ω) = ∫ f(x) e^{-iωx} dx`, so that
//! `⟨f, g⟩ = (1/2π) ∫ f̂ conj(ĝ) dω` and
//! `(π(a,b)u)^(ω) = √a e^{-ibω} û(aω)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{convolve, Exponent, GridFunction, HaarGrid, Kernel};
use crate::group::{Basis, GroupElement, GroupKind, MultiIndex};
use crate::quadrature::gauss_legendre_on;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A function given by its Fourier transform.
pub trait SpectralProfile: Sync {
    fn spectrum(&self, omega: f64) -> Complex64;

    /// Whether the spectrum vanishes on `ω < 0`.
    fn is_progressive(&self) -> bool {
        true
    }
}

impl<P: SpectralProfile + ?Sized> SpectralProfile for &P {
    fn spectrum(&self, omega: f64) -> Complex64 {
        (**self).spectrum(omega)
    }
    fn is_progressive(&self) -> bool {
        (**self).is_progressive()
    }
}

/// `ln n!`.
fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `c ω^n e^{-rate ω} e^{-i delay ω}` on `ω > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyExpTerm {
    pub coeff: Complex64,
    pub power: u32,
    pub rate: f64,
    pub delay: f64,
}

/// Finite sum of [`PolyExpTerm`]s; closed under the derived-wavelet symbols.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolyExp {
    pub terms: Vec<PolyExpTerm>,
}

impl PolyExp {
    pub fn new(terms: Vec<PolyExpTerm>) -> Result<Self> {
        for t in &terms {
            if !(t.rate > 0.0) || !t.delay.is_finite() {
                return Err(Error::InvalidParameter(format!("term with rate {} delay {}", t.rate, t.delay)));
            }
        }
        Ok(Self { terms })
    }

    /// `ω^m e^{-ω}`.
    pub fn paul(m: u32) -> Self {
        Self {
            terms: vec![PolyExpTerm { coeff: Complex64::new(1.0, 0.0), power: m, rate: 1.0, delay: 0.0 }],
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| PolyExpTerm { coeff: t.coeff * c, ..*t }).collect(),
        }
    }

    pub fn plus(&self, other: &PolyExp) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms }.merged()
    }

    fn merged(self) -> Self {
        let mut out: Vec<PolyExpTerm> = Vec::new();
        for t in self.terms {
            match out.iter_mut().find(|o| o.power == t.power && o.rate == t.rate && o.delay == t.delay) {
                Some(o) => o.coeff += t.coeff,
                None => out.push(t),
            }
        }
        out.retain(|t| t.coeff != ZERO);
        Self { terms: out }
    }

    /// Profile of `π(X) u`.
    pub fn apply_generator(&self, k: Basis) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            match k {
                // −iω û
                Basis::X2 => terms.push(PolyExpTerm { coeff: t.coeff * Complex64::new(0.0, -1.0), power: t.power + 1, ..*t }),
                // û/2 + ω û'
                Basis::X1 => {
                    terms.push(PolyExpTerm { coeff: t.coeff * (t.power as f64 + 0.5), ..*t });
                    terms.push(PolyExpTerm {
                        coeff: -t.coeff * Complex64::new(t.rate, t.delay),
                        power: t.power + 1,
                        ..*t
                    });
                }
            }
        }
        Self { terms }.merged()
    }

    /// Profile of `π(R^α) u`; `α(1)` is applied first.
    pub fn derived(&self, alpha: &MultiIndex) -> Self {
        alpha.word().iter().fold(self.clone(), |p, &k| p.apply_generator(k))
    }

    /// `⟨f, g⟩ = (1/2π) ∫ f̂ conj(ĝ) dω` in closed form.
    pub fn inner_product(&self, other: &PolyExp) -> Complex64 {
        let mut s = ZERO;
        for t in &self.terms {
            for o in &other.terms {
                let n = t.power + o.power;
                let z = Complex64::new(t.rate + o.rate, t.delay - o.delay);
                s += t.coeff * o.coeff.conj() * (ln_factorial(n) - (n as f64 + 1.0) * z.ln()).exp();
            }
        }
        s / (2.0 * PI)
    }

    pub fn norm(&self) -> f64 {
        self.inner_product(self).re.max(0.0).sqrt()
    }

    /// `∫₀^∞ |û(ω)|²/ω dω` in closed form; fails if a term has power zero.
    pub fn admissibility_exact(&self) -> Result<f64> {
        if self.terms.iter().any(|t| t.power == 0) {
            return Err(Error::NonAdmissible("spectrum does not vanish at zero frequency".into()));
        }
        let mut s = ZERO;
        for t in &self.terms {
            for o in &self.terms {
                let n = t.power + o.power - 1;
                let z = Complex64::new(t.rate + o.rate, t.delay - o.delay);
                s += t.coeff * o.coeff.conj() * (ln_factorial(n) - (n as f64 + 1.0) * z.ln()).exp();
            }
        }
        Ok(s.re)
    }
}

impl SpectralProfile for PolyExp {
    #[inline]
    fn spectrum(&self, omega: f64) -> Complex64 {
        if omega <= 0.0 {
            return ZERO;
        }
        let lw = omega.ln();
        self.terms
            .iter()
            .map(|t| {
                let mag = (t.power as f64 * lw - t.rate * omega).exp();
                t.coeff * Complex64::from_polar(mag, -t.delay * omega)
            })
            .sum()
    }
}

/// Centre frequency of [`random_signal`].
pub const SIGNAL_CENTRE: f64 = 0.7;

/// Random unit-norm signal: `atoms` terms `c ω^k e^{-k ω/ω_c} e^{-iβω}` with
/// `k ∈ 6..=10`, `β ∈ [-1, 1]` and complex `c`, all peaked at `ω_c`.
///
/// The band sits where the default box loses the least energy of `W_u f`.
pub fn random_signal(seed: u64, atoms: usize) -> PolyExp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (0..atoms.max(1))
        .map(|_| {
            let k: u32 = rng.random_range(6..=10);
            PolyExpTerm {
                coeff: Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                power: k,
                rate: k as f64 / SIGNAL_CENTRE,
                delay: rng.random_range(-1.0..1.0),
            }
        })
        .collect();
    let p = PolyExp { terms }.merged();
    let n = p.norm();
    p.scaled(Complex64::new(1.0 / n, 0.0))
}

/// `∫₀^∞ |û(ω)|²/ω dω` by the trapezoid rule in `log ω`.
pub fn admissibility_constant<P: SpectralProfile + ?Sized>(u: &P) -> Result<f64> {
    let (lo, hi, n) = (-60.0f64, 7.0f64, 13_400usize);
    let h = (hi - lo) / n as f64;
    let vals: Vec<f64> = (0..=n).map(|k| u.spectrum((lo + k as f64 * h).exp()).norm_sqr()).collect();
    let peak = vals.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::NonAdmissible("profile is numerically zero".into()));
    }
    if vals[0] > 1e-12 * peak {
        return Err(Error::NonAdmissible("integral diverges at zero frequency".into()));
    }
    if vals[n] > 1e-12 * peak {
        return Err(Error::NonAdmissible("profile does not decay at high frequency".into()));
    }
    let s: f64 = vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n]);
    Ok(s * h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    Paul,
}

/// Progressive analysing wavelet `û(ω) = c ω^m e^{-ω}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotherWavelet {
    pub family: WaveletFamily,
    pub order: u32,
    /// The constant `c`.
    pub normalization: f64,
}

impl MotherWavelet {
    pub fn paul(order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::NonAdmissible("order must be at least 1".into()));
        }
        Ok(Self { family: WaveletFamily::Paul, order, normalization: 1.0 })
    }

    /// Normalized Paul wavelet.
    pub fn paul_normalized(order: u32) -> Result<Self> {
        duflo_moore_normalize(&Self::paul(order)?)
    }

    pub fn profile(&self) -> PolyExp {
        PolyExp::paul(self.order).scaled(Complex64::new(self.normalization, 0.0))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { normalization: self.normalization * c, ..self.clone() }
    }
}

impl SpectralProfile for MotherWavelet {
    fn spectrum(&self, omega: f64) -> Complex64 {
        if omega <= 0.0 {
            return ZERO;
        }
        Complex64::new(self.normalization * (self.order as f64 * omega.ln() - omega).exp(), 0.0)
    }
}

/// Divides `û` by `√c_u` so that `W_u(f) * W_u(u) = W_u(f)`.
pub fn duflo_moore_normalize(u: &MotherWavelet) -> Result<MotherWavelet> {
    let c = admissibility_constant(u)?;
    Ok(u.scaled(1.0 / c.sqrt()))
}

/// Profile of `π(R^α) u` for `|α| <= 2`.
pub fn derived_wavelet(u: &MotherWavelet, alpha: &MultiIndex) -> Result<PolyExp> {
    if alpha.order() > 2 {
        return Err(Error::OrderTooHigh(alpha.order()));
    }
    Ok(u.profile().derived(alpha))
}

/// `W_v(f)(a, b) = ⟨f, π(a,b) v⟩` for poly-exponential `f` and `v`, in closed form.
#[derive(Clone, Debug)]
pub struct AnalyticTransform {
    signal: PolyExp,
    wavelet: PolyExp,
    idempotent: bool,
    // per term pair: ln(coef/2π), N, s_j, r_l, β_j, β_l, power of the wavelet term
    pairs: Vec<(Complex64, u32, f64, f64, f64, f64, u32)>,
}

impl AnalyticTransform {
    pub fn new(signal: &PolyExp, wavelet: &PolyExp) -> Self {
        let mut pairs = Vec::new();
        for t in &signal.terms {
            for o in &wavelet.terms {
                let n = t.power + o.power;
                let c = t.coeff * o.coeff.conj() / (2.0 * PI);
                if c == ZERO {
                    continue;
                }
                pairs.push((c.ln() + ln_factorial(n), n, t.rate, o.rate, t.delay, o.delay, o.power));
            }
        }
        Self { signal: signal.clone(), wavelet: wavelet.clone(), idempotent: false, pairs }
    }

    /// The reproducing kernel `W_u(u)`.
    pub fn kernel(u: &MotherWavelet) -> Self {
        let p = u.profile();
        let mut k = Self::new(&p, &p);
        k.idempotent = true;
        k
    }

    pub fn signal(&self) -> &PolyExp {
        &self.signal
    }

    pub fn wavelet(&self) -> &PolyExp {
        &self.wavelet
    }

    #[inline]
    fn value(&self, a: f64, b: f64) -> Complex64 {
        let la = a.ln();
        let mut s = ZERO;
        for &(lc, n, sj, rl, bj, bl, m) in &self.pairs {
            let z = Complex64::new(sj + rl * a, -(b - bj + a * bl));
            s += (lc + (0.5 + m as f64) * la - (n as f64 + 1.0) * z.ln()).exp();
        }
        s
    }
}

impl Kernel for AnalyticTransform {
    fn eval(&self, g: GroupElement) -> Complex64 {
        self.value(g.a(), g.b())
    }

    /// `Σ_i c_i W_v(π(x_i) s) = W_v(Σ_i c_i π(x_i) s)`: one spectral
    /// accumulation and one CWT.
    fn synthesize_atoms(&self, atoms: &[(GroupElement, Complex64)], grid: &Arc<HaarGrid>) -> Option<Vec<Complex64>> {
        if grid.kind() != GroupKind::Affine {
            return None;
        }
        let layout = SpectralLayout::for_grid(grid, DEFAULT_OVERSAMPLE);
        let fhat = atom_spectrum(&self.signal, atoms, layout);
        Some(cwt_from_nodes(&fhat, &self.wavelet, grid, layout))
    }

    fn idempotent_intended(&self) -> bool {
        self.idempotent
    }

    fn eval_row(&self, a: f64, b0: f64, db: f64, out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.value(a, b0 + k as f64 * db);
        }
    }
}

/// Spectrum tabulated at `ω_k = (k + 1/2) Δω`, `k = 0..len`, zero elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSpectrum {
    pub d_omega: f64,
    pub values: Vec<Complex64>,
}

impl SampledSpectrum {
    pub fn node(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.d_omega
    }

    /// `‖f‖₂` from the tabulated spectrum.
    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.d_omega / (2.0 * PI)).sqrt()
    }

    /// `‖self − g‖₂ / ‖g‖₂` at the nodes.
    pub fn relative_error<P: SpectralProfile + ?Sized>(&self, g: &P) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let r = g.spectrum(self.node(k));
            num += (v - r).norm_sqr();
            den += r.norm_sqr();
        }
        (num / den).sqrt()
    }
}

impl SpectralProfile for SampledSpectrum {
    /// Linear interpolation between nodes.
    fn spectrum(&self, omega: f64) -> Complex64 {
        if omega <= 0.0 {
            return ZERO;
        }
        let pos = omega / self.d_omega - 0.5;
        let n = self.values.len();
        if pos <= 0.0 {
            return self.values[0] * (omega / (0.5 * self.d_omega));
        }
        let i = pos.floor() as usize;
        if i + 1 >= n {
            return ZERO;
        }
        let w = pos - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

/// A transform on an affine grid with a record of what produced it.
#[derive(Clone, Debug)]
pub struct WaveletTransform {
    pub values: GridFunction,
    pub wavelet_id: String,
    pub signal_id: String,
}

/// Frequency layout used by the spectral CWT on a grid.
#[derive(Clone, Copy, Debug)]
pub struct SpectralLayout {
    pub len: usize,
    pub d_omega: f64,
}

impl SpectralLayout {
    /// FFT length `oversample · n_b` rounded up to a power of two.
    pub fn for_grid(grid: &HaarGrid, oversample: usize) -> Self {
        let len = (oversample.max(2) * grid.n_b()).next_power_of_two();
        let d_omega = 2.0 * PI / (len as f64 * grid.b_axis().step());
        Self { len, d_omega }
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.d_omega
    }
}

pub const DEFAULT_OVERSAMPLE: usize = 16;

/// `W_u(f)(a, b) = (√a / 2π) ∫₀^∞ f̂(ω) conj(û(aω)) e^{ibω} dω` at every node,
/// one inverse FFT per scale.
pub fn cwt<F, U>(f: &F, u: &U, grid: Arc<HaarGrid>) -> Result<GridFunction>
where
    F: SpectralProfile + ?Sized,
    U: SpectralProfile + ?Sized,
{
    cwt_with(f, u, grid, DEFAULT_OVERSAMPLE)
}

pub fn cwt_with<F, U>(f: &F, u: &U, grid: Arc<HaarGrid>, oversample: usize) -> Result<GridFunction>
where
    F: SpectralProfile + ?Sized,
    U: SpectralProfile + ?Sized,
{
    if grid.kind() != GroupKind::Affine {
        return Err(Error::InvalidParameter("wavelet transforms need an affine grid".into()));
    }
    if !f.is_progressive() {
        return Err(Error::NonProgressive);
    }
    let layout = SpectralLayout::for_grid(&grid, oversample);
    let fhat: Vec<Complex64> = (0..layout.len).map(|k| f.spectrum(layout.node(k))).collect();
    Ok(GridFunction::from_parts(grid.clone(), cwt_from_nodes(&fhat, u, &grid, layout), Exponent::TWO))
}

/// The spectral CWT from `f̂` tabulated at the layout nodes.
fn cwt_from_nodes<U: SpectralProfile + ?Sized>(fhat: &[Complex64], u: &U, grid: &HaarGrid, layout: SpectralLayout) -> Vec<Complex64> {
    let (len, dw) = (layout.len, layout.d_omega);
    let nb = grid.n_b();
    let db = grid.b_axis().step();
    let b0 = grid.b_axis().node(0);
    let fhat: Vec<Complex64> = fhat
        .iter()
        .enumerate()
        .map(|(k, v)| if *v == ZERO { ZERO } else { v * Complex64::from_polar(1.0, b0 * layout.node(k)) })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let inv = planner.plan_fft_inverse(len);
    let rows: Vec<Vec<Complex64>> = (0..grid.n_a())
        .into_par_iter()
        .map(|i| {
            let a = grid.scale(i);
            let mut buf: Vec<Complex64> = (0..len)
                .map(|k| if fhat[k] == ZERO { ZERO } else { fhat[k] * u.spectrum(a * layout.node(k)).conj() })
                .collect();
            inv.process(&mut buf);
            let c = dw * a.sqrt() / (2.0 * PI);
            (0..nb)
                .map(|n| buf[n] * Complex64::from_polar(c, n as f64 * db * dw * 0.5))
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Spectrum of `Σ_i c_i π(x_i) s` at the layout nodes, for poly-exponential `s`.
fn atom_spectrum(s: &PolyExp, atoms: &[(GroupElement, Complex64)], layout: SpectralLayout) -> Vec<Complex64> {
    const CHUNK: usize = 512;
    let len = layout.len;
    let w0 = layout.node(0);
    let dw = layout.d_omega;
    // fixed chunks summed in order keep the result independent of threading
    let partials: Vec<Vec<Complex64>> = atoms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![ZERO; len];
            let mut by_power = vec![ZERO; len];
            for t in &s.terms {
                by_power.iter_mut().for_each(|v| *v = ZERO);
                for (x, c) in chunk {
                    if *c == ZERO {
                        continue;
                    }
                    let a = x.a();
                    // c √a · coeff · a^n · e^{-z ω}, z = rate a + i (b + delay a)
                    let z = Complex64::new(t.rate * a, x.b() + t.delay * a);
                    let amp = c * t.coeff * a.powf(t.power as f64 + 0.5);
                    let mut e = amp * (-z * w0).exp();
                    let step = (-z * dw).exp();
                    let cut = 1e-18 * amp.norm();
                    for v in by_power.iter_mut() {
                        *v += e;
                        e *= step;
                        if e.norm_sqr() < cut * cut {
                            break;
                        }
                    }
                }
                for (k, (o, v)) in acc.iter_mut().zip(&by_power).enumerate() {
                    *o += v * layout.node(k).powi(t.power as i32);
                }
            }
            acc
        })
        .collect();
    let mut out = vec![ZERO; len];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// `f̂(ω) = Σ_nodes w W(a,b) √a e^{-ibω} û(aω)`, tabulated on the layout of the grid.
pub fn synthesize<U: SpectralProfile + ?Sized>(w: &GridFunction, u: &U) -> Result<SampledSpectrum> {
    synthesize_with(w, u, DEFAULT_OVERSAMPLE)
}

pub fn synthesize_with<U: SpectralProfile + ?Sized>(w: &GridFunction, u: &U, oversample: usize) -> Result<SampledSpectrum> {
    let grid = w.grid().clone();
    if grid.kind() != GroupKind::Affine {
        return Err(Error::InvalidParameter("wavelet synthesis needs an affine grid".into()));
    }
    let layout = SpectralLayout::for_grid(&grid, oversample);
    let (len, dw) = (layout.len, layout.d_omega);
    let nb = grid.n_b();
    let db = grid.b_axis().step();
    let b0 = grid.b_axis().node(0);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let partial: Vec<Vec<Complex64>> = (0..grid.n_a())
        .into_par_iter()
        .map(|i| {
            let a = grid.scale(i);
            let row = &w.values()[i * nb..(i + 1) * nb];
            let mut buf = vec![ZERO; len];
            for n in 0..nb {
                buf[n] = row[n] * Complex64::from_polar(1.0, -(n as f64) * db * dw * 0.5);
            }
            fwd.process(&mut buf);
            let c = grid.row_weight(i) * a.sqrt();
            (0..len)
                .map(|k| {
                    let om = layout.node(k);
                    buf[k] * Complex64::from_polar(c, -b0 * om) * u.spectrum(a * om)
                })
                .collect()
        })
        .collect();
    let mut values = vec![ZERO; len];
    for row in partial {
        for (v, r) in values.iter_mut().zip(row) {
            *v += r;
        }
    }
    Ok(SampledSpectrum { d_omega: dw, values })
}

/// `‖R^α W_u(f) − W_{π(R^α)u}(f)‖₂ / ‖W_{π(R^α)u}(f)‖₂`.
///
/// The left side is differenced from the closed-form transform with step
/// `h`; the right side is the spectral CWT with the derived wavelet.
pub fn intertwining_residual(f: &PolyExp, u: &MotherWavelet, alpha: &MultiIndex, grid: Arc<HaarGrid>, h: f64) -> Result<f64> {
    let exact = AnalyticTransform::new(f, &u.profile());
    let d = crate::sampling::right_derivatives(&exact, grid.clone(), Exponent::TWO, alpha.order(), h)?;
    let lhs = &d[alpha];
    let rhs = cwt(f, &derived_wavelet(u, alpha)?, grid)?;
    if rhs.lp_norm() == 0.0 {
        return Ok(0.0);
    }
    lhs.relative_distance(&rhs)
}

/// Least-squares `c_α` in `W_u(f) * W_{π(R^α)u}(u) ≈ c_α W_{π(R^α)u}(f)` and
/// the relative residual left after the fit.
pub fn convolution_intertwining(
    f: &PolyExp,
    u: &MotherWavelet,
    alpha: &MultiIndex,
    grid: Arc<HaarGrid>,
) -> Result<(Complex64, f64)> {
    let ua = derived_wavelet(u, alpha)?;
    let lhs = convolve(&cwt(f, u, grid.clone())?, &AnalyticTransform::new(&u.profile(), &ua));
    let rhs = cwt(f, &ua, grid)?;
    let c = lhs.fit_scalar(&rhs)?;
    let fitted = rhs.scale(c);
    Ok((c, lhs.relative_distance(&fitted)?))
}

/// `‖W_{π(R^α)u}(u)‖₁` over the grid box.
pub fn derived_kernel_l1(u: &MotherWavelet, alpha: &MultiIndex, grid: Arc<HaarGrid>) -> Result<f64> {
    let k = AnalyticTransform::new(&u.profile(), &derived_wavelet(u, alpha)?);
    Ok(GridFunction::from_kernel(grid, Exponent::ONE, &k).lp_norm())
}

/// `‖W_u(f) * W_u(u) − W_u(f)‖₂ / ‖W_u(f)‖₂`.
pub fn reproducing_residual<F: SpectralProfile + ?Sized>(f: &F, u: &MotherWavelet, grid: Arc<HaarGrid>) -> Result<f64> {
    let w = cwt(f, u, grid)?;
    let k = AnalyticTransform::kernel(u);
    convolve(&w, &k).relative_distance(&w)
}

/// `P(v) (1 − v²)^{-k} exp(−1/(1 − v²))` with `v = x / radius`, zero for `|v| >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFactor {
    pub poly: Vec<f64>,
    pub k: u32,
    pub radius: f64,
}

impl BumpFactor {
    pub fn bump(radius: f64) -> Self {
        Self { poly: vec![1.0], k: 0, radius }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v = x / self.radius;
        if v.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - v * v;
        let p = self.poly.iter().rev().fold(0.0, |acc, c| acc * v + c);
        p * q.powi(-(self.k as i32)) * (-1.0 / q).exp()
    }

    /// `d/dx`.
    pub fn derivative(&self) -> Self {
        // d/dv [P q^{-K} e^{-1/q}] = [P' q² + 2K v P q − 2 v P] q^{-K-2} e^{-1/q}
        let p = &self.poly;
        let kf = self.k as f64;
        let deg = p.len() + 3;
        let mut out = vec![0.0; deg + 1];
        let mut add = |power: usize, c: f64| out[power] += c;
        for (j, &c) in p.iter().enumerate() {
            if j > 0 {
                // P' q², q² = 1 − 2v² + v⁴
                let d = c * j as f64;
                add(j - 1, d);
                add(j + 1, -2.0 * d);
                add(j + 3, d);
            }
            // 2K v P (1 − v²)
            add(j + 1, 2.0 * kf * c);
            add(j + 3, -2.0 * kf * c);
            // −2 v P
            add(j + 1, -2.0 * c);
        }
        while out.len() > 1 && *out.last().unwrap() == 0.0 {
            out.pop();
        }
        let scale = 1.0 / self.radius;
        Self { poly: out.into_iter().map(|c| c * scale).collect(), k: self.k + 2, radius: self.radius }
    }

    /// `x · self`.
    pub fn times_x(&self) -> Self {
        let mut poly = vec![0.0];
        poly.extend(self.poly.iter().map(|c| c * self.radius));
        Self { poly, ..self.clone() }
    }

    /// `∫ self(x) dx`.
    pub fn integral(&self) -> f64 {
        let (x, w) = gauss_legendre_on(96, -self.radius, self.radius);
        x.iter().zip(&w).map(|(x, w)| w * self.eval(*x)).sum()
    }
}

/// Sum of separable terms `c · A(log a) · B(b)` on the affine group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpField {
    pub terms: Vec<(f64, BumpFactor, BumpFactor)>,
}

impl BumpField {
    /// Tensor bump of radius `r_log_a` in `log a` and `r_b` in `b`, unit Haar integral.
    pub fn normalized_bump(r_log_a: f64, r_b: f64) -> Self {
        let a = BumpFactor::bump(r_log_a);
        let b = BumpFactor::bump(r_b);
        let (x, w) = gauss_legendre_on(96, -r_log_a, r_log_a);
        let ia: f64 = x.iter().zip(&w).map(|(t, w)| w * a.eval(*t) * (-t).exp()).sum();
        let ib = b.integral();
        Self { terms: vec![(1.0 / (ia * ib), a, b)] }
    }

    pub fn eval_at(&self, g: GroupElement) -> f64 {
        let t = g.log_a();
        self.terms.iter().map(|(c, a, b)| c * a.eval(t) * b.eval(g.b())).sum()
    }

    /// `L(X) g (x) = d/dt g(e^{tX} x)`.
    pub fn left_derivative(&self, k: Basis) -> Self {
        let mut terms = Vec::new();
        for (c, a, b) in &self.terms {
            match k {
                // e^{tX1} x = (e^t a, e^t b)
                Basis::X1 => {
                    terms.push((*c, a.derivative(), b.clone()));
                    terms.push((*c, a.clone(), b.derivative().times_x()));
                }
                // e^{tX2} x = (a, b + t)
                Basis::X2 => terms.push((*c, a.clone(), b.derivative())),
            }
        }
        Self { terms }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|(c, a, b)| (c * s, a.clone(), b.clone())).collect() }
    }

    fn max_radii(&self) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(ra, rb), (_, a, b)| (f64::max(ra, a.radius), f64::max(rb, b.radius)))
    }
}

impl Kernel for BumpField {
    fn eval(&self, g: GroupElement) -> Complex64 {
        Complex64::new(self.eval_at(g), 0.0)
    }
}

/// `π(g) v = ∫ g(x) π(x) v dμ(x)` evaluated spectrally by quadrature.
///
/// For a separable term `A(τ) B(b)` with `a = e^τ` the spectrum factorises as
/// `[∫ A(τ) e^{-τ/2} v̂(e^τ ω) dτ] · [∫ B(b) e^{-ibω} db]`.
#[derive(Clone, Debug)]
pub struct GardingProfile {
    base: PolyExp,
    weight: BumpField,
    factor: f64,
    tau_rule: (Vec<f64>, Vec<f64>),
    b_rule: (Vec<f64>, Vec<f64>),
}

pub const DEFAULT_GARDING_RADIUS: f64 = 0.5;

impl GardingProfile {
    pub fn new(base: PolyExp, weight: BumpField) -> Self {
        let (ra, rb) = weight.max_radii();
        Self {
            base,
            weight,
            factor: 1.0,
            tau_rule: gauss_legendre_on(64, -ra, ra),
            b_rule: gauss_legendre_on(128, -rb, rb),
        }
    }

    pub fn weight(&self) -> &BumpField {
        &self.weight
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { factor: self.factor * c, ..self.clone() }
    }

    /// `π(R^α) π(g) v = π(h) v` with `h = (−1)^{|α|} L(X_{α(k)}) ⋯ L(X_{α(1)}) g`.
    pub fn derived(&self, alpha: &MultiIndex) -> Result<Self> {
        if alpha.order() > 2 {
            return Err(Error::OrderTooHigh(alpha.order()));
        }
        let mut w = self.weight.clone();
        for &k in alpha.word() {
            w = w.left_derivative(k).scaled(-1.0);
        }
        Ok(Self { weight: w, ..self.clone() })
    }
}

impl SpectralProfile for GardingProfile {
    fn spectrum(&self, omega: f64) -> Complex64 {
        if omega <= 0.0 {
            return ZERO;
        }
        let (tx, tw) = &self.tau_rule;
        let (bx, bw) = &self.b_rule;
        let vs: Vec<Complex64> = tx.iter().map(|t| self.base.spectrum(t.exp() * omega) * (-0.5 * t).exp()).collect();
        let phases: Vec<Complex64> = bx.iter().map(|b| Complex64::from_polar(1.0, -b * omega)).collect();
        let mut s = ZERO;
        for (c, a, b) in &self.weight.terms {
            let ta: Complex64 = tx.iter().zip(tw).zip(&vs).map(|((t, w), v)| v * (w * a.eval(*t))).sum();
            if ta == ZERO {
                continue;
            }
            let tb: Complex64 = bx.iter().zip(bw).zip(&phases).map(|((x, w), p)| p * (w * b.eval(*x))).sum();
            s += ta * tb * *c;
        }
        s * self.factor
    }
}

/// `π(g) u`, renormalized to unit admissibility constant.
///
/// Returns the smoothed profile and the raw admissibility constant before
/// renormalization.
pub fn garding_smooth(u: &PolyExp, g: &BumpField) -> Result<(GardingProfile, f64)> {
    let raw = GardingProfile::new(u.clone(), g.clone());
    let c = admissibility_constant(&raw)?;
    Ok((raw.scaled(1.0 / c.sqrt()), c))
}

/// Residual of `W_{π(g)u}(π(g)v) = g * W_u(v) * g^∨` on `grid`.
///
/// The left side is the spectral CWT of the two smoothed vectors, the right
/// side two grid convolutions of the closed-form `W_u(v)`.
pub fn garding_identity_residual(u: &PolyExp, v: &PolyExp, g: &BumpField, grid: Arc<HaarGrid>) -> Result<f64> {
    let gu = GardingProfile::new(u.clone(), g.clone());
    let gv = GardingProfile::new(v.clone(), g.clone());
    let lhs = cwt(&gv, &gu, grid.clone())?;
    let h = AnalyticTransform::new(v, u);
    // both convolutions need values up to the reach of g beyond the box
    let (ra, rb) = g.max_radii();
    let rows = (ra / grid.log_a_axis().step()).ceil() as usize + 1;
    let cols = (rb * grid.a_max() * ra.exp() / grid.b_axis().step()).ceil() as usize + 1;
    let wide = Arc::new(grid.padded(rows, cols)?);
    let g_grid = GridFunction::from_kernel(wide, Exponent::TWO, g);
    let gh = convolve(&g_grid, &h);
    let rhs = convolve_involution_spectral(&gh, g)?.crop(grid, rows, cols)?;
    lhs.relative_distance(&rhs)
}

/// `(F * g^∨)(y) = ∫ F(y z) g(z) dμ(z)` for a separable bump `g`.
///
/// The `log a` integral runs over the grid rows; the `b` integral is done per
/// row through the Fourier transform of the `b` factor at frequency `a_y ξ`,
/// which stays resolved at scales where `g(y^{-1} ·)` is narrower than the
/// `b` spacing.
pub fn convolve_involution_spectral(f: &GridFunction, g: &BumpField) -> Result<GridFunction> {
    let grid = f.grid().clone();
    if grid.kind() != GroupKind::Affine {
        return Err(Error::InvalidParameter("needs an affine grid".into()));
    }
    let (na, nb) = (grid.n_a(), grid.n_b());
    let dt = grid.log_a_axis().step();
    let db = grid.b_axis().step();
    let len = (2 * nb).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let spectra: Vec<Vec<Complex64>> = (0..na)
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![ZERO; len];
            buf[..nb].copy_from_slice(&f.values()[i * nb..(i + 1) * nb]);
            fwd.process(&mut buf);
            buf
        })
        .collect();
    let freq = |m: usize| {
        let k = if m < len / 2 { m as f64 } else { m as f64 - len as f64 };
        2.0 * PI * k / (len as f64 * db)
    };
    let rows: Vec<Vec<Complex64>> = (0..na)
        .into_par_iter()
        .map(|i| {
            let a = grid.scale(i);
            let mut acc = vec![ZERO; len];
            for (c, fa, fb) in &g.terms {
                let (bx, bw) = gauss_legendre_on(128, -fb.radius, fb.radius);
                let bvals: Vec<f64> = bx.iter().zip(&bw).map(|(x, w)| w * fb.eval(*x)).collect();
                // ∫ B(β) e^{iξ a β} dβ
                let bhat: Vec<Complex64> = (0..len)
                    .map(|m| {
                        let xi = freq(m) * a;
                        bx.iter().zip(&bvals).map(|(x, v)| Complex64::from_polar(*v, xi * x)).sum()
                    })
                    .collect();
                let kmax = (fa.radius / dt).floor() as i64;
                for k in -kmax..=kmax {
                    let src = i as i64 + k;
                    if src < 0 || src >= na as i64 {
                        continue;
                    }
                    let tau = k as f64 * dt;
                    let wt = c * dt * (-tau).exp() * fa.eval(tau);
                    if wt == 0.0 {
                        continue;
                    }
                    let sp = &spectra[src as usize];
                    for m in 0..len {
                        acc[m] += sp[m] * bhat[m] * wt;
                    }
                }
            }
            inv.process(&mut acc);
            acc.truncate(nb);
            acc.iter_mut().for_each(|v| *v /= len as f64);
            acc
        })
        .collect();
    Ok(GridFunction::from_parts(grid, rows.into_iter().flatten().collect(), f.p()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> Arc<HaarGrid> {
        Arc::new(HaarGrid::affine(1.0 / 16.0, 16.0, 48, -16.0, 16.0, 256).unwrap())
    }

    #[test]
    fn paul_admissibility() {
        let c1 = admissibility_constant(&PolyExp::paul(1)).unwrap();
        assert!((c1 - 0.25).abs() < 1e-10, "{c1}");
        let c2 = admissibility_constant(&PolyExp::paul(2)).unwrap();
        assert!((c2 - 3.0 / 8.0).abs() < 1e-10);
        let u = MotherWavelet::paul_normalized(1).unwrap();
        assert!((u.normalization - 2.0).abs() < 1e-9);
        let again = duflo_moore_normalize(&u).unwrap();
        assert!((again.normalization - u.normalization).abs() < 1e-9);
        assert!(admissibility_constant(&PolyExp::paul(0)).is_err());
        assert!(MotherWavelet::paul(0).is_err());
    }

    #[test]
    fn generator_symbols() {
        let u = PolyExp::paul(1);
        let d2 = u.derived(&MultiIndex::single(Basis::X2));
        let w = 0.7;
        let want = Complex64::new(0.0, -1.0) * w * w * (-w).exp();
        assert!((d2.spectrum(w) - want).norm() < 1e-15);
        let d1 = u.derived(&MultiIndex::single(Basis::X1));
        assert!((d1.spectrum(1.0) - Complex64::new(0.5 * (-1.0f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn closed_form_inner_product_matches_transform_at_identity() {
        let u = MotherWavelet::paul_normalized(1).unwrap();
        let k = AnalyticTransform::kernel(&u);
        let p = u.profile();
        let at_e = k.eval(GroupElement::IDENTITY);
        assert!((at_e - p.inner_product(&p)).norm() < 1e-14);
        assert!((at_e.re - 1.0 / (2.0 * PI)).abs() < 1e-9);
    }

    #[test]
    fn spectral_cwt_matches_closed_form() {
        let grid = small_grid();
        let f = random_signal(3, 4);
        let u = MotherWavelet::paul_normalized(1).unwrap();
        let w = cwt(&f, &u, grid.clone()).unwrap();
        let exact = GridFunction::from_kernel(grid, Exponent::TWO, &AnalyticTransform::new(&f, &u.profile()));
        let r = w.relative_distance(&exact).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn bump_derivative_matches_difference() {
        let b = BumpFactor::bump(0.7).times_x();
        let d = b.derivative();
        for &x in &[-0.5, -0.1, 0.2, 0.6] {
            let h = 1e-5;
            let fd = (b.eval(x + h) - b.eval(x - h)) / (2.0 * h);
            assert!((fd - d.eval(x)).abs() < 1e-6 * (1.0 + fd.abs()), "{x}: {fd} {}", d.eval(x));
        }
        let dd = d.derivative();
        let x = 0.3;
        let h = 1e-4;
        let fd = (d.eval(x + h) - d.eval(x - h)) / (2.0 * h);
        assert!((fd - dd.eval(x)).abs() < 1e-5 * (1.0 + fd.abs()));
    }

    #[test]
    fn normalized_bump_has_unit_integral() {
        let g = BumpField::normalized_bump(0.5, 0.5);
        let grid = Arc::new(HaarGrid::affine(0.25, 4.0, 200, -1.0, 1.0, 400).unwrap());
        let t = GridFunction::from_kernel(grid, Exponent::ONE, &g);
        let i = t.integral().re;
        // exact cell weights leave an O(Δt²) bias
        assert!((i - 1.0).abs() < 1e-4, "{i}");
    }

    #[test]
    fn sampled_spectrum_interpolates() {
        let s = SampledSpectrum { d_omega: 1.0, values: vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)] };
        assert_eq!(s.spectrum(1.0), Complex64::new(2.0, 0.0));
        assert_eq!(s.spectrum(-1.0), ZERO);
        assert_eq!(s.spectrum(5.0), ZERO);
    }

    #[test]
    fn kernel_is_nearly_idempotent() {
        use crate::grid::kernel_idempotency_residual;
        let k2 = AnalyticTransform::kernel(&MotherWavelet::paul_normalized(2).unwrap());
        let g = Arc::new(HaarGrid::default_affine());
        assert!(kernel_idempotency_residual(&k2, g, Exponent::TWO).unwrap() < 1e-2);

        // order 1 decays like a^{3/2} as a -> 0, so the box edge dominates
        let k1 = AnalyticTransform::kernel(&MotherWavelet::paul_normalized(1).unwrap());
        let levels = [
            HaarGrid::affine(1.0 / 8.0, 8.0, 48, -8.0, 8.0, 128).unwrap(),
            HaarGrid::default_affine(),
            HaarGrid::affine(1.0 / 32.0, 32.0, 80, -32.0, 32.0, 2048).unwrap(),
        ];
        let r: Vec<f64> = levels
            .into_iter()
            .map(|g| kernel_idempotency_residual(&k1, Arc::new(g), Exponent::TWO).unwrap())
            .collect();
        assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
        assert!(r[2] < 1e-2, "{r:?}");
    }
}
