//! Sampling operators on a reproducing space `B_φ = {F : F * φ = F}`,
//! Neumann-series inversion and atomic decompositions.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{convolve, Exponent, GridFunction, HaarGrid, Kernel};
use crate::group::GroupElement;
use crate::report::{fit_geometric_rate, OperatorKind, ReconstructionReport};
use crate::sampling::{bseq_norm, Bupu, SampleSet, SequenceCoefficients};
use crate::wavelet::{cwt, random_signal, AnalyticTransform, MotherWavelet};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest `‖F * φ − F‖ / ‖F‖` accepted as membership in `B_φ`.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-2;

/// Coarsest sampling radius of the refinement studies.
pub const DEFAULT_EPS: f64 = 1.0;

/// `[ε₀, ε₀/2, ε₀/4]`.
pub fn eps_levels(eps0: f64) -> [f64; 3] {
    [eps0, eps0 / 2.0, eps0 / 4.0]
}

/// Transforms of seeded random signals, each projected once onto `B_φ`.
pub fn member_suite(
    seeds: impl IntoIterator<Item = u64>,
    atoms: usize,
    wavelet: &MotherWavelet,
    grid: Arc<HaarGrid>,
    p: Exponent,
) -> Result<Vec<GridFunction>> {
    let kernel = AnalyticTransform::kernel(wavelet);
    seeds
        .into_iter()
        .map(|s| Ok(project(&cwt(&random_signal(s, atoms), wavelet, grid.clone())?, &kernel).with_p(p)))
        .collect()
}

/// `‖F * φ − F‖ / ‖F‖`.
pub fn membership_residual<K: Kernel + ?Sized>(f: &GridFunction, kernel: &K) -> Result<f64> {
    convolve(f, kernel).relative_distance(f)
}

/// `F ← F * φ`, moving a discretized function onto the reproducing space.
pub fn project<K: Kernel + ?Sized>(f: &GridFunction, kernel: &K) -> GridFunction {
    convolve(f, kernel)
}

fn check_members<K: Kernel + ?Sized>(suite: &[GridFunction], kernel: &K) -> Result<()> {
    for (index, f) in suite.iter().enumerate() {
        let residual = membership_residual(f, kernel)?;
        if !(residual < MEMBERSHIP_TOLERANCE) {
            return Err(Error::NotInReproducingSpace { index, residual });
        }
    }
    Ok(())
}

/// Empirical lower and upper sampling bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub a_hat: f64,
    pub b_hat: f64,
    pub suite_size: usize,
    pub ratios: Vec<f64>,
    pub eps: f64,
    pub samples: usize,
}

impl FrameBounds {
    pub fn conditioning(&self) -> f64 {
        self.b_hat / self.a_hat
    }

    /// Whether `ratio` lies in `[lower · a_hat, upper · b_hat]`.
    pub fn admits(&self, ratio: f64, lower: f64, upper: f64) -> bool {
        ratio >= lower * self.a_hat && ratio <= upper * self.b_hat
    }
}

/// `‖{F(x_i)}‖_{B#} / ‖F‖_p`.
pub fn sampling_ratio(f: &GridFunction, set: &SampleSet) -> Result<f64> {
    let n = f.lp_norm();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(bseq_norm(&SequenceCoefficients::sample(f, set), set)? / n)
}

/// Min and max of [`sampling_ratio`] over a suite of members of `B_φ`.
pub fn estimate_frame_bounds<K: Kernel + ?Sized>(
    set: &SampleSet,
    kernel: &K,
    suite: &[GridFunction],
    p: Exponent,
) -> Result<FrameBounds> {
    if suite.is_empty() {
        return Err(Error::Empty("frame-bound suite"));
    }
    check_members(suite, kernel)?;
    let ratios = suite
        .iter()
        .map(|f| sampling_ratio(&f.clone().with_p(p), set))
        .collect::<Result<Vec<f64>>>()?;
    let a_hat = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let b_hat = ratios.iter().cloned().fold(0.0, f64::max);
    if !(a_hat > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(FrameBounds { a_hat, b_hat, suite_size: suite.len(), ratios, eps: set.eps(), samples: set.len() })
}

/// `Σ_i λ_i φ(x_i^{-1} y)` at every node of `grid`.
pub fn synthesize_atoms<K: Kernel + ?Sized>(
    lam: &SequenceCoefficients,
    points: &[GroupElement],
    kernel: &K,
    grid: Arc<HaarGrid>,
) -> Result<GridFunction> {
    if lam.values.len() != points.len() {
        return Err(Error::InvalidParameter(format!("{} coefficients for {} atoms", lam.values.len(), points.len())));
    }
    let atoms: Vec<(GroupElement, Complex64)> = points.iter().copied().zip(lam.values.iter().copied()).collect();
    if let Some(values) = kernel.synthesize_atoms(&atoms, &grid) {
        return GridFunction::new(grid, values, lam.p);
    }
    Ok(synthesize_atoms_direct(&atoms, kernel, grid, lam.p))
}

/// `‖out‖ / ‖λ‖_{B#}`, the constant of bounded synthesis seen on one sequence.
pub fn synthesis_constant(lam: &SequenceCoefficients, out: &GridFunction, set: &SampleSet) -> Result<f64> {
    let n = bseq_norm(lam, set)?;
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(out.norm_with(lam.p) / n)
}

/// Pointwise sum over atoms.
pub fn synthesize_atoms_direct<K: Kernel + ?Sized>(
    atoms: &[(GroupElement, Complex64)],
    kernel: &K,
    grid: Arc<HaarGrid>,
    p: Exponent,
) -> GridFunction {
    let live: Vec<_> = atoms.iter().filter(|(_, c)| *c != ZERO).collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let y = grid.node(k);
            live.iter().map(|(x, c)| c * kernel.eval(x.inverse_times(&y))).sum()
        })
        .collect();
    GridFunction::new(grid, values, p).expect("finite atoms")
}

/// A bounded linear map on grid functions.
pub trait LinearOperator: Sync {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction>;

    fn kind(&self) -> OperatorKind {
        OperatorKind::Custom
    }
}

/// The identity, for testing the inversion machinery.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl LinearOperator for Identity {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        Ok(f.clone())
    }
}

/// One of the three sampling operators, closed over a sample set, its
/// partition of unity and the reproducing kernel.
pub struct SamplingOperator<'a, K: ?Sized> {
    kind: OperatorKind,
    set: &'a SampleSet,
    bupu: &'a Bupu,
    kernel: &'a K,
}

impl<'a, K: Kernel + ?Sized> SamplingOperator<'a, K> {
    /// `kind` must be `T1`, `T2` or `T3`.
    pub fn new(kind: OperatorKind, set: &'a SampleSet, bupu: &'a Bupu, kernel: &'a K) -> Result<Self> {
        if !matches!(kind, OperatorKind::T1 | OperatorKind::T2 | OperatorKind::T3) {
            return Err(Error::InvalidParameter(format!("{kind:?} is not a sampling operator")));
        }
        if bupu.len() != set.len() {
            return Err(Error::InvalidParameter("partition of unity does not match the sample set".into()));
        }
        Ok(Self { kind, set, bupu, kernel })
    }

    pub fn set(&self) -> &SampleSet {
        self.set
    }

    pub fn bupu(&self) -> &Bupu {
        self.bupu
    }

    /// The coefficient sequence the operator synthesizes from.
    pub fn coefficients(&self, f: &GridFunction) -> SequenceCoefficients {
        match self.kind {
            OperatorKind::T2 => SequenceCoefficients::new(self.bupu.functionals(f), f.p()),
            OperatorKind::T3 => {
                let s = SequenceCoefficients::sample(f, self.set);
                let v = s.values.iter().zip(self.bupu.masses()).map(|(v, m)| v * *m).collect();
                SequenceCoefficients::new(v, f.p())
            }
            _ => SequenceCoefficients::sample(f, self.set),
        }
    }
}

impl<K: Kernel + ?Sized> LinearOperator for SamplingOperator<'_, K> {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if !Arc::ptr_eq(f.grid(), self.set.grid()) && **f.grid() != **self.set.grid() {
            return Err(Error::GridMismatch);
        }
        match self.kind {
            OperatorKind::T1 => Ok(apply_t1(f, self.set, self.bupu, self.kernel)),
            _ => {
                let lam = self.coefficients(f);
                synthesize_atoms(&lam, self.set.points(), self.kernel, f.grid().clone())
            }
        }
    }

    fn kind(&self) -> OperatorKind {
        self.kind
    }
}

/// `T1 F = (Σ_i F(x_i) ψ_i) * φ`.
pub fn apply_t1<K: Kernel + ?Sized>(f: &GridFunction, set: &SampleSet, bupu: &Bupu, kernel: &K) -> GridFunction {
    let s = SequenceCoefficients::sample(f, set);
    let step = bupu.assemble(&s.values, f.grid().clone(), f.p());
    convolve(&step, kernel)
}

/// `(Σ_i s_i ψ_i) * φ` from sample values alone; equals `T1 F` when `s_i = F(x_i)`.
pub fn data_term<K: Kernel + ?Sized>(
    samples: &SequenceCoefficients,
    bupu: &Bupu,
    kernel: &K,
    grid: Arc<HaarGrid>,
) -> Result<GridFunction> {
    if samples.values.len() != bupu.len() {
        return Err(Error::InvalidParameter(format!("{} samples for {} cells", samples.values.len(), bupu.len())));
    }
    Ok(convolve(&bupu.assemble(&samples.values, grid, samples.p), kernel))
}

/// `T2 F = Σ_i λ_i(F) ℓ_{x_i} φ`, `λ_i(F) = ∫ F ψ_i dμ`.
pub fn apply_t2<K: Kernel + ?Sized>(f: &GridFunction, set: &SampleSet, bupu: &Bupu, kernel: &K) -> Result<GridFunction> {
    SamplingOperator::new(OperatorKind::T2, set, bupu, kernel)?.apply(f)
}

/// `T3 F = Σ_i c_i F(x_i) ℓ_{x_i} φ`, `c_i = ∫ ψ_i dμ`.
pub fn apply_t3<K: Kernel + ?Sized>(f: &GridFunction, set: &SampleSet, bupu: &Bupu, kernel: &K) -> Result<GridFunction> {
    SamplingOperator::new(OperatorKind::T3, set, bupu, kernel)?.apply(f)
}

/// `‖F − T F‖ / ‖F‖`.
pub fn contraction<T: LinearOperator + ?Sized>(op: &T, f: &GridFunction) -> Result<f64> {
    let n = f.lp_norm();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(f.sub(&op.apply(f)?)?.lp_norm() / n)
}

/// `Σ_{k>=0} (I − T)^k y`, stopped when the increment falls to `tol ‖y‖`.
///
/// The first increment `y − T y` doubles as the contraction probe: if it is
/// not smaller than `y`, the series is not attempted.
pub fn neumann_invert<T: LinearOperator + ?Sized>(
    op: &T,
    y: &GridFunction,
    tol: f64,
    maxiter: usize,
) -> Result<(GridFunction, ReconstructionReport)> {
    if !(tol > 0.0) || maxiter == 0 {
        return Err(Error::InvalidParameter("tol and maxiter must be positive".into()));
    }
    let mut report = ReconstructionReport::new(op.kind());
    report.p = Some(y.p().value());
    let yn = y.lp_norm();
    if yn == 0.0 {
        report.iterations = 1;
        report.residuals.push(0.0);
        report.converged = true;
        return Ok((y.clone(), report));
    }
    let mut sum = y.clone();
    let mut term = y.clone();
    let mut rising = 0;
    for k in 0..maxiter {
        let next = term.sub(&op.apply(&term)?)?;
        let inc = next.lp_norm() / yn;
        if k == 0 && !(inc < 1.0) {
            report.iterations = 1;
            report.residuals.push(inc);
            return Err(Error::Diverged(Box::new(report)));
        }
        if let Some(&prev) = report.residuals.last() {
            rising = if inc > prev { rising + 1 } else { 0 };
        }
        report.residuals.push(inc);
        report.iterations = k + 1;
        sum = sum.add(&next)?;
        term = next;
        if inc <= tol {
            report.converged = true;
            break;
        }
        if rising >= 3 {
            report.fitted_rate = fit_geometric_rate(&report.residuals);
            return Err(Error::Diverged(Box::new(report)));
        }
    }
    report.fitted_rate = fit_geometric_rate(&report.residuals);
    Ok((sum, report))
}

/// Coefficients `λ_i(T2^{-1} F)` whose atoms resynthesize `F`.
///
/// The report's `final_error` is the synthesis residual
/// `‖Σ λ_i ℓ_{x_i} φ − F‖ / ‖F‖`.
pub fn atomic_decompose<K: Kernel + ?Sized>(
    f: &GridFunction,
    set: &SampleSet,
    bupu: &Bupu,
    kernel: &K,
    tol: f64,
    maxiter: usize,
) -> Result<(SequenceCoefficients, ReconstructionReport)> {
    let op = SamplingOperator::new(OperatorKind::T2, set, bupu, kernel)?;
    let (g, mut report) = neumann_invert(&op, f, tol, maxiter)?;
    report.eps = Some(set.eps());
    let lam = op.coefficients(&g);
    if f.lp_norm() == 0.0 {
        report.final_error = Some(0.0);
        return Ok((lam, report));
    }
    let synth = synthesize_atoms(&lam, set.points(), kernel, f.grid().clone())?;
    report.final_error = Some(synth.relative_distance(f)?);
    Ok((lam, report))
}
