//! Truncated Haar quadrature grids, grid functions and group convolution.
//!
//! An affine grid is a tensor product of a uniform axis in `log a` and a
//! uniform axis in `b`, nodes at cell midpoints. The real line reuses the
//! same layout with a single degenerate scale row at `a = 1`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind};

/// Uniform axis over `[min, max]` with `n` cells, nodes at cell midpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if n == 0 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "axis [{min}, {max}] with {n} nodes"
            )));
        }
        Ok(Self { min, max, n })
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.n as f64
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        self.min + (k as f64 + 0.5) * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    /// Linear interpolation stencil `(i0, i1, w)` meaning `(1-w) v[i0] + w v[i1]`.
    ///
    /// Between the outermost node and the box edge the value is held constant.
    #[inline]
    pub fn stencil(&self, x: f64) -> Option<(usize, usize, f64)> {
        if !self.contains(x) {
            return None;
        }
        let pos = (x - self.min) / self.step() - 0.5;
        if pos <= 0.0 {
            return Some((0, 0, 0.0));
        }
        let last = (self.n - 1) as f64;
        if pos >= last {
            return Some((self.n - 1, self.n - 1, 0.0));
        }
        let i0 = pos.floor() as usize;
        Some((i0, i0 + 1, pos - i0 as f64))
    }

    /// Index range of nodes inside `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let h = self.step();
        let first = ((lo - self.min) / h - 0.5).ceil().max(0.0);
        let last = ((hi - self.min) / h - 0.5).floor();
        if last < 0.0 || first > (self.n - 1) as f64 || first > last {
            return 0..0;
        }
        let first = first as usize;
        let last = (last as usize).min(self.n - 1);
        first..last + 1
    }
}

/// JSON descriptor of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDescriptor {
    pub kind: GroupKind,
    /// Scale axis in `log a`; ignored for the real line.
    #[serde(default)]
    pub log_a_min: f64,
    #[serde(default)]
    pub log_a_max: f64,
    #[serde(default = "one")]
    pub n_a: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub n_b: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq)]
pub struct HaarGrid {
    kind: GroupKind,
    log_a: Axis,
    b: Axis,
    scales: Vec<f64>,
    row_measure: Vec<f64>,
}

impl HaarGrid {
    /// Affine grid over `[a_min, a_max] x [b_min, b_max]`.
    pub fn affine(a_min: f64, a_max: f64, n_a: usize, b_min: f64, b_max: f64, n_b: usize) -> Result<Self> {
        if !(a_min > 0.0) {
            return Err(Error::InvalidElement(a_min));
        }
        let log_a = Axis::new(a_min.ln(), a_max.ln(), n_a)?;
        let b = Axis::new(b_min, b_max, n_b)?;
        let h = log_a.step();
        let scales = (0..n_a).map(|i| log_a.node(i).exp()).collect();
        // exact measure of each cell: int da/a^2 over [e^lo, e^hi]
        let row_measure = (0..n_a)
            .map(|i| {
                let lo = log_a.min + i as f64 * h;
                (-lo).exp() - (-(lo + h)).exp()
            })
            .collect();
        Ok(Self { kind: GroupKind::Affine, log_a, b, scales, row_measure })
    }

    pub fn real_line(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        let b = Axis::new(x_min, x_max, n)?;
        Ok(Self {
            kind: GroupKind::RealLine,
            log_a: Axis { min: 0.0, max: 0.0, n: 1 },
            b,
            scales: vec![1.0],
            row_measure: vec![1.0],
        })
    }

    /// The default truncation box `a in [1/16, 16]`, `b in [-16, 16]`.
    pub fn default_affine() -> Self {
        Self::affine(1.0 / 16.0, 16.0, 64, -16.0, 16.0, 512).expect("static grid")
    }

    pub fn from_descriptor(d: &GridDescriptor) -> Result<Self> {
        match d.kind {
            GroupKind::Affine => Self::affine(d.log_a_min.exp(), d.log_a_max.exp(), d.n_a, d.b_min, d.b_max, d.n_b),
            GroupKind::RealLine => Self::real_line(d.b_min, d.b_max, d.n_b),
        }
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor {
            kind: self.kind,
            log_a_min: self.log_a.min,
            log_a_max: self.log_a.max,
            n_a: self.log_a.n,
            b_min: self.b.min,
            b_max: self.b.max,
            n_b: self.b.n,
        }
    }

    /// Same box with different node counts.
    pub fn with_counts(&self, n_a: usize, n_b: usize) -> Result<Self> {
        match self.kind {
            GroupKind::Affine => Self::affine(self.a_min(), self.a_max(), n_a, self.b.min, self.b.max, n_b),
            GroupKind::RealLine => Self::real_line(self.b.min, self.b.max, n_b),
        }
    }

    /// Box widened by `rows` cells on each side in `log a` and `cols` in `b`,
    /// keeping the original nodes.
    pub fn padded(&self, rows: usize, cols: usize) -> Result<Self> {
        let (hl, hb) = (self.log_a.step(), self.b.step());
        let (pr, pc) = (rows as f64, cols as f64);
        match self.kind {
            GroupKind::Affine => Self::affine(
                (self.log_a.min - pr * hl).exp(),
                (self.log_a.max + pr * hl).exp(),
                self.log_a.n + 2 * rows,
                self.b.min - pc * hb,
                self.b.max + pc * hb,
                self.b.n + 2 * cols,
            ),
            GroupKind::RealLine => Self::real_line(self.b.min - pc * hb, self.b.max + pc * hb, self.b.n + 2 * cols),
        }
    }

    #[inline]
    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    #[inline]
    pub fn log_a_axis(&self) -> &Axis {
        &self.log_a
    }

    #[inline]
    pub fn b_axis(&self) -> &Axis {
        &self.b
    }

    #[inline]
    pub fn n_a(&self) -> usize {
        self.log_a.n
    }

    #[inline]
    pub fn n_b(&self) -> usize {
        self.b.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.log_a.n * self.b.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn a_min(&self) -> f64 {
        self.log_a.min.exp()
    }

    pub fn a_max(&self) -> f64 {
        self.log_a.max.exp()
    }

    /// Scale of row `i`.
    #[inline]
    pub fn scale(&self, i: usize) -> f64 {
        self.scales[i]
    }

    #[inline]
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Quadrature weight of every node in row `i`.
    #[inline]
    pub fn row_weight(&self, i: usize) -> f64 {
        self.row_measure[i] * self.b.step()
    }

    #[inline]
    pub fn index(&self, i: usize, n: usize) -> usize {
        i * self.b.n + n
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.b.n, idx % self.b.n)
    }

    #[inline]
    pub fn node(&self, idx: usize) -> GroupElement {
        let (i, n) = self.split(idx);
        self.node_at(i, n)
    }

    #[inline]
    pub fn node_at(&self, i: usize, n: usize) -> GroupElement {
        match self.kind {
            GroupKind::Affine => GroupElement::from_log_scale(self.log_a.node(i), self.b.node(n)),
            GroupKind::RealLine => GroupElement::translation(self.b.node(n)),
        }
    }

    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        self.row_weight(idx / self.b.n)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    /// Σ of all weights.
    pub fn total_measure(&self) -> f64 {
        (0..self.n_a()).map(|i| self.row_weight(i) * self.n_b() as f64).sum()
    }

    /// Analytic Haar measure of the truncation box.
    pub fn box_measure(&self) -> f64 {
        let width = self.b.max - self.b.min;
        match self.kind {
            GroupKind::Affine => (1.0 / self.a_min() - 1.0 / self.a_max()) * width,
            GroupKind::RealLine => width,
        }
    }

    #[inline]
    pub fn in_box(&self, g: GroupElement) -> bool {
        let in_b = self.b.contains(g.b());
        match self.kind {
            GroupKind::Affine => in_b && self.log_a.contains(g.log_a()),
            GroupKind::RealLine => in_b,
        }
    }

    /// Index of the nearest node, if `g` is in the box.
    pub fn nearest(&self, g: GroupElement) -> Option<usize> {
        if !self.in_box(g) {
            return None;
        }
        let i = match self.kind {
            GroupKind::Affine => (((g.log_a() - self.log_a.min) / self.log_a.step()).floor() as usize).min(self.n_a() - 1),
            GroupKind::RealLine => 0,
        };
        let n = (((g.b() - self.b.min) / self.b.step()).floor() as usize).min(self.n_b() - 1);
        Some(self.index(i, n))
    }
}

impl Serialize for HaarGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HaarGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = GridDescriptor::deserialize(d)?;
        HaarGrid::from_descriptor(&desc).map_err(serde::de::Error::custom)
    }
}

/// Exponent of the ambient `L^p` space, `1 <= p <= inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self(p))
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }
}

/// `L^p` norm of values with weights; `max |v|` for `p = inf`.
pub fn weighted_lp_norm(values: impl Iterator<Item = (f64, f64)>, p: Exponent) -> f64 {
    let p = p.value();
    if p.is_infinite() {
        return values.fold(0.0, |m, (_, v)| m.max(v.abs()));
    }
    let s: f64 = if p == 1.0 {
        values.map(|(w, v)| w * v.abs()).sum()
    } else if p == 2.0 {
        values.map(|(w, v)| w * v * v).sum()
    } else {
        values.map(|(w, v)| w * v.abs().powf(p)).sum()
    };
    if p == 1.0 {
        s
    } else if p == 2.0 {
        s.sqrt()
    } else {
        s.powf(1.0 / p)
    }
}

/// Complex values on a grid with an `L^p` context.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<HaarGrid>,
    values: Vec<Complex64>,
    p: Exponent,
}

impl GridFunction {
    pub fn new(grid: Arc<HaarGrid>, values: Vec<Complex64>, p: Exponent) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite grid value".into()));
        }
        Ok(Self { grid, values, p })
    }

    pub fn zeros(grid: Arc<HaarGrid>, p: Exponent) -> Self {
        let n = grid.len();
        Self { grid, values: vec![Complex64::new(0.0, 0.0); n], p }
    }

    /// Tabulate `f` at every node.
    pub fn from_fn<F>(grid: Arc<HaarGrid>, p: Exponent, f: F) -> Self
    where
        F: Fn(GroupElement) -> Complex64 + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|k| f(grid.node(k))).collect();
        Self { grid, values, p }
    }

    pub fn from_kernel<K: Kernel + ?Sized>(grid: Arc<HaarGrid>, p: Exponent, k: &K) -> Self {
        Self::from_fn(grid, p, |g| k.eval(g))
    }

    pub(crate) fn from_parts(grid: Arc<HaarGrid>, values: Vec<Complex64>, p: Exponent) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, p }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<HaarGrid> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn with_p(mut self, p: Exponent) -> Self {
        self.p = p;
        self
    }

    pub fn lp_norm(&self) -> f64 {
        self.norm_with(self.p)
    }

    pub fn norm_with(&self, p: Exponent) -> f64 {
        let g = &self.grid;
        weighted_lp_norm(self.values.iter().enumerate().map(|(k, v)| (g.weight(k), v.norm())), p)
    }

    /// `Σ w F`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().enumerate().map(|(k, v)| v * self.grid.weight(k)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &GridFunction) -> Result<GridFunction> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + c * y).collect();
        Ok(Self::from_parts(self.grid.clone(), values, self.p))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        let values = self.values.iter().map(|x| x * c).collect();
        Self::from_parts(self.grid.clone(), values, self.p)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> GridFunction {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect(), self.p)
    }

    /// Restriction to `target`, a grid produced by [`HaarGrid::padded`] from
    /// this one's grid with the same `rows` and `cols`.
    pub fn crop(&self, target: Arc<HaarGrid>, rows: usize, cols: usize) -> Result<GridFunction> {
        let nb = self.grid.n_b();
        if target.n_a() + 2 * rows != self.grid.n_a() || target.n_b() + 2 * cols != nb {
            return Err(Error::GridMismatch);
        }
        let mut values = Vec::with_capacity(target.len());
        for i in 0..target.n_a() {
            let start = (i + rows) * nb + cols;
            values.extend_from_slice(&self.values[start..start + target.n_b()]);
        }
        Ok(GridFunction { grid: target, values, p: self.p })
    }

    /// `‖self − other‖ / ‖other‖` in the ambient exponent.
    pub fn relative_distance(&self, reference: &GridFunction) -> Result<f64> {
        let d = self.sub(reference)?.lp_norm();
        let n = reference.lp_norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(d / n)
    }

    /// Least-squares `c` minimising `‖self − c·reference‖₂`.
    pub fn fit_scalar(&self, reference: &GridFunction) -> Result<Complex64> {
        self.check_same(reference)?;
        let g = &self.grid;
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for k in 0..g.len() {
            let w = g.weight(k);
            num += w * self.values[k] * reference.values[k].conj();
            den += w * reference.values[k].norm_sqr();
        }
        if den == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(num / den)
    }

    /// Bilinear interpolation in `(log a, b)`; zero outside the box.
    #[inline]
    pub fn sample(&self, g: GroupElement) -> Complex64 {
        let grid = &*self.grid;
        let Some((n0, n1, wb)) = grid.b.stencil(g.b()) else {
            return Complex64::new(0.0, 0.0);
        };
        let nb = grid.n_b();
        match grid.kind {
            GroupKind::RealLine => self.values[n0] * (1.0 - wb) + self.values[n1] * wb,
            GroupKind::Affine => {
                let Some((i0, i1, wa)) = grid.log_a.stencil(g.log_a()) else {
                    return Complex64::new(0.0, 0.0);
                };
                let v00 = self.values[i0 * nb + n0];
                let v01 = self.values[i0 * nb + n1];
                let v10 = self.values[i1 * nb + n0];
                let v11 = self.values[i1 * nb + n1];
                (v00 * (1.0 - wb) + v01 * wb) * (1.0 - wa) + (v10 * (1.0 - wb) + v11 * wb) * wa
            }
        }
    }

    /// Write as CSV with header `log_a,b,re,im` or `x,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = &self.grid;
        match g.kind {
            GroupKind::Affine => {
                writeln!(w, "log_a,b,re,im")?;
                for (k, v) in self.values.iter().enumerate() {
                    let (i, n) = g.split(k);
                    writeln!(w, "{},{},{},{}", g.log_a.node(i), g.b.node(n), v.re, v.im)?;
                }
            }
            GroupKind::RealLine => {
                writeln!(w, "x,re,im")?;
                for (k, v) in self.values.iter().enumerate() {
                    writeln!(w, "{},{},{}", g.b.node(k), v.re, v.im)?;
                }
            }
        }
        Ok(())
    }

    /// Read values written by [`write_csv`](Self::write_csv) onto `grid`.
    pub fn read_csv<R: BufRead>(grid: Arc<HaarGrid>, p: Exponent, r: R) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        let cols = match grid.kind {
            GroupKind::Affine => 4,
            GroupKind::RealLine => 3,
        };
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidParameter(e.to_string()))?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::InvalidParameter(format!("line {}: expected {cols} fields", lineno + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("line {}: {e}", lineno + 1)))
            };
            values.push(Complex64::new(parse(fields[cols - 2])?, parse(fields[cols - 1])?));
        }
        Self::new(grid, values, p)
    }
}

/// A map from the group to ℂ that can be evaluated anywhere.
pub trait Kernel: Sync {
    fn eval(&self, g: GroupElement) -> Complex64;

    /// Whether `K * K = K` is expected.
    fn idempotent_intended(&self) -> bool {
        false
    }

    /// Values at `(a, b0 + k db)` for `k = 0..out.len()`.
    fn eval_row(&self, a: f64, b0: f64, db: f64, out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.eval(GroupElement::raw(a, b0 + k as f64 * db));
        }
    }

    /// `Σ_i c_i K(x_i^{-1} y)` at every grid node, when the kernel has a
    /// route faster than pointwise evaluation.
    fn synthesize_atoms(&self, _atoms: &[(GroupElement, Complex64)], _grid: &Arc<HaarGrid>) -> Option<Vec<Complex64>> {
        None
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn eval(&self, g: GroupElement) -> Complex64 {
        (**self).eval(g)
    }
    fn idempotent_intended(&self) -> bool {
        (**self).idempotent_intended()
    }
    fn eval_row(&self, a: f64, b0: f64, db: f64, out: &mut [Complex64]) {
        (**self).eval_row(a, b0, db, out)
    }
    fn synthesize_atoms(&self, atoms: &[(GroupElement, Complex64)], grid: &Arc<HaarGrid>) -> Option<Vec<Complex64>> {
        (**self).synthesize_atoms(atoms, grid)
    }
}

impl<K: Kernel + ?Sized + Send> Kernel for Box<K> {
    fn eval(&self, g: GroupElement) -> Complex64 {
        (**self).eval(g)
    }
    fn idempotent_intended(&self) -> bool {
        (**self).idempotent_intended()
    }
    fn eval_row(&self, a: f64, b0: f64, db: f64, out: &mut [Complex64]) {
        (**self).eval_row(a, b0, db, out)
    }
    fn synthesize_atoms(&self, atoms: &[(GroupElement, Complex64)], grid: &Arc<HaarGrid>) -> Option<Vec<Complex64>> {
        (**self).synthesize_atoms(atoms, grid)
    }
}

impl<K: Kernel + ?Sized + Send> Kernel for Arc<K> {
    fn eval(&self, g: GroupElement) -> Complex64 {
        (**self).eval(g)
    }
    fn idempotent_intended(&self) -> bool {
        (**self).idempotent_intended()
    }
    fn eval_row(&self, a: f64, b0: f64, db: f64, out: &mut [Complex64]) {
        (**self).eval_row(a, b0, db, out)
    }
    fn synthesize_atoms(&self, atoms: &[(GroupElement, Complex64)], grid: &Arc<HaarGrid>) -> Option<Vec<Complex64>> {
        (**self).synthesize_atoms(atoms, grid)
    }
}

/// Closed-form kernel backed by a closure.
pub struct FnKernel<F> {
    f: F,
    idempotent: bool,
}

impl<F: Fn(GroupElement) -> Complex64 + Sync> FnKernel<F> {
    pub fn new(f: F) -> Self {
        Self { f, idempotent: false }
    }

    pub fn idempotent(mut self, flag: bool) -> Self {
        self.idempotent = flag;
        self
    }
}

impl<F: Fn(GroupElement) -> Complex64 + Sync> Kernel for FnKernel<F> {
    fn eval(&self, g: GroupElement) -> Complex64 {
        (self.f)(g)
    }
    fn idempotent_intended(&self) -> bool {
        self.idempotent
    }
}

/// Grid-tabulated kernel, evaluated by bilinear interpolation.
#[derive(Clone, Debug)]
pub struct TabulatedKernel {
    table: GridFunction,
    idempotent: bool,
}

impl TabulatedKernel {
    pub fn new(table: GridFunction, idempotent: bool) -> Self {
        Self { table, idempotent }
    }

    pub fn table(&self) -> &GridFunction {
        &self.table
    }
}

impl Kernel for TabulatedKernel {
    fn eval(&self, g: GroupElement) -> Complex64 {
        self.table.sample(g)
    }
    fn idempotent_intended(&self) -> bool {
        self.idempotent
    }
}

/// `x -> K(x^{-1})`.
#[derive(Clone, Debug)]
pub struct Involution<K>(pub K);

impl<K: Kernel> Kernel for Involution<K> {
    fn eval(&self, g: GroupElement) -> Complex64 {
        self.0.eval(g.inverse())
    }
}

pub fn involution<K: Kernel>(k: K) -> Involution<K> {
    Involution(k)
}

/// `c · K`.
#[derive(Clone, Debug)]
pub struct ScaledKernel<K> {
    pub inner: K,
    pub factor: Complex64,
}

impl<K: Kernel> Kernel for ScaledKernel<K> {
    fn eval(&self, g: GroupElement) -> Complex64 {
        self.inner.eval(g) * self.factor
    }
    fn eval_row(&self, a: f64, b0: f64, db: f64, out: &mut [Complex64]) {
        self.inner.eval_row(a, b0, db, out);
        for o in out.iter_mut() {
            *o *= self.factor;
        }
    }
}

/// `(F * K)(y) = Σ_x w_x F(x) K(x^{-1} y)` by direct summation over nodes.
///
/// Quadratic in the node count; the reference for [`convolve`].
pub fn convolve_direct<K: Kernel + ?Sized>(f: &GridFunction, k: &K) -> GridFunction {
    let grid = f.grid().clone();
    let src: Vec<(GroupElement, Complex64)> = (0..grid.len())
        .filter(|&x| f.values[x] != Complex64::new(0.0, 0.0))
        .map(|x| (grid.node(x), f.values[x] * grid.weight(x)))
        .collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|y| {
            let gy = grid.node(y);
            let mut acc = Complex64::new(0.0, 0.0);
            for (gx, wf) in &src {
                acc += wf * k.eval(gx.inverse_times(&gy));
            }
            acc
        })
        .collect();
    GridFunction::from_parts(grid, values, f.p)
}

/// Group convolution computed row by row with FFTs along `b`.
///
/// For a source row at scale `a_i` and a target row at `a_j` the kernel
/// argument is `(a_j / a_i, (b_n − b_m) / a_i)`, a function of `n − m`
/// only, so each row pair is a linear convolution along the `b` axis.
pub fn convolve<K: Kernel + ?Sized>(f: &GridFunction, k: &K) -> GridFunction {
    let grid = f.grid().clone();
    let (na, nb) = (grid.n_a(), grid.n_b());
    let len = (2 * nb - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let db = grid.b_axis().step();
    let zero = Complex64::new(0.0, 0.0);

    // spectra of the non-zero source rows, pre-weighted
    let rows: Vec<(usize, Vec<Complex64>)> = (0..na)
        .into_par_iter()
        .filter_map(|i| {
            let row = &f.values[i * nb..(i + 1) * nb];
            if row.iter().all(|v| *v == zero) {
                return None;
            }
            let w = grid.row_weight(i);
            let mut buf = vec![zero; len];
            for (d, v) in buf.iter_mut().zip(row) {
                *d = v * w;
            }
            fwd.process(&mut buf);
            Some((i, buf))
        })
        .collect();

    let out_rows: Vec<Vec<Complex64>> = (0..na)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![zero; len];
            let mut kbuf = vec![zero; len];
            let mut krow = vec![zero; 2 * nb - 1];
            let mut scratch = vec![zero; fwd.get_inplace_scratch_len()];
            let aj = grid.scale(j);
            for (i, spec) in &rows {
                let ai = grid.scale(*i);
                k.eval_row(aj / ai, -((nb - 1) as f64) * db / ai, db / ai, &mut krow);
                if krow.iter().all(|v| *v == zero) {
                    continue;
                }
                kbuf.iter_mut().for_each(|v| *v = zero);
                // offset d = n - m in [-(nb-1), nb-1] lands at d mod len
                for (idx, v) in krow.iter().enumerate() {
                    let d = idx as isize - (nb as isize - 1);
                    kbuf[d.rem_euclid(len as isize) as usize] = *v;
                }
                fwd.process_with_scratch(&mut kbuf, &mut scratch);
                for ((a, s), kv) in acc.iter_mut().zip(spec).zip(&kbuf) {
                    *a += s * kv;
                }
            }
            inv.process_with_scratch(&mut acc, &mut scratch);
            let scale = 1.0 / len as f64;
            acc.truncate(nb);
            acc.iter_mut().for_each(|v| *v *= scale);
            acc
        })
        .collect();

    let values = out_rows.into_iter().flatten().collect();
    GridFunction::from_parts(grid, values, f.p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Left (`y -> F(x^{-1} y)`) or right (`y -> F(y x)`) translate.
///
/// Returns the translate together with the fraction of the `L^p` mass of `F`
/// (`L^2` for `p = inf`) carried outside the box. Fails if the fraction
/// exceeds `cap`.
pub fn translate(f: &GridFunction, x: GroupElement, side: Side, cap: f64) -> Result<(GridFunction, f64)> {
    let grid = f.grid().clone();
    let q = if f.p.is_infinite() { 2.0 } else { f.p.value() };
    let xi = x.inverse();
    let mut lost = 0.0;
    let mut total = 0.0;
    for k in 0..grid.len() {
        let m = grid.weight(k) * f.values[k].norm().powf(q);
        total += m;
        let z = grid.node(k);
        let image = match side {
            Side::Left => x * z,
            Side::Right => z * xi,
        };
        if !grid.in_box(image) {
            lost += m;
        }
    }
    let fraction = if total > 0.0 { lost / total } else { 0.0 };
    if fraction > cap {
        return Err(Error::OutOfBox { fraction, cap });
    }
    let out = GridFunction::from_fn(grid, f.p, |y| match side {
        Side::Left => f.sample(x.inverse_times(&y)),
        Side::Right => f.sample(y * x),
    });
    Ok((out, fraction))
}

/// `‖K*K − K‖_p / ‖K‖_p` with `K` tabulated on `grid`.
pub fn kernel_idempotency_residual<K: Kernel + ?Sized>(k: &K, grid: Arc<HaarGrid>, p: Exponent) -> Result<f64> {
    let table = GridFunction::from_kernel(grid, p, k);
    let kk = convolve(&table, k);
    kk.relative_distance(&table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn affine_measure_is_exact() {
        let g = HaarGrid::default_affine();
        let rel = (g.total_measure() - g.box_measure()).abs() / g.box_measure();
        assert!(rel < 1e-10, "{rel}");
        assert!(g.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn norm_examples() {
        let g = Arc::new(HaarGrid::affine(0.5, 4.0, 30, -2.0, 2.0, 40).unwrap());
        let z = GridFunction::zeros(g.clone(), Exponent::ONE);
        assert_eq!(z.lp_norm(), 0.0);
        let one = GridFunction::from_fn(g.clone(), Exponent::ONE, |_| c(1.0));
        assert!((one.lp_norm() - g.box_measure()).abs() < 1e-12 * g.box_measure());
        assert!(Exponent::new(0.5).is_err());
    }

    #[test]
    fn indicator_integral_matches_analytic() {
        // cells aligned with [1,2] x [0,1]: log-axis over [0, ln 4], b over [-1, 2]
        let g = Arc::new(HaarGrid::affine(1.0, 4.0, 40, -1.0, 2.0, 60).unwrap());
        let f = GridFunction::from_fn(g, Exponent::ONE, |x| {
            if x.a() < 2.0 && x.b() > 0.0 && x.b() < 1.0 {
                c(1.0)
            } else {
                c(0.0)
            }
        });
        assert!((f.lp_norm() - 0.5).abs() < 1e-12, "{}", f.lp_norm());
    }

    #[test]
    fn real_line_box_convolution_peak() {
        let g = Arc::new(HaarGrid::real_line(-2.0, 3.0, 500).unwrap());
        let bx = |x: f64| if (0.0..=1.0).contains(&x) { c(1.0) } else { c(0.0) };
        let f = GridFunction::from_fn(g.clone(), Exponent::TWO, |x| bx(x.b()));
        let k = FnKernel::new(|x: GroupElement| bx(x.b()));
        let out = convolve(&f, &k);
        let y = GroupElement::translation(1.0);
        assert!((out.sample(y).re - 1.0).abs() < 2e-2);
    }

    #[test]
    fn fast_matches_direct() {
        let g = Arc::new(HaarGrid::affine(0.25, 4.0, 12, -3.0, 3.0, 24).unwrap());
        let f = GridFunction::from_fn(g, Exponent::TWO, |x| {
            Complex64::new((-(x.b() * x.b()) - x.log_a().powi(2)).exp(), 0.3 * x.b())
        });
        let k = FnKernel::new(|x: GroupElement| Complex64::new(1.0, 0.0) / Complex64::new(1.0 + x.a(), -x.b()).powi(3));
        let fast = convolve(&f, &k);
        let direct = convolve_direct(&f, &k);
        let err = fast.relative_distance(&direct).unwrap();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn involution_example() {
        let k = FnKernel::new(|x: GroupElement| Complex64::new(x.a(), x.b()));
        let kv = involution(&k);
        let v = kv.eval(GroupElement::new(2.0, 3.0).unwrap());
        assert_eq!(v, Complex64::new(0.5, -1.5));
        let kvv = involution(involution(&k));
        let x = GroupElement::new(1.7, -0.4).unwrap();
        assert!((kvv.eval(x) - k.eval(x)).norm() < 1e-15);
    }

    #[test]
    fn real_line_translation() {
        let g = Arc::new(HaarGrid::real_line(-4.0, 4.0, 800).unwrap());
        let f = GridFunction::from_fn(g.clone(), Exponent::TWO, |x| {
            if (0.0..1.0).contains(&x.b()) { c(1.0) } else { c(0.0) }
        });
        let (t, lost) = translate(&f, GroupElement::translation(0.5), Side::Left, 0.0).unwrap();
        assert_eq!(lost, 0.0);
        let at = |x: f64| t.sample(GroupElement::translation(x)).re;
        assert!((at(0.75) - 1.0).abs() < 1e-12 && (at(1.4) - 1.0).abs() < 1e-12);
        assert!(at(0.25).abs() < 1e-12 && at(1.6).abs() < 1e-12);
        assert!((t.lp_norm() - f.lp_norm()).abs() < 1e-12);
        let (id, _) = translate(&f, GroupElement::IDENTITY, Side::Right, 0.0).unwrap();
        assert!(id.relative_distance(&f).unwrap() < 1e-14);
        assert!(matches!(
            translate(&f, GroupElement::translation(3.5), Side::Left, 0.1),
            Err(Error::OutOfBox { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let g = Arc::new(HaarGrid::affine(0.5, 2.0, 3, -1.0, 1.0, 4).unwrap());
        let f = GridFunction::from_fn(g.clone(), Exponent::TWO, |x| Complex64::new(x.a(), x.b()));
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("log_a,b,re,im\n"));
        let back = GridFunction::read_csv(g, Exponent::TWO, &buf[..]).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn descriptor_round_trip() {
        let g = HaarGrid::default_affine();
        let s = serde_json::to_string(&g).unwrap();
        let back: HaarGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn axis_stencil_and_ranges() {
        let ax = Axis::new(0.0, 1.0, 10).unwrap();
        assert_eq!(ax.stencil(0.02), Some((0, 0, 0.0)));
        let (i0, i1, w) = ax.stencil(0.1).unwrap();
        assert_eq!((i0, i1), (0, 1));
        assert!((w - 0.5).abs() < 1e-12);
        assert!(ax.stencil(1.2).is_none());
        assert_eq!(ax.index_range(0.1, 0.4), 1..4);
        assert_eq!(ax.index_range(-1.0, 2.0), 0..10);
        assert_eq!(ax.index_range(2.0, 3.0), 0..0);
    }
}
