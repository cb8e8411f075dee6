//! Relatively separated sample sets, partitions of unity, sequence-space
//! norms and local oscillation estimates.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{weighted_lp_norm, Exponent, GridFunction, HaarGrid, Kernel, Side};
use crate::group::{exp_coords, Basis, EpsNeighborhood, GroupElement, GroupKind, MultiIndex};
use crate::quadrature::{gauss_legendre_on, linspace};

/// Compressed incidence lists between samples and grid nodes.
#[derive(Clone, Debug, Default)]
struct Incidence {
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl Incidence {
    fn row(&self, i: usize) -> &[u32] {
        &self.items[self.offsets[i]..self.offsets[i + 1]]
    }

    fn from_rows(rows: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut items = Vec::new();
        for r in rows {
            items.extend_from_slice(&r);
            offsets.push(items.len());
        }
        Self { offsets, items }
    }

    fn transpose(&self, n_cols: usize) -> Self {
        let mut counts = vec![0usize; n_cols + 1];
        for &c in &self.items {
            counts[c as usize + 1] += 1;
        }
        for k in 0..n_cols {
            counts[k + 1] += counts[k];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; self.items.len()];
        for r in 0..self.offsets.len() - 1 {
            for &c in self.row(r) {
                items[fill[c as usize]] = r as u32;
                fill[c as usize] += 1;
            }
        }
        Self { offsets: counts, items }
    }
}

/// Lattice parameters of a sample set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub eps: f64,
    /// Spacing relative to the neighbourhood width `2 eps`, `0 < rho <= 1`.
    pub rho: f64,
    pub jitter: f64,
    pub seed: u64,
}

impl LatticeParams {
    pub fn new(eps: f64, rho: f64, jitter: f64, seed: u64) -> Self {
        Self { eps, rho, jitter, seed }
    }
}

/// Sample points `x_i` with the neighbourhood `U_eps`, verified on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct SampleSet {
    kind: GroupKind,
    points: Vec<GroupElement>,
    params: LatticeParams,
    overlap_n: usize,
    max_multiplicity: usize,
    covering_ok: bool,
    uncovered: usize,
    #[serde(skip)]
    grid: Arc<HaarGrid>,
    #[serde(skip)]
    sample_nodes: Incidence,
    #[serde(skip)]
    node_samples: Incidence,
}

impl SampleSet {
    /// Build from explicit points, computing incidence, covering and overlap.
    pub fn from_points(points: Vec<GroupElement>, params: LatticeParams, grid: Arc<HaarGrid>) -> Result<Self> {
        let nb = EpsNeighborhood::new(params.eps)?;
        let kind = grid.kind();
        let eps = nb.eps();
        let rows: Vec<Vec<u32>> = points
            .par_iter()
            .map(|x| neighborhood_nodes(&grid, &nb, *x, eps))
            .collect();
        let sample_nodes = Incidence::from_rows(rows);
        let node_samples = sample_nodes.transpose(grid.len());
        let mut uncovered = 0;
        let mut max_multiplicity = 0;
        for k in 0..grid.len() {
            let m = node_samples.row(k).len();
            if m == 0 {
                uncovered += 1;
            }
            max_multiplicity = max_multiplicity.max(m);
        }
        let overlap_n = overlap_from_incidence(&sample_nodes, &node_samples, points.len());
        Ok(Self {
            kind,
            points,
            params,
            overlap_n,
            max_multiplicity,
            covering_ok: uncovered == 0,
            uncovered,
            grid,
            sample_nodes,
            node_samples,
        })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn points(&self) -> &[GroupElement] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.params.eps
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    /// `sup_i #{j : x_i U ∩ x_j U contains a grid node}`, counting `i` itself.
    pub fn overlap_n(&self) -> usize {
        self.overlap_n
    }

    /// Largest number of neighbourhoods containing a single grid node.
    pub fn max_multiplicity(&self) -> usize {
        self.max_multiplicity
    }

    pub fn covering_ok(&self) -> bool {
        self.covering_ok
    }

    pub fn uncovered(&self) -> usize {
        self.uncovered
    }

    pub fn grid(&self) -> &Arc<HaarGrid> {
        &self.grid
    }

    /// Grid nodes inside `x_i U_eps`.
    pub fn nodes_of(&self, i: usize) -> &[u32] {
        self.sample_nodes.row(i)
    }

    /// Samples whose neighbourhood contains node `k`.
    pub fn samples_at(&self, k: usize) -> &[u32] {
        self.node_samples.row(k)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("sample set serializes")
    }
}

fn neighborhood_nodes(grid: &HaarGrid, nb: &EpsNeighborhood, x: GroupElement, eps: f64) -> Vec<u32> {
    let mut out = Vec::new();
    let rows = match grid.kind() {
        GroupKind::Affine => grid.log_a_axis().index_range(x.log_a() - eps * 1.0000001, x.log_a() + eps * 1.0000001),
        GroupKind::RealLine => 0..1,
    };
    for i in rows {
        let a = grid.scale(i);
        let half = eps * a * 1.0000001;
        for n in grid.b_axis().index_range(x.b() - half, x.b() + half) {
            let y = grid.node_at(i, n);
            if nb.contains_translate(x, y) {
                out.push(grid.index(i, n) as u32);
            }
        }
    }
    out
}

fn overlap_from_incidence(sample_nodes: &Incidence, node_samples: &Incidence, n: usize) -> usize {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut seen: Vec<u32> = vec![i as u32];
            for &k in sample_nodes.row(i) {
                seen.extend_from_slice(node_samples.row(k as usize));
            }
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        })
        .max()
        .unwrap_or(0)
}

/// Jittered lattice in exponential coordinates covering the grid's box.
///
/// Coordinate spacings are at most `2 rho eps` in `t1` and
/// `2 rho eps e^{-rho eps}` in `t2`, shrunk so that a whole number of cells
/// fits the box; each point is moved by a right shift `exp_coords(j1, j2)` with
/// `|j_k|` up to `jitter` half-spacings.
/// Fails with the uncovered node count if the union of neighbourhoods
/// misses a grid node.
pub fn generate_separated_set(params: LatticeParams, grid: Arc<HaarGrid>) -> Result<SampleSet> {
    let LatticeParams { eps, rho, jitter, seed } = params;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 1], got {rho}")));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::InvalidParameter(format!("jitter must lie in [0, 1), got {jitter}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bax = *grid.b_axis();
    let width = bax.max - bax.min;
    let centre = 0.5 * (bax.min + bax.max);
    let mut points = Vec::new();
    match grid.kind() {
        GroupKind::RealLine => {
            let n = (width / (2.0 * rho * eps)).ceil().max(1.0) as usize;
            let d = width / n as f64;
            for k in 0..n {
                let j = rng.random_range(-1.0..=1.0) * jitter * d / 2.0;
                let x = (bax.min + (k as f64 + 0.5) * d + j).clamp(bax.min, bax.max);
                points.push(GroupElement::translation(x));
            }
        }
        GroupKind::Affine => {
            let tax = *grid.log_a_axis();
            let span = tax.max - tax.min;
            if 2.0 * rho * eps > span || 2.0 * rho * eps * (-rho * eps).exp() * grid.a_min() > width {
                return Err(Error::InvalidParameter(format!("eps = {eps} too large for the truncation box")));
            }
            let n1 = (span / (2.0 * rho * eps)).ceil() as usize;
            let d1 = span / n1 as f64;
            let d2_max = 2.0 * rho * eps * (-rho * eps).exp();
            for r in 0..n1 {
                let t_row = tax.min + (r as f64 + 0.5) * d1;
                let a_row = t_row.exp();
                // t2 range so that centre + a_row t2 spans [b_min, b_max]
                let half_t2 = 0.5 * width / a_row;
                let n2 = (2.0 * half_t2 / d2_max).ceil().max(1.0) as usize;
                let d2 = 2.0 * half_t2 / n2 as f64;
                for k in 0..n2 {
                    let j1 = rng.random_range(-1.0..=1.0) * jitter * d1 / 2.0;
                    let j2 = rng.random_range(-1.0..=1.0) * jitter * d2 / 2.0;
                    let t2 = -half_t2 + (k as f64 + 0.5) * d2;
                    // lattice point, then jitter as a local right shift
                    let x = GroupElement::translation(centre) * exp_coords(t_row, t2) * exp_coords(j1, j2);
                    let t1 = x.log_a().clamp(tax.min, tax.max);
                    let b = x.b().clamp(bax.min, bax.max);
                    points.push(GroupElement::from_log_scale(t1, b));
                }
            }
        }
    }
    let set = SampleSet::from_points(points, params, grid)?;
    if !set.covering_ok {
        return Err(Error::CoveringFailed { uncovered: set.uncovered });
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BupuKind {
    Indicator,
    Smooth,
}

/// Partition of unity subordinate to the neighbourhoods of a sample set.
#[derive(Clone, Debug, Serialize)]
pub struct Bupu {
    kind: BupuKind,
    /// Per sample: `(node, psi_i(node))`, sorted by node.
    by_sample: Vec<Vec<(u32, f64)>>,
    /// Per node: `(sample, psi_i(node))`.
    #[serde(skip)]
    by_node: Vec<Vec<(u32, f64)>>,
    masses: Vec<f64>,
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Coordinates `(s1, s2)` of `x^{-1} y` in `e^{s1 X1} e^{s2 X2}`.
#[inline]
fn local_coords(x: GroupElement, y: GroupElement) -> (f64, f64) {
    ((y.a() / x.a()).ln(), (y.b() - x.b()) / y.a())
}

pub fn build_bupu(set: &SampleSet, kind: BupuKind) -> Result<Bupu> {
    if !set.covering_ok {
        return Err(Error::CoveringFailed { uncovered: set.uncovered });
    }
    let grid = set.grid.clone();
    let eps = set.eps();
    let by_node: Vec<Vec<(u32, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let y = grid.node(k);
            let cands = set.samples_at(k);
            let nearest = || {
                let mut best = cands[0];
                let mut best_d = f64::INFINITY;
                for &i in cands {
                    let (s1, s2) = local_coords(set.points[i as usize], y);
                    let d = s1.abs().max(s2.abs());
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                vec![(best, 1.0)]
            };
            match kind {
                BupuKind::Indicator => nearest(),
                BupuKind::Smooth => {
                    let betas: Vec<(u32, f64)> = cands
                        .iter()
                        .map(|&i| {
                            let (s1, s2) = local_coords(set.points[i as usize], y);
                            (i, bump(s1 / eps) * bump(s2 / eps))
                        })
                        .filter(|(_, b)| *b > 0.0)
                        .collect();
                    let total: f64 = betas.iter().map(|(_, b)| b).sum();
                    if total > 0.0 {
                        betas.into_iter().map(|(i, b)| (i, b / total)).collect()
                    } else {
                        // only on the boundary of every neighbourhood
                        nearest()
                    }
                }
            }
        })
        .collect();
    let mut by_sample: Vec<Vec<(u32, f64)>> = vec![Vec::new(); set.len()];
    for (k, entries) in by_node.iter().enumerate() {
        for &(i, w) in entries {
            by_sample[i as usize].push((k as u32, w));
        }
    }
    let masses = by_sample
        .iter()
        .map(|e| e.iter().map(|&(k, w)| w * grid.weight(k as usize)).sum())
        .collect();
    Ok(Bupu { kind, by_sample, by_node, masses })
}

impl Bupu {
    pub fn kind(&self) -> BupuKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// `c_i = ∫ psi_i dμ`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Non-zero nodes of `psi_i` with their values.
    pub fn entries(&self, i: usize) -> &[(u32, f64)] {
        &self.by_sample[i]
    }

    /// Non-zero `psi_i` at node `k`.
    pub fn at_node(&self, k: usize) -> &[(u32, f64)] {
        &self.by_node[k]
    }

    /// `psi_i` as a grid function.
    pub fn function(&self, i: usize, grid: Arc<HaarGrid>, p: Exponent) -> GridFunction {
        let mut f = GridFunction::zeros(grid, p);
        for &(k, w) in &self.by_sample[i] {
            f.values_mut()[k as usize] = Complex64::new(w, 0.0);
        }
        f
    }

    /// `Σ_i psi_i` at every node.
    pub fn sum(&self) -> Vec<f64> {
        self.by_node.iter().map(|e| e.iter().map(|(_, w)| w).sum()).collect()
    }

    /// `Σ_i c_i psi_i`, i.e. `Σ_i coef_i psi_i` on the grid.
    pub fn assemble(&self, coef: &[Complex64], grid: Arc<HaarGrid>, p: Exponent) -> GridFunction {
        let values = self
            .by_node
            .iter()
            .map(|e| e.iter().map(|&(i, w)| coef[i as usize] * w).sum())
            .collect();
        GridFunction::new(grid, values, p).expect("finite coefficients")
    }

    /// `λ_i(F) = ∫ F psi_i dμ`.
    pub fn functionals(&self, f: &GridFunction) -> Vec<Complex64> {
        let g = f.grid();
        self.by_sample
            .iter()
            .map(|e| e.iter().map(|&(k, w)| f.values()[k as usize] * (w * g.weight(k as usize))).sum())
            .collect()
    }
}

/// Coefficients indexed like a sample set.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceCoefficients {
    pub values: Vec<Complex64>,
    pub p: Exponent,
}

impl SequenceCoefficients {
    pub fn new(values: Vec<Complex64>, p: Exponent) -> Self {
        Self { values, p }
    }

    /// Point values `F(x_i)` by grid interpolation.
    pub fn sample(f: &GridFunction, set: &SampleSet) -> Self {
        Self { values: set.points.iter().map(|&x| f.sample(x)).collect(), p: f.p() }
    }
}

/// `‖Σ_i |λ_i| 1_{x_i U}‖_p` on the sample set's grid.
pub fn bseq_norm(lam: &SequenceCoefficients, set: &SampleSet) -> Result<f64> {
    if lam.values.len() != set.len() {
        return Err(Error::InvalidParameter(format!(
            "{} coefficients for {} samples",
            lam.values.len(),
            set.len()
        )));
    }
    let grid = &set.grid;
    let mags: Vec<f64> = lam.values.iter().map(|v| v.norm()).collect();
    let it = (0..grid.len()).map(|k| {
        let s: f64 = set.samples_at(k).iter().map(|&i| mags[i as usize]).sum();
        (grid.weight(k), s)
    });
    Ok(weighted_lp_norm(it, lam.p))
}

/// Points `u` of the `resolution`-point lattice of `U_eps` per axis.
fn u_lattice(kind: GroupKind, eps: f64, resolution: usize) -> Vec<(f64, f64)> {
    let ts = linspace(-eps, eps, resolution);
    match kind {
        GroupKind::RealLine => ts.iter().map(|&t| (0.0, t)).collect(),
        GroupKind::Affine => ts.iter().flat_map(|&t1| ts.iter().map(move |&t2| (t1, t2))).collect(),
    }
}

/// `x u^{-1}` (right) or `u x` (left) for `u = e^{t1 X1} e^{t2 X2}`.
#[inline]
fn shifted(x: GroupElement, t1: f64, t2: f64, side: Side) -> GroupElement {
    match side {
        Side::Right => GroupElement::raw(x.a() * (-t1).exp(), x.b() - x.a() * t2),
        Side::Left => {
            let e = t1.exp();
            GroupElement::raw(e * x.a(), e * (x.b() + t2))
        }
    }
}

/// `sup_{u ∈ U_eps} |F(x u^{-1}) − F(x)|` (right) or `|F(u x) − F(x)|` (left)
/// over a finite lattice of `u`, skipping shifts that leave the box.
pub fn oscillation_sup(f: &GridFunction, eps: f64, side: Side, resolution: usize) -> Result<GridFunction> {
    if resolution < 3 {
        return Err(Error::InvalidParameter(format!("u resolution must be >= 3, got {resolution}")));
    }
    EpsNeighborhood::new(eps)?;
    let grid = f.grid().clone();
    let us = u_lattice(grid.kind(), eps, resolution);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.node(k);
            let fx = f.values()[k];
            let mut m: f64 = 0.0;
            for &(t1, t2) in &us {
                let y = shifted(x, t1, t2, side);
                if grid.in_box(y) {
                    m = m.max((f.sample(y) - fx).norm());
                }
            }
            Complex64::new(m, 0.0)
        })
        .collect();
    Ok(GridFunction::from_parts(grid, values, f.p()))
}

/// Sum over `(α, δ)` with `|δ| = |α|` of the iterated integrals
/// `∫…∫ |R^α F(x τ_δ(t)^{-1})| dt^δ` (or `|L^α F(τ_δ(t) x)|` on the left),
/// with `quad_nodes` Gauss–Legendre nodes per integral.
pub fn oscillation_derivative_bound(
    derivs: &BTreeMap<MultiIndex, GridFunction>,
    eps: f64,
    side: Side,
    quad_nodes: usize,
) -> Result<GridFunction> {
    EpsNeighborhood::new(eps)?;
    let first = derivs.values().next().ok_or(Error::Empty("derivative map"))?;
    let grid = first.grid().clone();
    let kind = grid.kind();
    let dim = kind.directions().len();
    let alphas: Vec<MultiIndex> = MultiIndex::all_up_to_two(kind).into_iter().filter(|a| a.order() <= dim).collect();
    for a in &alphas {
        if !derivs.contains_key(a) {
            return Err(Error::MissingDerivative(a.to_string()));
        }
    }
    let (tq, wq) = gauss_legendre_on(quad_nodes.max(1), -eps, eps);
    // δ patterns as (uses t1, uses t2); the real line has only the X2 axis
    let deltas_for = |order: usize| -> Vec<(bool, bool)> {
        match (kind, order) {
            (GroupKind::RealLine, 1) => vec![(false, true)],
            (GroupKind::Affine, 1) => vec![(true, false), (false, true)],
            (GroupKind::Affine, 2) => vec![(true, true)],
            _ => vec![],
        }
    };
    let mut total = vec![0.0f64; grid.len()];
    for a in &alphas {
        let d = &derivs[a];
        for (u1, u2) in deltas_for(a.order()) {
            let t1s: Vec<(f64, f64)> = if u1 { tq.iter().copied().zip(wq.iter().copied()).collect() } else { vec![(0.0, 1.0)] };
            let t2s: Vec<(f64, f64)> = if u2 { tq.iter().copied().zip(wq.iter().copied()).collect() } else { vec![(0.0, 1.0)] };
            let term: Vec<f64> = (0..grid.len())
                .into_par_iter()
                .map(|k| {
                    let x = grid.node(k);
                    let mut s = 0.0;
                    for &(t1, w1) in &t1s {
                        for &(t2, w2) in &t2s {
                            s += w1 * w2 * d.sample(shifted(x, t1, t2, side)).norm();
                        }
                    }
                    s
                })
                .collect();
            for (t, v) in total.iter_mut().zip(term) {
                *t += v;
            }
        }
    }
    let values = total.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    Ok(GridFunction::from_parts(grid, values, first.p()))
}

/// `x e^{s X}` for a basis vector.
#[inline]
fn right_step(x: GroupElement, k: Basis, s: f64) -> GroupElement {
    match k {
        Basis::X1 => GroupElement::raw(x.a() * s.exp(), x.b()),
        Basis::X2 => GroupElement::raw(x.a(), x.b() + x.a() * s),
    }
}

/// `e^{s X} x` for a basis vector.
#[inline]
fn left_step(x: GroupElement, k: Basis, s: f64) -> GroupElement {
    match k {
        Basis::X1 => {
            let e = s.exp();
            GroupElement::raw(x.a() * e, x.b() * e)
        }
        Basis::X2 => GroupElement::raw(x.a(), x.b() + s),
    }
}

fn check_step(grid: &HaarGrid, h: f64) -> Result<()> {
    let span_b = grid.b_axis().max - grid.b_axis().min;
    let limit = match grid.kind() {
        GroupKind::Affine => span_b.min(grid.log_a_axis().max - grid.log_a_axis().min) / 8.0,
        GroupKind::RealLine => span_b / 8.0,
    };
    if !(h > 0.0) || h > limit {
        return Err(Error::StepTooLarge { h, limit });
    }
    Ok(())
}

fn derivatives<K: Kernel + ?Sized>(
    f: &K,
    grid: Arc<HaarGrid>,
    p: Exponent,
    order: usize,
    h: f64,
    side: Side,
) -> Result<BTreeMap<MultiIndex, GridFunction>> {
    if order == 0 || order > 2 {
        return Err(Error::OrderTooHigh(order));
    }
    check_step(&grid, h)?;
    let kind = grid.kind();
    let step = move |x: GroupElement, k: Basis, s: f64| match side {
        Side::Right => right_step(x, k, s),
        Side::Left => left_step(x, k, s),
    };
    let mut out = BTreeMap::new();
    for alpha in MultiIndex::all_up_to_two(kind) {
        if alpha.order() > order {
            continue;
        }
        let w = alpha.word().to_vec();
        let g = GridFunction::from_fn(grid.clone(), p, |x| match w.len() {
            1 => (f.eval(step(x, w[0], h)) - f.eval(step(x, w[0], -h))) / (2.0 * h),
            _ => {
                // R(X_j) R(X_i) F(x) = ∂s ∂t F(x e^{s X_j} e^{t X_i});
                // L(X_j) L(X_i) F(x) = ∂s ∂t F(e^{t X_i} e^{s X_j} x)
                let (i, j) = (w[0], w[1]);
                let at = |s: f64, t: f64| match side {
                    Side::Right => f.eval(right_step(right_step(x, j, s), i, t)),
                    Side::Left => f.eval(left_step(left_step(x, j, s), i, t)),
                };
                (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h)
            }
        });
        out.insert(alpha, g);
    }
    Ok(out)
}

/// Right derivatives `R^α F` for `1 <= |α| <= order` by central differences.
pub fn right_derivatives<K: Kernel + ?Sized>(
    f: &K,
    grid: Arc<HaarGrid>,
    p: Exponent,
    order: usize,
    h: f64,
) -> Result<BTreeMap<MultiIndex, GridFunction>> {
    derivatives(f, grid, p, order, h, Side::Right)
}

/// Left derivatives `L^α F` for `1 <= |α| <= order` by central differences.
pub fn left_derivatives<K: Kernel + ?Sized>(
    f: &K,
    grid: Arc<HaarGrid>,
    p: Exponent,
    order: usize,
    h: f64,
) -> Result<BTreeMap<MultiIndex, GridFunction>> {
    derivatives(f, grid, p, order, h, Side::Left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FnKernel;

    fn affine_grid() -> Arc<HaarGrid> {
        Arc::new(HaarGrid::affine(0.25, 4.0, 24, -4.0, 4.0, 64).unwrap())
    }

    #[test]
    fn real_line_uniform_lattice() {
        let g = Arc::new(HaarGrid::real_line(-10.0, 10.0, 2000).unwrap());
        let delta = 0.5;
        let s = generate_separated_set(LatticeParams::new(delta / 2.0, 1.0, 0.0, 1), g).unwrap();
        let xs: Vec<f64> = s.points().iter().map(|p| p.b()).collect();
        let gap = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!((gap - delta).abs() < 1e-12);
        assert!(s.overlap_n() <= 2, "{}", s.overlap_n());
    }

    #[test]
    fn affine_tiling_lattice() {
        let s = generate_separated_set(LatticeParams::new(0.2, 1.0, 0.0, 3), affine_grid()).unwrap();
        assert!(s.covering_ok());
        assert!(s.overlap_n() <= 4, "{}", s.overlap_n());
    }

    #[test]
    fn deterministic_by_seed() {
        let p = LatticeParams::new(0.2, 0.8, 0.2, 11);
        let a = generate_separated_set(p, affine_grid()).unwrap();
        let b = generate_separated_set(p, affine_grid()).unwrap();
        assert_eq!(a.points(), b.points());
        let c = generate_separated_set(LatticeParams { seed: 12, ..p }, affine_grid()).unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn covering_failure_reports_count() {
        let g = affine_grid();
        let pts = vec![GroupElement::IDENTITY];
        let s = SampleSet::from_points(pts, LatticeParams::new(0.2, 1.0, 0.0, 0), g.clone()).unwrap();
        assert!(!s.covering_ok());
        assert!(s.uncovered() > 0 && s.uncovered() < g.len());
        assert!(matches!(build_bupu(&s, BupuKind::Indicator), Err(Error::CoveringFailed { .. })));
    }

    #[test]
    fn bupu_partitions_unity() {
        let g = affine_grid();
        let s = generate_separated_set(LatticeParams::new(0.2, 0.8, 0.2, 5), g.clone()).unwrap();
        for kind in [BupuKind::Indicator, BupuKind::Smooth] {
            let b = build_bupu(&s, kind).unwrap();
            for v in b.sum() {
                assert!((v - 1.0).abs() < 1e-12);
            }
            for i in 0..s.len() {
                let x = s.points()[i];
                for &(k, w) in b.entries(i) {
                    assert!(w > 0.0);
                    assert!(EpsNeighborhood::new(0.2).unwrap().contains_translate(x, g.node(k as usize)));
                }
            }
        }
        let b = build_bupu(&s, BupuKind::Indicator).unwrap();
        let total: f64 = b.masses().iter().sum();
        assert!((total - g.total_measure()).abs() < 1e-10 * total);
    }

    #[test]
    fn bseq_single_and_zero() {
        let g = Arc::new(HaarGrid::affine(0.25, 4.0, 96, -4.0, 4.0, 512).unwrap());
        let s = generate_separated_set(LatticeParams::new(0.2, 0.8, 0.0, 5), g.clone()).unwrap();
        let mut lam = vec![Complex64::new(0.0, 0.0); s.len()];
        let zero = SequenceCoefficients::new(lam.clone(), Exponent::TWO);
        assert_eq!(bseq_norm(&zero, &s).unwrap(), 0.0);
        // a sample well inside the box
        let i = (0..s.len())
            .min_by(|&a, &b| {
                let d = |k: usize| s.points()[k].log_a().abs() + s.points()[k].b().abs();
                d(a).partial_cmp(&d(b)).unwrap()
            })
            .unwrap();
        lam[i] = Complex64::new(1.0, 0.0);
        let one = SequenceCoefficients::new(lam, Exponent::ONE);
        let mu = 4.0 * 0.2 * 0.2;
        let v = bseq_norm(&one, &s).unwrap();
        assert!((v - mu).abs() < 0.03 * mu, "{v} vs {mu}");
    }

    #[test]
    fn oscillation_of_constant_is_zero() {
        let g = affine_grid();
        let f = GridFunction::from_fn(g, Exponent::TWO, |_| Complex64::new(2.0, 1.0));
        let m = oscillation_sup(&f, 0.1, Side::Right, 5).unwrap();
        assert!(m.max_abs() < 1e-14);
        assert!(oscillation_sup(&f, 0.1, Side::Right, 2).is_err());
    }

    #[test]
    fn real_line_linear_oscillation() {
        let g = Arc::new(HaarGrid::real_line(-5.0, 5.0, 1000).unwrap());
        let f = GridFunction::from_fn(g.clone(), Exponent::TWO, |x| Complex64::new(x.b(), 0.0));
        let d = 0.3;
        let m = oscillation_sup(&f, d, Side::Right, 7).unwrap();
        for k in 100..900 {
            assert!((m.values()[k].re - d).abs() < 1e-9);
        }
    }

    #[test]
    fn real_line_sine_derivative() {
        let g = Arc::new(HaarGrid::real_line(-5.0, 5.0, 200).unwrap());
        let f = FnKernel::new(|x: GroupElement| Complex64::new(x.b().sin(), 0.0));
        let h = 1e-3;
        let d = right_derivatives(&f, g.clone(), Exponent::TWO, 1, h).unwrap();
        let r = &d[&MultiIndex::single(Basis::X2)];
        let err = (0..g.len()).map(|k| (r.values()[k].re - g.node(k).b().cos()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!(right_derivatives(&f, g, Exponent::TWO, 1, 5.0).is_err());
    }

    #[test]
    fn affine_derivatives_of_polynomial() {
        // F(a, b) = a b: R(X1)F = a b, R(X2)F = a^2, R(X1)R(X2)F = 2 a^2 ...
        let g = affine_grid();
        let f = FnKernel::new(|x: GroupElement| Complex64::new(x.a() * x.b(), 0.0));
        let d = right_derivatives(&f, g.clone(), Exponent::TWO, 2, 1e-3).unwrap();
        for k in (0..g.len()).step_by(37) {
            let x = g.node(k);
            let (a, b) = (x.a(), x.b());
            let chk = |alpha: MultiIndex, want: f64| {
                let got = d[&alpha].values()[k].re;
                assert!((got - want).abs() < 1e-5 * (1.0 + want.abs()), "{alpha}: {got} vs {want}");
            };
            chk(MultiIndex::single(Basis::X1), a * b);
            chk(MultiIndex::single(Basis::X2), a * a);
            // R(X2) applied after R(X1): d/ds [ (a e^s)(b + 0) ... ] = R(X2)(a b) = a^2
            chk(MultiIndex::pair(Basis::X1, Basis::X2), a * a);
            // R(X1) after R(X2): R(X1)(a^2) = 2 a^2
            chk(MultiIndex::pair(Basis::X2, Basis::X1), 2.0 * a * a);
            chk(MultiIndex::pair(Basis::X1, Basis::X1), a * b);
            chk(MultiIndex::pair(Basis::X2, Basis::X2), 0.0);
        }
    }

    #[test]
    fn derivative_bound_requires_all_entries() {
        let g = affine_grid();
        let mut m = BTreeMap::new();
        m.insert(MultiIndex::single(Basis::X1), GridFunction::zeros(g, Exponent::TWO));
        assert!(matches!(
            oscillation_derivative_bound(&m, 0.1, Side::Right, 4),
            Err(Error::MissingDerivative(_))
        ));
    }
}
