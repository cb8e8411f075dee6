//! One runner per experiment kind. Each returns its per-trial table and the
//! invariant checks it asserted.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use lie_sampling::bandlimited::{
    bernstein_ratio, frame_ratio, oscillation_bound_check, reconstruct, step_approximation_error, synthesize_random,
    BandlimitedFunction, SamplingSequence, SynthesisParams,
};
use lie_sampling::grid::{kernel_idempotency_residual, Exponent, HaarGrid, Side};
use lie_sampling::group::{adjoint_coeffs, bch_swap, exp_coords, inverse, multiply, GroupElement, GroupKind, MultiIndex};
use lie_sampling::reconstruct::{
    atomic_decompose, contraction, estimate_frame_bounds, member_suite, neumann_invert, sampling_ratio, LinearOperator,
    SamplingOperator,
};
use lie_sampling::report::OperatorKind;
use lie_sampling::sampling::{bseq_norm, build_bupu, generate_separated_set, oscillation_sup, right_derivatives, BupuKind, LatticeParams};
use lie_sampling::wavelet::{
    admissibility_constant, cwt, garding_identity_residual, garding_smooth, intertwining_residual, random_signal,
    reproducing_residual, AnalyticTransform, BumpField, MotherWavelet,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: "<=", bound, passed: value <= bound }
    }

    pub fn lt(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: "<", bound, passed: value < bound }
    }

    pub fn ge(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: ">=", bound, passed: value >= bound }
    }

    /// A yes/no condition, reported as 1 or 0 against 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: f64::from(u8::from(ok)), relation: "==", bound: 1.0, passed: ok }
    }
}

/// Rows of `trials.csv`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub table: Table,
    pub metrics: Map<String, Value>,
    /// `(file name, contents)` of optional function dumps.
    pub dumps: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_experiment(kind: ExperimentKind, c: &ExperimentConfig) -> Result<Outcome, CliError> {
    match kind {
        ExperimentKind::GroupCheck => group_check(c),
        ExperimentKind::KernelCheck => kernel_check(c),
        ExperimentKind::BlFrame => bl_frame(c),
        ExperimentKind::BlReconstruct => bl_reconstruct(c),
        ExperimentKind::AffineOsc => affine_osc(c),
        ExperimentKind::AffineFrame => affine_frame(c),
        ExperimentKind::AffineReconstruct => affine_reconstruct(c, kind),
        ExperimentKind::GardingCheck => garding_check(c),
    }
}

fn affine_grid(c: &ExperimentConfig) -> Result<Arc<HaarGrid>, CliError> {
    let g = &c.grid;
    Ok(Arc::new(HaarGrid::affine(g.a_min, g.a_max, g.n_a, g.b_min, g.b_max, g.n_b)?))
}

fn exponent(c: &ExperimentConfig) -> Result<Exponent, CliError> {
    Ok(Exponent::new(c.p)?)
}

/// Seeds of signal `j` in a study; distinct studies use distinct offsets.
fn signal_seed(c: &ExperimentConfig, offset: u64, j: usize) -> u64 {
    c.seed.wrapping_mul(1_000_003).wrapping_add(offset + j as u64)
}

fn element_dev(g: GroupElement, h: GroupElement) -> f64 {
    let da = (g.a() - h.a()).abs() / g.a().max(h.a());
    let db = (g.b() - h.b()).abs() / 1f64.max(g.b().abs()).max(h.b().abs());
    da.max(db)
}

type Mat = [[f64; 2]; 2];

fn matmul(x: &Mat, y: &Mat) -> Mat {
    let mut z = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    z
}

fn group_check(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let draw = |rng: &mut ChaCha8Rng| GroupElement::from_log_scale(rng.random_range(-3.0..3.0), rng.random_range(-10.0..10.0));
    let mut table = Table::new(&["case", "associativity", "inverse", "bch", "adjoint"]);
    let mut worst = [0.0f64; 4];
    for case in 0..c.group_cases {
        let (x, y, z) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let assoc = element_dev(multiply(multiply(x, y)?, z)?, multiply(x, multiply(y, z)?)?);
        let inv = element_dev(multiply(x, inverse(x)?)?, GroupElement::IDENTITY)
            .max(element_dev(multiply(inverse(x)?, x)?, GroupElement::IDENTITY));
        let (t1, t2) = (rng.random_range(-4.0..4.0), rng.random_range(-10.0..10.0));
        let (s1, s2) = bch_swap(t1, t2);
        let bch = element_dev(
            multiply(exp_coords(0.0, t2), exp_coords(t1, 0.0))?,
            multiply(exp_coords(s1, 0.0), exp_coords(0.0, s2))?,
        );
        // Ad_{y^{-1}} X = Y^{-1} X Y with Y = [[a, b], [0, 1]]
        let ym: Mat = [[y.a(), y.b()], [0.0, 1.0]];
        let yi: Mat = [[1.0 / y.a(), -y.b() / y.a()], [0.0, 1.0]];
        let mut adj = 0.0f64;
        for (k, xm) in [(1usize, [[1.0, 0.0], [0.0, 0.0]]), (2, [[0.0, 1.0], [0.0, 0.0]])] {
            let m = matmul(&matmul(&yi, &xm), &ym);
            let (c1, c2) = adjoint_coeffs(y, k)?;
            let scale = 1f64.max(m[0][0].abs()).max(m[0][1].abs());
            adj = adj.max((c1 - m[0][0]).abs().max((c2 - m[0][1]).abs()) / scale);
        }
        for (w, v) in worst.iter_mut().zip([assoc, inv, bch, adj]) {
            *w = w.max(v);
        }
        table.push(vec![case.to_string(), num(assoc), num(inv), num(bch), num(adj)]);
    }
    let names = ["associativity", "inverse", "bch", "adjoint"];
    let checks = names.iter().zip(worst).map(|(n, w)| Check::le(format!("max {n} deviation"), w, 1e-12)).collect();
    Ok(Outcome { checks, table, ..Default::default() })
}

fn kernel_check(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = affine_grid(c)?;
    let raw = MotherWavelet::paul(c.wavelet_order)?;
    let u = MotherWavelet::paul_normalized(c.wavelet_order)?;
    let quad = admissibility_constant(&raw)?;
    let exact = raw.profile().admissibility_exact()?;
    let idem = kernel_idempotency_residual(&AnalyticTransform::kernel(&u), grid.clone(), Exponent::TWO)?;
    let alphas = MultiIndex::all_up_to_two(GroupKind::Affine);

    let mut header: Vec<String> = ["signal", "isometry", "reproducing"].map(String::from).to_vec();
    header.extend(alphas.iter().map(|a| format!("intertwining_{}", multi_name(a))));
    let mut table = Table::new(&header);
    let mut checks = vec![Check::le("admissibility constant relative error", (quad - exact).abs() / exact, 1e-8)];
    for j in 0..c.signals {
        let f = random_signal(signal_seed(c, 0, j), c.signal_atoms);
        let iso = cwt(&f, &u, grid.clone())?.lp_norm() / f.norm();
        let rep = reproducing_residual(&f, &u, grid.clone())?;
        let mut row = vec![j.to_string(), num(iso), num(rep)];
        checks.push(Check::le(format!("signal {j}: isometry deviation"), (iso - 1.0).abs(), 0.02));
        checks.push(Check::lt(format!("signal {j}: reproducing residual"), rep, 1e-2));
        for a in &alphas {
            let r = intertwining_residual(&f, &u, a, grid.clone(), c.step)?;
            checks.push(Check::lt(format!("signal {j}: intertwining {}", multi_name(a)), r, 1e-4));
            row.push(num(r));
        }
        table.push(row);
    }
    let mut metrics = Map::new();
    metrics.insert("admissibility_quadrature".into(), json!(quad));
    metrics.insert("admissibility_exact".into(), json!(exact));
    metrics.insert("kernel_idempotency_residual".into(), json!(idem));
    Ok(Outcome { checks, table, metrics, ..Default::default() })
}

fn multi_name(a: &MultiIndex) -> String {
    a.word().iter().map(|b| b.index().to_string()).collect::<Vec<_>>().join("")
}

fn bl_params(c: &ExperimentConfig) -> SynthesisParams {
    SynthesisParams { half_window: c.half_window, ..SynthesisParams::default() }
}

fn bl_suite(c: &ExperimentConfig) -> Result<Vec<BandlimitedFunction>, CliError> {
    (0..c.functions)
        .map(|j| Ok(synthesize_random(c.omega, signal_seed(c, 0, j), c.modes, bl_params(c))?))
        .collect()
}

fn bl_frame(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let fs = bl_suite(c)?;
    let window = (-c.half_window, c.half_window);
    let derivs: Vec<f64> = fs.iter().map(|f| f.derivative_norm()).collect();
    let mut table = Table::new(&[
        "level", "sequence", "function", "delta", "admissible", "ratio", "lower", "upper", "step_error", "eq1_bound",
        "oscillation", "eq2_bound", "bernstein",
    ]);
    let mut checks = Vec::new();
    for (li, &level) in c.gap_levels.iter().enumerate() {
        let (lo, hi) = ((1.0 - level).powi(2), (1.0 + level).powi(2));
        let (mut rmin, mut rmax, mut e1, mut e2, mut bern) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut all_admissible = true;
        for s in 0..c.sequences {
            let delta = level * std::f64::consts::PI / c.omega;
            let x = SamplingSequence::jittered(delta, c.sequence_jitter, signal_seed(c, 500_000 + 1000 * li as u64, s), window)?;
            for (j, f) in fs.iter().enumerate() {
                let (r, ok) = frame_ratio(f, &x)?;
                all_admissible &= ok;
                let step = step_approximation_error(f, &x);
                let b1 = x.delta() / std::f64::consts::PI * derivs[j];
                let (osc, b2) = oscillation_bound_check(f, x.delta(), c.sup_resolution)?;
                let br = bernstein_ratio(f);
                rmin = rmin.min(r / lo);
                rmax = rmax.max(r / hi);
                e1 = e1.max(step / b1);
                e2 = e2.max(osc / b2).max(step / (2f64.sqrt() * x.delta() * derivs[j]));
                bern = bern.max(br / c.omega);
                table.push(vec![
                    num(level),
                    s.to_string(),
                    j.to_string(),
                    num(x.delta()),
                    ok.to_string(),
                    num(r),
                    num(lo),
                    num(hi),
                    num(step),
                    num(b1),
                    num(osc),
                    num(b2),
                    num(br),
                ]);
            }
        }
        if all_admissible {
            checks.push(Check::ge(format!("level {level}: min ratio / lower bound"), rmin, 0.98));
            checks.push(Check::le(format!("level {level}: max ratio / upper bound"), rmax, 1.02));
        }
        checks.push(Check::le(format!("level {level}: step error / (δ/π)‖f′‖"), e1, 1.01));
        checks.push(Check::le(format!("level {level}: oscillation or step / √2δ‖f′‖"), e2, 1.01));
        checks.push(Check::le(format!("level {level}: ‖f′‖ / Ω‖f‖"), bern, 1.01));
    }
    Ok(Outcome { checks, table, ..Default::default() })
}

fn bl_reconstruct(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let kind = ExperimentKind::BlReconstruct;
    let fs = bl_suite(c)?;
    let (tol, maxiter) = (c.tol_for(kind), c.maxiter_for(kind));
    let window = (-c.half_window, c.half_window);
    let delta = c.gap * std::f64::consts::PI / c.omega;
    let mut table = Table::new(&["function", "delta", "iterations", "converged", "rate", "error"]);
    let mut checks = Vec::new();
    let mut dumps = Vec::new();
    let (mut worst_err, mut worst_rate, mut most_iter) = (0.0f64, 0.0f64, 0usize);
    let mut all_converged = true;
    for (j, f) in fs.iter().enumerate() {
        let x = SamplingSequence::jittered(delta, c.sequence_jitter, signal_seed(c, 700_000, j), window)?;
        match reconstruct(&x.sample(f), &x, c.omega, tol, maxiter) {
            Ok((g, rep)) => {
                let err = g.relative_error(f);
                worst_err = worst_err.max(err);
                worst_rate = worst_rate.max(rep.fitted_rate.unwrap_or(0.0));
                most_iter = most_iter.max(rep.iterations);
                all_converged &= rep.converged;
                table.push(vec![
                    j.to_string(),
                    num(x.delta()),
                    rep.iterations.to_string(),
                    rep.converged.to_string(),
                    opt(rep.fitted_rate),
                    num(err),
                ]);
                if c.dump_functions && j == 0 {
                    dumps.push(("function_0.csv".into(), dump_bandlimited(&g, f, window)?));
                }
            }
            Err(lie_sampling::Error::Diverged(rep)) => {
                all_converged = false;
                table.push(vec![j.to_string(), num(x.delta()), rep.iterations.to_string(), "false".into(), opt(rep.fitted_rate), String::new()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    checks.push(Check::holds("every run converged", all_converged));
    checks.push(Check::lt("max relative error", worst_err, 1e-6));
    checks.push(Check::le("max iterations", most_iter as f64, maxiter as f64));
    checks.push(Check::le("max fitted rate", worst_rate, c.gap + 0.1));
    Ok(Outcome { checks, table, dumps, ..Default::default() })
}

fn dump_bandlimited(g: &BandlimitedFunction, truth: &BandlimitedFunction, window: (f64, f64)) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "re", "im", "truth_re", "truth_im"])?;
    let n = ((window.1 - window.0) / 0.05).round() as usize;
    for k in 0..=n {
        let x = window.0 + k as f64 * 0.05;
        let (v, t) = (g.eval(x), truth.eval(x));
        w.write_record([num(x), num(v.re), num(v.im), num(t.re), num(t.im)])?;
    }
    w.into_inner().map_err(|e| CliError::Io("function dump".into(), e.into_error()))
}

fn affine_osc(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = affine_grid(c)?;
    let p = exponent(c)?;
    let u = MotherWavelet::paul_normalized(c.wavelet_order)?;
    let mut table = Table::new(&["signal", "eps", "oscillation", "derivatives", "ratio"]);
    let mut checks = Vec::new();
    let levels = c.eps_levels();
    let mut worst_factor = f64::INFINITY;
    for j in 0..c.signals {
        let s = random_signal(signal_seed(c, 0, j), c.signal_atoms);
        let w = cwt(&s, &u, grid.clone())?.with_p(p);
        let d = right_derivatives(&AnalyticTransform::new(&s, &u.profile()), grid.clone(), p, 2, c.step)?;
        let den: f64 = d.values().map(|f| f.lp_norm()).sum();
        let mut ratios = Vec::new();
        for eps in levels {
            let m = oscillation_sup(&w, eps, Side::Right, c.u_resolution)?.lp_norm();
            ratios.push(m / den);
            table.push(vec![j.to_string(), num(eps), num(m), num(den), num(m / den)]);
        }
        checks.push(Check::holds(format!("signal {j}: ratio decreases"), ratios[0] > ratios[1] && ratios[1] > ratios[2]));
        worst_factor = worst_factor.min(ratios[0] / ratios[2]);
    }
    checks.push(Check::ge("min decrease factor over the levels", worst_factor, 2.8));
    Ok(Outcome { checks, table, ..Default::default() })
}

fn sample_set(c: &ExperimentConfig, eps: f64, grid: &Arc<HaarGrid>) -> Result<lie_sampling::sampling::SampleSet, CliError> {
    Ok(generate_separated_set(LatticeParams::new(eps, c.rho, c.jitter, c.seed), grid.clone())?)
}

fn affine_frame(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = affine_grid(c)?;
    let p = exponent(c)?;
    let u = MotherWavelet::paul_normalized(c.wavelet_order)?;
    let kernel = AnalyticTransform::kernel(&u);
    let fit_seeds: Vec<u64> = (0..c.suite).map(|j| signal_seed(c, 0, j)).collect();
    let held_seeds: Vec<u64> = (0..c.held_out).map(|j| signal_seed(c, 0, c.suite + j)).collect();
    let fit = member_suite(fit_seeds, c.signal_atoms, &u, grid.clone(), p)?;
    let held = member_suite(held_seeds, c.signal_atoms, &u, grid.clone(), p)?;
    let mut table = Table::new(&["eps", "role", "function", "ratio"]);
    let mut checks = Vec::new();
    let mut levels = Vec::new();
    let mut prev: Option<f64> = None;
    for eps in c.eps_levels() {
        let set = sample_set(c, eps, &grid)?;
        let fb = estimate_frame_bounds(&set, &kernel, &fit, p)?;
        for (j, r) in fb.ratios.iter().enumerate() {
            table.push(vec![num(eps), "fit".into(), j.to_string(), num(*r)]);
        }
        let mut inside = true;
        for (j, f) in held.iter().enumerate() {
            let r = sampling_ratio(f, &set)?;
            inside &= fb.admits(r, 0.9, 1.1);
            table.push(vec![num(eps), "held-out".into(), j.to_string(), num(r)]);
        }
        checks.push(Check::ge(format!("eps {eps}: A_hat"), fb.a_hat, f64::MIN_POSITIVE));
        checks.push(Check::holds(format!("eps {eps}: held-out ratios in [0.9 A_hat, 1.1 B_hat]"), inside));
        if let Some(c0) = prev {
            checks.push(Check::le(format!("eps {eps}: conditioning growth"), fb.conditioning() / c0, 1.1));
        }
        prev = Some(fb.conditioning());
        levels.push(json!({"eps": eps, "samples": set.len(), "overlap_n": set.overlap_n(), "a_hat": fb.a_hat, "b_hat": fb.b_hat}));
    }
    checks.push(Check::le("conditioning at the smallest eps", prev.unwrap_or(f64::INFINITY), 10.0));
    let mut metrics = Map::new();
    metrics.insert("levels".into(), Value::Array(levels));
    Ok(Outcome { checks, table, metrics, ..Default::default() })
}

fn operator_kind(name: &str) -> Result<OperatorKind, CliError> {
    match name {
        "T1" => Ok(OperatorKind::T1),
        "T2" => Ok(OperatorKind::T2),
        "T3" => Ok(OperatorKind::T3),
        other => Err(CliError::Config(format!("unknown operator {other:?}"))),
    }
}

fn affine_reconstruct(c: &ExperimentConfig, kind: ExperimentKind) -> Result<Outcome, CliError> {
    let grid = affine_grid(c)?;
    let p = exponent(c)?;
    let u = MotherWavelet::paul_normalized(c.wavelet_order)?;
    let kernel = AnalyticTransform::kernel(&u);
    let ops: Vec<OperatorKind> = c.operators.iter().map(|s| operator_kind(s)).collect::<Result<_, _>>()?;
    let seeds: Vec<u64> = (0..c.signals).map(|j| signal_seed(c, 0, j)).collect();
    let suite = member_suite(seeds, c.signal_atoms, &u, grid.clone(), p)?;
    let (tol, maxiter) = (c.tol_for(kind), c.maxiter_for(kind));
    let mut table = Table::new(&[
        "signal", "operator", "eps", "contraction", "iterations", "rate", "error", "synthesis_residual", "coefficient_ratio",
    ]);
    let mut checks = Vec::new();
    let mut dumps = Vec::new();
    let levels = c.eps_levels();
    // q[op][signal][level]
    let mut q = vec![vec![[0.0f64; 3]; suite.len()]; ops.len()];
    let mut coef_const = 0.0f64;
    for (li, &eps) in levels.iter().enumerate() {
        let set = sample_set(c, eps, &grid)?;
        let bupu = build_bupu(&set, BupuKind::Indicator)?;
        for (oi, &op_kind) in ops.iter().enumerate() {
            let op = SamplingOperator::new(op_kind, &set, &bupu, &kernel)?;
            for (j, f) in suite.iter().enumerate() {
                q[oi][j][li] = contraction(&op, f)?;
                let mut row = vec![j.to_string(), format!("{op_kind:?}"), num(eps), num(q[oi][j][li])];
                if li == 0 {
                    let (iters, rate, err) = match neumann_invert(&op, &op.apply(f)?, tol, maxiter) {
                        Ok((h, rep)) => {
                            if c.dump_functions && j == 0 {
                                let mut buf = Vec::new();
                                h.write_csv(&mut buf).map_err(|e| CliError::Io("function dump".into(), e))?;
                                dumps.push((format!("function_{op_kind:?}.csv"), buf));
                            }
                            (rep.iterations, rep.fitted_rate, h.relative_distance(f)?)
                        }
                        Err(lie_sampling::Error::Diverged(rep)) => (rep.iterations, rep.fitted_rate, f64::INFINITY),
                        Err(e) => return Err(e.into()),
                    };
                    checks.push(Check::lt(format!("signal {j} {op_kind:?}: Neumann relative error"), err, 1e-2));
                    row.extend([iters.to_string(), opt(rate), num(err)]);
                    if op_kind == OperatorKind::T2 {
                        let (lam, rep) = atomic_decompose(f, &set, &bupu, &kernel, tol, maxiter)?;
                        let synth = rep.final_error.unwrap_or(f64::INFINITY);
                        let ratio = bseq_norm(&lam, &set)? / f.lp_norm();
                        coef_const = coef_const.max(ratio.max(1.0 / ratio));
                        checks.push(Check::lt(format!("signal {j}: atomic synthesis residual"), synth, 2e-2));
                        row.extend([num(synth), num(ratio)]);
                    } else {
                        row.extend([String::new(), String::new()]);
                    }
                } else {
                    row.extend(std::iter::repeat_n(String::new(), 5));
                }
                table.push(row);
            }
        }
    }
    for (oi, op_kind) in ops.iter().enumerate() {
        for (j, qs) in q[oi].iter().enumerate() {
            checks.push(Check::lt(format!("signal {j} {op_kind:?}: contraction at eps0"), qs[0], 1.0));
            checks.push(Check::holds(format!("signal {j} {op_kind:?}: contraction decreases"), qs[0] > qs[1] && qs[1] > qs[2]));
        }
    }
    let mut metrics = Map::new();
    if ops.contains(&OperatorKind::T2) {
        checks.push(Check::le("coefficient norm constant", coef_const, 10.0));
        metrics.insert("coefficient_norm_constant".into(), json!(coef_const));
    }
    Ok(Outcome { checks, table, metrics, dumps })
}

fn garding_check(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = affine_grid(c)?;
    let u = MotherWavelet::paul_normalized(c.wavelet_order)?.profile();
    let bump = BumpField::normalized_bump(c.garding_radius, c.garding_radius);
    let mut table = Table::new(&["item", "value"]);
    let mut checks = Vec::new();
    for (name, v) in [("signal", random_signal(signal_seed(c, 0, 0), 3)), ("wavelet", u.clone())] {
        let r = garding_identity_residual(&u, &v, &bump, grid.clone())?;
        checks.push(Check::lt(format!("identity residual against {name}"), r, 1e-2));
        table.push(vec![format!("residual_{name}"), num(r)]);
    }
    let (gu, raw) = garding_smooth(&u, &bump)?;
    checks.push(Check::holds("smoothed wavelet admissible", raw.is_finite() && raw > 0.0));
    table.push(vec!["admissibility_raw".into(), num(raw)]);
    for a in MultiIndex::all_up_to_two(GroupKind::Affine) {
        let v = admissibility_constant(&gu.derived(&a)?)?;
        checks.push(Check::holds(format!("derived {} finite", multi_name(&a)), v.is_finite() && v > 0.0));
        table.push(vec![format!("derived_{}", multi_name(&a)), num(v)]);
    }
    Ok(Outcome { checks, table, ..Default::default() })
}
