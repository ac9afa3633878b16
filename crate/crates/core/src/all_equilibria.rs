//! All equilibria by total-degree polynomial homotopy.
//!
//! In each free block the last available coordinate is eliminated through
//! `Σ p = 1`. Every remaining coordinate `j` contributes the cleared equation
//! `G_j = D_b p_j − N_j`, which vanishes exactly where `F_j` does on the
//! interior. The start system `G⁰_j = α_j^{d_j} x_j^{d_j} − β_j^{d_j}` has `d =
//! ∏ d_j` known roots, and `H(x, s) = s G⁰(x) + (1 − s) G(x)` carries each of
//! them from `s = 1` to a root of `G` (or to infinity) at `s = 0`.
//!
//! Paths are tracked in `τ = −ln s` so that the approach to `s = 0` is
//! resolved geometrically.

use std::f64::consts::PI;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decomposition::{decompose, project, recombine};
use crate::equilibrium::{classify, ClassLabel, Provenance, NASH_TOL};
use crate::error::{Error, Result};
use crate::expectations::{Evaluator, REACH_EPS};
use crate::model::{GNet, InfoSet};
use crate::poly::Poly;
use crate::profile::Profile;

/// Largest total degree the solver will attempt.
pub const MAX_PATHS: u128 = 1_000_000;

const PRUNE_REL: f64 = 1e-12;
const TAU_END: f64 = 32.236_191_301_916_64; // −ln 1e-14
const TAU_FAR: f64 = 92.103_403_719_761_84; // −ln 1e-40
const FAR_NORM: f64 = 1e4;
const SNAP: f64 = 1e-9;
const MAX_COMPLETIONS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub seed: u64,
    pub imag_tol: f64,
    pub range_tol: f64,
    pub cluster_radius: f64,
    pub divergence: f64,
    pub residual_tol: f64,
    pub nash_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            imag_tol: 1e-7,
            range_tol: 1e-7,
            cluster_radius: 1e-6,
            divergence: 1e8,
            residual_tol: 1e-10,
            nash_tol: NASH_TOL,
        }
    }
}

/// The eliminated polynomial system over the free coordinates.
#[derive(Debug, Clone)]
pub struct PolySystem {
    pub equations: Vec<Poly>,
    pub degrees: Vec<u32>,
    /// Free coordinate carried by each variable.
    pub variables: Vec<usize>,
    /// Per free block: the eliminated free coordinate and the variables of
    /// the rest of the block.
    pub eliminated: Vec<(usize, Vec<usize>)>,
    free_dim: usize,
}

impl PolySystem {
    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn total_degree(&self) -> u128 {
        self.degrees.iter().map(|&d| d as u128).product()
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.equations.iter().map(|g| g.eval(x)).collect()
    }

    pub fn jacobian(&self, x: &[Complex64]) -> DMatrix<Complex64> {
        let n = x.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        for (r, g) in self.equations.iter().enumerate() {
            g.eval_grad(x, &mut grad);
            for (c, v) in grad.iter().enumerate() {
                jac[(r, c)] = *v;
            }
        }
        jac
    }

    /// The full free-coordinate vector, eliminated coordinates included.
    pub fn reconstruct<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Sub<Output = T> + From<f64>,
    {
        let mut full = vec![T::from(0.0); self.free_dim];
        for (v, &j) in self.variables.iter().enumerate() {
            full[j] = x[v];
        }
        for (j, vars) in &self.eliminated {
            full[*j] = vars.iter().fold(T::from(1.0), |acc, &v| acc - x[v]);
        }
        full
    }
}

/// Build `G` with one coordinate per free block eliminated.
pub fn build_poly_system(ev: &Evaluator) -> Result<PolySystem> {
    let layout = ev.layout();
    let free_dim = ev.free_dim();
    let mut var_of = vec![None; free_dim];
    let mut variables = Vec::new();
    let mut eliminated = Vec::new();
    for &b in &layout.free_blocks {
        let range = layout.free_range(b);
        let last = range.end - 1;
        let mut vars = Vec::new();
        for j in range.start..last {
            var_of[j] = Some(variables.len());
            vars.push(variables.len());
            variables.push(j);
        }
        eliminated.push((last, vars));
    }
    let mut subs: Vec<Poly> = var_of.iter().map(|v| v.map(Poly::var).unwrap_or_default()).collect();
    for (j, vars) in &eliminated {
        subs[*j] = vars.iter().fold(Poly::constant(1.0), |acc, &v| &acc - &Poly::var(v));
    }
    let mut equations = Vec::with_capacity(variables.len());
    let mut degrees = Vec::with_capacity(variables.len());
    for fb in 0..layout.free_blocks.len() {
        let d = ev.symbolic_decomposition(layout.free_range(layout.free_blocks[fb]).start).denominator.substitute(&subs);
        for j in layout.free_range(layout.free_blocks[fb]) {
            let Some(v) = var_of[j] else { continue };
            let n = ev.symbolic_decomposition(j).numerator.substitute(&subs);
            let mut g = &(&d * &Poly::var(v)) - &n;
            g.prune(PRUNE_REL);
            let deg = g.degree();
            if deg == 0 {
                return Err(Error::Degenerate {
                    reason: format!("equation for free coordinate {j} is constant; its owner is indifferent everywhere"),
                    retries: 0,
                    t_reached: 0.0,
                });
            }
            equations.push(g);
            degrees.push(deg);
        }
    }
    let sys = PolySystem { equations, degrees, variables, eliminated, free_dim };
    if sys.total_degree() > MAX_PATHS {
        return Err(Error::TooLarge { what: "total degree", size: sys.total_degree(), limit: MAX_PATHS });
    }
    Ok(sys)
}

/// `G⁰_j(x) = α_j^{d_j} x_j^{d_j} − β_j^{d_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StartSystem {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub degrees: Vec<u32>,
}

impl StartSystem {
    pub fn total_degree(&self) -> u128 {
        self.degrees.iter().map(|&d| d as u128).product()
    }

    /// Root number `index`, in mixed radix over the degrees with the first
    /// variable most significant.
    pub fn root(&self, index: usize) -> Vec<Complex64> {
        let radices: Vec<usize> = self.degrees.iter().map(|&d| d as usize).collect();
        let digits = crate::model::mixed_digits(index, &radices);
        (0..self.degrees.len())
            .map(|j| {
                let d = self.degrees[j] as f64;
                let w = Complex64::from_polar(1.0, 2.0 * PI * digits[j] as f64 / d);
                self.beta[j] / self.alpha[j] * w
            })
            .collect()
    }

    pub fn roots(&self) -> Vec<Vec<Complex64>> {
        (0..self.total_degree() as usize).map(|k| self.root(k)).collect()
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..x.len())
            .map(|j| {
                let d = self.degrees[j] as i32;
                (self.alpha[j] * x[j]).powi(d) - self.beta[j].powi(d)
            })
            .collect()
    }

    /// Diagonal of the Jacobian.
    pub fn jacobian_diag(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..x.len())
            .map(|j| {
                let d = self.degrees[j] as i32;
                self.alpha[j].powi(d) * x[j].powi(d - 1) * d as f64
            })
            .collect()
    }
}

pub fn build_start_system(sys: &PolySystem, seed: u64) -> StartSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..2.0 * PI));
    let mut alpha = Vec::with_capacity(sys.len());
    let mut beta = Vec::with_capacity(sys.len());
    for _ in 0..sys.len() {
        alpha.push(draw());
        beta.push(draw());
    }
    StartSystem { alpha, beta, degrees: sys.degrees.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Converged,
    Diverged,
    Truncated,
}

impl PathStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PathStatus::Converged => "converged",
            PathStatus::Diverged => "diverged",
            PathStatus::Truncated => "truncated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPathResult {
    pub index: usize,
    pub endpoint: Vec<Complex64>,
    pub status: PathStatus,
    /// Size of the endpoint cluster this path belongs to; 0 unless converged.
    pub multiplicity: usize,
    pub residual: f64,
    pub steps: usize,
    pub rejected: usize,
    /// How far the path got, as `s = e^{−τ}`.
    pub s_reached: f64,
}

fn norm_inf(x: &[Complex64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.norm()))
}

struct PathTracker<'a> {
    sys: &'a PolySystem,
    start: &'a StartSystem,
    divergence: f64,
    residual_tol: f64,
}

impl PathTracker<'_> {
    fn h_x(&self, x: &[Complex64], s: f64) -> DMatrix<Complex64> {
        let mut jac = self.sys.jacobian(x) * Complex64::new(1.0 - s, 0.0);
        for (j, d) in self.start.jacobian_diag(x).into_iter().enumerate() {
            jac[(j, j)] += d * s;
        }
        jac
    }

    fn h(&self, x: &[Complex64], s: f64) -> Vec<Complex64> {
        let g = self.sys.eval(x);
        let g0 = self.start.eval(x);
        g0.iter().zip(&g).map(|(a, b)| a * s + b * (1.0 - s)).collect()
    }

    /// `dx/dτ = s H_x⁻¹ (G⁰ − G)`.
    fn velocity(&self, x: &[Complex64], tau: f64) -> Option<Vec<Complex64>> {
        let s = (-tau).exp();
        let g = self.sys.eval(x);
        let g0 = self.start.eval(x);
        let rhs = DVector::from_iterator(x.len(), g0.iter().zip(&g).map(|(a, b)| (a - b) * s));
        let v = self.h_x(x, s).lu().solve(&rhs)?;
        v.iter().all(|c| c.re.is_finite() && c.im.is_finite()).then(|| v.iter().copied().collect())
    }

    fn rk4(&self, x: &[Complex64], tau: f64, h: f64) -> Option<Vec<Complex64>> {
        let add = |a: &[Complex64], k: &[Complex64], c: f64| -> Vec<Complex64> {
            a.iter().zip(k).map(|(u, v)| u + v * c).collect()
        };
        let k1 = self.velocity(x, tau)?;
        let k2 = self.velocity(&add(x, &k1, h / 2.0), tau + h / 2.0)?;
        let k3 = self.velocity(&add(x, &k2, h / 2.0), tau + h / 2.0)?;
        let k4 = self.velocity(&add(x, &k3, h), tau + h)?;
        Some(
            (0..x.len())
                .map(|j| x[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0))
                .collect(),
        )
    }

    /// Newton at fixed `τ`; returns the corrected point and the iteration count.
    fn correct(&self, mut x: Vec<Complex64>, tau: f64) -> Option<(Vec<Complex64>, usize)> {
        let s = (-tau).exp();
        let mut last = f64::INFINITY;
        for it in 1..=4 {
            let r = DVector::from_vec(self.h(&x, s));
            let dx = self.h_x(&x, s).lu().solve(&r)?;
            let size = dx.iter().fold(0.0f64, |a, v| a.max(v.norm()));
            let scale = 1.0 + norm_inf(&x);
            if !size.is_finite() || (it == 1 && size > 0.1 * scale) || (it > 1 && size > 0.5 * last) {
                return None;
            }
            for (xi, d) in x.iter_mut().zip(dx.iter()) {
                *xi -= d;
            }
            if size <= 1e-11 * scale {
                return Some((x, it));
            }
            last = size;
        }
        None
    }

    fn track(&self, index: usize, x0: Vec<Complex64>) -> ComplexPathResult {
        if x0.is_empty() {
            let status = PathStatus::Converged;
            return ComplexPathResult { index, endpoint: x0, status, multiplicity: 0, residual: 0.0, steps: 0, rejected: 0, s_reached: 0.0 };
        }
        let mut x = x0;
        let mut tau = 0.0;
        let mut h: f64 = 0.05;
        let (mut steps, mut rejected, mut streak) = (0, 0, 0);
        let mut tau_end = TAU_END;
        let mut status = None;
        while status.is_none() {
            if tau >= tau_end {
                if tau_end == TAU_END && norm_inf(&x) > FAR_NORM {
                    tau_end = TAU_FAR;
                    continue;
                }
                break;
            }
            if steps + rejected > 20_000 {
                status = Some(PathStatus::Truncated);
                break;
            }
            let step = h.min(tau_end - tau);
            let corrected = self.rk4(&x, tau, step).and_then(|p| self.correct(p, tau + step));
            match corrected {
                Some((nx, iters)) => {
                    x = nx;
                    tau = if step == tau_end - tau { tau_end } else { tau + step };
                    steps += 1;
                    streak += 1;
                    if norm_inf(&x) > self.divergence {
                        status = Some(PathStatus::Diverged);
                    } else if iters <= 2 && streak >= 2 {
                        h = (2.0 * h).min(1.0);
                        streak = 0;
                    }
                }
                None => {
                    rejected += 1;
                    streak = 0;
                    h /= 2.0;
                    if h < 1e-12 {
                        status = Some(PathStatus::Truncated);
                    }
                }
            }
        }
        let s_reached = (-tau).exp();
        if status == Some(PathStatus::Diverged) {
            let residual = norm_inf(&self.sys.eval(&x));
            return ComplexPathResult { index, endpoint: x, status: PathStatus::Diverged, multiplicity: 0, residual, steps, rejected, s_reached };
        }
        let (x, residual) = polish(self.sys, x);
        // a path cut short near a singular endpoint still counts once polished
        let status = if residual <= self.residual_tol { PathStatus::Converged } else { PathStatus::Truncated };
        ComplexPathResult { index, endpoint: x, status, multiplicity: 0, residual, steps, rejected, s_reached }
    }
}

/// Gauss–Newton on `G` with an SVD solve, which also settles onto singular
/// roots and positive-dimensional solution sets. Returns the best point seen.
fn polish(sys: &PolySystem, x: Vec<Complex64>) -> (Vec<Complex64>, f64) {
    let mut best = x.clone();
    let mut best_res = norm_inf(&sys.eval(&x));
    let mut x = x;
    for _ in 0..40 {
        if best_res <= 1e-15 {
            break;
        }
        let r = DVector::from_vec(sys.eval(&x));
        let svd = sys.jacobian(&x).svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        let Ok(dx) = svd.solve(&r, cutoff) else { break };
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi -= d;
        }
        let res = norm_inf(&sys.eval(&x));
        if !res.is_finite() {
            break;
        }
        if res < best_res {
            best_res = res;
            best = x.clone();
        }
    }
    (best, best_res)
}

/// Track every start root, in parallel, and cluster converged endpoints.
pub fn track_all_paths(sys: &PolySystem, start: &StartSystem, cfg: &SolverConfig) -> Vec<ComplexPathResult> {
    let tracker = PathTracker { sys, start, divergence: cfg.divergence, residual_tol: cfg.residual_tol };
    let d = start.total_degree() as usize;
    let mut results: Vec<ComplexPathResult> = (0..d).into_par_iter().map(|k| tracker.track(k, start.root(k))).collect();
    let converged: Vec<usize> = (0..d).filter(|&k| results[k].status == PathStatus::Converged).collect();
    let mut cluster_of = vec![usize::MAX; d];
    for (a, &k) in converged.iter().enumerate() {
        if cluster_of[k] != usize::MAX {
            continue;
        }
        cluster_of[k] = k;
        for &m in &converged[a + 1..] {
            if cluster_of[m] == usize::MAX && distance(&results[k].endpoint, &results[m].endpoint) < cfg.cluster_radius {
                cluster_of[m] = k;
            }
        }
    }
    for &k in &converged {
        let size = converged.iter().filter(|&&m| cluster_of[m] == cluster_of[k]).count();
        results[k].multiplicity = size;
    }
    results
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathOutcome {
    Nash,
    FixedPointNonNash,
    Complex,
    Infeasible,
    Diverged,
    Truncated,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathStatistics {
    pub total: usize,
    pub nash: usize,
    pub fixed_point_non_nash: usize,
    pub complex: usize,
    pub infeasible: usize,
    pub diverged: usize,
    pub truncated: usize,
}

impl PathStatistics {
    fn add(&mut self, outcome: PathOutcome) {
        self.total += 1;
        match outcome {
            PathOutcome::Nash => self.nash += 1,
            PathOutcome::FixedPointNonNash => self.fixed_point_non_nash += 1,
            PathOutcome::Complex => self.complex += 1,
            PathOutcome::Infeasible => self.infeasible += 1,
            PathOutcome::Diverged => self.diverged += 1,
            PathOutcome::Truncated => self.truncated += 1,
        }
    }

    pub fn accounted(&self) -> usize {
        self.nash + self.fixed_point_non_nash + self.complex + self.infeasible + self.diverged + self.truncated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub nash: Vec<Profile>,
    /// Information sets left unreachable by each Nash profile; their
    /// behavior is one completion that keeps the profile Nash.
    pub nash_unreachable: Vec<Vec<InfoSet>>,
    pub fixed_points_non_nash: Vec<Profile>,
    pub complex_or_infeasible_count: usize,
    pub stats: PathStatistics,
    /// Outcome of each path, by start-root index.
    pub outcomes: Vec<PathOutcome>,
}

fn push_unique(list: &mut Vec<Profile>, p: Profile, radius: f64) -> Option<usize> {
    if list.iter().any(|q| q.values.iter().zip(&p.values).all(|(a, b)| (a - b).abs() <= radius)) {
        return None;
    }
    list.push(p);
    Some(list.len() - 1)
}

/// A real profile with the blocks it leaves unreached.
type Interpreted = (Profile, Vec<InfoSet>);

/// Turn one converged endpoint into a real profile, or say why it is not one.
fn interpret(ev: &Evaluator, sys: &PolySystem, x: &[Complex64], cfg: &SolverConfig) -> Result<(PathOutcome, Option<Interpreted>)> {
    let layout = ev.layout();
    let full = sys.reconstruct(x);
    let mut real: Vec<f64> = full.iter().map(|c| if c.re.abs() < SNAP { 0.0 } else { c.re.clamp(0.0, 1.0) }).collect();
    for &b in &layout.free_blocks {
        let range = layout.free_range(b);
        let s: f64 = real[range.clone()].iter().sum();
        let n = range.len() as f64;
        real[range].iter_mut().for_each(|v| *v = if s > 0.0 { *v / s } else { 1.0 / n });
    }
    let (_, d) = ev.value_terms(&real);
    let mut unreachable = Vec::new();
    for (fb, &b) in layout.free_blocks.iter().enumerate() {
        if d[fb] <= REACH_EPS {
            unreachable.push(fb);
            continue;
        }
        for j in layout.free_range(b) {
            if full[j].im.abs() > cfg.imag_tol {
                return Ok((PathOutcome::Complex, None));
            }
        }
        for j in layout.free_range(b) {
            if full[j].re < -cfg.range_tol || full[j].re > 1.0 + cfg.range_tol {
                return Ok((PathOutcome::Infeasible, None));
            }
        }
    }
    let infos: Vec<InfoSet> = unreachable.iter().map(|&fb| layout.blocks[layout.free_blocks[fb]].info).collect();

    // candidate behavior at unreachable information sets
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let sizes: Vec<usize> = unreachable.iter().map(|&fb| layout.free_range(layout.free_blocks[fb]).len()).collect();
    if !unreachable.is_empty() && sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).is_some_and(|n| n <= MAX_COMPLETIONS) {
        for choice in sizes.iter().map(|&s| 0..s).multi_cartesian_product() {
            let mut y = real.clone();
            for (&fb, &a) in unreachable.iter().zip(&choice) {
                let range = layout.free_range(layout.free_blocks[fb]);
                for (t, j) in range.enumerate() {
                    y[j] = if t == a { 1.0 } else { 0.0 };
                }
            }
            candidates.push(y);
        }
    }
    candidates.push(real.clone());
    if !unreachable.is_empty() {
        let z = layout.free_values(&layout.uniform());
        let mut y = real.clone();
        for &fb in &unreachable {
            let range = layout.free_range(layout.free_blocks[fb]);
            y[range.clone()].copy_from_slice(&z[range]);
        }
        candidates.push(y);
    }
    for y in &candidates {
        let p = layout.with_free(y);
        let class = classify(ev, &p, Provenance::PolynomialRoot, cfg.nash_tol)?;
        if class.label == Some(ClassLabel::Nash) {
            return Ok((PathOutcome::Nash, Some((p, infos))));
        }
    }
    Ok((PathOutcome::FixedPointNonNash, Some((layout.with_free(&real), infos))))
}

/// Keep real endpoints inside the profile space and sort them into Nash
/// equilibria and other fixed points.
pub fn filter_and_classify(ev: &Evaluator, sys: &PolySystem, results: &[ComplexPathResult], cfg: &SolverConfig) -> Result<EquilibriumReport> {
    let mut report = EquilibriumReport {
        nash: Vec::new(),
        nash_unreachable: Vec::new(),
        fixed_points_non_nash: Vec::new(),
        complex_or_infeasible_count: 0,
        stats: PathStatistics::default(),
        outcomes: Vec::with_capacity(results.len()),
    };
    let mut seen: Vec<(usize, PathOutcome)> = Vec::new();
    for r in results {
        let outcome = match r.status {
            PathStatus::Diverged => PathOutcome::Diverged,
            PathStatus::Truncated => PathOutcome::Truncated,
            PathStatus::Converged => {
                // later members of a cluster share the outcome of the first
                if let Some(&(_, o)) = seen.iter().find(|(k, _)| distance(&results[*k].endpoint, &r.endpoint) < cfg.cluster_radius) {
                    o
                } else {
                    let (outcome, profile) = interpret(ev, sys, &r.endpoint, cfg)?;
                    match (outcome, profile) {
                        (PathOutcome::Nash, Some((p, infos))) => {
                            if push_unique(&mut report.nash, p, cfg.cluster_radius).is_some() {
                                report.nash_unreachable.push(infos);
                            }
                        }
                        (PathOutcome::FixedPointNonNash, Some((p, _))) => {
                            push_unique(&mut report.fixed_points_non_nash, p, cfg.cluster_radius);
                        }
                        _ => report.complex_or_infeasible_count += r.multiplicity.max(1),
                    }
                    seen.push((r.index, outcome));
                    outcome
                }
            }
        };
        report.stats.add(outcome);
        report.outcomes.push(outcome);
    }
    report.complex_or_infeasible_count = report.stats.complex + report.stats.infeasible;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct AllEquilibria {
    pub system: PolySystem,
    pub start: StartSystem,
    pub paths: Vec<ComplexPathResult>,
    pub report: EquilibriumReport,
}

impl AllEquilibria {
    pub fn paths_tracked(&self) -> usize {
        self.paths.len()
    }
}

pub fn all_equilibria(net: &GNet, cfg: &SolverConfig) -> Result<AllEquilibria> {
    let ev = Evaluator::new(net)?;
    let system = build_poly_system(&ev)?;
    let start = build_start_system(&system, cfg.seed);
    let paths = track_all_paths(&system, &start, cfg);
    let report = filter_and_classify(&ev, &system, &paths, cfg)?;
    Ok(AllEquilibria { system, start, paths, report })
}

#[derive(Debug, Clone)]
pub struct DecomposedEquilibria {
    pub components: Vec<AllEquilibria>,
    /// Cartesian product of the component Nash sets.
    pub nash: Vec<Profile>,
}

impl DecomposedEquilibria {
    pub fn paths_tracked(&self) -> usize {
        self.components.iter().map(AllEquilibria::paths_tracked).sum()
    }
}

pub fn all_equilibria_decomposed(net: &GNet, cfg: &SolverConfig) -> Result<DecomposedEquilibria> {
    net.ensure_valid()?;
    let comps = decompose(net);
    let components = comps.iter().map(|c| all_equilibria(&project(net, c), cfg)).collect::<Result<Vec<_>>>()?;
    let nash = components
        .iter()
        .map(|a| a.report.nash.iter())
        .multi_cartesian_product()
        .map(|parts| {
            let parts: Vec<Profile> = parts.into_iter().cloned().collect();
            recombine(net, &comps, &parts)
        })
        .collect();
    Ok(DecomposedEquilibria { components, nash })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{coordination, matching_pennies, random_bimatrix};
    use crate::model::{GNode, NodeId, PlayerId};
    use crate::factor::attach_payoffs;
    use crate::profile::Layout;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn contains(list: &[Profile], free: &[f64], net: &GNet) -> bool {
        let p = Layout::new(net).with_free(free);
        list.iter().any(|q| q.values.iter().zip(&p.values).all(|(a, b)| (a - b).abs() < 1e-6))
    }

    #[test]
    fn pennies_system_shape() {
        let ev = Evaluator::new(&matching_pennies()).unwrap();
        let sys = build_poly_system(&ev).unwrap();
        assert_eq!(sys.len(), 2);
        // D is bilinear and multiplies p, so each equation is cubic
        assert_eq!(sys.degrees, vec![3, 3]);
        assert_eq!(sys.total_degree(), 9);
    }

    #[test]
    fn three_action_single_node() {
        let mut net = GNet {
            players: vec!["P".into()],
            nodes: vec![GNode {
                name: "X".into(),
                player: PlayerId::Agent(0),
                domain: vec!["a".into(), "b".into(), "c".into()],
                parents: vec![],
                reference: 0,
                inactive: None,
            }],
            ..GNet::default()
        };
        attach_payoffs(&mut net, 0, |x| [1.0, 2.0, 3.0][x[0]]);
        let ev = Evaluator::new(&net).unwrap();
        let sys = build_poly_system(&ev).unwrap();
        assert_eq!(sys.len(), 2);
        assert_eq!(sys.degrees, vec![2, 2]);
        let all = all_equilibria(&net, &SolverConfig::default()).unwrap();
        assert_eq!(all.report.nash.len(), 1);
        assert!(contains(&all.report.nash, &[0.0, 0.0, 1.0], &net));
    }

    #[test]
    fn block_identity_after_substitution() {
        // Σ_j G_j over the whole block, the eliminated one included, is D·(Σp − 1)
        let ev = Evaluator::new(&coordination()).unwrap();
        let sys = build_poly_system(&ev).unwrap();
        let x = [c(0.3), c(0.8)];
        let full = sys.reconstruct(&x);
        let re: Vec<f64> = full.iter().map(|v| v.re).collect();
        let (n, d) = ev.value_terms(&re);
        for fb in 0..2 {
            let range = ev.layout().free_range(ev.layout().free_blocks[fb]);
            let total: f64 = range.clone().map(|j| d[fb] * re[j] - n[j]).sum();
            assert!(total.abs() < 1e-12);
        }
    }

    #[test]
    fn g_matches_scaled_residual_on_interior() {
        let net = coordination();
        let ev = Evaluator::new(&net).unwrap();
        let sys = build_poly_system(&ev).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
            let g = sys.eval(&[c(x[0]), c(x[1])]);
            let full = sys.reconstruct(&x.map(c)).iter().map(|v| v.re).collect::<Vec<_>>();
            let f = ev.residual_free(&full, 0.0);
            let (_, d) = ev.value_terms(&full);
            for (v, &j) in sys.variables.iter().enumerate() {
                assert!((g[v].re - d[ev.var_block(j)] * f[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn start_roots_are_roots() {
        let ev = Evaluator::new(&matching_pennies()).unwrap();
        let sys = build_poly_system(&ev).unwrap();
        let start = build_start_system(&sys, 9);
        assert_eq!(start, build_start_system(&sys, 9));
        let roots = start.roots();
        assert_eq!(roots.len(), 9);
        for r in &roots {
            assert!(norm_inf(&start.eval(r)) <= 1e-12);
        }
        let unit = StartSystem { alpha: vec![c(1.0)], beta: vec![c(1.0)], degrees: vec![2] };
        let r = unit.roots();
        assert!((r[0][0] - c(1.0)).norm() < 1e-15 && (r[1][0] - c(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn pennies_has_one_nash() {
        let net = matching_pennies();
        let all = all_equilibria(&net, &SolverConfig::default()).unwrap();
        assert_eq!(all.paths.len(), 9);
        assert_eq!(all.report.stats.accounted(), 9);
        assert_eq!(all.report.nash.len(), 1);
        assert!(contains(&all.report.nash, &[0.5, 0.5, 0.5, 0.5], &net));
    }

    #[test]
    fn coordination_has_three() {
        let net = coordination();
        let all = all_equilibria(&net, &SolverConfig::default()).unwrap();
        assert_eq!(all.report.nash.len(), 3);
        let t = 1.0 / 3.0;
        assert!(contains(&all.report.nash, &[1.0, 0.0, 1.0, 0.0], &net));
        assert!(contains(&all.report.nash, &[0.0, 1.0, 0.0, 1.0], &net));
        assert!(contains(&all.report.nash, &[t, 1.0 - t, t, 1.0 - t], &net));
        assert!(!all.report.fixed_points_non_nash.is_empty());
    }

    #[test]
    fn seeds_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = random_bimatrix(&mut rng, 2, 2, 1.0, 2.0);
        let sets: Vec<Vec<Profile>> =
            (0..3).map(|seed| all_equilibria(&net, &SolverConfig { seed, ..SolverConfig::default() }).unwrap().report.nash).collect();
        for s in &sets[1..] {
            assert_eq!(s.len(), sets[0].len());
            for p in s {
                assert!(sets[0].iter().any(|q| q.values.iter().zip(&p.values).all(|(a, b)| (a - b).abs() < 1e-6)));
            }
        }
    }

    #[test]
    fn nature_only_component() {
        let net = GNet {
            nodes: vec![GNode {
                name: "N".into(),
                player: PlayerId::Nature,
                domain: vec!["a".into(), "b".into()],
                parents: vec![],
                reference: 0,
                inactive: None,
            }],
            cpts: vec![crate::model::Cpt { node: NodeId(0), rows: vec![Some(vec![0.25, 0.75])] }],
            ..GNet::default()
        };
        let all = all_equilibria(&net, &SolverConfig::default()).unwrap();
        assert_eq!(all.paths.len(), 1);
        assert_eq!(all.report.nash, vec![Profile { values: vec![0.25, 0.75] }]);
    }
}
