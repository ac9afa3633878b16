//! The first equilibrium: endpoint of the homotopy `H(p, t) = F_{1−t}(p)`
//! from the uniform profile at `t = 0` towards the fixed points of `v`.
//!
//! Tracking works over the free coordinates with an Euler predictor along
//! `dp/dt = J⁻¹ (v − z)`, `J = I − t Dv`, and a Newton corrector at fixed `t`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{decompose, project, recombine};
use crate::equilibrium::{classify, is_nash_prop3, EquilibriumClass, NashVerdict, Provenance, NASH_TOL};
use crate::error::{Error, Result};
use crate::expectations::{Evaluator, REACH_EPS};
use crate::model::{GNet, NodeId};
use crate::profile::Profile;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub initial_step: f64,
    /// Smallest step, relative to the remaining distance `1 − t`.
    pub min_step: f64,
    pub max_step: f64,
    pub corrector_tol: f64,
    pub max_newton_iters: usize,
    pub endpoint_t: f64,
    pub payoff_perturbation_scale: f64,
    pub rng_seed: u64,
    /// Perturbation attempts after the first failure; the scale grows ×10
    /// with each.
    pub max_retries: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            initial_step: 0.01,
            min_step: 1e-8,
            max_step: 0.1,
            corrector_tol: 1e-10,
            max_newton_iters: 20,
            endpoint_t: 1.0 - 1e-8,
            payoff_perturbation_scale: 1e-6,
            rng_seed: 0,
            max_retries: 4,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.min_step
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.max_step < 1.0
            && self.corrector_tol > 0.0
            && self.max_newton_iters > 0
            && self.endpoint_t > 0.0
            && self.endpoint_t < 1.0
            && self.payoff_perturbation_scale >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("tracker settings out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyState {
    pub p: Profile,
    pub t: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackedPath {
    /// Accepted states, starting with `(z, 0)`.
    pub states: Vec<HomotopyState>,
    pub rejected_steps: usize,
    pub newton_iterations: usize,
}

impl TrackedPath {
    pub fn accepted_steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn last_t(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    /// One line per accepted state: `t step residual p_0 p_1 ...`.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            write!(out, "{:.17e} {:.17e} {:.17e}", s.t, s.step, s.residual).unwrap();
            for v in &s.p.values {
                write!(out, " {v:.17e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FirstEquilibrium {
    pub profile: Profile,
    /// Classification in the game actually tracked (perturbed if needed).
    pub class: EquilibriumClass,
    pub path: TrackedPath,
    /// Payoff perturbation scale used, if the original game was degenerate.
    pub perturbation: Option<f64>,
    /// Verdict in the original game when a perturbation was applied.
    pub unperturbed: Option<NashVerdict>,
    /// Free coordinates treated as exact zeros at the endpoint.
    pub face_threshold: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadEpsilon(eps))
    }
}

/// `f_ε(p) = ε z + (1 − ε) v(p)`.
pub fn f_epsilon(ev: &Evaluator, p: &Profile, eps: f64) -> Result<Profile> {
    check_eps(eps)?;
    let v = ev.value_map(p)?;
    let z = ev.layout().uniform();
    Ok(Profile { values: z.values.iter().zip(&v.values).map(|(zi, vi)| eps * zi + (1.0 - eps) * vi).collect() })
}

/// `F_ε(p) = p − f_ε(p)` over the free coordinates.
pub fn residual_f_eps(ev: &Evaluator, p: &Profile, eps: f64) -> Result<Vec<f64>> {
    check_eps(eps)?;
    ev.value_map(p)?;
    Ok(ev.residual_free(&ev.layout().free_values(p), eps))
}

/// Jacobian of `F_ε` with respect to the free coordinates; fixed coordinates
/// are constants and contribute neither rows nor columns.
pub fn jacobian_f_eps(ev: &Evaluator, p: &Profile, eps: f64) -> Result<DMatrix<f64>> {
    check_eps(eps)?;
    ev.value_map(p)?;
    let free = ev.layout().free_values(p);
    let n = free.len();
    Ok(DMatrix::from_row_slice(n, n, &ev.jacobian_free(&free, eps)))
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

struct Tracker<'a> {
    ev: &'a Evaluator,
    cfg: &'a TrackerConfig,
    z: Vec<f64>,
}

enum Corrected {
    Converged { x: Vec<f64>, residual: f64, iters: usize },
    Failed,
}

impl Tracker<'_> {
    fn h(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.ev.residual_free(x, 1.0 - t)
    }

    fn jac(&self, x: &[f64], t: f64) -> DMatrix<f64> {
        let n = x.len();
        DMatrix::from_row_slice(n, n, &self.ev.jacobian_free(x, 1.0 - t))
    }

    fn tangent(&self, x: &[f64], t: f64) -> Option<Vec<f64>> {
        let (n, d) = self.ev.value_terms(x);
        let rhs: Vec<f64> = (0..x.len()).map(|j| n[j] / d[self.ev.var_block(j)] - self.z[j]).collect();
        let dx = self.jac(x, t).lu().solve(&DVector::from_vec(rhs))?;
        dx.iter().all(|v| v.is_finite()).then(|| dx.iter().copied().collect())
    }

    fn correct(&self, mut x: Vec<f64>, t: f64) -> Corrected {
        if x.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Corrected::Failed;
        }
        let mut r = self.h(&x, t);
        let mut res = max_norm(&r);
        for iters in 0..=self.cfg.max_newton_iters {
            if res <= self.cfg.corrector_tol {
                return Corrected::Converged { x, residual: res, iters };
            }
            if iters == self.cfg.max_newton_iters {
                break;
            }
            let Some(step) = self.jac(&x, t).lu().solve(&DVector::from_vec(r)) else { return Corrected::Failed };
            let next: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            if next.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
                return Corrected::Failed;
            }
            let next_r = self.h(&next, t);
            let next_res = max_norm(&next_r);
            // require contraction after the first iterate
            if iters > 0 && next_res > 0.5 * res {
                return Corrected::Failed;
            }
            x = next;
            r = next_r;
            res = next_res;
        }
        Corrected::Failed
    }

    fn run(&self) -> std::result::Result<(Vec<f64>, TrackedPath), TrackedPath> {
        let layout = self.ev.layout();
        let cfg = self.cfg;
        let mut path = TrackedPath::default();
        let mut x = self.z.clone();
        let mut t = 0.0;
        let mut h = cfg.initial_step;
        path.states.push(HomotopyState { p: layout.with_free(&x), t, residual: 0.0, step: 0.0 });
        while t < cfg.endpoint_t {
            let remaining = cfg.endpoint_t - t;
            let step = h.min(remaining);
            let Some(dx) = self.tangent(&x, t) else { return Err(path) };
            let predicted: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            match self.correct(predicted, t + step) {
                Corrected::Converged { x: nx, residual, iters } => {
                    path.newton_iterations += iters;
                    x = nx;
                    t = if step == remaining { cfg.endpoint_t } else { t + step };
                    path.states.push(HomotopyState { p: layout.with_free(&x), t, residual, step });
                    if iters <= 3 {
                        h = (2.0 * h).min(cfg.max_step);
                    }
                }
                Corrected::Failed => {
                    path.rejected_steps += 1;
                    h = step / 2.0;
                    if h < cfg.min_step * (1.0 - t) {
                        return Err(path);
                    }
                }
            }
        }
        Ok((x, path))
    }
}

/// Snap coordinates below `threshold` to zero, renormalize, and run Newton
/// on `F` restricted to the remaining support of every reachable block.
fn polish_on_face(ev: &Evaluator, x: &[f64], threshold: f64) -> Vec<f64> {
    let layout = ev.layout();
    let mut y = x.to_vec();
    for &b in &layout.free_blocks {
        let range = layout.free_range(b);
        for j in range.clone() {
            if y[j] < threshold {
                y[j] = 0.0;
            }
        }
        let s: f64 = y[range.clone()].iter().sum();
        if s > 0.0 {
            y[range].iter_mut().for_each(|v| *v /= s);
        }
    }
    let (_, d) = ev.value_terms(&y);
    let active: Vec<usize> = (0..y.len()).filter(|&j| y[j] > 0.0 && d[ev.var_block(j)] > REACH_EPS).collect();
    if active.is_empty() {
        return y;
    }
    let face_residual = |y: &[f64]| -> Vec<f64> {
        let (n, d) = ev.value_terms(y);
        active.iter().map(|&j| y[j] - n[j] / d[ev.var_block(j)]).collect()
    };
    let mut r = face_residual(&y);
    for _ in 0..20 {
        let res = max_norm(&r);
        if res <= 1e-14 {
            break;
        }
        let full = ev.jacobian_free(&y, 0.0);
        let dim = y.len();
        let m = active.len();
        let jac = DMatrix::from_fn(m, m, |a, b| full[active[a] * dim + active[b]]);
        let Some(step) = jac.lu().solve(&DVector::from_column_slice(&r)) else { break };
        let mut next = y.clone();
        for (a, &j) in active.iter().enumerate() {
            next[j] -= step[a];
        }
        if active.iter().any(|&j| !(0.0..=1.0).contains(&next[j])) {
            break;
        }
        let (_, nd) = ev.value_terms(&next);
        if active.iter().any(|&j| nd[ev.var_block(j)] <= REACH_EPS) {
            break;
        }
        let next_r = face_residual(&next);
        if max_norm(&next_r) >= res {
            break;
        }
        y = next;
        r = next_r;
    }
    y
}

fn perturb(net: &GNet, scale: f64, rng: &mut ChaCha8Rng) -> GNet {
    let mut out = net.clone();
    for t in &mut out.potentials {
        let node = &net.nodes[t.node.0];
        let size = node.domain.len();
        for (e, w) in t.entries.iter_mut().enumerate() {
            if e % size != node.reference {
                *w *= 1.0 + rng.random_range(-scale..=scale);
            }
        }
    }
    out
}

fn track_once(ev: &Evaluator, cfg: &TrackerConfig) -> std::result::Result<(Profile, TrackedPath, f64), TrackedPath> {
    let layout = ev.layout();
    let z = layout.free_values(&layout.uniform());
    let (x, path) = Tracker { ev, cfg, z }.run()?;
    let threshold = 1e-7f64.max(100.0 * (1.0 - cfg.endpoint_t));
    let y = polish_on_face(ev, &x, threshold);
    Ok((layout.with_free(&y), path, threshold))
}

/// Track the homotopy from the uniform profile. On a corrector breakdown the
/// payoffs are perturbed multiplicatively and tracking restarts.
pub fn track_first_equilibrium(net: &GNet, cfg: &TrackerConfig) -> Result<FirstEquilibrium> {
    cfg.validate()?;
    let ev = Evaluator::new(net)?;
    let mut last_path = match track_once(&ev, cfg) {
        Ok((profile, path, face_threshold)) => {
            let class = classify(&ev, &profile, Provenance::HomotopyEndpoint, NASH_TOL)?;
            return Ok(FirstEquilibrium { profile, class, path, perturbation: None, unperturbed: None, face_threshold });
        }
        Err(path) => path,
    };
    let mut t_reached = last_path.last_t();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut scale = cfg.payoff_perturbation_scale;
    for _ in 0..cfg.max_retries {
        let perturbed = perturb(net, scale, &mut rng);
        let pev = Evaluator::new(&perturbed)?;
        match track_once(&pev, cfg) {
            Ok((profile, path, face_threshold)) => {
                let class = classify(&pev, &profile, Provenance::HomotopyEndpoint, NASH_TOL)?;
                let unperturbed = Some(is_nash_prop3(&ev, &profile, NASH_TOL)?);
                return Ok(FirstEquilibrium { profile, class, path, perturbation: Some(scale), unperturbed, face_threshold });
            }
            Err(path) => {
                t_reached = t_reached.max(path.last_t());
                last_path = path;
            }
        }
        scale *= 10.0;
    }
    Err(Error::Degenerate {
        reason: format!("corrector failed below the minimum step ({} accepted steps)", last_path.accepted_steps()),
        retries: cfg.max_retries,
        t_reached,
    })
}

#[derive(Debug, Clone)]
pub struct ComponentRun {
    pub nodes: Vec<NodeId>,
    pub result: FirstEquilibrium,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct DecomposedFirst {
    pub profile: Profile,
    pub components: Vec<ComponentRun>,
}

/// Track every strategically independent component separately and
/// reassemble the joint profile.
pub fn first_equilibrium_decomposed(net: &GNet, cfg: &TrackerConfig) -> Result<DecomposedFirst> {
    net.ensure_valid()?;
    let comps = decompose(net);
    let mut runs = Vec::with_capacity(comps.len());
    for c in &comps {
        let start = Instant::now();
        let result = track_first_equilibrium(&project(net, c), cfg)?;
        runs.push(ComponentRun { nodes: c.nodes.clone(), result, elapsed: start.elapsed() });
    }
    let parts: Vec<Profile> = runs.iter().map(|r| r.result.profile.clone()).collect();
    Ok(DecomposedFirst { profile: recombine(net, &comps, &parts), components: runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::disjoint_union;
    use crate::equilibrium::{check_prop4_monotonicity, ClassLabel};
    use crate::games::{coordination, matching_pennies, pennies_plus_coordination, prisoners_dilemma, random_bimatrix};
    use crate::profile::Layout;

    fn cfg() -> TrackerConfig {
        TrackerConfig::default()
    }

    #[test]
    fn f_epsilon_examples() {
        let net = coordination();
        let ev = Evaluator::new(&net).unwrap();
        let p = Layout::new(&net).with_free(&[0.9, 0.1, 0.9, 0.1]);
        assert_eq!(f_epsilon(&ev, &p, 1.0).unwrap(), ev.layout().uniform());
        let f = f_epsilon(&ev, &p, 0.5).unwrap();
        let v = ev.value_map(&p).unwrap();
        for (a, b) in f.values.iter().zip(&v.values) {
            assert!((a - (0.25 + 0.5 * b)).abs() < 1e-15);
        }
        assert!(matches!(f_epsilon(&ev, &p, 0.0), Err(Error::BadEpsilon(_))));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let net = matching_pennies();
        let ev = Evaluator::new(&net).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (a, b) = (rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
            let x = [a, 1.0 - a, b, 1.0 - b];
            let eps = rng.random_range(0.0..1.0);
            let jac = ev.jacobian_free(&x, eps);
            for m in 0..4 {
                let (mut up, mut dn) = (x, x);
                up[m] += 1e-6;
                dn[m] -= 1e-6;
                let (ru, rd) = (ev.residual_free(&up, eps), ev.residual_free(&dn, eps));
                for j in 0..4 {
                    let fd = (ru[j] - rd[j]) / 2e-6;
                    assert!((fd - jac[j * 4 + m]).abs() <= 1e-4 * fd.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn pennies_endpoint_is_uniform() {
        let res = track_first_equilibrium(&matching_pennies(), &cfg()).unwrap();
        for v in &res.profile.values {
            assert!((v - 0.5).abs() < 1e-6);
        }
        assert_eq!(res.class.label, Some(ClassLabel::RobustCandidate));
    }

    #[test]
    fn dominance_game_ends_at_defect() {
        let res = track_first_equilibrium(&prisoners_dilemma(), &cfg()).unwrap();
        let expected = [0.0, 1.0, 0.0, 1.0];
        for (v, e) in res.profile.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-6);
        }
    }

    #[test]
    fn two_pennies_copies_stay_uniform() {
        let net = disjoint_union(&matching_pennies(), &matching_pennies());
        let res = track_first_equilibrium(&net, &cfg()).unwrap();
        assert!(res.profile.values.iter().all(|v| (v - 0.5).abs() < 1e-6));
    }

    #[test]
    fn decomposed_matches_joint() {
        let net = pennies_plus_coordination();
        let joint = track_first_equilibrium(&net, &cfg()).unwrap();
        let split = first_equilibrium_decomposed(&net, &cfg()).unwrap();
        assert_eq!(split.components.len(), 2);
        for (a, b) in joint.profile.values.iter().zip(&split.profile.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn path_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let net = random_bimatrix(&mut rng, 2, 2, 1.0, 2.0);
            let ev = Evaluator::new(&net).unwrap();
            let res = track_first_equilibrium(&net, &cfg()).unwrap();
            let states = &res.path.states;
            assert!(states.windows(2).all(|w| w[1].t > w[0].t));
            for s in states {
                let floor = (1.0 - s.t) / 2.0 - 1e-12;
                assert!(s.p.values.iter().all(|&v| v >= floor));
            }
            let picks = [states.len() / 6, states.len() / 3, states.len() / 2, 2 * states.len() / 3, 5 * states.len() / 6];
            for &k in &picks {
                let s = &states[k];
                if s.t > 0.0 {
                    assert!(check_prop4_monotonicity(&ev, &s.p, 1.0 - s.t, 1e-9).unwrap().is_empty());
                }
            }
        }
    }

    #[test]
    fn tracking_is_deterministic() {
        let net = coordination();
        let a = track_first_equilibrium(&net, &cfg()).unwrap();
        let b = track_first_equilibrium(&net, &cfg()).unwrap();
        assert_eq!(a.path, b.path);
        assert_eq!(a.profile, b.profile);
    }

    #[test]
    fn bad_config_is_rejected() {
        let c = TrackerConfig { min_step: 0.5, ..cfg() };
        assert!(matches!(track_first_equilibrium(&matching_pennies(), &c), Err(Error::Config(_))));
    }
}
