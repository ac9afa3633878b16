//! Nash verification and equilibrium classification.
//!
//! At a reachable information set `h` with owner `i`, the conditional
//! expected utility of action `a` relative to the current play is
//! `u_a = M_a / D_h`, where `M_a` is the cofactor of `p_a` in `N_a`. Since
//! `Σ_a p_a u_a = 1`, a profile is Nash exactly when every `u_a ≤ 1`, and
//! then `u_a = 1` on the support. Information sets with `D_h ≈ 0` are
//! unreachable under the profile and are reported but not judged.

use crate::error::{Error, Result};
use crate::expectations::{Evaluator, REACH_EPS};
use crate::model::{GNet, InfoSet};
use crate::profile::Profile;

/// Default tolerance on the Nash slack.
pub const NASH_TOL: f64 = 1e-6;
/// Default tolerance on fixed-point residuals.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct InfoSetVerdict {
    pub info: InfoSet,
    pub reachable: bool,
    /// Largest conditional expected utility over the available actions,
    /// relative to the current value of the information set.
    pub max_eu: f64,
    /// Available actions played with positive probability.
    pub support: Vec<bool>,
    /// This information set's contribution to the worst violation.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashVerdict {
    pub is_nash: bool,
    pub worst_violation: f64,
    pub per_infoset: Vec<InfoSetVerdict>,
}

impl NashVerdict {
    fn from_parts(per_infoset: Vec<InfoSetVerdict>, tol: f64) -> NashVerdict {
        let worst_violation = per_infoset.iter().filter(|v| v.reachable).map(|v| v.violation).fold(0.0, f64::max);
        NashVerdict { is_nash: worst_violation <= tol, worst_violation, per_infoset }
    }

    /// The reachable information set with the largest violation.
    pub fn worst_infoset(&self) -> Option<&InfoSetVerdict> {
        self.per_infoset.iter().filter(|v| v.reachable).max_by(|a, b| a.violation.total_cmp(&b.violation))
    }

    pub fn unreachable(&self) -> impl Iterator<Item = InfoSet> + '_ {
        self.per_infoset.iter().filter(|v| !v.reachable).map(|v| v.info)
    }
}

/// Conditional expected utilities `u_a` of free block `fb`, or `None` when
/// the information set is unreachable.
pub fn conditional_utilities(ev: &Evaluator, free: &[f64], fb: usize) -> Option<Vec<f64>> {
    let layout = ev.layout();
    let range = layout.free_range(layout.free_blocks[fb]);
    let (n, _) = ev.value_terms(free);
    let d: f64 = range.clone().map(|j| n[j]).sum();
    if d <= REACH_EPS {
        return None;
    }
    Some(range.map(|j| ev.cofactor_poly(j).eval(free) / d).collect())
}

/// The fixed-point characterization: `u_a ≤ 1` for every available action,
/// and `u_a = 1` wherever `p_a > 0` (checked as `p_a |u_a − 1|`).
pub fn is_nash_prop3(ev: &Evaluator, p: &Profile, tol: f64) -> Result<NashVerdict> {
    ev.layout().check(p)?;
    let layout = ev.layout();
    let free = layout.free_values(p);
    let (n, _) = ev.value_terms(&free);
    let m = ev.cofactors(&free);
    let mut per = Vec::with_capacity(layout.free_blocks.len());
    for &b in &layout.free_blocks {
        let range = layout.free_range(b);
        let d: f64 = range.clone().map(|j| n[j]).sum();
        let support = range.clone().map(|j| free[j] > 0.0).collect();
        if d <= REACH_EPS {
            per.push(InfoSetVerdict { info: layout.blocks[b].info, reachable: false, max_eu: f64::NAN, support, violation: 0.0 });
            continue;
        }
        let mut max_eu = f64::NEG_INFINITY;
        let mut violation = 0.0f64;
        for j in range {
            let u = m[j] / d;
            max_eu = max_eu.max(u);
            violation = violation.max(u - 1.0).max(free[j] * (u - 1.0).abs());
        }
        per.push(InfoSetVerdict { info: layout.blocks[b].info, reachable: true, max_eu, support, violation });
    }
    Ok(NashVerdict::from_parts(per, tol))
}

/// The deviation inequality: at every reachable information set no pure
/// action earns more than the current behavior. Values come from direct
/// state enumeration with the block replaced.
pub fn is_nash_inequality(ev: &Evaluator, p: &Profile, tol: f64) -> Result<NashVerdict> {
    ev.layout().check(p)?;
    let layout = ev.layout();
    let mut per = Vec::with_capacity(layout.free_blocks.len());
    for (fb, &b) in layout.free_blocks.iter().enumerate() {
        let block = &layout.blocks[b];
        let current = ev.infoset_weight(p, fb, None);
        let support = block.available().iter().map(|&v| p.values[block.start + v] > 0.0).collect();
        if current <= REACH_EPS {
            per.push(InfoSetVerdict { info: block.info, reachable: false, max_eu: f64::NAN, support, violation: 0.0 });
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        for &a in block.available() {
            let mut pure = vec![0.0; block.len];
            pure[a] = 1.0;
            best = best.max(ev.infoset_weight(p, fb, Some(&pure)));
        }
        let max_eu = best / current;
        per.push(InfoSetVerdict { info: block.info, reachable: true, max_eu, support, violation: (max_eu - 1.0).max(0.0) });
    }
    Ok(NashVerdict::from_parts(per, tol))
}

/// A strict ordering of conditional utilities not matched by the
/// probabilities at a fixed point of `f_ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityWitness {
    pub info: InfoSet,
    /// Value indices: `better` has the larger conditional utility.
    pub better: usize,
    pub worse: usize,
    pub eu_gap: f64,
    pub prob_gap: f64,
}

/// At a fixed point of `f_ε`, a strictly better action (by more than
/// `10·tol`) must get strictly more probability.
pub fn check_prop4_monotonicity(ev: &Evaluator, p: &Profile, eps: f64, tol: f64) -> Result<Vec<MonotonicityWitness>> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::BadEpsilon(eps));
    }
    let layout = ev.layout();
    layout.check(p)?;
    let free = layout.free_values(p);
    let residual = ev.residual_free(&free, eps).iter().fold(0.0f64, |a, r| a.max(r.abs()));
    if residual > tol {
        return Err(Error::NotFixedPoint { residual, tolerance: tol });
    }
    let mut out = Vec::new();
    for fb in 0..layout.free_blocks.len() {
        let b = layout.free_blocks[fb];
        let Some(u) = conditional_utilities(ev, &free, fb) else { continue };
        let range = layout.free_range(b);
        let avail = layout.blocks[b].available();
        for x in 0..u.len() {
            for y in 0..u.len() {
                let eu_gap = u[x] - u[y];
                let prob_gap = free[range.start + x] - free[range.start + y];
                if eu_gap > 10.0 * tol && prob_gap <= 0.0 {
                    out.push(MonotonicityWitness { info: layout.blocks[b].info, better: avail[x], worse: avail[y], eu_gap, prob_gap });
                }
            }
        }
    }
    Ok(out)
}

/// Iterate `p ← (1 − λ) p + λ f_ε(p)` from the uniform profile, halving `λ`
/// whenever progress stalls, then polish with Newton steps on `F_ε`.
pub fn damped_fixed_point(ev: &Evaluator, eps: f64, tol: f64) -> Result<Profile> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::BadEpsilon(eps));
    }
    let layout = ev.layout();
    let mut x = layout.free_values(&layout.uniform());
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut lambda = 0.5;
    let mut best = f64::INFINITY;
    for iter in 0..200_000 {
        let r = ev.residual_free(&x, eps);
        let res = norm(&r);
        if res <= tol * 1e-3 {
            break;
        }
        if iter % 500 == 499 {
            if res > 0.5 * best {
                lambda *= 0.5;
            }
            best = best.min(res);
        }
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi -= lambda * ri;
        }
    }
    // Newton polish: iterates stay interior because f_ε is bounded away from 0
    for _ in 0..20 {
        let r = ev.residual_free(&x, eps);
        if norm(&r) <= tol * 1e-3 {
            break;
        }
        let dim = x.len();
        let jac = nalgebra::DMatrix::from_row_slice(dim, dim, &ev.jacobian_free(&x, eps));
        let Some(step) = jac.lu().solve(&nalgebra::DVector::from_column_slice(&r)) else { break };
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
        if trial.iter().any(|&v| v <= 0.0) || norm(&ev.residual_free(&trial, eps)) >= norm(&r) {
            break;
        }
        x = trial;
    }
    let residual = norm(&ev.residual_free(&x, eps));
    if residual > tol {
        return Err(Error::NotFixedPoint { residual, tolerance: tol });
    }
    Ok(layout.with_free(&x))
}

/// Where a profile came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    HomotopyEndpoint,
    PolynomialRoot,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassLabel {
    Nash,
    FixedPointNonNash,
    RobustCandidate,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Nash => "nash",
            ClassLabel::FixedPointNonNash => "fixed-point-non-nash",
            ClassLabel::RobustCandidate => "robust-candidate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumClass {
    pub label: Option<ClassLabel>,
    /// Largest `p_a |u_a − 1|` over reachable information sets; zero exactly
    /// at fixed points of the value map.
    pub fixed_point_residual: f64,
    /// Worst Nash violation.
    pub slack: f64,
    pub verdict: NashVerdict,
}

pub fn classify(ev: &Evaluator, p: &Profile, provenance: Provenance, tol: f64) -> Result<EquilibriumClass> {
    let verdict = is_nash_prop3(ev, p, tol)?;
    let layout = ev.layout();
    let free = layout.free_values(p);
    let mut fixed_point_residual = 0.0f64;
    for fb in 0..layout.free_blocks.len() {
        if let Some(u) = conditional_utilities(ev, &free, fb) {
            let start = layout.free_range(layout.free_blocks[fb]).start;
            for (t, ut) in u.iter().enumerate() {
                fixed_point_residual = fixed_point_residual.max(free[start + t] * (ut - 1.0).abs());
            }
        }
    }
    let label = match (verdict.is_nash, provenance) {
        (true, Provenance::HomotopyEndpoint) => Some(ClassLabel::RobustCandidate),
        (true, _) => Some(ClassLabel::Nash),
        (false, _) if fixed_point_residual <= tol => Some(ClassLabel::FixedPointNonNash),
        (false, _) => None,
    };
    Ok(EquilibriumClass { label, fixed_point_residual, slack: verdict.worst_violation, verdict })
}

/// Convenience wrapper building an evaluator.
pub fn verify_profile(net: &GNet, p: &Profile, tol: f64) -> Result<NashVerdict> {
    is_nash_prop3(&Evaluator::new(net)?, p, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{coordination, matching_pennies, prisoners_dilemma, random_bimatrix};
    use crate::model::PlayerId;
    use crate::model::{Cpt, GNode, NodeId};
    use crate::profile::Layout;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn at(net: &GNet, free: &[f64]) -> Profile {
        Layout::new(net).with_free(free)
    }

    #[test]
    fn pennies_uniform_is_nash() {
        let net = matching_pennies();
        let ev = Evaluator::new(&net).unwrap();
        let v = is_nash_prop3(&ev, &ev.layout().uniform(), 1e-9).unwrap();
        assert!(v.is_nash);
        assert!(v.worst_violation < 1e-15);
    }

    #[test]
    fn coordination_profiles() {
        let net = coordination();
        let ev = Evaluator::new(&net).unwrap();
        assert!(is_nash_prop3(&ev, &at(&net, &[1.0, 0.0, 1.0, 0.0]), 1e-9).unwrap().is_nash);
        let bad = is_nash_prop3(&ev, &at(&net, &[1.0, 0.0, 0.0, 1.0]), 1e-9).unwrap();
        assert!(!bad.is_nash);
        assert!(bad.worst_violation > 0.1);
        let t = 1.0 / 3.0;
        assert!(is_nash_prop3(&ev, &at(&net, &[t, 1.0 - t, t, 1.0 - t]), 1e-9).unwrap().is_nash);
    }

    #[test]
    fn dominated_action_in_support_fails() {
        let net = prisoners_dilemma();
        let ev = Evaluator::new(&net).unwrap();
        let p = at(&net, &[0.5, 0.5, 0.0, 1.0]);
        assert!(!is_nash_inequality(&ev, &p, 1e-9).unwrap().is_nash);
        assert!(!is_nash_prop3(&ev, &p, 1e-9).unwrap().is_nash);
    }

    #[test]
    fn nature_only_net_is_vacuously_nash() {
        let net = GNet {
            nodes: vec![GNode {
                name: "N".into(),
                player: PlayerId::Nature,
                domain: vec!["a".into(), "b".into()],
                parents: vec![],
                reference: 0,
                inactive: None,
            }],
            cpts: vec![Cpt { node: NodeId(0), rows: vec![Some(vec![0.3, 0.7])] }],
            ..GNet::default()
        };
        let ev = Evaluator::new(&net).unwrap();
        let z = ev.layout().uniform();
        assert!(is_nash_inequality(&ev, &z, 1e-9).unwrap().is_nash);
        assert!(is_nash_prop3(&ev, &z, 1e-9).unwrap().is_nash);
    }

    #[test]
    fn prop4_on_pennies_and_coordination() {
        let net = matching_pennies();
        let ev = Evaluator::new(&net).unwrap();
        let z = ev.layout().uniform();
        assert!(check_prop4_monotonicity(&ev, &z, 0.1, 1e-9).unwrap().is_empty());

        let net = coordination();
        let ev = Evaluator::new(&net).unwrap();
        let p = damped_fixed_point(&ev, 0.2, 1e-10).unwrap();
        assert!(check_prop4_monotonicity(&ev, &p, 0.2, 1e-9).unwrap().is_empty());
        let off = at(&net, &[0.3, 0.7, 0.9, 0.1]);
        assert!(matches!(check_prop4_monotonicity(&ev, &off, 0.2, 1e-9), Err(Error::NotFixedPoint { .. })));
    }

    #[test]
    fn classification_labels() {
        let net = coordination();
        let ev = Evaluator::new(&net).unwrap();
        let pure = at(&net, &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(classify(&ev, &pure, Provenance::HomotopyEndpoint, 1e-6).unwrap().label, Some(ClassLabel::RobustCandidate));
        assert_eq!(classify(&ev, &pure, Provenance::User, 1e-6).unwrap().label, Some(ClassLabel::Nash));
        // (A, B) is a vertex, so a fixed point of v, but not Nash
        let corner = at(&net, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(classify(&ev, &corner, Provenance::PolynomialRoot, 1e-6).unwrap().label, Some(ClassLabel::FixedPointNonNash));
        let neither = at(&net, &[0.5, 0.5, 0.9, 0.1]);
        assert_eq!(classify(&ev, &neither, Provenance::User, 1e-6).unwrap().label, None);
    }

    #[test]
    fn paired_tests_agree_on_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let net = random_bimatrix(&mut rng, 2, 2, 1.0, 2.0);
            let ev = Evaluator::new(&net).unwrap();
            let a: f64 = rand::Rng::random(&mut rng);
            let b: f64 = rand::Rng::random(&mut rng);
            let p = at(&net, &[a, 1.0 - a, b, 1.0 - b]);
            let x = is_nash_prop3(&ev, &p, 1e-9).unwrap();
            let y = is_nash_inequality(&ev, &p, 1e-9).unwrap();
            assert_eq!(x.is_nash, y.is_nash);
        }
    }

    proptest! {
        #[test]
        fn fixed_points_satisfy_cleared_identity(seed in 0u64..1000, eps in 0.05f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_bimatrix(&mut rng, 2, 3, 1.0, 2.0);
            let ev = Evaluator::new(&net).unwrap();
            let p = damped_fixed_point(&ev, eps, 1e-10).unwrap();
            prop_assert!(check_prop4_monotonicity(&ev, &p, eps, 1e-9).unwrap().is_empty());
        }

        #[test]
        fn both_tests_agree_on_grid(seed in 0u64..1000, i in 0usize..=20, k in 0usize..=20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_bimatrix(&mut rng, 2, 2, 1.0, 2.0);
            let ev = Evaluator::new(&net).unwrap();
            let (a, b) = (i as f64 * 0.05, k as f64 * 0.05);
            let p = at(&net, &[a, 1.0 - a, b, 1.0 - b]);
            let x = is_nash_prop3(&ev, &p, 1e-9).unwrap();
            let y = is_nash_inequality(&ev, &p, 1e-9).unwrap();
            prop_assert_eq!(x.is_nash, y.is_nash);
            prop_assert!((x.worst_violation.min(1.0) - y.worst_violation.min(1.0)).abs() < 1e-9 || x.worst_violation > 1e-9);
        }
    }
}
