//! Expected utilities, the value map `v` and the equilibrium residual `F`.
//!
//! For a free coordinate `j = (k, x_k, h)` owned by player `i = i(k)`:
//!
//! * `N_j(p) = Σ_{x : x_PP(k) = h, x_k} u^i(x) p(x)`
//! * `D_h(p) = Σ_{x : x_PP(k) = h} u^i(x) p(x) = Σ_{x_k} N_j(p)`
//! * `v_j(p) = N_j / D_h`, and `F_j = p_j − v_j`.
//!
//! Every state probability contains exactly one factor from each node, so
//! `N_j = p_j · M_j` where the cofactor `M_j` is the expected utility of
//! playing `x_k` at `h` against the rest of `p`, scaled by the probability of
//! `h`. `M_j / D_h` is the conditional expected utility of `x_k` given `h`,
//! defined whenever `h` is reachable even if `p_j = 0`.

use crate::error::{Error, Result};
use crate::model::{all_states, state_count, Event, GNet, NodeId, PlayerId};
use crate::poly::{Monomial, Poly};
use crate::profile::{Layout, Profile};

/// Largest state space the evaluator enumerates.
pub const MAX_STATES: u128 = 4_000_000;

/// Denominators at or below this are treated as unreachable information sets.
pub const REACH_EPS: f64 = 1e-13;

/// Numerator and denominator of one value-map coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueDecomposition {
    pub numerator: f64,
    pub denominator: f64,
}

/// Symbolic form over the free variables of the layout.
#[derive(Debug, Clone)]
pub struct SymbolicDecomposition<'a> {
    pub numerator: &'a Poly,
    pub denominator: &'a Poly,
}

/// Precomputed state table and value polynomials for one game.
#[derive(Debug, Clone)]
pub struct Evaluator {
    net: GNet,
    layout: Layout,
    /// States × nodes: coordinate of each factor of `p(x)`.
    factor_coords: Vec<usize>,
    /// States × players.
    utilities: Vec<f64>,
    /// `N_j` per free variable.
    numer: Vec<Poly>,
    /// `M_j = N_j / p_j` per free variable.
    cofactor: Vec<Poly>,
    /// `D_h` per free block, indexed like `layout.free_blocks`.
    denom: Vec<Poly>,
    /// Free-block position of each free variable.
    var_block: Vec<usize>,
}

impl Evaluator {
    pub fn new(net: &GNet) -> Result<Evaluator> {
        net.ensure_valid()?;
        let states = state_count(net);
        if states > MAX_STATES {
            return Err(Error::TooLarge { what: "state space", size: states, limit: MAX_STATES });
        }
        let layout = Layout::new(net);
        let n_nodes = net.nodes.len();
        let n_players = net.players.len();
        let mut factor_coords = Vec::with_capacity(states as usize * n_nodes);
        let mut utilities = Vec::with_capacity(states as usize * n_players);
        let mut numer_terms: Vec<Vec<(Monomial, f64)>> = vec![Vec::new(); layout.free.len()];

        let mut vars: Vec<usize> = Vec::with_capacity(n_nodes);
        for x in all_states(net) {
            let base = factor_coords.len();
            for k in 0..n_nodes {
                factor_coords.push(layout.coord_in_state(net, NodeId(k), &x));
            }
            let us: Vec<f64> = (0..n_players).map(|i| crate::model::utility_unchecked(net, i, &x)).collect();
            utilities.extend_from_slice(&us);

            vars.clear();
            let mut constant = 1.0;
            for &c in &factor_coords[base..] {
                match layout.free_index(c) {
                    Some(v) => vars.push(v),
                    None => constant *= layout.fixed_value(c),
                }
            }
            if constant == 0.0 {
                continue;
            }
            vars.sort_unstable();
            let mono: Monomial = vars.iter().map(|&v| (v as u32, 1)).collect();
            for k in 0..n_nodes {
                let c = factor_coords[base + k];
                if let (Some(j), PlayerId::Agent(i)) = (layout.free_index(c), net.nodes[k].player) {
                    numer_terms[j].push((mono.clone(), us[i] * constant));
                }
            }
        }

        let numer: Vec<Poly> = numer_terms.into_iter().map(Poly::from_terms).collect();
        let cofactor = numer
            .iter()
            .enumerate()
            .map(|(j, n)| n.divide_by_var(j).expect("every numerator term carries its own coordinate"))
            .collect();
        let mut var_block = vec![0; layout.free.len()];
        let denom = (0..layout.free_blocks.len())
            .map(|fb| {
                let range = layout.free_range(layout.free_blocks[fb]);
                var_block[range.clone()].fill(fb);
                range.fold(Poly::zero(), |acc, j| &acc + &numer[j])
            })
            .collect();
        Ok(Evaluator { net: net.clone(), layout, factor_coords, utilities, numer, cofactor, denom, var_block })
    }

    pub fn net(&self) -> &GNet {
        &self.net
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn free_dim(&self) -> usize {
        self.layout.free.len()
    }

    fn state_count(&self) -> usize {
        self.utilities.len().checked_div(self.net.players.len()).unwrap_or_else(|| {
            self.factor_coords.len().checked_div(self.net.nodes.len()).unwrap_or(1)
        })
    }

    fn states(&self) -> impl Iterator<Item = (usize, &[usize])> {
        let n = self.net.nodes.len().max(1);
        let count = self.state_count();
        (0..count).map(move |s| (s, &self.factor_coords[s * self.net.nodes.len()..(s * self.net.nodes.len() + n).min(self.factor_coords.len())]))
    }

    fn state_prob(&self, coords: &[usize], p: &Profile) -> f64 {
        coords.iter().map(|&c| p.values[c]).product()
    }

    fn state_utility(&self, s: usize, player: usize) -> f64 {
        self.utilities[s * self.net.players.len() + player]
    }

    /// `p(x)` by the product rule.
    pub fn joint_probability(&self, p: &Profile, x: &[usize]) -> Result<f64> {
        self.layout.check(p)?;
        crate::model::check_state(&self.net, x)?;
        Ok((0..self.net.nodes.len())
            .map(|k| p.values[self.layout.coord_in_state(&self.net, NodeId(k), x)])
            .product())
    }

    /// Sum of `u(x) p(x)` and of `p(x)` over the states in `event`.
    fn event_mass(&self, p: &Profile, player: usize, event: &Event) -> (f64, f64) {
        let decode = self.event_filter(event);
        let mut weighted = 0.0;
        let mut mass = 0.0;
        for (s, coords) in self.states() {
            if !decode(coords) {
                continue;
            }
            let q = self.state_prob(coords, p);
            mass += q;
            weighted += q * self.state_utility(s, player);
        }
        (weighted, mass)
    }

    /// Membership test on a state's factor coordinates.
    fn event_filter<'e>(&'e self, event: &'e Event) -> impl Fn(&[usize]) -> bool + 'e {
        move |coords: &[usize]| {
            event.0.iter().enumerate().all(|(k, want)| {
                want.is_none_or(|v| {
                    let dom = self.net.nodes[k].domain.len();
                    (coords[k] - self.layout.node_offsets[k]) % dom == v
                })
            })
        }
    }

    fn agent(&self, player: PlayerId) -> Result<usize> {
        let i = player.agent().ok_or(Error::NatureHasNoUtility)?;
        if i >= self.net.players.len() {
            return Err(Error::UnknownPlayer(i));
        }
        Ok(i)
    }

    /// `u(p)(E) = Σ_x u(x) p(x | E)`.
    pub fn expected_utility(&self, p: &Profile, player: PlayerId, event: &Event) -> Result<f64> {
        let i = self.agent(player)?;
        self.layout.check(p)?;
        let (weighted, mass) = self.event_mass(p, i, event);
        if mass <= 0.0 {
            return Err(Error::UnreachableEvent);
        }
        Ok(weighted / mass)
    }

    /// `u(p)(F | E) = u(p)(E ∩ F) / u(p)(E)`.
    pub fn conditional_eu(&self, p: &Profile, player: PlayerId, f: &Event, e: &Event) -> Result<f64> {
        let both = e.intersect(f).ok_or(Error::UnreachableEvent)?;
        Ok(self.expected_utility(p, player, &both)? / self.expected_utility(p, player, e)?)
    }

    fn check_interior(&self, p: &Profile) -> Result<Vec<f64>> {
        self.layout.check(p)?;
        let free = self.layout.free_values(p);
        if let Some((j, &x)) = free.iter().enumerate().find(|(_, &x)| x <= 0.0) {
            return Err(Error::BoundaryProfile { coordinate: self.layout.free[j], value: x });
        }
        Ok(free)
    }

    /// All numerators (per free variable) and denominators (per free block).
    pub fn value_terms(&self, free: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n: Vec<f64> = self.numer.iter().map(|q| q.eval(free)).collect();
        let d = (0..self.denom.len())
            .map(|fb| self.layout.free_range(self.layout.free_blocks[fb]).map(|j| n[j]).sum())
            .collect();
        (n, d)
    }

    /// Cofactors `M_j` at a free-variable vector.
    pub fn cofactors(&self, free: &[f64]) -> Vec<f64> {
        self.cofactor.iter().map(|q| q.eval(free)).collect()
    }

    /// Free-block position of free variable `j`.
    pub fn var_block(&self, j: usize) -> usize {
        self.var_block[j]
    }

    /// The value map on the interior of the profile space.
    pub fn value_map(&self, p: &Profile) -> Result<Profile> {
        let free = self.check_interior(p)?;
        let (n, d) = self.value_terms(&free);
        let v: Vec<f64> = n.iter().enumerate().map(|(j, nj)| nj / d[self.var_block[j]]).collect();
        Ok(self.layout.with_free(&v))
    }

    /// `F(p) = p − v(p)` over the free coordinates.
    pub fn residual(&self, p: &Profile) -> Result<Vec<f64>> {
        let free = self.check_interior(p)?;
        Ok(self.residual_free(&free, 0.0))
    }

    /// `F_ε(x) = x − ε z − (1 − ε) v(x)` on a free-variable vector; no
    /// interior check.
    pub fn residual_free(&self, free: &[f64], eps: f64) -> Vec<f64> {
        let (n, d) = self.value_terms(free);
        let z = self.layout.free_values(&self.layout.uniform());
        (0..free.len())
            .map(|j| free[j] - eps * z[j] - (1.0 - eps) * n[j] / d[self.var_block[j]])
            .collect()
    }

    /// Analytic Jacobian of `F_ε` over the free variables (row-major).
    pub fn jacobian_free(&self, free: &[f64], eps: f64) -> Vec<f64> {
        let dim = free.len();
        let mut jac = vec![0.0; dim * dim];
        let mut n = vec![0.0; dim];
        let mut grads = vec![0.0; dim * dim];
        for j in 0..dim {
            n[j] = self.numer[j].eval_grad(free, &mut grads[j * dim..(j + 1) * dim]);
        }
        for &b in &self.layout.free_blocks {
            let range = self.layout.free_range(b);
            let d: f64 = range.clone().map(|j| n[j]).sum();
            let mut dd = vec![0.0; dim];
            for j in range.clone() {
                for m in 0..dim {
                    dd[m] += grads[j * dim + m];
                }
            }
            for j in range {
                for m in 0..dim {
                    let dv = (grads[j * dim + m] * d - n[j] * dd[m]) / (d * d);
                    jac[j * dim + m] = -(1.0 - eps) * dv;
                }
                jac[j * dim + j] += 1.0;
            }
        }
        jac
    }

    /// Numeric `(N_j, D_h)` at any profile, boundary included.
    pub fn value_decomposition(&self, p: &Profile, j: usize) -> Result<ValueDecomposition> {
        self.layout.check(p)?;
        let free = self.layout.free_values(p);
        let numerator = self.numer[j].eval(&free);
        let denominator = self.denom[self.var_block[j]].eval(&free);
        Ok(ValueDecomposition { numerator, denominator })
    }

    /// `(N_j, D_h)` as polynomials in the free variables.
    pub fn symbolic_decomposition(&self, j: usize) -> SymbolicDecomposition<'_> {
        SymbolicDecomposition { numerator: &self.numer[j], denominator: &self.denom[self.var_block[j]] }
    }

    pub fn cofactor_poly(&self, j: usize) -> &Poly {
        &self.cofactor[j]
    }

    /// `Σ_{x ∈ E} u(x) p(x)` over the information set of free block `fb`,
    /// computed by enumeration with the block's distribution replaced by
    /// `replacement` when given.
    pub fn infoset_weight(&self, p: &Profile, fb: usize, replacement: Option<&[f64]>) -> f64 {
        let block = &self.layout.blocks[self.layout.free_blocks[fb]];
        let k = block.info.node.0;
        let i = block.owner.agent().expect("free blocks belong to agents");
        let mut acc = 0.0;
        for (s, coords) in self.states() {
            let c = coords[k];
            if c < block.start || c >= block.start + block.len {
                continue;
            }
            let mut q = self.state_utility(s, i);
            for (m, &cm) in coords.iter().enumerate() {
                q *= if m == k {
                    replacement.map_or(p.values[cm], |r| r[cm - block.start])
                } else {
                    p.values[cm]
                };
            }
            acc += q;
        }
        acc
    }
}

/// Free functions mirroring the evaluator for one-off calls.
pub fn expected_utility(net: &GNet, p: &Profile, player: PlayerId, event: &Event) -> Result<f64> {
    Evaluator::new(net)?.expected_utility(p, player, event)
}

pub fn value_map(net: &GNet, p: &Profile) -> Result<Profile> {
    Evaluator::new(net)?.value_map(p)
}

pub fn residual_f(net: &GNet, p: &Profile) -> Result<Vec<f64>> {
    Evaluator::new(net)?.residual(p)
}

pub fn joint_probability(net: &GNet, p: &Profile, x: &[usize]) -> Result<f64> {
    Evaluator::new(net)?.joint_probability(p, x)
}
