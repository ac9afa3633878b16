//! Finite extensive-form games, their conversion to G frames, and the agent
//! strategic form used as an independent equilibrium oracle.
//!
//! Conversion groups tree nodes into stages. Each stage becomes one G-net
//! node whose domain is the stage's actions, plus an `inactive` value when
//! some play skips the stage. A stage's probability parents are the smallest
//! set of earlier stages whose values determine what happens at the stage
//! (which information set acts, which chance distribution applies, or that
//! the stage is skipped); for decision stages each information set must also
//! correspond to exactly one parent assignment.

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expectations::Evaluator;
use crate::factor::attach_payoffs;
use crate::model::{mixed_digits, mixed_index, validate, Cpt, Event, GNet, GNode, InfoSet, NodeId, PlayerId};
use crate::profile::{Layout, Profile};

/// Tensor entries above which agent forms are refused.
pub const AGENT_FORM_LIMIT: u128 = 1_000_000;
/// Pure profiles above which support enumeration is refused.
pub const ORACLE_PROFILE_LIMIT: u128 = 100_000;
/// Earlier stages searched for a stage's parent set.
pub const MAX_PARENT_CANDIDATES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum EfKind {
    Chance { probs: Vec<f64> },
    Decision { player: usize, infoset: String },
    Leaf { payoffs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfNode {
    pub id: String,
    /// Parent node and the parent's action leading here.
    pub parent: Option<(usize, usize)>,
    pub stage: Option<String>,
    pub actions: Vec<String>,
    pub kind: EfKind,
    pub children: Vec<Option<usize>>,
}

impl EfNode {
    fn child(&self, a: usize) -> usize {
        self.children[a].expect("validated tree")
    }

    fn owner(&self) -> Option<PlayerId> {
        match &self.kind {
            EfKind::Chance { .. } => Some(PlayerId::Nature),
            EfKind::Decision { player, .. } => Some(PlayerId::Agent(*player)),
            EfKind::Leaf { .. } => None,
        }
    }
}

/// A rooted game tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct EfTree {
    pub players: Vec<String>,
    pub nodes: Vec<EfNode>,
}

/// An information set of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeInfoSet {
    pub label: String,
    pub player: usize,
    pub actions: Vec<String>,
    pub members: Vec<usize>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidTree(msg.into())
}

impl EfTree {
    /// Rooted-tree shape, positive payoffs, chance rows, consistent
    /// information sets and perfect recall.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(invalid("empty tree"));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if (i == 0) != node.parent.is_none() {
                return Err(invalid(format!("node `{}`: only the root has no parent", node.id)));
            }
            if let Some((p, a)) = node.parent {
                if self.nodes.get(p).and_then(|n| n.children.get(a).copied().flatten()) != Some(i) {
                    return Err(invalid(format!("node `{}`: parent link is not mirrored", node.id)));
                }
            }
            if node.children.iter().any(Option::is_none) || node.children.len() != node.actions.len() {
                return Err(invalid(format!("node `{}`: every action needs exactly one child", node.id)));
            }
            match &node.kind {
                EfKind::Leaf { payoffs } => {
                    if payoffs.len() != self.players.len() {
                        return Err(invalid(format!("leaf `{}`: wrong number of payoffs", node.id)));
                    }
                    if payoffs.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
                        return Err(invalid(format!("leaf `{}`: payoffs must be strictly positive", node.id)));
                    }
                }
                EfKind::Chance { probs } => {
                    let sum: f64 = probs.iter().sum();
                    if probs.len() != node.actions.len()
                        || probs.iter().any(|&p| !(0.0..=1.0).contains(&p))
                        || (sum - 1.0).abs() > crate::model::CPT_SUM_TOL
                    {
                        return Err(invalid(format!("chance node `{}`: probabilities must sum to 1", node.id)));
                    }
                }
                EfKind::Decision { player, .. } => {
                    if *player >= self.players.len() {
                        return Err(invalid(format!("node `{}`: unknown player", node.id)));
                    }
                    if node.actions.is_empty() {
                        return Err(invalid(format!("node `{}`: no actions", node.id)));
                    }
                }
            }
        }
        let sets = self.info_sets_unchecked();
        for set in &sets {
            for &m in &set.members {
                let node = &self.nodes[m];
                if node.owner() != Some(PlayerId::Agent(set.player)) || node.actions != set.actions {
                    return Err(invalid(format!("information set `{}` mixes players or action sets", set.label)));
                }
            }
            let first = self.own_history(set.members[0], set.player);
            if set.members.iter().any(|&m| self.own_history(m, set.player) != first) {
                return Err(Error::Unsupported(format!("imperfect recall at information set `{}`", set.label)));
            }
        }
        Ok(())
    }

    /// `(information set, action)` pairs of `player` on the path to `node`.
    fn own_history(&self, node: usize, player: usize) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        let mut cur = node;
        while let Some((p, a)) = self.nodes[cur].parent {
            if let EfKind::Decision { player: q, infoset } = &self.nodes[p].kind {
                if *q == player {
                    out.push((infoset.clone(), a));
                }
            }
            cur = p;
        }
        out.reverse();
        out
    }

    fn info_sets_unchecked(&self) -> Vec<TreeInfoSet> {
        let mut sets: Vec<TreeInfoSet> = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let EfKind::Decision { player, infoset } = &node.kind {
                match sets.iter_mut().find(|s| &s.label == infoset) {
                    Some(s) => s.members.push(i),
                    None => sets.push(TreeInfoSet {
                        label: infoset.clone(),
                        player: *player,
                        actions: node.actions.clone(),
                        members: vec![i],
                    }),
                }
            }
        }
        sets
    }

    /// Information sets in order of first appearance.
    pub fn info_sets(&self) -> Vec<TreeInfoSet> {
        self.info_sets_unchecked()
    }

    /// Information sets with a real choice (two or more actions).
    pub fn agent_info_sets(&self) -> Vec<TreeInfoSet> {
        self.info_sets_unchecked().into_iter().filter(|s| s.actions.len() >= 2).collect()
    }

    fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for i in 1..self.nodes.len() {
            depth[i] = depth[self.nodes[i].parent.expect("non-root").0] + 1;
        }
        depth
    }

    /// Root-to-leaf paths as `(node, action)` lists.
    fn plays(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((n, path)) = stack.pop() {
            let node = &self.nodes[n];
            if let EfKind::Leaf { .. } = node.kind {
                out.push(path);
                continue;
            }
            for a in (0..node.actions.len()).rev() {
                let mut next = path.clone();
                next.push((n, a));
                stack.push((node.child(a), next));
            }
        }
        out
    }

    /// Expected payoffs when each information set plays the given mixed
    /// strategy; sets missing from `strategy` play their first action.
    pub fn expected_payoffs(&self, strategy: &HashMap<String, Vec<f64>>) -> Vec<f64> {
        let mut total = vec![0.0; self.players.len()];
        let mut stack = vec![(0usize, 1.0f64)];
        while let Some((n, prob)) = stack.pop() {
            if prob == 0.0 {
                continue;
            }
            let node = &self.nodes[n];
            match &node.kind {
                EfKind::Leaf { payoffs } => {
                    for (t, u) in total.iter_mut().zip(payoffs) {
                        *t += prob * u;
                    }
                }
                EfKind::Chance { probs } => {
                    for (a, q) in probs.iter().enumerate() {
                        stack.push((node.child(a), prob * q));
                    }
                }
                EfKind::Decision { infoset, .. } => match strategy.get(infoset) {
                    Some(s) => {
                        for (a, q) in s.iter().enumerate() {
                            stack.push((node.child(a), prob * q));
                        }
                    }
                    None => stack.push((node.child(0), prob)),
                },
            }
        }
        total
    }

    /// Probability of reaching each information set in `labels`.
    pub fn reach(&self, strategy: &HashMap<String, Vec<f64>>, labels: &[String]) -> Vec<f64> {
        let mut reach: HashMap<&str, f64> = HashMap::new();
        let mut stack = vec![(0usize, 1.0f64)];
        while let Some((n, prob)) = stack.pop() {
            let node = &self.nodes[n];
            match &node.kind {
                EfKind::Leaf { .. } => {}
                EfKind::Chance { probs } => {
                    for (a, q) in probs.iter().enumerate() {
                        stack.push((node.child(a), prob * q));
                    }
                }
                EfKind::Decision { infoset, .. } => {
                    *reach.entry(infoset.as_str()).or_insert(0.0) += prob;
                    match strategy.get(infoset) {
                        Some(s) => {
                            for (a, q) in s.iter().enumerate() {
                                stack.push((node.child(a), prob * q));
                            }
                        }
                        None => stack.push((node.child(0), prob)),
                    }
                }
            }
        }
        labels.iter().map(|l| reach.get(l.as_str()).copied().unwrap_or(0.0)).collect()
    }

    /// Leaf payoffs at a full stage assignment, following the tree and taking
    /// the first action wherever the assigned value is not available.
    fn payoff_at(&self, stage_of: &[usize], x: &[usize]) -> &[f64] {
        let mut n = 0;
        loop {
            let node = &self.nodes[n];
            match &node.kind {
                EfKind::Leaf { payoffs } => return payoffs,
                _ => {
                    let v = x[stage_of[n]];
                    n = node.child(if v < node.actions.len() { v } else { 0 });
                }
            }
        }
    }
}

/// What happens at a stage on one play.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Status {
    Inactive,
    Info(String),
    Chance(Vec<u64>),
}

#[derive(Debug, Clone)]
pub struct EfConversion {
    pub net: GNet,
    /// Tree nodes grouped into each G-net node.
    pub stages: Vec<Vec<usize>>,
    /// Tree information set label and the G-net information set it became.
    pub info_sets: Vec<(String, InfoSet)>,
}

impl EfConversion {
    pub fn info_set_of(&self, label: &str) -> Option<InfoSet> {
        self.info_sets.iter().find(|(l, _)| l == label).map(|(_, i)| *i)
    }

    /// Behavior strategies of the tree's information sets read off a net profile.
    pub fn tree_strategy(&self, tree: &EfTree, p: &Profile) -> HashMap<String, Vec<f64>> {
        let layout = Layout::new(&self.net);
        tree.info_sets()
            .into_iter()
            .map(|set| {
                let info = self.info_set_of(&set.label).expect("every tree information set is mapped");
                let b = layout.block_for(info).expect("mapped information set has a block");
                let start = layout.blocks[b].start;
                (set.label, p.values[start..start + set.actions.len()].to_vec())
            })
            .collect()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Group internal tree nodes into stages, ordered by first depth.
fn stages(tree: &EfTree) -> Result<Vec<Vec<usize>>> {
    let depth = tree.depths();
    let n = tree.nodes.len();
    let mut uf = UnionFind((0..n).collect());
    let mut named: HashMap<&str, usize> = HashMap::new();
    let mut keyed: HashMap<(usize, Option<PlayerId>, &[String]), usize> = HashMap::new();
    let mut infosets: HashMap<&str, usize> = HashMap::new();
    let internal: Vec<usize> = (0..n).filter(|&i| !matches!(tree.nodes[i].kind, EfKind::Leaf { .. })).collect();
    for &i in &internal {
        let node = &tree.nodes[i];
        match &node.stage {
            Some(name) => {
                let first = *named.entry(name.as_str()).or_insert(i);
                uf.union(first, i);
            }
            None => {
                let first = *keyed.entry((depth[i], node.owner(), node.actions.as_slice())).or_insert(i);
                uf.union(first, i);
            }
        }
        if let EfKind::Decision { infoset, .. } = &node.kind {
            let first = *infosets.entry(infoset.as_str()).or_insert(i);
            uf.union(first, i);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in &internal {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| (g.iter().map(|&i| depth[i]).min(), g[0]));

    let mut stage_of = vec![usize::MAX; n];
    for (s, g) in out.iter().enumerate() {
        for &i in g {
            stage_of[i] = s;
        }
    }
    for (s, g) in out.iter().enumerate() {
        let first = &tree.nodes[g[0]];
        for &i in g {
            let node = &tree.nodes[i];
            if node.owner() != first.owner() || node.actions != first.actions {
                return Err(Error::Unsupported(format!(
                    "stage of `{}` and `{}` mixes owners or action sets",
                    first.id, node.id
                )));
            }
            let mut cur = i;
            while let Some((p, _)) = tree.nodes[cur].parent {
                if stage_of[p] == s {
                    return Err(Error::Unsupported(format!(
                        "a play visits the stage of `{}` twice (at `{}` and `{}`)",
                        first.id, tree.nodes[p].id, node.id
                    )));
                }
                cur = p;
            }
        }
    }
    Ok(out)
}

fn fresh(taken: &[String], name: &str) -> String {
    if !taken.iter().any(|t| t == name) {
        return name.to_string();
    }
    (2..).map(|i| format!("{name}_{i}")).find(|c| !taken.iter().any(|t| t == c)).expect("unbounded")
}

/// Smallest parent set (by size, then lexicographic) over which the stage's
/// status is a function, and injective on information sets for decisions.
fn find_parents(
    s: usize,
    values: &[Vec<usize>],
    status: &[Vec<Status>],
    decision: bool,
) -> Option<Vec<usize>> {
    let candidates: Vec<usize> = (0..s).collect();
    for size in 0..=candidates.len() {
        for subset in candidates.iter().copied().combinations(size) {
            let mut by_config: HashMap<Vec<usize>, &Status> = HashMap::new();
            let mut by_info: HashMap<&Status, Vec<usize>> = HashMap::new();
            let ok = values.iter().zip(status).all(|(vals, st)| {
                let config: Vec<usize> = subset.iter().map(|&q| vals[q]).collect();
                let st = &st[s];
                if *by_config.entry(config.clone()).or_insert(st) != st {
                    return false;
                }
                if decision && matches!(st, Status::Info(_)) {
                    return *by_info.entry(st).or_insert_with(|| config.clone()) == config;
                }
                true
            });
            if ok {
                return Some(subset);
            }
        }
    }
    None
}

/// Convert a tree to an equivalent G frame.
pub fn ef_to_gframe(tree: &EfTree) -> Result<EfConversion> {
    tree.validate()?;
    let groups = stages(tree)?;
    if groups.len() > MAX_PARENT_CANDIDATES + 1 {
        return Err(Error::Unsupported(format!("{} stages exceed the parent search limit", groups.len())));
    }
    let mut stage_of = vec![usize::MAX; tree.nodes.len()];
    for (s, g) in groups.iter().enumerate() {
        for &i in g {
            stage_of[i] = s;
        }
    }
    let ns = groups.len();
    let plays = tree.plays();
    let mut needs_inactive = vec![false; ns];
    let mut raw: Vec<Vec<Option<usize>>> = Vec::with_capacity(plays.len());
    let mut status: Vec<Vec<Status>> = Vec::with_capacity(plays.len());
    for play in &plays {
        let mut vals = vec![None; ns];
        let mut st = vec![Status::Inactive; ns];
        for &(n, a) in play {
            let s = stage_of[n];
            vals[s] = Some(a);
            st[s] = match &tree.nodes[n].kind {
                EfKind::Chance { probs } => Status::Chance(probs.iter().map(|p| p.to_bits()).collect()),
                EfKind::Decision { infoset, .. } => Status::Info(infoset.clone()),
                EfKind::Leaf { .. } => unreachable!("leaves have no stage"),
            };
        }
        for s in 0..ns {
            needs_inactive[s] |= vals[s].is_none();
        }
        raw.push(vals);
        status.push(st);
    }
    let inactive_index = |s: usize| tree.nodes[groups[s][0]].actions.len();
    let values: Vec<Vec<usize>> =
        raw.iter().map(|vals| vals.iter().enumerate().map(|(s, v)| v.unwrap_or_else(|| inactive_index(s))).collect()).collect();

    let mut net = GNet { players: tree.players.clone(), ..GNet::default() };
    let mut names: Vec<String> = Vec::new();
    let mut info_sets: Vec<(String, InfoSet)> = Vec::new();
    for s in 0..ns {
        let first = &tree.nodes[groups[s][0]];
        let decision = matches!(first.kind, EfKind::Decision { .. });
        let parents = find_parents(s, &values, &status, decision).ok_or_else(|| {
            Error::Unsupported(format!("no set of earlier stages determines the stage of `{}`", first.id))
        })?;
        let explicit = groups[s].iter().find_map(|&i| tree.nodes[i].stage.clone());
        let base = explicit.unwrap_or_else(|| match &first.kind {
            EfKind::Decision { infoset, .. }
                if groups[s].iter().all(|&i| matches!(&tree.nodes[i].kind, EfKind::Decision { infoset: l, .. } if l == infoset)) =>
            {
                infoset.clone()
            }
            _ => first.id.clone(),
        });
        let name = fresh(&names, &base);
        names.push(name.clone());
        let mut domain = first.actions.clone();
        let inactive = needs_inactive[s].then(|| {
            domain.push(fresh(&first.actions, "inactive"));
            domain.len() - 1
        });
        let player = first.owner().expect("internal node");
        let parent_ids: Vec<NodeId> = parents.iter().map(|&q| NodeId(q)).collect();
        net.nodes.push(GNode { name, player, domain: domain.clone(), parents: parent_ids.clone(), reference: 0, inactive });

        let radices = net.radices(&parent_ids);
        let configs: usize = radices.iter().product();
        let mut seen: Vec<Option<&Status>> = vec![None; configs];
        for (vals, st) in values.iter().zip(&status) {
            let c = mixed_index(parents.iter().map(|&q| vals[q]), radices.iter().copied());
            seen[c] = Some(&st[s]);
            if let Status::Info(label) = &st[s] {
                if !info_sets.iter().any(|(l, _)| l == label) {
                    info_sets.push((label.clone(), InfoSet { node: NodeId(s), config: c }));
                }
            }
        }
        let one_hot = |v: usize| {
            let mut row = vec![0.0; domain.len()];
            row[v] = 1.0;
            row
        };
        let parked = inactive.unwrap_or(0);
        let fallback_chance = status.iter().find_map(|st| match &st[s] {
            Status::Chance(bits) => Some(bits.clone()),
            _ => None,
        });
        let rows: Vec<Option<Vec<f64>>> = seen
            .iter()
            .map(|st| match st {
                Some(Status::Info(_)) => None,
                Some(Status::Chance(bits)) => {
                    let mut row: Vec<f64> = bits.iter().map(|&b| f64::from_bits(b)).collect();
                    row.resize(domain.len(), 0.0);
                    Some(row)
                }
                Some(Status::Inactive) => Some(one_hot(parked)),
                None if !decision && inactive.is_none() => {
                    let mut row: Vec<f64> = fallback_chance.as_ref().expect("chance stage").iter().map(|&b| f64::from_bits(b)).collect();
                    row.resize(domain.len(), 0.0);
                    Some(row)
                }
                None => Some(one_hot(parked)),
            })
            .collect();
        if rows.iter().any(Option::is_some) {
            net.cpts.push(Cpt { node: NodeId(s), rows });
        }
    }
    for i in 0..tree.players.len() {
        attach_payoffs(&mut net, i, |x| tree.payoff_at(&stage_of, x)[i]);
    }
    let violations = validate(&net);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    Ok(EfConversion { net, stages: groups, info_sets })
}

/// One pseudo-player per information set with a choice.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentPlayer {
    pub label: String,
    /// Index of the real player owning the information set.
    pub owner: usize,
    pub actions: Vec<String>,
}

/// Payoff tensors over pure profiles (mixed radix, first pseudo-player most
/// significant), one per pseudo-player.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentForm {
    pub players: Vec<AgentPlayer>,
    pub payoffs: Vec<Vec<f64>>,
}

/// A mixed profile of an agent form: one distribution per pseudo-player.
pub type AgentProfile = Vec<Vec<f64>>;

fn tensor_guard(radices: &[usize], players: usize) -> Result<usize> {
    let pure: u128 = radices.iter().map(|&r| r as u128).product();
    let size = pure * players.max(1) as u128;
    if size > AGENT_FORM_LIMIT {
        return Err(Error::TooLarge { what: "agent form", size, limit: AGENT_FORM_LIMIT });
    }
    Ok(pure as usize)
}

impl AgentForm {
    /// From a G net: pseudo-players are the free information sets; payoffs are
    /// expected utilities with Nature integrated out.
    pub fn from_net(net: &GNet) -> Result<AgentForm> {
        let ev = Evaluator::new(net)?;
        let layout = ev.layout();
        let players: Vec<AgentPlayer> = layout
            .free_blocks
            .iter()
            .map(|&b| {
                let block = &layout.blocks[b];
                let node = &net.nodes[block.info.node.0];
                AgentPlayer {
                    label: crate::model::info_set_label(net, block.info),
                    owner: block.owner.agent().expect("free blocks belong to agents"),
                    actions: block.available().iter().map(|&v| node.domain[v].clone()).collect(),
                }
            })
            .collect();
        let radices: Vec<usize> = players.iter().map(|p| p.actions.len()).collect();
        let pure = tensor_guard(&radices, players.len())?;
        let all = Event::everything(net.nodes.len());
        let mut payoffs = vec![vec![0.0; pure]; players.len()];
        let mut owner_eu = vec![0.0; net.players.len()];
        for idx in 0..pure {
            let digits = mixed_digits(idx, &radices);
            let mut free = vec![0.0; layout.free.len()];
            for (fb, &d) in digits.iter().enumerate() {
                free[layout.free_range(layout.free_blocks[fb]).start + d] = 1.0;
            }
            let p = layout.with_free(&free);
            for (i, eu) in owner_eu.iter_mut().enumerate() {
                *eu = ev.expected_utility(&p, PlayerId::Agent(i), &all)?;
            }
            for (k, pl) in players.iter().enumerate() {
                payoffs[k][idx] = owner_eu[pl.owner];
            }
        }
        Ok(AgentForm { players, payoffs })
    }

    /// From a tree directly, without any conversion.
    pub fn from_tree(tree: &EfTree) -> Result<AgentForm> {
        tree.validate()?;
        let sets = tree.agent_info_sets();
        let players: Vec<AgentPlayer> =
            sets.iter().map(|s| AgentPlayer { label: s.label.clone(), owner: s.player, actions: s.actions.clone() }).collect();
        let radices: Vec<usize> = players.iter().map(|p| p.actions.len()).collect();
        let pure = tensor_guard(&radices, players.len())?;
        let mut payoffs = vec![vec![0.0; pure]; players.len()];
        for idx in 0..pure {
            let digits = mixed_digits(idx, &radices);
            let strategy: HashMap<String, Vec<f64>> = sets
                .iter()
                .zip(&digits)
                .map(|(s, &d)| {
                    let mut row = vec![0.0; s.actions.len()];
                    row[d] = 1.0;
                    (s.label.clone(), row)
                })
                .collect();
            let u = tree.expected_payoffs(&strategy);
            for (k, pl) in players.iter().enumerate() {
                payoffs[k][idx] = u[pl.owner];
            }
        }
        Ok(AgentForm { players, payoffs })
    }

    pub fn radices(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.actions.len()).collect()
    }

    /// Expected payoff of pseudo-player `i`; with `deviation = Some(a)` its
    /// own strategy is replaced by the pure action `a`.
    pub fn payoff(&self, i: usize, sigma: &[Vec<f64>], deviation: Option<usize>) -> f64 {
        let radices = self.radices();
        let mut total = 0.0;
        for (idx, &u) in self.payoffs[i].iter().enumerate() {
            let digits = mixed_digits(idx, &radices);
            let mut w = 1.0;
            for (j, &d) in digits.iter().enumerate() {
                w *= match deviation {
                    Some(a) if j == i => f64::from(u8::from(d == a)),
                    _ => sigma[j][d],
                };
                if w == 0.0 {
                    break;
                }
            }
            total += w * u;
        }
        total
    }

    /// Largest gain from a pure deviation over all pseudo-players.
    pub fn max_regret(&self, sigma: &[Vec<f64>]) -> f64 {
        (0..self.players.len())
            .map(|i| {
                let base = self.payoff(i, sigma, None);
                (0..self.players[i].actions.len()).map(|a| self.payoff(i, sigma, Some(a)) - base).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_nash(&self, sigma: &[Vec<f64>], tol: f64) -> bool {
        self.max_regret(sigma) <= tol
    }

    /// Line-oriented tensor dump.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "agents: {}", self.players.len()).unwrap();
        for (k, p) in self.players.iter().enumerate() {
            writeln!(out, "agent: {k} owner={} infoset={} actions={}", p.owner, p.label.trim_end(), p.actions.join(",")).unwrap();
        }
        let radices = self.radices();
        let pure = self.payoffs.first().map_or(1, Vec::len);
        for idx in 0..pure {
            let digits = mixed_digits(idx, &radices);
            let labels: Vec<&str> = digits.iter().zip(&self.players).map(|(&d, p)| p.actions[d].as_str()).collect();
            let values: Vec<String> = self.payoffs.iter().map(|t| format!("{:.16e}", t[idx])).collect();
            writeln!(out, "entry: {} = {}", labels.join(","), values.join(",")).unwrap();
        }
        out
    }
}

/// Multilinear polynomial over the oracle's unknowns: sorted variable list to
/// coefficient.
type Multi = BTreeMap<Vec<usize>, f64>;

/// An affine form `c + Σ a_v y_v`.
type Affine = Vec<(Option<usize>, f64)>;

fn mul_affine(poly: &Multi, affine: &Affine) -> Multi {
    let mut out = Multi::new();
    for (mono, c) in poly {
        for &(var, a) in affine {
            let mut m = mono.clone();
            if let Some(v) = var {
                m.push(v);
                m.sort_unstable();
            }
            *out.entry(m).or_insert(0.0) += c * a;
        }
    }
    out
}

/// All Nash equilibria of the agent form, by support enumeration. For each
/// support profile the indifference conditions are linear in the unknown
/// probabilities when each pseudo-player's payoff differences are linear in
/// the others' strategies (always the case for two pseudo-players and for
/// agent forms of trees where each information set's payoff depends on the
/// others separately); the feasible set is a polytope whose vertices are
/// returned. Other support profiles are reported as unsupported.
pub fn oracle_support_enumeration(agent: &AgentForm) -> Result<Vec<AgentProfile>> {
    let radices = agent.radices();
    let pure: u128 = radices.iter().map(|&r| r as u128).product();
    if pure > ORACLE_PROFILE_LIMIT {
        return Err(Error::TooLarge { what: "pure profile space", size: pure, limit: ORACLE_PROFILE_LIMIT });
    }
    let n = agent.players.len();
    let supports_per_player: Vec<Vec<Vec<usize>>> =
        radices.iter().map(|&r| (1..=r).flat_map(|k| (0..r).combinations(k)).collect()).collect();
    let mut found: Vec<AgentProfile> = Vec::new();
    for supports in supports_per_player.iter().map(|s| s.iter()).multi_cartesian_product() {
        for sigma in solve_support(agent, &supports)? {
            if !found.iter().any(|f| profile_distance(f, &sigma) < 1e-9) {
                found.push(sigma);
            }
        }
    }
    if n == 0 {
        found.push(Vec::new());
    }
    Ok(found)
}

fn profile_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

const ORACLE_TOL: f64 = 1e-9;

fn solve_support(agent: &AgentForm, supports: &[&Vec<usize>]) -> Result<Vec<AgentProfile>> {
    let radices = agent.radices();
    let n = radices.len();
    // unknown y for every support action except the last of each support
    let mut offset = vec![0; n];
    let mut m = 0;
    for i in 0..n {
        offset[i] = m;
        m += supports[i].len() - 1;
    }
    // sigma_i(a) as an affine form in y
    let sigma_form = |i: usize, a: usize| -> Affine {
        let s = supports[i];
        match s.iter().position(|&b| b == a) {
            None => vec![],
            Some(t) if t + 1 < s.len() => vec![(Some(offset[i] + t), 1.0)],
            Some(_) => {
                let mut f: Affine = vec![(None, 1.0)];
                f.extend((0..s.len() - 1).map(|t| (Some(offset[i] + t), -1.0)));
                f
            }
        }
    };
    // U_i(a) for every pseudo-player and action
    let mut eq_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut ineq_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        let scale = agent.payoffs[i].iter().fold(0.0f64, |a, &u| a.max(u.abs())).max(1.0);
        let utilities: Vec<Multi> = (0..radices[i])
            .map(|a| {
                let mut total = Multi::new();
                for (idx, &u) in agent.payoffs[i].iter().enumerate() {
                    let digits = mixed_digits(idx, &radices);
                    if digits[i] != a || (0..n).any(|j| j != i && !supports[j].contains(&digits[j])) {
                        continue;
                    }
                    let mut term = Multi::from([(Vec::new(), u)]);
                    for j in (0..n).filter(|&j| j != i) {
                        term = mul_affine(&term, &sigma_form(j, digits[j]));
                    }
                    for (mono, c) in term {
                        *total.entry(mono).or_insert(0.0) += c;
                    }
                }
                total
            })
            .collect();
        let a0 = supports[i][0];
        for a in 0..radices[i] {
            if a == a0 {
                continue;
            }
            let mut diff = utilities[a].clone();
            for (mono, c) in &utilities[a0] {
                *diff.entry(mono.clone()).or_insert(0.0) -= c;
            }
            let mut row = vec![0.0; m];
            let mut constant = 0.0;
            for (mono, c) in diff {
                if c.abs() <= 1e-11 * scale {
                    continue;
                }
                match mono.as_slice() {
                    [] => constant += c,
                    [v] => row[*v] += c,
                    _ => {
                        return Err(Error::Unsupported(
                            "support enumeration met nonlinear indifference conditions".into(),
                        ))
                    }
                }
            }
            // row·y + constant {= , ≤} 0
            if supports[i].contains(&a) {
                eq_rows.push((row, -constant));
            } else {
                ineq_rows.push((row, -constant));
            }
        }
        // nonnegativity of every support probability
        for t in 0..supports[i].len() - 1 {
            let mut row = vec![0.0; m];
            row[offset[i] + t] = -1.0;
            ineq_rows.push((row, 0.0));
        }
        let mut row = vec![0.0; m];
        for t in 0..supports[i].len() - 1 {
            row[offset[i] + t] = 1.0;
        }
        ineq_rows.push((row, 1.0));
    }

    let to_profile = |y: &[f64]| -> AgentProfile {
        (0..n)
            .map(|i| {
                let mut s = vec![0.0; radices[i]];
                for &a in supports[i] {
                    s[a] = sigma_form(i, a).iter().map(|&(v, c)| c * v.map_or(1.0, |v| y[v])).sum::<f64>().clamp(0.0, 1.0);
                }
                let total: f64 = s.iter().sum();
                s.iter_mut().for_each(|x| *x /= total);
                s
            })
            .collect()
    };
    let feasible = |y: &[f64]| {
        eq_rows.iter().all(|(r, b)| (dot(r, y) - b).abs() <= ORACLE_TOL * 10.0)
            && ineq_rows.iter().all(|(r, b)| dot(r, y) - b <= ORACLE_TOL * 10.0)
    };

    if m == 0 {
        return Ok(if feasible(&[]) { vec![to_profile(&[])] } else { vec![] });
    }
    let rank_eq = rank(&eq_rows, m);
    let need = m - rank_eq;
    let mut out: Vec<AgentProfile> = Vec::new();
    for active in (0..ineq_rows.len()).combinations(need) {
        let rows: Vec<&(Vec<f64>, f64)> = eq_rows.iter().chain(active.iter().map(|&k| &ineq_rows[k])).collect();
        let a = DMatrix::from_fn(rows.len(), m, |r, c| rows[r].0[c]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let svd = a.clone().svd(true, true);
        if svd.rank(1e-10) < m {
            continue;
        }
        let Ok(y) = svd.solve(&b, 1e-12) else { continue };
        let y: Vec<f64> = y.iter().copied().collect();
        if feasible(&y) {
            let sigma = to_profile(&y);
            if !out.iter().any(|f| profile_distance(f, &sigma) < 1e-9) {
                out.push(sigma);
            }
        }
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rank(rows: &[(Vec<f64>, f64)], m: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    DMatrix::from_fn(rows.len(), m, |r, c| rows[r].0[c]).svd(false, false).rank(1e-10)
}

/// Map an agent profile of `AgentForm::from_net(net)` to a net profile.
pub fn net_profile_from_agent(net: &GNet, sigma: &[Vec<f64>]) -> Profile {
    let layout = Layout::new(net);
    let mut free = Vec::with_capacity(layout.free.len());
    for s in sigma {
        free.extend_from_slice(s);
    }
    layout.with_free(&free)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_ef;
    use crate::games::{beer_quiche, coordination, matching_pennies, prisoners_dilemma};
    use crate::model::{parameter_count, utility};

    pub(crate) const BEER_QUICHE: &str = "\
players P1 P2
chance t stage=Type probs=S:9/10,W:1/10
decision ds parent=t:S player=P1 infoset=strong actions=B,Q stage=Drink
decision dw parent=t:W player=P1 infoset=weak actions=B,Q stage=Drink
decision fsb parent=ds:B player=P2 infoset=beer actions=F,N stage=Fight
decision fsq parent=ds:Q player=P2 infoset=quiche actions=F,N stage=Fight
decision fwb parent=dw:B player=P2 infoset=beer actions=F,N stage=Fight
decision fwq parent=dw:Q player=P2 infoset=quiche actions=F,N stage=Fight
leaf a parent=fsb:F payoffs=2,1
leaf b parent=fsb:N payoffs=4,2
leaf c parent=fsq:F payoffs=1,1
leaf d parent=fsq:N payoffs=2,2
leaf e parent=fwb:F payoffs=1,3
leaf f parent=fwb:N payoffs=3,2
leaf g parent=fwq:F payoffs=2,3
leaf h parent=fwq:N payoffs=6,2
";

    const TWO_STAGE: &str = "\
players P
decision r player=P infoset=first actions=a,b
decision s parent=r:a player=P infoset=second actions=c,d
leaf l1 parent=r:b payoffs=2
leaf l2 parent=s:c payoffs=1
leaf l3 parent=s:d payoffs=3
";

    fn sorted(mut v: Vec<AgentProfile>) -> Vec<AgentProfile> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn beer_quiche_converts_to_the_reference_net() {
        let tree = parse_ef(BEER_QUICHE).unwrap();
        let conv = ef_to_gframe(&tree).unwrap();
        let net = &conv.net;
        let names: Vec<&str> = net.nodes.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, ["Type", "Drink", "Fight"]);
        assert_eq!(net.nodes[1].parents, vec![NodeId(0)]);
        assert_eq!(net.nodes[2].parents, vec![NodeId(1)]);
        assert!(net.nodes.iter().all(|n| n.inactive.is_none()));
        assert_eq!(parameter_count(net), (8, 16));
        let mut reference = beer_quiche(0.9);
        reference.cpts[0].rows[0] = Some(vec![0.9, 0.1]);
        assert_eq!(*net, reference);
        assert_eq!(conv.info_set_of("weak"), Some(InfoSet { node: NodeId(1), config: 1 }));
        assert_eq!(conv.info_set_of("quiche"), Some(InfoSet { node: NodeId(2), config: 1 }));
    }

    #[test]
    fn bimatrix_tree_needs_no_padding() {
        let text = "players A B\ndecision r player=A infoset=row actions=u,d\n\
                    decision c1 parent=r:u player=B infoset=col actions=l,r\n\
                    decision c2 parent=r:d player=B infoset=col actions=l,r\n\
                    leaf a parent=c1:l payoffs=3,3\nleaf b parent=c1:r payoffs=1,1\n\
                    leaf c parent=c2:l payoffs=1,1\nleaf d parent=c2:r payoffs=2,2\n";
        let conv = ef_to_gframe(&parse_ef(text).unwrap()).unwrap();
        assert_eq!(conv.net.nodes.len(), 2);
        assert!(conv.net.nodes.iter().all(|n| n.parents.is_empty() && n.inactive.is_none()));
        for x in crate::model::all_states(&conv.net) {
            let u = utility(&conv.net, PlayerId::Agent(0), &x).unwrap();
            let expected = [[3.0, 1.0], [1.0, 2.0]][x[0]][x[1]] / 3.0;
            assert!((u - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn two_stage_tree_is_padded() {
        let tree = parse_ef(TWO_STAGE).unwrap();
        let conv = ef_to_gframe(&tree).unwrap();
        let net = &conv.net;
        assert_eq!(net.nodes[1].domain, ["c", "d", "inactive"]);
        assert_eq!(net.nodes[1].inactive, Some(2));
        assert_eq!(net.nodes[1].parents, vec![NodeId(0)]);
        let cpt = net.cpt(NodeId(1)).unwrap();
        assert_eq!(cpt.rows, vec![None, Some(vec![0.0, 0.0, 1.0])]);
        let layout = Layout::new(net);
        assert_eq!(layout.free_blocks.len(), 2);
    }

    #[test]
    fn imperfect_recall_is_rejected() {
        // the player forgets their own first move
        let text = "players P\ndecision r player=P infoset=first actions=a,b\n\
                    decision s1 parent=r:a player=P infoset=second actions=c,d\n\
                    decision s2 parent=r:b player=P infoset=second actions=c,d\n\
                    leaf l1 parent=s1:c payoffs=1\nleaf l2 parent=s1:d payoffs=2\n\
                    leaf l3 parent=s2:c payoffs=3\nleaf l4 parent=s2:d payoffs=4\n";
        assert!(matches!(ef_to_gframe(&parse_ef(text).unwrap()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn agent_form_of_pennies_matches_utilities() {
        let net = matching_pennies();
        let af = AgentForm::from_net(&net).unwrap();
        assert_eq!(af.players.len(), 2);
        for idx in 0..4 {
            let x = [idx / 2, idx % 2];
            assert_eq!(af.payoffs[0][idx], utility(&net, PlayerId::Agent(0), &x).unwrap());
            assert_eq!(af.payoffs[1][idx], utility(&net, PlayerId::Agent(1), &x).unwrap());
        }
    }

    #[test]
    fn agent_form_of_beer_quiche_has_four_agents() {
        let af = AgentForm::from_net(&beer_quiche(0.9)).unwrap();
        assert_eq!(af.players.len(), 4);
        let tree_af = AgentForm::from_tree(&parse_ef(BEER_QUICHE).unwrap()).unwrap();
        assert_eq!(tree_af.players.len(), 4);
        // all beer, no fight: 0.9·4 + 0.1·3 in tree units
        assert!((tree_af.payoffs[0][0b0011] - 3.9).abs() < 1e-12);
    }

    #[test]
    fn nature_only_net_has_no_agents() {
        let mut net = GNet { players: vec![], ..GNet::default() };
        net.nodes.push(GNode {
            name: "N".into(),
            player: PlayerId::Nature,
            domain: vec!["a".into(), "b".into()],
            parents: vec![],
            reference: 0,
            inactive: None,
        });
        net.cpts.push(Cpt { node: NodeId(0), rows: vec![Some(vec![0.5, 0.5])] });
        assert!(AgentForm::from_net(&net).unwrap().players.is_empty());
    }

    #[test]
    fn oracle_on_small_games() {
        let pennies = oracle_support_enumeration(&AgentForm::from_net(&matching_pennies()).unwrap()).unwrap();
        assert_eq!(pennies.len(), 1);
        assert!(profile_distance(&pennies[0], &[vec![0.5, 0.5], vec![0.5, 0.5]]) < 1e-12);

        let coord = sorted(oracle_support_enumeration(&AgentForm::from_net(&coordination()).unwrap()).unwrap());
        assert_eq!(coord.len(), 3);
        let third = 1.0 / 3.0;
        assert!(profile_distance(&coord[0], &[vec![0.0, 1.0], vec![0.0, 1.0]]) < 1e-12);
        assert!(profile_distance(&coord[1], &[vec![third, 1.0 - third], vec![third, 1.0 - third]]) < 1e-12);
        assert!(profile_distance(&coord[2], &[vec![1.0, 0.0], vec![1.0, 0.0]]) < 1e-12);

        let pd = oracle_support_enumeration(&AgentForm::from_net(&prisoners_dilemma()).unwrap()).unwrap();
        assert_eq!(pd, vec![vec![vec![0.0, 1.0], vec![0.0, 1.0]]]);
    }

    #[test]
    fn oracle_on_beer_quiche_finds_both_poolings() {
        let af = AgentForm::from_tree(&parse_ef(BEER_QUICHE).unwrap()).unwrap();
        let eqs = oracle_support_enumeration(&af).unwrap();
        assert!(!eqs.is_empty());
        for e in &eqs {
            assert!(af.is_nash(e, 1e-9), "{e:?}");
        }
        let beer = eqs.iter().any(|e| e[0][0] == 1.0 && e[1][0] == 1.0);
        let quiche = eqs.iter().any(|e| e[0][1] == 1.0 && e[1][1] == 1.0);
        assert!(beer && quiche);
    }
}
