//! Game network data model.
//!
//! A [`GNet`] is a set of finitely-valued nodes in a fixed order. Each node is
//! owned by Nature or by one agent, observes its probability parents, and
//! carries per-player utility potentials. Probabilities factor by the
//! product rule over the probability parents; utilities factor as the product
//! of each player's potential tables.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on conditional probability rows stored in the game.
pub const CPT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlayerId {
    Nature,
    Agent(usize),
}

impl PlayerId {
    pub fn agent(self) -> Option<usize> {
        match self {
            PlayerId::Nature => None,
            PlayerId::Agent(i) => Some(i),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GNode {
    pub name: String,
    pub player: PlayerId,
    pub domain: Vec<String>,
    pub parents: Vec<NodeId>,
    /// Component of the reference state x⁰.
    pub reference: usize,
    /// Padding value that is only reachable through pinned rows.
    pub inactive: Option<usize>,
}

impl GNode {
    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == label)
    }
}

/// `w^player(x_node | x_neighbors)`, indexed by `config * |domain| + value`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    pub player: usize,
    pub node: NodeId,
    pub neighbors: Vec<NodeId>,
    pub entries: Vec<f64>,
}

/// Fixed conditional distributions for a node, one optional row per parent
/// configuration. Nature nodes fix every row; decision nodes may pin rows
/// (padding that the owner never controls).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub node: NodeId,
    pub rows: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UtilityArc {
    pub player: usize,
    pub a: NodeId,
    pub b: NodeId,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GNet {
    pub players: Vec<String>,
    pub nodes: Vec<GNode>,
    pub uarcs: Vec<UtilityArc>,
    pub potentials: Vec<PotentialTable>,
    pub cpts: Vec<Cpt>,
}

/// A joint assignment of a node's probability parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InfoSet {
    pub node: NodeId,
    /// Mixed-radix index of the parent assignment (first parent most significant).
    pub config: usize,
}

/// A partial assignment: `Some(v)` fixes node `k` to value `v`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Event(pub Vec<Option<usize>>);

impl Event {
    pub fn everything(n: usize) -> Self {
        Event(vec![None; n])
    }

    pub fn with(mut self, node: NodeId, value: usize) -> Self {
        self.0[node.0] = Some(value);
        self
    }

    pub fn contains(&self, state: &[usize]) -> bool {
        self.0.iter().zip(state).all(|(e, &x)| e.is_none_or(|v| v == x))
    }

    pub fn intersect(&self, other: &Event) -> Option<Event> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(match (a, b) {
                (Some(x), Some(y)) if x != y => return None,
                (Some(x), _) | (None, Some(x)) => Some(*x),
                (None, None) => None,
            });
        }
        Some(Event(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Players,
    Domain,
    Reference,
    Parents,
    Acyclic,
    UtilityArc,
    TableShape,
    Neighbors,
    Positivity,
    ReferenceUnit,
    DuplicateTable,
    MissingCpt,
    CptRow,
    Available,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Players => "players",
            Rule::Domain => "domain",
            Rule::Reference => "reference",
            Rule::Parents => "parents",
            Rule::Acyclic => "acyclic",
            Rule::UtilityArc => "utility-arc",
            Rule::TableShape => "table-shape",
            Rule::Neighbors => "neighbors",
            Rule::Positivity => "positivity",
            Rule::ReferenceUnit => "reference-unit",
            Rule::DuplicateTable => "duplicate-table",
            Rule::MissingCpt => "missing-cpt",
            Rule::CptRow => "cpt-row",
            Rule::Available => "available-actions",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.subject, self.rule, self.detail)
    }
}

/// Mixed-radix index of `values` over `radices`, first position most significant.
pub(crate) fn mixed_index(values: impl IntoIterator<Item = usize>, radices: impl IntoIterator<Item = usize>) -> usize {
    values.into_iter().zip(radices).fold(0, |acc, (v, r)| acc * r + v)
}

/// Inverse of [`mixed_index`].
pub(crate) fn mixed_digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    out
}

impl GNet {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &GNode {
        &self.nodes[id.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn player_by_name(&self, name: &str) -> Option<usize> {
        self.players.iter().position(|p| p == name)
    }

    pub fn domain_size(&self, id: NodeId) -> usize {
        self.nodes[id.0].domain.len()
    }

    pub fn radices(&self, ids: &[NodeId]) -> Vec<usize> {
        ids.iter().map(|&m| self.domain_size(m)).collect()
    }

    pub fn parent_configs(&self, id: NodeId) -> usize {
        self.nodes[id.0].parents.iter().map(|&m| self.domain_size(m)).product()
    }

    /// Index of the parent assignment of `id` inside a full state.
    pub fn parent_config_of(&self, id: NodeId, state: &[usize]) -> usize {
        let node = &self.nodes[id.0];
        mixed_index(node.parents.iter().map(|m| state[m.0]), node.parents.iter().map(|&m| self.domain_size(m)))
    }

    pub fn parent_values(&self, info: InfoSet) -> Vec<usize> {
        mixed_digits(info.config, &self.radices(&self.nodes[info.node.0].parents))
    }

    pub fn reference_state(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.reference).collect()
    }

    pub fn cpt(&self, id: NodeId) -> Option<&Cpt> {
        self.cpts.iter().find(|c| c.node == id)
    }

    pub fn tables_of(&self, player: usize) -> impl Iterator<Item = &PotentialTable> {
        self.potentials.iter().filter(move |t| t.player == player)
    }

    /// `UN_i(k)`: nodes joined to `id` by one of `player`'s utility arcs.
    pub fn utility_neighbors(&self, player: usize, id: NodeId) -> Vec<NodeId> {
        let set: BTreeSet<NodeId> = self
            .uarcs
            .iter()
            .filter(|a| a.player == player)
            .filter_map(|a| {
                if a.a == id {
                    Some(a.b)
                } else if a.b == id {
                    Some(a.a)
                } else {
                    None
                }
            })
            .collect();
        set.into_iter().collect()
    }

    /// Values a decision node may take at an unpinned row.
    pub fn available_values(&self, id: NodeId) -> Vec<usize> {
        let node = &self.nodes[id.0];
        (0..node.domain.len()).filter(|&v| Some(v) != node.inactive).collect()
    }

    /// Topological order of the probability graph, or `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (k, node) in self.nodes.iter().enumerate() {
            for p in &node.parents {
                if p.0 < n {
                    indeg[k] += 1;
                    children[p.0].push(k);
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&k| indeg[k] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(k) = ready.pop_first() {
            order.push(NodeId(k));
            for &c in &children[k] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    /// A two-player simultaneous game from raw positive payoff matrices
    /// `row[a][b]`, `col[a][b]`. Payoffs are rescaled so the reference state
    /// (first action of both players) has utility 1.
    pub fn bimatrix(row: &[Vec<f64>], col: &[Vec<f64>]) -> GNet {
        let labels = |prefix: &str, k: usize| (0..k).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
        let node = |name: &str, player: usize, domain: Vec<String>| GNode {
            name: name.into(),
            player: PlayerId::Agent(player),
            domain,
            parents: vec![],
            reference: 0,
            inactive: None,
        };
        let mut net = GNet {
            players: vec!["P1".into(), "P2".into()],
            nodes: vec![node("R", 0, labels("r", row.len())), node("C", 1, labels("c", row[0].len()))],
            ..GNet::default()
        };
        crate::factor::attach_payoffs(&mut net, 0, |x| row[x[0]][x[1]]);
        crate::factor::attach_payoffs(&mut net, 1, |x| col[x[0]][x[1]]);
        net
    }
}

/// Structural checks. An empty result means the game is well formed.
pub fn validate(net: &GNet) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = net.nodes.len();
    macro_rules! push {
        ($subject:expr, $rule:expr, $detail:expr) => {
            out.push(Violation { subject: $subject, rule: $rule, detail: $detail })
        };
    }

    let mut names = BTreeSet::new();
    for p in &net.players {
        if !names.insert(p.as_str()) {
            push!(format!("player {p}"), Rule::Players, "duplicate player name".into());
        }
    }
    let mut node_names = BTreeSet::new();
    for (k, node) in net.nodes.iter().enumerate() {
        let subject = format!("node {}", node.name);
        if !node_names.insert(node.name.as_str()) {
            push!(subject.clone(), Rule::Domain, "duplicate node name".into());
        }
        if let PlayerId::Agent(i) = node.player {
            if i >= net.players.len() {
                push!(subject.clone(), Rule::Players, format!("owner index {i} out of range"));
            }
        }
        if node.domain.is_empty() {
            push!(subject.clone(), Rule::Domain, "empty domain".into());
        }
        let labels: BTreeSet<&str> = node.domain.iter().map(String::as_str).collect();
        if labels.len() != node.domain.len() {
            push!(subject.clone(), Rule::Domain, "duplicate value labels".into());
        }
        if node.reference >= node.domain.len() {
            push!(subject.clone(), Rule::Reference, "reference value outside the domain".into());
        }
        if node.inactive.is_some_and(|v| v >= node.domain.len()) {
            push!(subject.clone(), Rule::Domain, "inactive value outside the domain".into());
        }
        let mut seen = BTreeSet::new();
        for p in &node.parents {
            if p.0 >= n {
                push!(subject.clone(), Rule::Parents, format!("parent index {} out of range", p.0));
            } else if p.0 == k {
                push!(subject.clone(), Rule::Parents, "node is its own parent".into());
            } else if !seen.insert(*p) {
                push!(subject.clone(), Rule::Parents, format!("duplicate parent {}", net.nodes[p.0].name));
            }
        }
    }
    let structure_ok = out.is_empty();
    if structure_ok && net.topological_order().is_none() {
        let cyclic: Vec<&str> = cycle_members(net).into_iter().map(|k| net.nodes[k].name.as_str()).collect();
        push!("probability graph".into(), Rule::Acyclic, format!("cycle through {}", cyclic.join(", ")));
    }
    if !structure_ok {
        return out;
    }

    for arc in &net.uarcs {
        let subject = format!("uarc {}", net.players.get(arc.player).map(String::as_str).unwrap_or("?"));
        if arc.player >= net.players.len() {
            push!(subject, Rule::UtilityArc, "unknown player".into());
        } else if arc.a.0 >= n || arc.b.0 >= n {
            push!(subject, Rule::UtilityArc, "endpoint out of range".into());
        } else if arc.a == arc.b {
            push!(subject, Rule::UtilityArc, format!("self loop at {}", net.nodes[arc.a.0].name));
        }
    }

    let mut seen_tables = BTreeSet::new();
    for t in &net.potentials {
        if t.player >= net.players.len() || t.node.0 >= n {
            push!("potential".into(), Rule::TableShape, "unknown player or node".into());
            continue;
        }
        let subject = format!("potential {} {}", net.players[t.player], net.nodes[t.node.0].name);
        if !seen_tables.insert((t.player, t.node)) {
            push!(subject.clone(), Rule::DuplicateTable, "more than one table for this player and node".into());
        }
        let un = net.utility_neighbors(t.player, t.node);
        let mut ok = true;
        for m in &t.neighbors {
            if m.0 >= n || *m == t.node || !un.contains(m) {
                ok = false;
                let name = net.nodes.get(m.0).map(|x| x.name.as_str()).unwrap_or("?");
                push!(subject.clone(), Rule::Neighbors, format!("{name} is not a utility neighbor"));
            }
        }
        if !ok {
            continue;
        }
        let dom = net.domain_size(t.node);
        let configs: usize = t.neighbors.iter().map(|&m| net.domain_size(m)).product();
        if t.entries.len() != dom * configs {
            push!(subject, Rule::TableShape, format!("expected {} entries, found {}", dom * configs, t.entries.len()));
            continue;
        }
        let bad = t.entries.iter().filter(|w| !(w.is_finite() && **w > 0.0)).count();
        if bad > 0 {
            push!(subject.clone(), Rule::Positivity, format!("{bad} non-positive entries"));
        }
        let r = net.nodes[t.node.0].reference;
        if (0..configs).any(|c| t.entries[c * dom + r] != 1.0) {
            push!(subject, Rule::ReferenceUnit, "entry at the reference value must be exactly 1".into());
        }
    }

    let mut seen_cpts = BTreeSet::new();
    for c in &net.cpts {
        if c.node.0 >= n {
            push!("cpt".into(), Rule::CptRow, "unknown node".into());
            continue;
        }
        let node = &net.nodes[c.node.0];
        let subject = format!("cpt {}", node.name);
        if !seen_cpts.insert(c.node) {
            push!(subject.clone(), Rule::DuplicateTable, "more than one cpt for this node".into());
        }
        if c.rows.len() != net.parent_configs(c.node) {
            push!(subject, Rule::TableShape, format!("expected {} rows, found {}", net.parent_configs(c.node), c.rows.len()));
            continue;
        }
        for (h, row) in c.rows.iter().enumerate() {
            match row {
                None if node.player == PlayerId::Nature => {
                    push!(subject.clone(), Rule::MissingCpt, format!("row {h} unspecified for a nature node"));
                }
                None => {}
                Some(r) => {
                    if r.len() != node.domain.len() {
                        push!(subject.clone(), Rule::CptRow, format!("row {h} has {} entries", r.len()));
                    } else if r.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                        push!(subject.clone(), Rule::CptRow, format!("row {h} has a negative entry"));
                    } else if (r.iter().sum::<f64>() - 1.0).abs() > CPT_SUM_TOL {
                        push!(subject.clone(), Rule::CptRow, format!("row {h} does not sum to 1"));
                    }
                }
            }
        }
    }
    for (k, node) in net.nodes.iter().enumerate() {
        let id = NodeId(k);
        if node.player == PlayerId::Nature && net.cpt(id).is_none() {
            push!(format!("node {}", node.name), Rule::MissingCpt, "nature node without a cpt".into());
        }
        if node.player != PlayerId::Nature {
            let pinned_all = net.cpt(id).is_some_and(|c| c.rows.iter().all(Option::is_some));
            if !pinned_all && net.available_values(id).is_empty() {
                push!(format!("node {}", node.name), Rule::Available, "no value available to the owner".into());
            }
        }
    }
    out
}

fn cycle_members(net: &GNet) -> Vec<usize> {
    // Repeatedly strip nodes with no remaining parents or no remaining children.
    let n = net.nodes.len();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for k in 0..n {
            if !alive[k] {
                continue;
            }
            let has_parent = net.nodes[k].parents.iter().any(|p| alive[p.0]);
            let has_child = (0..n).any(|c| alive[c] && net.nodes[c].parents.contains(&NodeId(k)));
            if !has_parent || !has_child {
                alive[k] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).filter(|&k| alive[k]).collect()
}

/// Every full state of the game in lexicographic order (last node fastest).
pub fn all_states(net: &GNet) -> impl Iterator<Item = Vec<usize>> + '_ {
    let radices: Vec<usize> = net.nodes.iter().map(|n| n.domain.len()).collect();
    let total: usize = radices.iter().product();
    (0..total).map(move |i| mixed_digits(i, &radices))
}

pub fn state_count(net: &GNet) -> u128 {
    net.nodes.iter().map(|n| n.domain.len() as u128).product()
}

pub(crate) fn check_state(net: &GNet, x: &[usize]) -> Result<()> {
    if x.len() != net.nodes.len() || x.iter().zip(&net.nodes).any(|(&v, n)| v >= n.domain.len()) {
        return Err(Error::BadAssignment);
    }
    Ok(())
}

/// `u^player(x)` as the product of the player's potential tables.
pub fn utility(net: &GNet, player: PlayerId, x: &[usize]) -> Result<f64> {
    let i = player.agent().ok_or(Error::NatureHasNoUtility)?;
    if i >= net.players.len() {
        return Err(Error::UnknownPlayer(i));
    }
    check_state(net, x)?;
    Ok(utility_unchecked(net, i, x))
}

pub(crate) fn utility_unchecked(net: &GNet, player: usize, x: &[usize]) -> f64 {
    net.tables_of(player)
        .map(|t| {
            let dom = net.domain_size(t.node);
            let config = mixed_index(t.neighbors.iter().map(|m| x[m.0]), t.neighbors.iter().map(|&m| net.domain_size(m)));
            t.entries[config * dom + x[t.node.0]]
        })
        .product()
}

/// Free potential entries versus leaf payoffs of the equivalent extensive form.
pub fn parameter_count(net: &GNet) -> (usize, usize) {
    let potential = net
        .potentials
        .iter()
        .map(|t| {
            let configs: usize = t.neighbors.iter().map(|&m| net.domain_size(m)).product();
            (net.domain_size(t.node) - 1) * configs
        })
        .sum();
    let agents = net.players.len();
    if agents == 0 {
        return (potential, 0);
    }
    let relevant = relevant_nodes(net);
    let leaves: usize = relevant.iter().map(|&k| net.nodes[k].domain.len()).product();
    (potential, leaves * agents)
}

/// Nodes that are owned by an agent, carry a utility arc, or are
/// probability ancestors of such a node.
fn relevant_nodes(net: &GNet) -> Vec<usize> {
    let n = net.nodes.len();
    let mut relevant = vec![false; n];
    for (k, node) in net.nodes.iter().enumerate() {
        if node.player != PlayerId::Nature {
            relevant[k] = true;
        }
    }
    for a in &net.uarcs {
        relevant[a.a.0] = true;
        relevant[a.b.0] = true;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&k| relevant[k]).collect();
    while let Some(k) = stack.pop() {
        for p in &net.nodes[k].parents {
            if !relevant[p.0] {
                relevant[p.0] = true;
                stack.push(p.0);
            }
        }
    }
    (0..n).filter(|&k| relevant[k]).collect()
}

/// One info set per (node, joint parent assignment), nodes in order.
pub fn information_sets(net: &GNet) -> Vec<InfoSet> {
    (0..net.nodes.len())
        .flat_map(|k| (0..net.parent_configs(NodeId(k))).map(move |config| InfoSet { node: NodeId(k), config }))
        .collect()
}

/// Human-readable `node | parent=value, ...` label.
pub fn info_set_label(net: &GNet, info: InfoSet) -> String {
    let node = &net.nodes[info.node.0];
    let values = net.parent_values(info);
    let parts: Vec<String> = node
        .parents
        .iter()
        .zip(values)
        .map(|(p, v)| format!("{}={}", net.nodes[p.0].name, net.nodes[p.0].domain[v]))
        .collect();
    if parts.is_empty() {
        format!("{} |", node.name)
    } else {
        format!("{} | {}", node.name, parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{coordination, matching_pennies};

    #[test]
    fn matching_pennies_is_valid() {
        assert!(validate(&matching_pennies()).is_empty());
    }

    #[test]
    fn probability_cycle_reported_once() {
        let mut net = matching_pennies();
        net.nodes[0].parents = vec![NodeId(1)];
        net.nodes[1].parents = vec![NodeId(0)];
        let v = validate(&net);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, Rule::Acyclic);
    }

    #[test]
    fn zero_potential_reported() {
        let mut net = matching_pennies();
        net.potentials[1].entries[1] = 0.0;
        let v = validate(&net);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, Rule::Positivity);
    }

    #[test]
    fn reference_entries_must_be_one() {
        let mut net = matching_pennies();
        net.potentials[0].entries[0] = 0.9;
        assert!(validate(&net).iter().any(|v| v.rule == Rule::ReferenceUnit));
    }

    #[test]
    fn table_neighbor_must_be_arc_neighbor() {
        let mut net = matching_pennies();
        net.uarcs.retain(|a| a.player != 0);
        assert!(validate(&net).iter().any(|v| v.rule == Rule::Neighbors));
    }

    #[test]
    fn utility_at_reference_is_one() {
        for net in [matching_pennies(), coordination()] {
            let x0 = net.reference_state();
            for i in 0..net.players.len() {
                assert_eq!(utility(&net, PlayerId::Agent(i), &x0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn matching_pennies_utilities() {
        let net = matching_pennies();
        let u = |x: [usize; 2]| utility(&net, PlayerId::Agent(0), &x).unwrap();
        // tail/tail multiplies w_R(T) = 1/2 by w_C(T | R=T) = 2
        assert_eq!(u([1, 1]), 1.0);
        assert_eq!(u([0, 1]), 0.5);
        assert_eq!(u([1, 0]), 0.5);
        assert!(matches!(utility(&net, PlayerId::Nature, &[0, 0]), Err(Error::NatureHasNoUtility)));
    }

    #[test]
    fn info_sets_count_parent_assignments() {
        let net = matching_pennies();
        assert_eq!(information_sets(&net).len(), 2);
        let mut net = coordination();
        net.nodes.push(GNode {
            name: "Z".into(),
            player: PlayerId::Agent(0),
            domain: vec!["a".into(), "b".into()],
            parents: vec![NodeId(0), NodeId(1)],
            reference: 0,
            inactive: None,
        });
        let sets = information_sets(&net);
        assert_eq!(sets.iter().filter(|s| s.node == NodeId(2)).count(), 4);
    }

    #[test]
    fn nature_only_counts_zero() {
        let net = GNet {
            players: vec![],
            nodes: vec![GNode {
                name: "coin".into(),
                player: PlayerId::Nature,
                domain: vec!["h".into(), "t".into()],
                parents: vec![],
                reference: 0,
                inactive: None,
            }],
            cpts: vec![Cpt { node: NodeId(0), rows: vec![Some(vec![0.5, 0.5])] }],
            ..GNet::default()
        };
        assert!(validate(&net).is_empty());
        assert_eq!(parameter_count(&net), (0, 0));
    }

    #[test]
    fn pennies_counts_three_entries_per_player() {
        // Per player: one unconditional table entry plus one per value of the other node.
        assert_eq!(parameter_count(&crate::games::matching_pennies()), (6, 8));
    }

    #[test]
    fn mixed_radix_round_trip() {
        let radices = [3, 2, 4];
        for i in 0..24 {
            let d = mixed_digits(i, &radices);
            assert_eq!(mixed_index(d.iter().copied(), radices.iter().copied()), i);
        }
    }
}
