//! Strategic independence from graph structure.
//!
//! Two nodes are linked when a probability arc or any player's utility arc
//! joins them. Connected components of that graph never interact: the value
//! map of one component reads only its own coordinates, so every solver can
//! work component by component and recombine.

use std::collections::BTreeMap;

use crate::model::{Cpt, GNet, InfoSet, NodeId, PlayerId, PotentialTable, UtilityArc};
use crate::profile::{Layout, Profile};

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Nodes in increasing order.
    pub nodes: Vec<NodeId>,
    pub info_sets: Vec<InfoSet>,
    /// Free coordinates of the joint layout that belong to this component.
    pub free_coordinates: Vec<usize>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = x;
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components, ordered by their smallest node.
pub fn decompose(net: &GNet) -> Vec<Component> {
    let n = net.nodes.len();
    let mut uf = UnionFind::new(n);
    for (k, node) in net.nodes.iter().enumerate() {
        for p in &node.parents {
            uf.union(k, p.0);
        }
    }
    for arc in &net.uarcs {
        uf.union(arc.a.0, arc.b.0);
    }
    // a potential table also couples its node to the neighbors it reads
    for t in &net.potentials {
        for m in &t.neighbors {
            uf.union(t.node.0, m.0);
        }
    }
    let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for k in 0..n {
        groups.entry(uf.find(k)).or_default().push(NodeId(k));
    }
    let layout = Layout::new(net);
    groups
        .into_values()
        .map(|nodes| {
            let info_sets = nodes
                .iter()
                .flat_map(|&k| (0..net.parent_configs(k)).map(move |config| InfoSet { node: k, config }))
                .collect();
            let free_coordinates = layout
                .free
                .iter()
                .copied()
                .filter(|&c| nodes.contains(&layout.block_of(c).info.node))
                .collect();
            Component { nodes, info_sets, free_coordinates }
        })
        .collect()
}

/// The sub-net induced by a component. Players keep their relative order;
/// those with no node, table or arc inside the component are dropped.
pub fn project(net: &GNet, component: &Component) -> GNet {
    let node_map: BTreeMap<NodeId, NodeId> =
        component.nodes.iter().enumerate().map(|(new, &old)| (old, NodeId(new))).collect();
    let inside = |id: &NodeId| node_map.contains_key(id);

    let mut used = vec![false; net.players.len()];
    for &k in &component.nodes {
        if let PlayerId::Agent(i) = net.nodes[k.0].player {
            used[i] = true;
        }
    }
    for t in net.potentials.iter().filter(|t| inside(&t.node)) {
        used[t.player] = true;
    }
    for a in net.uarcs.iter().filter(|a| inside(&a.a)) {
        used[a.player] = true;
    }
    let mut player_map = vec![None; net.players.len()];
    let mut players = Vec::new();
    for (i, name) in net.players.iter().enumerate() {
        if used[i] {
            player_map[i] = Some(players.len());
            players.push(name.clone());
        }
    }

    let nodes = component
        .nodes
        .iter()
        .map(|&k| {
            let mut node = net.nodes[k.0].clone();
            node.parents = node.parents.iter().map(|p| node_map[p]).collect();
            if let PlayerId::Agent(i) = node.player {
                node.player = PlayerId::Agent(player_map[i].expect("owner is used"));
            }
            node
        })
        .collect();
    let uarcs = net
        .uarcs
        .iter()
        .filter(|a| inside(&a.a))
        .map(|a| UtilityArc { player: player_map[a.player].expect("arc owner is used"), a: node_map[&a.a], b: node_map[&a.b] })
        .collect();
    let potentials = net
        .potentials
        .iter()
        .filter(|t| inside(&t.node))
        .map(|t| PotentialTable {
            player: player_map[t.player].expect("table owner is used"),
            node: node_map[&t.node],
            neighbors: t.neighbors.iter().map(|m| node_map[m]).collect(),
            entries: t.entries.clone(),
        })
        .collect();
    let cpts = net
        .cpts
        .iter()
        .filter(|c| inside(&c.node))
        .map(|c| Cpt { node: node_map[&c.node], rows: c.rows.clone() })
        .collect();
    GNet { players, nodes, uarcs, potentials, cpts }
}

/// Assemble a joint profile from per-component profiles of the projections.
pub fn recombine(net: &GNet, components: &[Component], parts: &[Profile]) -> Profile {
    let layout = Layout::new(net);
    let mut joint = layout.uniform();
    for (component, part) in components.iter().zip(parts) {
        let sub = Layout::new(&project(net, component));
        for (new, &old) in component.nodes.iter().enumerate() {
            let len = net.parent_configs(old) * net.domain_size(old);
            let (src, dst) = (sub.node_offsets[new], layout.node_offsets[old.0]);
            joint.values[dst..dst + len].copy_from_slice(&part.values[src..src + len]);
        }
    }
    joint
}

/// Restrict a joint profile to one component's projection.
pub fn restrict(net: &GNet, component: &Component, joint: &Profile) -> Profile {
    let layout = Layout::new(net);
    let sub = Layout::new(&project(net, component));
    let mut out = sub.uniform();
    for (new, &old) in component.nodes.iter().enumerate() {
        let len = net.parent_configs(old) * net.domain_size(old);
        let (src, dst) = (layout.node_offsets[old.0], sub.node_offsets[new]);
        out.values[dst..dst + len].copy_from_slice(&joint.values[src..src + len]);
    }
    out
}

fn fresh_name(taken: &[String], name: &str) -> String {
    if !taken.iter().any(|t| t == name) {
        return name.to_string();
    }
    (2..).map(|i| format!("{name}_{i}")).find(|c| !taken.iter().any(|t| t == c)).expect("unbounded")
}

/// Place two games side by side. Players and nodes of `b` follow those of
/// `a`; clashing names get a numeric suffix.
pub fn disjoint_union(a: &GNet, b: &GNet) -> GNet {
    let mut out = a.clone();
    let (np, nn) = (a.players.len(), a.nodes.len());
    for name in &b.players {
        let fresh = fresh_name(&out.players, name);
        out.players.push(fresh);
    }
    let mut names: Vec<String> = out.nodes.iter().map(|n| n.name.clone()).collect();
    for node in &b.nodes {
        let mut node = node.clone();
        node.name = fresh_name(&names, &node.name);
        names.push(node.name.clone());
        node.parents = node.parents.iter().map(|p| NodeId(p.0 + nn)).collect();
        if let PlayerId::Agent(i) = node.player {
            node.player = PlayerId::Agent(i + np);
        }
        out.nodes.push(node);
    }
    out.uarcs.extend(
        b.uarcs.iter().map(|u| UtilityArc { player: u.player + np, a: NodeId(u.a.0 + nn), b: NodeId(u.b.0 + nn) }),
    );
    out.potentials.extend(b.potentials.iter().map(|t| PotentialTable {
        player: t.player + np,
        node: NodeId(t.node.0 + nn),
        neighbors: t.neighbors.iter().map(|m| NodeId(m.0 + nn)).collect(),
        entries: t.entries.clone(),
    }));
    out.cpts.extend(b.cpts.iter().map(|c| Cpt { node: NodeId(c.node.0 + nn), rows: c.rows.clone() }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{beer_quiche, coordination, matching_pennies, pennies_plus_coordination};
    use crate::model::{validate, GNode};

    #[test]
    fn two_pennies_split_in_two() {
        let net = disjoint_union(&matching_pennies(), &matching_pennies());
        let comps = decompose(&net);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].nodes, vec![NodeId(0), NodeId(1)]);
        assert_eq!(comps[1].nodes, vec![NodeId(2), NodeId(3)]);
        assert_eq!(project(&net, &comps[0]), matching_pennies());
        let mut second = project(&net, &comps[1]);
        assert!(validate(&second).is_empty());
        second.players = vec!["P1".into(), "P2".into()];
        second.nodes[0].name = "R".into();
        second.nodes[1].name = "C".into();
        assert_eq!(second, matching_pennies());
    }

    #[test]
    fn beer_quiche_is_connected() {
        let net = beer_quiche(0.9);
        let comps = decompose(&net);
        assert_eq!(comps.len(), 1);
        assert_eq!(project(&net, &comps[0]), net);
    }

    #[test]
    fn isolated_coin_is_its_own_component() {
        let mut net = coordination();
        net.nodes.push(GNode {
            name: "Coin".into(),
            player: PlayerId::Nature,
            domain: vec!["h".into(), "t".into()],
            parents: vec![],
            reference: 0,
            inactive: None,
        });
        net.cpts.push(Cpt { node: NodeId(2), rows: vec![Some(vec![0.5, 0.5])] });
        let comps = decompose(&net);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[1].nodes, vec![NodeId(2)]);
        assert!(comps[1].free_coordinates.is_empty());
        assert!(project(&net, &comps[1]).players.is_empty());
    }

    #[test]
    fn recombine_inverts_restrict() {
        let net = pennies_plus_coordination();
        let comps = decompose(&net);
        let layout = Layout::new(&net);
        let p = layout.with_free(&[0.2, 0.8, 0.3, 0.7, 0.6, 0.4, 0.9, 0.1]);
        let parts: Vec<Profile> = comps.iter().map(|c| restrict(&net, c, &p)).collect();
        assert_eq!(recombine(&net, &comps, &parts), p);
    }
}
