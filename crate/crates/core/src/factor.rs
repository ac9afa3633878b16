//! Factoring a full utility function into reference-anchored potentials.
//!
//! Along the node order, `w_k(x_k | x_<k) = u(x_≤k, x⁰_>k) / u(x_<k, x⁰_≥k)`.
//! The product over `k` telescopes to `u(x) / u(x⁰)`, and every table is
//! exactly 1 at its node's reference value. Neighbors on which a table does
//! not depend (ratio test) are then dropped, which is where the compactness
//! of a factored representation shows up.

use std::collections::BTreeSet;

use crate::model::{mixed_digits, GNet, NodeId, PotentialTable, UtilityArc};

/// Relative tolerance of the neighbor-independence ratio test.
pub const INDEPENDENCE_TOL: f64 = 1e-9;

/// Replace `player`'s potentials with a factorization of `payoff`, which
/// must be strictly positive on every full state.
pub fn attach_payoffs(net: &mut GNet, player: usize, payoff: impl Fn(&[usize]) -> f64) {
    net.potentials.retain(|t| t.player != player);
    net.uarcs.retain(|a| a.player != player);
    let x0 = net.reference_state();
    let n = net.nodes.len();
    let base = payoff(&x0);
    let mut arcs = BTreeSet::new();

    for k in 0..n {
        let neighbors: Vec<NodeId> = (0..k).map(NodeId).collect();
        let radices = net.radices(&neighbors);
        let configs: usize = radices.iter().product();
        let dom = net.nodes[k].domain.len();
        let mut entries = vec![1.0; configs * dom];
        for c in 0..configs {
            let mut x = x0.clone();
            for (slot, v) in mixed_digits(c, &radices).into_iter().enumerate() {
                x[slot] = v;
            }
            let below = if k == 0 { base } else { payoff(&x) };
            for v in 0..dom {
                x[k] = v;
                entries[c * dom + v] = if v == x0[k] { 1.0 } else { payoff(&x) / below };
            }
        }
        let mut table = PotentialTable { player, node: NodeId(k), neighbors, entries };
        prune_neighbors(net, &mut table);
        if table.entries.iter().all(|&w| w == 1.0) {
            continue;
        }
        for &m in &table.neighbors {
            arcs.insert((m.0.min(k), m.0.max(k)));
        }
        net.potentials.push(table);
    }
    for (a, b) in arcs {
        net.uarcs.push(UtilityArc { player, a: NodeId(a), b: NodeId(b) });
    }
    net.potentials.sort_by_key(|t| (t.player, t.node));
    net.uarcs.sort();
}

/// Drop neighbors whose value never changes the table (last neighbor first).
pub fn prune_neighbors(net: &GNet, table: &mut PotentialTable) {
    let dom = net.domain_size(table.node);
    let mut pos = table.neighbors.len();
    while pos > 0 {
        pos -= 1;
        let radices = net.radices(&table.neighbors);
        let configs: usize = radices.iter().product();
        let stride: usize = radices[pos + 1..].iter().product();
        let r = radices[pos];
        let independent = (0..configs).all(|c| {
            let digit = (c / stride) % r;
            let c0 = c - digit * stride;
            (0..dom).all(|v| {
                let a = table.entries[c * dom + v];
                let b = table.entries[c0 * dom + v];
                (a - b).abs() <= INDEPENDENCE_TOL * a.abs().max(b.abs())
            })
        });
        if !independent {
            continue;
        }
        let mut kept = Vec::with_capacity(configs / r * dom);
        for c in 0..configs {
            if (c / stride).is_multiple_of(r) {
                kept.extend_from_slice(&table.entries[c * dom..(c + 1) * dom]);
            }
        }
        table.entries = kept;
        table.neighbors.remove(pos);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{all_states, utility, validate, PlayerId};

    #[test]
    fn bimatrix_reproduces_normalized_payoffs() {
        let row = vec![vec![2.0, 5.0, 1.5], vec![3.0, 1.0, 4.0]];
        let col = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
        let net = GNet::bimatrix(&row, &col);
        assert!(validate(&net).is_empty(), "{:?}", validate(&net));
        for x in all_states(&net) {
            let u1 = utility(&net, PlayerId::Agent(0), &x).unwrap();
            let u2 = utility(&net, PlayerId::Agent(1), &x).unwrap();
            assert!((u1 - row[x[0]][x[1]] / 2.0).abs() < 1e-12);
            assert!((u2 - col[x[0]][x[1]] / 1.0).abs() < 1e-12);
        }
        // column player's payoff ignores the column choice entirely
        let p2: Vec<_> = net.tables_of(1).collect();
        assert_eq!(p2.len(), 1);
        assert_eq!(p2[0].node, NodeId(0));
    }

    #[test]
    fn independent_neighbor_is_dropped() {
        let row = vec![vec![1.0, 2.0], vec![3.0, 6.0]];
        let net = GNet::bimatrix(&row, &row);
        // u = f(r) g(c): the column table loses its row neighbor
        let t = net.tables_of(0).find(|t| t.node == NodeId(1)).unwrap();
        assert!(t.neighbors.is_empty());
        assert!(net.uarcs.iter().all(|a| a.player != 0));
    }
}
