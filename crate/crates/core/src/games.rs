//! Small reference games used throughout the tests, examples and CLI fixtures.

use rand::Rng;

use crate::decomposition::disjoint_union;
use crate::factor::attach_payoffs;
use crate::model::{Cpt, GNet, GNode, NodeId, PlayerId, PotentialTable, UtilityArc};

fn node(name: &str, player: PlayerId, domain: &[&str], parents: &[usize]) -> GNode {
    GNode {
        name: name.into(),
        player,
        domain: domain.iter().map(|s| s.to_string()).collect(),
        parents: parents.iter().map(|&p| NodeId(p)).collect(),
        reference: 0,
        inactive: None,
    }
}

/// Row player P1 wants to match, column player P2 wants to mismatch.
/// `u¹ = (1, ½, ½, 1)` and `u² = (1, 2, 2, 1)` over HH, HT, TH, TT.
pub fn matching_pennies() -> GNet {
    let table = |player, node, neighbors: &[usize], entries: &[f64]| PotentialTable {
        player,
        node: NodeId(node),
        neighbors: neighbors.iter().map(|&m| NodeId(m)).collect(),
        entries: entries.to_vec(),
    };
    GNet {
        players: vec!["P1".into(), "P2".into()],
        nodes: vec![
            node("R", PlayerId::Agent(0), &["H", "T"], &[]),
            node("C", PlayerId::Agent(1), &["H", "T"], &[]),
        ],
        uarcs: vec![
            UtilityArc { player: 0, a: NodeId(0), b: NodeId(1) },
            UtilityArc { player: 1, a: NodeId(0), b: NodeId(1) },
        ],
        potentials: vec![
            table(0, 0, &[], &[1.0, 0.5]),
            table(0, 1, &[0], &[1.0, 0.5, 1.0, 2.0]),
            table(1, 1, &[], &[1.0, 2.0]),
            table(1, 0, &[1], &[1.0, 2.0, 1.0, 0.5]),
        ],
        cpts: vec![],
    }
}

/// Pure coordination: `u(A,A) = 3`, `u(B,B) = 2`, miscoordination 1, for both
/// players. The reference state is (A, B), which already has utility 1.
pub fn coordination() -> GNet {
    let mut net = GNet {
        players: vec!["P1".into(), "P2".into()],
        nodes: vec![
            node("R", PlayerId::Agent(0), &["A", "B"], &[]),
            node("C", PlayerId::Agent(1), &["A", "B"], &[]),
        ],
        ..GNet::default()
    };
    net.nodes[1].reference = 1;
    let pay = |x: &[usize]| match (x[0], x[1]) {
        (0, 0) => 3.0,
        (1, 1) => 2.0,
        _ => 1.0,
    };
    attach_payoffs(&mut net, 0, pay);
    attach_payoffs(&mut net, 1, pay);
    net
}

/// Prisoner's dilemma with normal payoffs; defect (index 1) strictly dominates.
pub fn prisoners_dilemma() -> GNet {
    let row = vec![vec![3.0, 1.0], vec![4.0, 2.0]];
    let col = vec![vec![3.0, 4.0], vec![1.0, 2.0]];
    rename_bimatrix(GNet::bimatrix(&row, &col), &["C", "D"], &["C", "D"])
}

/// P1's action B ties with T against L and loses against R; P2 strictly
/// prefers L. (T, L) is the only perfect equilibrium; every (mix, L) is Nash.
pub fn weak_dominance() -> GNet {
    let row = vec![vec![1.0, 2.0], vec![1.0, 1.0]];
    let col = vec![vec![2.0, 1.0], vec![2.0, 1.0]];
    rename_bimatrix(GNet::bimatrix(&row, &col), &["T", "B"], &["L", "R"])
}

/// Random 2x2 bimatrix game with payoffs uniform in `[lo, hi]`.
pub fn random_bimatrix(rng: &mut impl Rng, m: usize, n: usize, lo: f64, hi: f64) -> GNet {
    let mut draw = || (0..m).map(|_| (0..n).map(|_| rng.random_range(lo..hi)).collect()).collect::<Vec<Vec<f64>>>();
    let row = draw();
    let col = draw();
    GNet::bimatrix(&row, &col)
}

/// Random small net: up to `max_nodes` nodes with 1 to `max_values` values,
/// random probability arcs to earlier nodes, one or two players plus
/// Nature, and payoffs uniform in `[1, 2]` on every state.
pub fn random_net(rng: &mut impl Rng, max_nodes: usize, max_values: usize) -> GNet {
    let n_nodes = rng.random_range(1..=max_nodes);
    let n_players = rng.random_range(1..=2usize);
    let mut net = GNet { players: (1..=n_players).map(|i| format!("P{i}")).collect(), ..GNet::default() };
    for k in 0..n_nodes {
        let size = rng.random_range(1..=max_values);
        let player = if rng.random_bool(0.25) { PlayerId::Nature } else { PlayerId::Agent(rng.random_range(0..n_players)) };
        let parents: Vec<usize> = (0..k).filter(|_| rng.random_bool(0.4)).collect();
        let domain: Vec<String> = (0..size).map(|v| format!("v{v}")).collect();
        let domain: Vec<&str> = domain.iter().map(String::as_str).collect();
        net.nodes.push(node(&format!("N{k}"), player, &domain, &parents));
    }
    for k in 0..n_nodes {
        if net.nodes[k].player == PlayerId::Nature {
            let configs = net.parent_configs(NodeId(k));
            let size = net.nodes[k].domain.len();
            let rows = (0..configs)
                .map(|_| {
                    let w: Vec<f64> = (0..size).map(|_| rng.random_range(0.1..1.0)).collect();
                    let s: f64 = w.iter().sum();
                    Some(w.iter().map(|x| x / s).collect())
                })
                .collect();
            net.cpts.push(Cpt { node: NodeId(k), rows });
        }
    }
    let states = crate::model::state_count(&net) as usize;
    let radices = net.radices(&(0..n_nodes).map(NodeId).collect::<Vec<_>>());
    for i in 0..n_players {
        let table: Vec<f64> = (0..states).map(|_| rng.random_range(1.0..2.0)).collect();
        attach_payoffs(&mut net, i, |x| table[crate::model::mixed_index(x.iter().copied(), radices.iter().copied())]);
    }
    net
}

fn rename_bimatrix(mut net: GNet, rows: &[&str], cols: &[&str]) -> GNet {
    net.nodes[0].domain = rows.iter().map(|s| s.to_string()).collect();
    net.nodes[1].domain = cols.iter().map(|s| s.to_string()).collect();
    net
}

/// The beer/quiche signalling game as a G frame over {Type, Drink, Fight}.
///
/// Payoffs are multiplicative in the independent concerns: P1's utility is
/// (breakfast preference given type) × (fight outcome given type); P2's
/// depends only on type and whether a fight starts.
pub fn beer_quiche(prior_strong: f64) -> GNet {
    let mut net = GNet {
        players: vec!["P1".into(), "P2".into()],
        nodes: vec![
            node("Type", PlayerId::Nature, &["S", "W"], &[]),
            node("Drink", PlayerId::Agent(0), &["B", "Q"], &[0]),
            node("Fight", PlayerId::Agent(1), &["F", "N"], &[1]),
        ],
        cpts: vec![Cpt { node: NodeId(0), rows: vec![Some(vec![prior_strong, 1.0 - prior_strong])] }],
        ..GNet::default()
    };
    attach_payoffs(&mut net, 0, beer_quiche_payoff_p1);
    attach_payoffs(&mut net, 1, beer_quiche_payoff_p2);
    net
}

/// P1 payoff over (type, drink, fight) value indices.
pub fn beer_quiche_payoff_p1(x: &[usize]) -> f64 {
    let preferred = if x[0] == 0 { x[1] == 0 } else { x[1] == 1 };
    let breakfast = if preferred { 2.0 } else { 1.0 };
    let fight = match (x[0], x[2]) {
        (_, 0) => 1.0,
        (0, _) => 2.0,
        _ => 3.0,
    };
    breakfast * fight
}

/// P2 payoff over (type, drink, fight) value indices.
pub fn beer_quiche_payoff_p2(x: &[usize]) -> f64 {
    match (x[0], x[2]) {
        (0, 0) => 1.0,
        (1, 0) => 3.0,
        _ => 2.0,
    }
}

/// Matching pennies and the coordination game side by side, four players.
pub fn pennies_plus_coordination() -> GNet {
    disjoint_union(&matching_pennies(), &coordination())
}
