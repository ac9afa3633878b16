//! The `.gnet` game file.
//!
//! ```text
//! players P1 P2
//! node R player=P1 domain=H,T
//! node C player=P2 domain=H,T
//! uarc P1 R C
//! potential P1 C | R=T : H=1, T=2
//! cpt Type | : S=9/10, W=1/10
//! reference C=T
//! ```

use std::collections::HashMap;
use std::fmt::Write;

use super::{content_lines, ParseError, Span};
use crate::model::{mixed_digits, mixed_index, Cpt, GNet, GNode, NodeId, PlayerId, PotentialTable, UtilityArc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Start,
    Players,
    Nodes,
    Arcs,
    Tables,
}

struct PendingTable<'a> {
    at: Span<'a>,
    neighbors: Vec<NodeId>,
    entries: Vec<Option<f64>>,
}

struct PendingCpt {
    rows: Vec<Option<Vec<f64>>>,
}

struct Parser<'a> {
    net: GNet,
    section: Section,
    parent_names: Vec<Vec<Span<'a>>>,
    node_spans: Vec<Span<'a>>,
    tables: Vec<((usize, NodeId), PendingTable<'a>)>,
    cpts: Vec<(NodeId, PendingCpt)>,
    reference_seen: bool,
    parents_resolved: bool,
}

/// Parse a game file. Structural checks beyond the grammar (positivity,
/// reference entries, row sums) are left to [`crate::model::validate`].
pub fn parse_game(text: &str) -> Result<GNet, ParseError> {
    let mut p = Parser {
        net: GNet::default(),
        section: Section::Start,
        parent_names: Vec::new(),
        node_spans: Vec::new(),
        tables: Vec::new(),
        cpts: Vec::new(),
        reference_seen: false,
        parents_resolved: false,
    };
    let mut last_line = 0;
    for line in content_lines(text) {
        last_line = line.line;
        p.line(line)?;
    }
    if p.section < Section::Players {
        return Err(ParseError { line: last_line.max(1), column: 1, message: "missing `players` line".into() });
    }
    p.finish()
}

impl<'a> Parser<'a> {
    fn enter(&mut self, at: Span<'a>, section: Section) -> Result<(), ParseError> {
        if section < self.section {
            let what = match section {
                Section::Players => "`players` must be the first declaration",
                Section::Nodes => "nodes must be declared before arcs and tables",
                Section::Arcs => "utility arcs must be declared before tables",
                _ => "declaration out of order",
            };
            return Err(at.error(what));
        }
        if section == Section::Players && self.section == Section::Players {
            return Err(at.error("duplicate `players` line"));
        }
        if section > Section::Players && self.section < Section::Players {
            return Err(at.error("`players` must be the first declaration"));
        }
        if section > Section::Nodes && !self.parents_resolved {
            self.resolve_parents()?;
        }
        self.section = section;
        Ok(())
    }

    fn line(&mut self, line: Span<'a>) -> Result<(), ParseError> {
        let words = line.words();
        let keyword = words[0];
        match keyword.text {
            "players" => {
                self.enter(keyword, Section::Players)?;
                if words.len() < 2 {
                    return Err(keyword.error("`players` needs at least one name"));
                }
                for w in &words[1..] {
                    let name = w.ident("player name")?;
                    if name == "nature" {
                        return Err(w.error("`nature` is reserved"));
                    }
                    if self.net.players.iter().any(|p| p == name) {
                        return Err(w.error(format!("duplicate player `{name}`")));
                    }
                    self.net.players.push(name.to_string());
                }
                Ok(())
            }
            "node" => {
                self.enter(keyword, Section::Nodes)?;
                self.node(keyword, &words[1..])
            }
            "uarc" => {
                self.enter(keyword, Section::Arcs)?;
                self.uarc(keyword, &words[1..])
            }
            "potential" => {
                self.enter(keyword, Section::Tables)?;
                self.potential(line, keyword)
            }
            "cpt" => {
                self.enter(keyword, Section::Tables)?;
                self.cpt(line, keyword)
            }
            "reference" => {
                if self.section < Section::Nodes {
                    return Err(keyword.error("`reference` must follow the node declarations"));
                }
                self.reference(line, keyword)
            }
            other => Err(keyword.error(format!("unknown declaration `{other}`"))),
        }
    }

    fn node_id(&self, span: Span<'a>) -> Result<NodeId, ParseError> {
        self.net.node_by_name(span.text).ok_or_else(|| span.error(format!("unknown node `{}`", span.text)))
    }

    fn player_id(&self, span: Span<'a>) -> Result<usize, ParseError> {
        self.net.player_by_name(span.text).ok_or_else(|| span.error(format!("unknown player `{}`", span.text)))
    }

    fn node(&mut self, at: Span<'a>, args: &[Span<'a>]) -> Result<(), ParseError> {
        let name = args.first().ok_or_else(|| at.error("`node` needs a name"))?;
        let name_text = name.ident("node name")?;
        if self.net.node_by_name(name_text).is_some() {
            return Err(name.error(format!("duplicate node `{name_text}`")));
        }
        let (mut player, mut domain, mut parents, mut inactive) = (None, None, Vec::new(), None);
        for arg in &args[1..] {
            let (key, value) = arg.split_once('=').ok_or_else(|| arg.error("expected key=value"))?;
            match key.text {
                "player" => {
                    player = Some(if value.text == "nature" {
                        PlayerId::Nature
                    } else {
                        PlayerId::Agent(self.player_id(value)?)
                    })
                }
                "domain" => {
                    let mut values: Vec<String> = Vec::new();
                    for v in value.split(',') {
                        let label = v.ident("value label")?;
                        if values.iter().any(|x| x == label) {
                            return Err(v.error(format!("duplicate value `{label}`")));
                        }
                        values.push(label.to_string());
                    }
                    domain = Some(values);
                }
                "parents" => parents = value.split(',').into_iter().map(|v| v.ident("parent name").map(|_| v)).collect::<Result<_, _>>()?,
                "inactive" => inactive = Some(value),
                _ => return Err(key.error(format!("unknown node attribute `{}`", key.text))),
            }
        }
        let player = player.ok_or_else(|| name.error("node needs `player=`"))?;
        let domain = domain.ok_or_else(|| name.error("node needs `domain=`"))?;
        let inactive = match inactive {
            Some(v) => Some(
                domain.iter().position(|d| d == v.text).ok_or_else(|| v.error(format!("`{}` is not in the domain", v.text)))?,
            ),
            None => None,
        };
        self.net.nodes.push(GNode { name: name_text.to_string(), player, domain, parents: Vec::new(), reference: 0, inactive });
        self.parent_names.push(parents);
        self.node_spans.push(*name);
        // parents may name nodes declared later; resolve once all nodes are known
        Ok(())
    }

    fn resolve_parents(&mut self) -> Result<(), ParseError> {
        self.parents_resolved = true;
        for k in 0..self.net.nodes.len() {
            let mut parents = Vec::new();
            for span in &self.parent_names[k] {
                let id = self.node_id(*span)?;
                if id.0 == k {
                    return Err(span.error("a node cannot be its own parent"));
                }
                if parents.contains(&id) {
                    return Err(span.error(format!("duplicate parent `{}`", span.text)));
                }
                parents.push(id);
            }
            self.net.nodes[k].parents = parents;
        }
        Ok(())
    }

    fn uarc(&mut self, at: Span<'a>, args: &[Span<'a>]) -> Result<(), ParseError> {
        if args.len() != 3 {
            return Err(at.error("expected `uarc <player> <node> <node>`"));
        }
        let player = self.player_id(args[0])?;
        let (a, b) = (self.node_id(args[1])?, self.node_id(args[2])?);
        if a == b {
            return Err(args[2].error("a utility arc needs two distinct nodes"));
        }
        let arc = UtilityArc { player, a: a.min(b), b: a.max(b) };
        if self.net.uarcs.contains(&arc) {
            return Err(at.error("duplicate utility arc"));
        }
        self.net.uarcs.push(arc);
        Ok(())
    }

    /// `<name>=<value>, ...` into (node, value index) pairs.
    fn assignment(&self, span: Span<'a>) -> Result<Vec<(NodeId, usize, Span<'a>)>, ParseError> {
        if span.is_empty() {
            return Ok(Vec::new());
        }
        let mut out: Vec<(NodeId, usize, Span<'a>)> = Vec::new();
        for item in span.split(',') {
            let (n, v) = item.split_once('=').ok_or_else(|| item.error("expected node=value"))?;
            let id = self.node_id(n)?;
            let value = self.net.nodes[id.0]
                .value_index(v.text)
                .ok_or_else(|| v.error(format!("`{}` is not a value of `{}`", v.text, n.text)))?;
            if out.iter().any(|(m, _, _)| *m == id) {
                return Err(n.error(format!("`{}` assigned twice", n.text)));
            }
            out.push((id, value, n));
        }
        Ok(out)
    }

    /// `v=x, ...` over the full domain of `node`.
    fn row(&self, span: Span<'a>, node: NodeId) -> Result<Vec<f64>, ParseError> {
        let dom = &self.net.nodes[node.0].domain;
        let mut row = vec![None; dom.len()];
        for item in span.split(',') {
            let (v, x) = item.split_once('=').ok_or_else(|| item.error("expected value=number"))?;
            let idx = dom.iter().position(|d| d == v.text).ok_or_else(|| v.error(format!("`{}` is not in the domain", v.text)))?;
            if row[idx].is_some() {
                return Err(v.error(format!("`{}` given twice", v.text)));
            }
            row[idx] = Some(x.number()?);
        }
        if let Some(missing) = row.iter().position(Option::is_none) {
            return Err(span.error(format!("row is missing value `{}`", dom[missing])));
        }
        Ok(row.into_iter().map(Option::unwrap).collect())
    }

    /// Split `<head> | <assignment> : <row>`.
    fn table_parts(line: Span<'a>, keyword: Span<'a>) -> Result<(Vec<Span<'a>>, Span<'a>, Span<'a>), ParseError> {
        let (head, rest) = line.split_once('|').ok_or_else(|| keyword.error("expected `|` after the table head"))?;
        let (assign, row) = rest.split_once(':').ok_or_else(|| rest.error("expected `:` before the table row"))?;
        Ok((head.words(), assign, row))
    }

    fn potential(&mut self, line: Span<'a>, keyword: Span<'a>) -> Result<(), ParseError> {
        let (head, assign, row) = Self::table_parts(line, keyword)?;
        if head.len() != 3 {
            return Err(keyword.error("expected `potential <player> <node> | ...`"));
        }
        let player = self.player_id(head[1])?;
        let node = self.node_id(head[2])?;
        let assignment = self.assignment(assign)?;
        let arc_neighbors = self.net.utility_neighbors(player, node);
        for (m, _, at) in &assignment {
            if !arc_neighbors.contains(m) {
                return Err(at.error(format!(
                    "`{}` is not joined to `{}` by a utility arc of `{}`",
                    at.text, self.net.nodes[node.0].name, self.net.players[player]
                )));
            }
        }
        let values = self.row(row, node)?;
        let pos = match self.tables.iter().position(|(key, _)| *key == (player, node)) {
            Some(pos) => pos,
            None => {
                let neighbors: Vec<NodeId> = assignment.iter().map(|(m, _, _)| *m).collect();
                let configs: usize = self.net.radices(&neighbors).iter().product();
                let dom = self.net.domain_size(node);
                self.tables.push(((player, node), PendingTable { at: keyword, neighbors, entries: vec![None; configs * dom] }));
                self.tables.len() - 1
            }
        };
        let radices = self.net.radices(&self.tables[pos].1.neighbors);
        let table = &mut self.tables[pos].1;
        if assignment.len() != table.neighbors.len() || assignment.iter().any(|(m, _, _)| !table.neighbors.contains(m)) {
            return Err(assign.error("row must assign exactly the neighbors of the table's first row"));
        }
        let digits = table.neighbors.iter().map(|n| assignment.iter().find(|(m, _, _)| m == n).unwrap().1);
        let config = mixed_index(digits, radices);
        let dom = values.len();
        let slot = &mut table.entries[config * dom..(config + 1) * dom];
        if slot[0].is_some() {
            return Err(keyword.error("duplicate potential row"));
        }
        for (s, v) in slot.iter_mut().zip(values) {
            *s = Some(v);
        }
        Ok(())
    }

    fn cpt(&mut self, line: Span<'a>, keyword: Span<'a>) -> Result<(), ParseError> {
        let (head, assign, row) = Self::table_parts(line, keyword)?;
        if head.len() != 2 {
            return Err(keyword.error("expected `cpt <node> | ...`"));
        }
        let node = self.node_id(head[1])?;
        let assignment = self.assignment(assign)?;
        let parents = self.net.nodes[node.0].parents.clone();
        if assignment.len() != parents.len() || assignment.iter().any(|(m, _, _)| !parents.contains(m)) {
            return Err(assign.error(format!("row must assign exactly the parents of `{}`", head[1].text)));
        }
        let values = self.row(row, node)?;
        let configs = self.net.parent_configs(node);
        let config = mixed_index(
            parents.iter().map(|p| assignment.iter().find(|(m, _, _)| m == p).unwrap().1),
            self.net.radices(&parents),
        );
        let pos = match self.cpts.iter().position(|(n, _)| *n == node) {
            Some(pos) => pos,
            None => {
                self.cpts.push((node, PendingCpt { rows: vec![None; configs] }));
                self.cpts.len() - 1
            }
        };
        let rows = &mut self.cpts[pos].1.rows;
        if rows[config].is_some() {
            return Err(keyword.error("duplicate cpt row"));
        }
        rows[config] = Some(values);
        Ok(())
    }

    fn reference(&mut self, line: Span<'a>, keyword: Span<'a>) -> Result<(), ParseError> {
        if self.reference_seen {
            return Err(keyword.error("duplicate `reference` line"));
        }
        self.reference_seen = true;
        let rest = Span { text: &line.text[keyword.text.len()..], line: line.line, offset: line.offset + keyword.text.len(), full: line.full }.trim();
        for (node, value, _) in self.assignment(rest)? {
            self.net.nodes[node.0].reference = value;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<GNet, ParseError> {
        if !self.parents_resolved {
            self.resolve_parents()?;
        }
        for ((player, node), table) in std::mem::take(&mut self.tables) {
            let dom = self.net.domain_size(node);
            if let Some(missing) = table.entries.iter().position(Option::is_none) {
                let radices = self.net.radices(&table.neighbors);
                let digits = mixed_digits(missing / dom, &radices);
                let assign: Vec<String> = table
                    .neighbors
                    .iter()
                    .zip(digits)
                    .map(|(m, v)| format!("{}={}", self.net.nodes[m.0].name, self.net.nodes[m.0].domain[v]))
                    .collect();
                return Err(table.at.error(format!(
                    "potential table of `{}` at `{}` has no row for `{}`",
                    self.net.players[player],
                    self.net.nodes[node.0].name,
                    assign.join(", ")
                )));
            }
            self.net.potentials.push(PotentialTable {
                player,
                node,
                neighbors: table.neighbors,
                entries: table.entries.into_iter().map(Option::unwrap).collect(),
            });
        }
        let mut cpts: HashMap<NodeId, PendingCpt> = self.cpts.into_iter().collect();
        for k in 0..self.net.nodes.len() {
            let id = NodeId(k);
            let pending = cpts.remove(&id);
            let nature = self.net.nodes[k].player == PlayerId::Nature;
            match pending {
                Some(c) => {
                    if nature && c.rows.iter().any(Option::is_none) {
                        return Err(self.node_spans[k].error(format!("nature node `{}` has incomplete cpt", self.net.nodes[k].name)));
                    }
                    self.net.cpts.push(Cpt { node: id, rows: c.rows });
                }
                None if nature => {
                    return Err(self.node_spans[k].error(format!("nature node `{}` has no cpt", self.net.nodes[k].name)));
                }
                None => {}
            }
        }
        Ok(self.net)
    }
}

fn assignment_text(net: &GNet, nodes: &[NodeId], config: usize) -> String {
    let digits = mixed_digits(config, &net.radices(nodes));
    let parts: Vec<String> =
        nodes.iter().zip(digits).map(|(m, v)| format!("{}={}", net.nodes[m.0].name, net.nodes[m.0].domain[v])).collect();
    parts.iter().map(|p| format!(" {p}")).collect::<Vec<_>>().join(",")
}

fn row_text(net: &GNet, node: NodeId, row: &[f64]) -> String {
    let parts: Vec<String> = net.nodes[node.0].domain.iter().zip(row).map(|(d, x)| format!("{d}={x}")).collect();
    parts.join(", ")
}

/// Canonical text form; [`parse_game`] reads it back to an equal net.
pub fn print_game(net: &GNet) -> String {
    let mut out = String::new();
    writeln!(out, "players {}", net.players.join(" ")).unwrap();
    for node in &net.nodes {
        let player = match node.player {
            PlayerId::Nature => "nature",
            PlayerId::Agent(i) => &net.players[i],
        };
        write!(out, "node {} player={} domain={}", node.name, player, node.domain.join(",")).unwrap();
        if !node.parents.is_empty() {
            let names: Vec<&str> = node.parents.iter().map(|p| net.nodes[p.0].name.as_str()).collect();
            write!(out, " parents={}", names.join(",")).unwrap();
        }
        if let Some(v) = node.inactive {
            write!(out, " inactive={}", node.domain[v]).unwrap();
        }
        out.push('\n');
    }
    for a in &net.uarcs {
        writeln!(out, "uarc {} {} {}", net.players[a.player], net.nodes[a.a.0].name, net.nodes[a.b.0].name).unwrap();
    }
    for t in &net.potentials {
        let dom = net.domain_size(t.node);
        let configs = t.entries.len() / dom;
        for c in 0..configs {
            writeln!(
                out,
                "potential {} {} |{} : {}",
                net.players[t.player],
                net.nodes[t.node.0].name,
                assignment_text(net, &t.neighbors, c),
                row_text(net, t.node, &t.entries[c * dom..(c + 1) * dom])
            )
            .unwrap();
        }
    }
    for cpt in &net.cpts {
        let parents = &net.nodes[cpt.node.0].parents;
        for (c, row) in cpt.rows.iter().enumerate() {
            if let Some(row) = row {
                writeln!(out, "cpt {} |{} : {}", net.nodes[cpt.node.0].name, assignment_text(net, parents, c), row_text(net, cpt.node, row))
                    .unwrap();
            }
        }
    }
    let moved: Vec<String> = net
        .nodes
        .iter()
        .filter(|n| n.reference != 0)
        .map(|n| format!("{}={}", n.name, n.domain[n.reference]))
        .collect();
    if !moved.is_empty() {
        writeln!(out, "reference {}", moved.join(", ")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{beer_quiche, coordination, matching_pennies, weak_dominance};
    use crate::model::{parameter_count, validate};

    const PENNIES: &str = "\
# matching pennies
players P1 P2
node R player=P1 domain=H,T
node C player=P2 domain=H,T
uarc P1 R C
uarc P2 R C
potential P1 R | : H=1, T=1/2
potential P1 C | R=H : H=1, T=0.5
potential P1 C | R=T : H=1, T=2
potential P2 C | : H=1, T=2
potential P2 R | C=H : H=1, T=2
potential P2 R | C=T : H=1, T=1/2
";

    #[test]
    fn parses_pennies() {
        let net = parse_game(PENNIES).unwrap();
        assert_eq!(net.nodes.len(), 2);
        assert!(validate(&net).is_empty());
        let mut expected = matching_pennies();
        // file order differs from the fixture's table order
        expected.potentials.sort_by_key(|t| (t.player, t.node));
        let mut got = net.clone();
        got.potentials.sort_by_key(|t| (t.player, t.node));
        assert_eq!(got, expected);
    }

    #[test]
    fn round_trips_fixtures() {
        for net in [matching_pennies(), coordination(), beer_quiche(0.9), weak_dominance()] {
            let text = print_game(&net);
            assert_eq!(parse_game(&text).unwrap(), net, "{text}");
        }
        assert_eq!(parameter_count(&parse_game(&print_game(&beer_quiche(0.9))).unwrap()), (8, 16));
    }

    #[test]
    fn undeclared_uarc_neighbor_is_reported() {
        let text = PENNIES.replace("uarc P1 R C\n", "");
        let err = parse_game(&text).unwrap_err();
        assert_eq!(err.line, 7);
        assert!(err.message.contains("utility arc"), "{err}");
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_game("players P1\nnode X player=P2 domain=a,b\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 15));
        let err = parse_game("players P1\nnode X player=P1 domain=a,b\npotential P1 X | : a=1, b=x\n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 27));
        let err = parse_game("players P1\nnode X player=P1 domain=a,b\npotential P1 X | : a=1, b=2\npotential P1 X | : a=1, b=2\n").unwrap_err();
        assert!(err.message.contains("duplicate"));
        let err = parse_game("players P1\nuarc P1 X Y\nnode X player=P1 domain=a,b\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_game("players P1\nnode N player=nature domain=a,b\n").unwrap_err();
        assert!(err.message.contains("no cpt"));
    }

    #[test]
    fn forward_parent_reference() {
        let text = "players P\nnode D player=P domain=a,b parents=N\nnode N player=nature domain=x,y\ncpt N | : x=1/2, y=1/2\n";
        let net = parse_game(text).unwrap();
        assert_eq!(net.nodes[0].parents, vec![NodeId(1)]);
        assert!(net.topological_order().is_some());
    }
}
