//! The `.ef` extensive-form file.
//!
//! ```text
//! players P1 P2
//! chance t stage=Type probs=S:9/10,W:1/10
//! decision ds parent=t:S player=P1 infoset=strong actions=B,Q stage=Drink
//! leaf l1 parent=fb:F payoffs=2,1
//! ```
//!
//! Nodes must be declared after their parent. The first node without a
//! parent is the root.

use std::collections::HashMap;

use super::{content_lines, ParseError, Span};
use crate::extensive_form::{EfKind, EfNode, EfTree};

pub fn parse_ef(text: &str) -> Result<EfTree, ParseError> {
    let mut players: Option<Vec<String>> = None;
    let mut nodes: Vec<EfNode> = Vec::new();
    let mut spans: Vec<Span<'_>> = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut last_line = 1;

    for line in content_lines(text) {
        last_line = line.line;
        let words = line.words();
        let keyword = words[0];
        if keyword.text == "players" {
            if players.is_some() || !nodes.is_empty() {
                return Err(keyword.error("`players` must appear once, before any node"));
            }
            let mut names: Vec<String> = Vec::new();
            for w in &words[1..] {
                let name = w.ident("player name")?;
                if names.iter().any(|n| n == name) {
                    return Err(w.error(format!("duplicate player `{name}`")));
                }
                names.push(name.to_string());
            }
            if names.is_empty() {
                return Err(keyword.error("`players` needs at least one name"));
            }
            players = Some(names);
            continue;
        }
        let players = players.as_ref().ok_or_else(|| keyword.error("`players` must be the first line"))?;
        if !matches!(keyword.text, "chance" | "decision" | "leaf") {
            return Err(keyword.error(format!("unknown declaration `{}`", keyword.text)));
        }
        let id_span = *words.get(1).ok_or_else(|| keyword.error("node needs an id"))?;
        let id = id_span.ident("node id")?.to_string();
        if ids.contains_key(&id) {
            return Err(id_span.error(format!("duplicate node `{id}`")));
        }

        let mut attrs: HashMap<&str, Span<'_>> = HashMap::new();
        for arg in &words[2..] {
            let (k, v) = arg.split_once('=').ok_or_else(|| arg.error("expected key=value"))?;
            let allowed: &[&str] = match keyword.text {
                "chance" => &["parent", "stage", "probs"],
                "decision" => &["parent", "stage", "player", "infoset", "actions"],
                _ => &["parent", "payoffs"],
            };
            if !allowed.contains(&k.text) {
                return Err(k.error(format!("unknown attribute `{}` for {}", k.text, keyword.text)));
            }
            if attrs.insert(k.text, v).is_some() {
                return Err(k.error(format!("duplicate attribute `{}`", k.text)));
            }
        }
        let require = |key: &str| attrs.get(key).copied().ok_or_else(|| id_span.error(format!("{} needs `{key}=`", keyword.text)));

        let parent = match attrs.get("parent") {
            Some(span) => {
                let (pid, action) = span.split_once(':').ok_or_else(|| span.error("expected parent=<id>:<action>"))?;
                let &p = ids.get(pid.text).ok_or_else(|| pid.error(format!("unknown parent `{}`", pid.text)))?;
                let a = nodes[p]
                    .actions
                    .iter()
                    .position(|x| x == action.text)
                    .ok_or_else(|| action.error(format!("`{}` is not an action of `{}`", action.text, pid.text)))?;
                if nodes[p].children[a].is_some() {
                    return Err(action.error(format!("action `{}` of `{}` already has a child", action.text, pid.text)));
                }
                Some((p, a))
            }
            None => {
                if !nodes.is_empty() {
                    return Err(id_span.error("only the first node may omit `parent=`"));
                }
                None
            }
        };
        if parent.is_none() && keyword.text == "leaf" {
            return Err(id_span.error("the root cannot be a leaf"));
        }

        let labels = |span: Span<'_>| -> Result<Vec<String>, ParseError> {
            let mut out: Vec<String> = Vec::new();
            for item in span.split(',') {
                let l = item.ident("action label")?;
                if out.iter().any(|x| x == l) {
                    return Err(item.error(format!("duplicate action `{l}`")));
                }
                out.push(l.to_string());
            }
            Ok(out)
        };
        let (kind, actions) = match keyword.text {
            "chance" => {
                let mut actions = Vec::new();
                let mut probs = Vec::new();
                for item in require("probs")?.split(',') {
                    let (a, p) = item.split_once(':').ok_or_else(|| item.error("expected <action>:<probability>"))?;
                    let label = a.ident("action label")?;
                    if actions.iter().any(|x: &String| x == label) {
                        return Err(a.error(format!("duplicate action `{label}`")));
                    }
                    actions.push(label.to_string());
                    probs.push(p.number()?);
                }
                (EfKind::Chance { probs }, actions)
            }
            "decision" => {
                let player_span = require("player")?;
                let player = players
                    .iter()
                    .position(|p| p == player_span.text)
                    .ok_or_else(|| player_span.error(format!("unknown player `{}`", player_span.text)))?;
                let infoset = require("infoset")?.ident("information set label")?.to_string();
                (EfKind::Decision { player, infoset }, labels(require("actions")?)?)
            }
            _ => {
                let span = require("payoffs")?;
                let payoffs = span.split(',').iter().map(|s| s.number()).collect::<Result<Vec<f64>, _>>()?;
                if payoffs.len() != players.len() {
                    return Err(span.error(format!("expected {} payoffs, found {}", players.len(), payoffs.len())));
                }
                (EfKind::Leaf { payoffs }, Vec::new())
            }
        };
        let stage = match attrs.get("stage") {
            Some(s) => Some(s.ident("stage name")?.to_string()),
            None => None,
        };
        let index = nodes.len();
        if let Some((p, a)) = parent {
            nodes[p].children[a] = Some(index);
        }
        let children = vec![None; actions.len()];
        nodes.push(EfNode { id: id.clone(), parent, stage, actions, kind, children });
        spans.push(id_span);
        ids.insert(id, index);
    }

    let players = players.ok_or(ParseError { line: last_line, column: 1, message: "missing `players` line".into() })?;
    if nodes.is_empty() {
        return Err(ParseError { line: last_line, column: 1, message: "the tree has no nodes".into() });
    }
    for (node, span) in nodes.iter().zip(&spans) {
        if let Some(a) = node.children.iter().position(Option::is_none) {
            return Err(span.error(format!("action `{}` of `{}` has no child", node.actions[a], node.id)));
        }
    }
    Ok(EfTree { players, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_STAGE: &str = "\
players P
decision r player=P infoset=first actions=a,b
decision s parent=r:a player=P infoset=second actions=c,d
leaf l1 parent=r:b payoffs=2
leaf l2 parent=s:c payoffs=1
leaf l3 parent=s:d payoffs=3
";

    #[test]
    fn parses_tree() {
        let tree = parse_ef(TWO_STAGE).unwrap();
        assert_eq!(tree.nodes.len(), 5);
        assert_eq!(tree.nodes[0].children, vec![Some(1), Some(2)]);
        assert_eq!(tree.nodes[1].parent, Some((0, 0)));
    }

    #[test]
    fn missing_child_is_reported() {
        let text = TWO_STAGE.replace("leaf l3 parent=s:d payoffs=3\n", "");
        let err = parse_ef(&text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("`d`"));
    }

    #[test]
    fn bad_payoff_count() {
        let text = TWO_STAGE.replace("payoffs=3", "payoffs=3,4");
        let err = parse_ef(&text).unwrap_err();
        assert_eq!((err.line, err.column), (6, 28));
    }
}
