//! Solution reports: `key: value` lines, one `solution:`/`end:` record per
//! profile. Probabilities of free information sets are written as
//! `prob: <node> | <parent assignment> : <value> = <p>` with 17 significant
//! digits, so a report read back reproduces the profile bit for bit.
//! Unknown keys are kept as plain fields and otherwise ignored.

use std::fmt::Write;

use super::{content_lines, ParseError, Span};
use crate::error::{Error, Result};
use crate::model::{mixed_index, GNet};
use crate::profile::{Layout, Profile};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbEntry {
    pub node: String,
    pub parents: Vec<(String, String)>,
    pub value: String,
    pub prob: f64,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionRecord {
    pub index: usize,
    pub fields: Vec<(String, String)>,
    pub probs: Vec<ProbEntry>,
}

impl SolutionRecord {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionFile {
    pub header: Vec<(String, String)>,
    pub records: Vec<SolutionRecord>,
}

fn prob_entry(value: Span<'_>) -> std::result::Result<ProbEntry, ParseError> {
    let (node, rest) = value.split_once('|').ok_or_else(|| value.error("expected `<node> | <assignment> : <value> = <p>`"))?;
    let (assign, rest) = rest.split_once(':').ok_or_else(|| rest.error("expected `:` after the assignment"))?;
    let (label, prob) = rest.split_once('=').ok_or_else(|| rest.error("expected `<value> = <p>`"))?;
    let mut parents = Vec::new();
    if !assign.is_empty() {
        for item in assign.split(',') {
            let (n, v) = item.split_once('=').ok_or_else(|| item.error("expected node=value"))?;
            parents.push((n.ident("node name")?.to_string(), v.ident("value label")?.to_string()));
        }
    }
    Ok(ProbEntry {
        node: node.ident("node name")?.to_string(),
        parents,
        value: label.ident("value label")?.to_string(),
        prob: prob.number()?,
        line: value.line,
    })
}

pub fn parse_solution(text: &str) -> std::result::Result<SolutionFile, ParseError> {
    let mut file = SolutionFile::default();
    let mut current: Option<SolutionRecord> = None;
    for line in content_lines(text) {
        let (key, value) = line.split_once(':').ok_or_else(|| line.error("expected `key: value`"))?;
        match key.text {
            "solution" => {
                if current.is_some() {
                    return Err(key.error("`solution:` before the previous record's `end:`"));
                }
                let index = value.text.parse().map_err(|_| value.error("expected a record number"))?;
                current = Some(SolutionRecord { index, ..SolutionRecord::default() });
            }
            "end" => {
                let record = current.take().ok_or_else(|| key.error("`end:` without `solution:`"))?;
                file.records.push(record);
            }
            "prob" => {
                let record = current.as_mut().ok_or_else(|| key.error("`prob:` outside a solution record"))?;
                record.probs.push(prob_entry(value)?);
            }
            _ => {
                let pair = (key.text.to_string(), value.text.to_string());
                match current.as_mut() {
                    Some(r) => r.fields.push(pair),
                    None => file.header.push(pair),
                }
            }
        }
    }
    if let Some(r) = current {
        return Err(ParseError {
            line: text.lines().count().max(1),
            column: 1,
            message: format!("solution {} has no `end:`", r.index),
        });
    }
    Ok(file)
}

fn parse_err(line: usize, message: String) -> Error {
    Error::Parse(ParseError { line, column: 1, message })
}

/// Map a record onto a profile of `net`. Every free information set must be
/// listed; listed fixed rows must agree with the game.
pub fn profile_from_record(net: &GNet, record: &SolutionRecord) -> Result<Profile> {
    let layout = Layout::new(net);
    let mut p = layout.uniform();
    let mut seen = vec![false; layout.blocks.len()];
    for block in &layout.blocks {
        if block.is_free() {
            p.values[block.start..block.start + block.len].fill(0.0);
        }
    }
    for e in &record.probs {
        let k = net.node_by_name(&e.node).ok_or_else(|| parse_err(e.line, format!("unknown node `{}`", e.node)))?;
        let node = &net.nodes[k.0];
        if e.parents.len() != node.parents.len() {
            return Err(parse_err(e.line, format!("`{}` needs an assignment of all its parents", e.node)));
        }
        let mut digits = Vec::with_capacity(node.parents.len());
        for parent in &node.parents {
            let pn = &net.nodes[parent.0];
            let (_, v) = e
                .parents
                .iter()
                .find(|(n, _)| *n == pn.name)
                .ok_or_else(|| parse_err(e.line, format!("parent `{}` of `{}` is not assigned", pn.name, e.node)))?;
            digits.push(pn.value_index(v).ok_or_else(|| parse_err(e.line, format!("`{v}` is not a value of `{}`", pn.name)))?);
        }
        let config = mixed_index(digits, net.radices(&node.parents));
        let value = node.value_index(&e.value).ok_or_else(|| parse_err(e.line, format!("`{}` is not a value of `{}`", e.value, e.node)))?;
        let c = layout.coord(net, k, config, value);
        let b = layout.block_index_of(c);
        if layout.blocks[b].is_free() {
            p.values[c] = e.prob;
            seen[b] = true;
        } else if (layout.fixed_value(c) - e.prob).abs() > 1e-12 {
            return Err(parse_err(e.line, format!("`{}` is fixed by the game at {}", e.node, layout.fixed_value(c))));
        }
    }
    if let Some(b) = layout.free_blocks.iter().find(|&&b| !seen[b]) {
        let info = layout.blocks[*b].info;
        return Err(parse_err(0, format!("no probabilities for information set `{}`", crate::model::info_set_label(net, info))));
    }
    Ok(p)
}

/// Append one record with the given extra fields and the free blocks of `p`.
pub fn write_record(out: &mut String, net: &GNet, index: usize, fields: &[(&str, String)], p: &Profile) {
    let layout = Layout::new(net);
    writeln!(out, "solution: {index}").unwrap();
    for (k, v) in fields {
        writeln!(out, "{k}: {v}").unwrap();
    }
    for &b in &layout.free_blocks {
        let block = &layout.blocks[b];
        let label = crate::model::info_set_label(net, block.info);
        let node = &net.nodes[block.info.node.0];
        for &v in block.available() {
            writeln!(out, "prob: {label} : {} = {:.16e}", node.domain[v], p.values[block.start + v]).unwrap();
        }
    }
    writeln!(out, "end: {index}").unwrap();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{beer_quiche, coordination};

    #[test]
    fn record_round_trip_is_bit_exact() {
        let net = beer_quiche(0.9);
        let layout = Layout::new(&net);
        let p = layout.with_free(&[0.1, 0.9, 1.0 / 3.0, 2.0 / 3.0, 0.7, 0.3, 1e-17, 1.0 - 1e-17]);
        let mut text = String::from("command: test\n");
        write_record(&mut text, &net, 1, &[("class", "nash".into())], &p);
        let file = parse_solution(&text).unwrap();
        assert_eq!(file.header, vec![("command".into(), "test".into())]);
        assert_eq!(file.records[0].field("class"), Some("nash"));
        assert_eq!(profile_from_record(&net, &file.records[0]).unwrap(), p);
    }

    #[test]
    fn missing_block_is_an_error() {
        let net = coordination();
        let text = "solution: 1\nprob: R | : A = 1\nprob: R | : B = 0\nend: 1\n";
        let file = parse_solution(text).unwrap();
        assert!(profile_from_record(&net, &file.records[0]).is_err());
    }

    #[test]
    fn malformed_lines_report_position() {
        let err = parse_solution("solution: 1\nprob: R | : A = x\nend: 1\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 17));
        assert!(parse_solution("prob: R | : A = 1\n").is_err());
        assert!(parse_solution("solution: 1\n").is_err());
    }
}
