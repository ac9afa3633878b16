//! Replays the checked-in fuzz corpus through the parsers so regressions
//! surface without a fuzzing toolchain.

use std::path::PathBuf;

use gnet::extensive_form::ef_to_gframe;
use gnet::format::{parse_ef, parse_game, parse_solution, print_game};

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.into_iter().filter_map(|p| std::fs::read_to_string(&p).ok().map(|t| (p, t))).collect()
}

#[test]
fn game_corpus_round_trips() {
    let files = corpus("parse_game");
    assert!(!files.is_empty());
    for (path, text) in files {
        if let Ok(net) = parse_game(&text) {
            let printed = print_game(&net);
            let back = parse_game(&printed).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(print_game(&back), printed, "{}", path.display());
        }
    }
}

#[test]
fn ef_corpus_converts() {
    for (path, text) in corpus("parse_ef") {
        if let Ok(tree) = parse_ef(&text) {
            if tree.validate().is_ok() {
                ef_to_gframe(&tree).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            }
        }
    }
}

#[test]
fn solution_corpus_parses_without_panicking() {
    for (_, text) in corpus("parse_solution") {
        let _ = parse_solution(&text);
    }
}

#[test]
fn truncated_inputs_never_panic() {
    for target in ["parse_game", "parse_ef", "parse_solution"] {
        for (_, text) in corpus(target) {
            for cut in (0..text.len()).filter(|&i| text.is_char_boundary(i)) {
                let head = &text[..cut];
                let _ = parse_game(head);
                let _ = parse_ef(head);
                let _ = parse_solution(head);
            }
        }
    }
}
