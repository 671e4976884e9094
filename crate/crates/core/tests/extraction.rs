mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use ratg_core::extract::{parse_signature, scan_package, seed_identifiers, FocalKind, FocalUnit};
use serde::Deserialize;

#[derive(Debug, Deserialize, PartialEq)]
struct Decl {
    file: String,
    name: String,
    #[serde(default)]
    receiver: Option<String>,
    start: usize,
    end: usize,
}

fn as_decls(units: &[FocalUnit]) -> Vec<Decl> {
    units
        .iter()
        .map(|u| Decl {
            file: u.file_path.rsplit('/').next().unwrap().to_string(),
            name: u.name.clone(),
            receiver: u.receiver_type.clone(),
            start: u.byte_span.start,
            end: u.byte_span.end,
        })
        .collect()
}

/// Declarations of `dir` as reported by the standard Go parser.
fn declsdump(dir: &Path) -> Vec<Decl> {
    let out = Command::new("go")
        .args(["run", "."])
        .arg(dir)
        .current_dir(common::repo_root().join("tools/declsdump"))
        .env("GOTOOLCHAIN", "local")
        .output()
        .expect("go run declsdump");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    if text.trim() == "null" {
        return Vec::new();
    }
    serde_json::from_str(&text).unwrap()
}

#[test]
fn calc_matches_committed_manifest() {
    let expected: Vec<Decl> = serde_json::from_str(&common::read_oracle("calc_decls.json")).unwrap();
    let scan = scan_package(&common::fixtures_dir().join("calc")).unwrap();
    assert!(scan.errors.is_empty());
    assert_eq!(as_decls(&scan.units), expected);
    assert_eq!(scan.units.iter().filter(|u| u.kind == FocalKind::Method).count(), 2);
    let add = &scan.units[0];
    assert_eq!(add.source_text, "func Add(a, b int) int { return a + b }");
    assert_eq!(add.returns[0].type_text, "int");
}

#[test]
fn every_fixture_package_matches_the_go_parser() {
    let fixtures = common::fixtures_dir();
    let manifest = declsdump(&fixtures.join("calc"));
    assert_eq!(manifest, serde_json::from_str::<Vec<Decl>>(&common::read_oracle("calc_decls.json")).unwrap());
    for pkg in ["calc", "stack", "noret", "loops"] {
        let dir = fixtures.join(pkg);
        let scan = scan_package(&dir).unwrap();
        assert_eq!(as_decls(&scan.units), declsdump(&dir), "{pkg}");
    }
}

#[test]
fn unit_invariants_hold_on_the_corpus() {
    for pkg in ["calc", "stack", "noret", "loops"] {
        let dir = common::fixtures_dir().join(pkg);
        let first = scan_package(&dir).unwrap();
        assert_eq!(scan_package(&dir).unwrap(), first);
        for u in &first.units {
            let text = fs::read_to_string(common::fixtures_dir().join(&u.file_path)).unwrap();
            assert!(u.byte_span.start < u.byte_span.end);
            assert_eq!(&text[u.byte_span.start..u.byte_span.end], u.source_text);
            assert_eq!((u.kind == FocalKind::Method), u.receiver_type.is_some());
            assert_eq!(parse_signature(&u.source_text).unwrap(), u.signature());
            let doc = u.doc_comment.as_deref().unwrap_or_default();
            assert!(doc.contains(&format!("FIXTURE-DOC {}", u.name)), "{}: {doc}", u.key());
        }
    }
    let stack = scan_package(&common::fixtures_dir().join("stack")).unwrap();
    let push = stack.units.iter().find(|u| u.qualified_name() == "Stack.Push").unwrap();
    assert_eq!(seed_identifiers(push), ["Stack", "Item", "Size"]);
}

#[test]
fn var_only_file_has_no_units() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("x.go"), "package x\n\nvar x = 1\n").unwrap();
    fs::write(tmp.path().join("x_test.go"), "package x\n\nfunc helper() {}\n").unwrap();
    assert!(scan_package(tmp.path()).unwrap().units.is_empty());
}

// Independent character-level decomposition of generated signatures.

const KEYWORDS: [&str; 5] = ["func", "chan", "map", "interface", "struct"];

#[derive(Debug, PartialEq)]
struct RefParam {
    name: Option<String>,
    type_text: String,
    ids: Vec<String>,
}

#[derive(Debug, PartialEq)]
struct RefSig {
    receiver: Option<String>,
    name: String,
    params: Vec<RefParam>,
    returns: Vec<(String, Vec<String>)>,
}

fn balanced(chars: &[char], open_at: usize) -> usize {
    let mut depth = 0;
    for (i, &c) in chars.iter().enumerate().skip(open_at) {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth == 0 {
                    return i;
                }
            }
            _ => {}
        }
    }
    panic!("unbalanced")
}

fn split_commas(s: &str) -> Vec<String> {
    let mut parts = vec![String::new()];
    let mut depth = 0;
    for c in s.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(String::new());
                continue;
            }
            _ => {}
        }
        parts.last_mut().unwrap().push(c);
    }
    parts.into_iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn ref_ids(ty: &str) -> Vec<String> {
    let chars: Vec<char> = ty.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if ident_char(chars[i]) && !chars[i].is_ascii_digit() {
            let start = i;
            while i < chars.len() && ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if !KEYWORDS.contains(&word.as_str()) && chars.get(i) != Some(&'.') {
                out.push(word);
            }
        } else {
            i += 1;
        }
    }
    out
}

/// `name Type` when the piece starts with a non-keyword word and a space.
fn named(piece: &str) -> Option<(String, String)> {
    let word: String = piece.chars().take_while(|&c| ident_char(c)).collect();
    let rest = &piece[word.len()..];
    (!word.is_empty() && rest.starts_with(' ') && !KEYWORDS.contains(&word.as_str()))
        .then(|| (word, rest.trim().to_string()))
}

fn ref_params(list: &str) -> Vec<RefParam> {
    let pieces = split_commas(list);
    let any_named = pieces.iter().any(|p| named(p).is_some());
    let mut out = Vec::new();
    let mut pending = Vec::new();
    for p in pieces {
        match (any_named, named(&p)) {
            (false, _) => out.push(RefParam { name: None, ids: ref_ids(&p), type_text: p }),
            (true, None) => pending.push(p),
            (true, Some((name, ty))) => {
                for n in pending.drain(..).chain([name]) {
                    out.push(RefParam { name: Some(n), type_text: ty.clone(), ids: ref_ids(&ty) });
                }
            }
        }
    }
    out
}

fn reference_scan(sig: &str) -> RefSig {
    let chars: Vec<char> = sig.chars().collect();
    let mut i = "func".len();
    while chars[i] == ' ' {
        i += 1;
    }
    let mut receiver = None;
    if chars[i] == '(' {
        let close = balanced(&chars, i);
        let inner: String = chars[i + 1..close].iter().collect();
        let ty = named(inner.trim()).map_or(inner.trim().to_string(), |(_, t)| t);
        let base: String = ty.trim_start_matches('*').chars().take_while(|&c| ident_char(c)).collect();
        receiver = Some(base);
        i = close + 1;
        while chars[i] == ' ' {
            i += 1;
        }
    }
    let name_start = i;
    while ident_char(chars[i]) {
        i += 1;
    }
    let name: String = chars[name_start..i].iter().collect();
    let close = balanced(&chars, i);
    let params = ref_params(&chars[i + 1..close].iter().collect::<String>());
    let mut rest: String = chars[close + 1..].iter().collect();
    if let Some(body) = rest.find(" {") {
        rest.truncate(body);
    }
    let rest = rest.trim();
    let returns = if rest.starts_with('(') {
        ref_params(&rest[1..rest.len() - 1]).into_iter().map(|p| (p.type_text, p.ids)).collect()
    } else if rest.is_empty() {
        Vec::new()
    } else {
        vec![(rest.to_string(), ref_ids(rest))]
    };
    RefSig { receiver, name, params, returns }
}

const TYPES: [&str; 10] = [
    "int",
    "string",
    "*Item",
    "[]Item",
    "map[string]Item",
    "http.Request",
    "*http.Request",
    "func(int) error",
    "chan<- Item",
    "[4]byte",
];

fn type_strategy() -> impl Strategy<Value = String> {
    (0..TYPES.len()).prop_map(|i| TYPES[i].to_string())
}

fn ident_strategy() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9]{0,5}".prop_filter("not a keyword", |s| {
        !ratg_core::golex::is_keyword(s)
    })
}

/// Parameter groups: each group is (names, type); no names means unnamed.
fn params_strategy() -> impl Strategy<Value = (Vec<(Vec<String>, String)>, bool, bool)> {
    (
        prop::collection::vec((prop::collection::vec(ident_strategy(), 1..3), type_strategy()), 0..4),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(groups, unnamed, variadic)| {
            let groups = if unnamed { groups.into_iter().map(|(_, t)| (Vec::new(), t)).collect() } else { groups };
            (groups, unnamed, variadic)
        })
}

fn render_params(groups: &[(Vec<String>, String)], variadic: bool) -> String {
    let n = groups.len();
    groups
        .iter()
        .enumerate()
        .map(|(k, (names, ty))| {
            let ty = if variadic && k + 1 == n && names.len() <= 1 { format!("...{ty}") } else { ty.clone() };
            if names.is_empty() { ty } else { format!("{} {ty}", names.join(", ")) }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn signature_strategy() -> impl Strategy<Value = String> {
    (
        prop::option::of((ident_strategy(), any::<bool>(), "[A-Z][a-zA-Z]{0,5}")),
        "[A-Z][a-zA-Z0-9]{0,6}",
        params_strategy(),
        prop::collection::vec(type_strategy(), 0..3),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(recv, name, (params, _, variadic), rets, named_rets, body)| {
            let mut s = String::from("func ");
            if let Some((r, ptr, ty)) = recv {
                s.push_str(&format!("({r} {}{ty}) ", if ptr { "*" } else { "" }));
            }
            s.push_str(&format!("{name}({})", render_params(&params, variadic)));
            match rets.len() {
                0 => {}
                1 if !named_rets => s.push_str(&format!(" {}", rets[0])),
                _ => {
                    let list: Vec<String> = rets
                        .iter()
                        .enumerate()
                        .map(|(k, t)| if named_rets { format!("r{k} {t}") } else { t.clone() })
                        .collect();
                    s.push_str(&format!(" ({})", list.join(", ")));
                }
            }
            if body {
                s.push_str(" {\n\tpanic(0)\n}");
            }
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn random_signatures_match_reference_scanner(sig in signature_strategy()) {
        let ours = parse_signature(&sig).map_err(|e| TestCaseError::fail(format!("{sig}: {e}")))?;
        let reference = reference_scan(&sig);
        prop_assert_eq!(&ours.name, &reference.name);
        prop_assert_eq!(&ours.receiver_type, &reference.receiver);
        prop_assert_eq!(ours.kind == FocalKind::Method, reference.receiver.is_some());
        let params: Vec<RefParam> = ours
            .params
            .iter()
            .map(|p| RefParam { name: p.name.clone(), type_text: p.type_text.clone(), ids: p.type_identifiers.clone() })
            .collect();
        prop_assert_eq!(params, reference.params, "{}", sig);
        let returns: Vec<(String, Vec<String>)> =
            ours.returns.iter().map(|r| (r.type_text.clone(), r.type_identifiers.clone())).collect();
        prop_assert_eq!(returns, reference.returns, "{}", sig);
    }
}
