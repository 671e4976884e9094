mod common;

use std::fs;
use std::path::Path;

use ratg_core::lsp::{fetch_identifier_context, utf16_position, FetchOptions, SourcePosition};

const SCRATCH: &str = "package stack\n\nimport \"testing\"\n\nfunc TestProbe(t *testing.T) {\n\t_ = \"é𝕏\"; s := NewStack()\n\tv, ok := s.Pop()\n\t_, _ = v, ok\n\t_ = Mystery\n}\n";

/// Position of the last character of the `nth` occurrence of `word`.
fn position_of(text: &str, word: &str, nth: usize) -> SourcePosition {
    let start = text.match_indices(word).nth(nth).expect("word present").0;
    utf16_position(text, start + word.len() - 1).unwrap()
}

fn write_scratch(root: &Path) -> std::path::PathBuf {
    let p = root.join("stack").join("probe_test.go");
    fs::write(&p, SCRATCH).unwrap();
    p
}

#[test]
fn definitions_carry_doc_markers() {
    let tmp = common::fixture_copy();
    let scratch = write_scratch(tmp.path());
    let mut h = common::start_server(tmp.path());
    assert!(h.supports_definition());
    assert_eq!(h.sync_document(&scratch, SCRATCH).unwrap(), 1);

    for (word, nth) in [("NewStack", 0), ("Pop", 0)] {
        let pos = position_of(SCRATCH, word, nth);
        let entry = fetch_identifier_context(&mut h, word, &scratch, pos, &FetchOptions::default())
            .unwrap()
            .unwrap_or_else(|| panic!("{word} resolves"));
        assert_eq!(entry.location.path, "stack/stack.go");
        let doc = entry.doc_comment.unwrap_or_default();
        assert!(doc.contains(&format!("FIXTURE-DOC {word}")), "{word}: {doc}");
        assert!(entry.definition_text.contains(word));
    }
    h.shutdown().unwrap();
}

#[test]
fn unknown_and_local_identifiers_are_absent() {
    let tmp = common::fixture_copy();
    let scratch = write_scratch(tmp.path());
    let mut h = common::start_server(tmp.path());
    h.sync_document(&scratch, SCRATCH).unwrap();
    let opts = FetchOptions::default();
    let mystery = position_of(SCRATCH, "Mystery", 0);
    assert_eq!(fetch_identifier_context(&mut h, "Mystery", &scratch, mystery, &opts).unwrap(), None);
    // `s` is declared inside the scratch file itself.
    let s = position_of(SCRATCH, "s.Pop", 0);
    let s = SourcePosition { character: s.character - 4, ..s };
    assert_eq!(fetch_identifier_context(&mut h, "s", &scratch, s, &opts).unwrap(), None);
    h.shutdown().unwrap();
}

#[test]
fn positions_after_multibyte_characters() {
    let pos = position_of(SCRATCH, "NewStack", 0);
    // 17 UTF-16 units precede `NewStack`: é is one unit, 𝕏 a surrogate pair.
    assert_eq!(pos, SourcePosition { line: 5, character: 17 + 7 });
    let line = SCRATCH.lines().nth(5).unwrap();
    assert_eq!(line.encode_utf16().count(), 27);
    assert_eq!(line.len(), 30);
}

#[test]
fn hover_on_the_real_file_shows_the_marker() {
    let tmp = common::fixture_copy();
    let file = tmp.path().join("stack/stack.go");
    let text = fs::read_to_string(&file).unwrap();
    let mut h = common::start_server(tmp.path());
    if !h.supports_hover() {
        h.shutdown().unwrap();
        return;
    }
    h.sync_document(&file, &text).unwrap();
    let pos = position_of(&text, "func NewStack", 0);
    let hover = h.hover(&file, pos).unwrap().expect("hover text");
    assert!(hover.contains("FIXTURE-DOC NewStack"), "{hover}");
    h.shutdown().unwrap();
}

#[test]
fn document_versions_count_syncs() {
    let tmp = common::fixture_copy();
    let scratch = write_scratch(tmp.path());
    let mut h = common::start_server(tmp.path());
    assert_eq!(h.document_version(&scratch), None);
    let versions: Vec<i32> = (0..5).map(|_| h.sync_document(&scratch, SCRATCH).unwrap()).collect();
    assert_eq!(versions, [1, 2, 3, 4, 5]);
    assert_eq!(h.document_version(&scratch), Some(5));
    h.close_document(&scratch).unwrap();
    assert_eq!(h.document_version(&scratch), None);
    assert_eq!(h.sync_document(&scratch, SCRATCH).unwrap(), 1);
    h.shutdown().unwrap();
}
