mod common;

use std::cell::RefCell;
use std::collections::HashSet;

use proptest::prelude::*;
use ratg_core::context::{ContextBudget, ContextStore};
use ratg_core::extract::{scan_source, FocalUnit};
use ratg_core::generate::{
    classify_chars, generate, FetchOutcome, FetchStatus, GenerationConfig, GenerationState, NullFetcher,
    ScriptedGenerator, Segmenter, StaticFetcher, StopReason,
};
use ratg_core::lsp::{ContextEntry, DefinitionLocation, SourcePosition};
use ratg_core::prompt::{initial_snippet, Formulator};

use common::segment_ref::{ident_part, letter, reference_identifiers, token_streams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn flushed_identifiers_match_reference(tokens in token_streams()) {
        let mut seg = Segmenter::new();
        let mut ours = Vec::new();
        for t in &tokens {
            ours.extend(seg.feed(t).into_iter().map(|f| f.identifier));
        }
        let text = tokens.concat();
        prop_assert_eq!(&ours, &reference_identifiers(&text), "{:?}", tokens);

        let mut one = Segmenter::new();
        let whole: Vec<String> = one.feed(&text).into_iter().map(|f| f.identifier).collect();
        prop_assert_eq!(ours, whole);
        prop_assert_eq!(one.buffer(), seg.buffer());
    }

    #[test]
    fn reassembly_and_buffer_shape(tokens in token_streams()) {
        let init = initial_snippet("Foo").unwrap();
        let mut state = GenerationState::new(&init);
        let mut store = ContextStore::with_go_reserved(ContextBudget::unlimited());
        let asked = RefCell::new(Vec::new());
        for t in &tokens {
            state.step(t, &mut store, &mut |r| {
                asked.borrow_mut().push(r.identifier.to_string());
                FetchOutcome::Miss
            });
            let buf = state.identifier_buffer();
            prop_assert!(buf.chars().all(ident_part));
            prop_assert!(!buf.starts_with(|c: char| c.is_numeric()));
        }
        prop_assert_eq!(state.token_length, tokens.len());
        let all = tokens.concat();
        prop_assert_eq!(state.test_snippet.strip_prefix(init.as_str()), Some(all.as_str()));
        let asked = asked.into_inner();
        let unique: HashSet<&String> = asked.iter().collect();
        prop_assert_eq!(unique.len(), asked.len(), "an identifier was fetched twice");
    }

    #[test]
    fn whole_token_classification_coincides_on_homogeneous_streams(
        words in prop::collection::vec(prop_oneof!["[a-zA-Z_][a-zA-Z0-9_]{0,6}", "[ .(),+]{1,3}"], 1..40)
    ) {
        // Each token is entirely identifier or entirely punctuation.
        let mut whole = Vec::new();
        let mut buf = String::new();
        for w in &words {
            let is_id = w.starts_with(|c: char| letter(c));
            prop_assert_eq!(classify_chars(w, buf.is_empty()), vec![(w.clone(), is_id)]);
            if is_id {
                buf.push_str(w);
            } else if !buf.is_empty() {
                whole.push(std::mem::take(&mut buf));
            }
        }
        let mut seg = Segmenter::new();
        let ours: Vec<String> = words.iter().flat_map(|w| seg.feed(w)).map(|f| f.identifier).collect();
        prop_assert_eq!(ours, whole);
    }
}

#[test]
fn classify_examples() {
    assert_eq!(classify_chars(".", true), [(".".to_string(), false)]);
    assert_eq!(classify_chars("Ctx", true), [("Ctx".to_string(), true)]);
    assert_eq!(
        classify_chars("String(http", true),
        [("String".to_string(), true), ("(".to_string(), false), ("http".to_string(), true)]
    );
}

#[test]
fn render_dot_render() {
    let mut state = GenerationState::new("func TestX(t *testing.T) {");
    let mut store = ContextStore::with_go_reserved(ContextBudget::unlimited());
    let mut asked = Vec::new();
    for t in ["render", ".", "Render"] {
        state.step(t, &mut store, &mut |r| {
            asked.push(r.identifier.to_string());
            FetchOutcome::Miss
        });
    }
    assert_eq!(asked, ["render"]);
    assert_eq!(state.identifier_buffer(), "Render");
    state.step(" ", &mut store, &mut |r| {
        assert_eq!(r.identifier, "Render");
        FetchOutcome::Miss
    });
    state.step("if", &mut store, &mut |_| panic!("no flush yet"));
    state.step(" (", &mut store, &mut |r| panic!("{} should be pre-seeded", r.identifier));
    assert_eq!(state.fetch_log.len(), 2);
}

fn focal() -> FocalUnit {
    let src = "package m\n\n// Double doubles.\nfunc Double(v Value) Value { return v * 2 }\n\n// Value is a number.\ntype Value int\n";
    let (units, errors) = scan_source(src, "m/m.go", "example.com/m");
    assert!(errors.is_empty());
    units.into_iter().next().unwrap()
}

fn entry(id: &str, text: &str) -> ContextEntry {
    ContextEntry {
        identifier: id.into(),
        definition_text: text.into(),
        doc_comment: Some(format!("// {id} doc.")),
        location: DefinitionLocation { path: "m/m.go".into(), position: SourcePosition { line: 6, character: 5 } },
        fetch_round: 0,
    }
}

fn run(tokens: Vec<String>, fetcher: &mut StaticFetcher) -> (ratg_core::generate::TestCandidate, Vec<String>) {
    let mut gen = ScriptedGenerator::new(tokens);
    let mut store = ContextStore::with_go_reserved(ContextBudget::unlimited());
    let c = generate(&focal(), &mut gen, fetcher, &mut store, &Formulator::default(), &GenerationConfig::default(), 1, None)
        .unwrap();
    (c, gen.prompts().to_vec())
}

#[test]
fn six_hundred_tokens_stop_at_the_cap() {
    let tokens: Vec<String> = (0..600).map(|i| if i % 2 == 0 { "x".into() } else { " ".into() }).collect();
    let mut gen = ScriptedGenerator::new(tokens);
    let mut store = ContextStore::with_go_reserved(ContextBudget::unlimited());
    let c = generate(&focal(), &mut gen, &mut NullFetcher, &mut store, &Formulator::default(), &GenerationConfig::default(), 1, None)
        .unwrap();
    assert_eq!(c.stop_reason, StopReason::TokenCap);
    assert_eq!(c.token_count, 512);
    assert_eq!(gen.consumed(), 512);
    assert!(c.source_text.starts_with("func TestDouble(t *testing.T) {"));
}

#[test]
fn closing_brace_and_generator_end() {
    let mut f = StaticFetcher::new([]);
    let (c, _) = run(vec!["\n\t_ = 1".into(), "\n}".into(), "\nfunc extra() {}".into()], &mut f);
    assert_eq!(c.stop_reason, StopReason::BraceClose);
    assert_eq!(c.token_count, 2);
    assert_eq!(c.source_text, "func TestDouble(t *testing.T) {\n\t_ = 1\n}");

    let (c, _) = run(vec!["\n\t_ = 1".into()], &mut f);
    assert_eq!(c.stop_reason, StopReason::GeneratorEnd);
    assert_eq!(c.token_count, 1);
}

#[test]
fn cap_closing_token_counts_as_brace_close() {
    let mut tokens: Vec<String> = vec![" ".into(); 511];
    tokens.push("}".into());
    let mut f = StaticFetcher::new([]);
    let (c, _) = run(tokens, &mut f);
    assert_eq!((c.stop_reason, c.token_count), (StopReason::BraceClose, 512));
}

#[test]
fn seeds_first_then_unfamiliar_identifiers_once() {
    let mut f = StaticFetcher::new([entry("Value", "type Value int"), entry("Helper", "func Helper() Value")]);
    let toks = ["\n\tv", " := ", "Helper", "()", "\n\tif ", "Double", "(v) != ", "Helper", "() {", "\n\t\tt", ".Fatal", "(v)", "\n\t}", "\n}"];
    let (c, prompts) = run(toks.iter().map(|s| s.to_string()).collect(), &mut f);
    let log: Vec<(String, FetchStatus, usize)> = c.fetch_log.iter().map(|r| (r.identifier.clone(), r.outcome, r.token_index)).collect();
    let expected: Vec<(String, FetchStatus, usize)> = [
        ("Value", FetchStatus::Hit, 0),
        ("v", FetchStatus::Miss, 2),
        ("Helper", FetchStatus::Hit, 4),
        ("t", FetchStatus::Miss, 11),
        ("Fatal", FetchStatus::Miss, 12),
    ]
    .into_iter()
    .map(|(a, b, n)| (a.to_string(), b, n))
    .collect();
    assert_eq!(log, expected);
    assert_eq!(c.stop_reason, StopReason::BraceClose);
    // Context only grows during a run.
    let contexts: Vec<&str> = prompts.iter().map(|p| p.split("### FUNCTION UNDER TEST").next().unwrap()).collect();
    for w in contexts.windows(2) {
        assert!(w[1].starts_with(w[0].trim_end()));
    }
    assert!(prompts.last().unwrap().contains("func Helper() Value"));
    assert!(!prompts[0].contains("func Helper() Value"));
    let (again, prompts_again) = run(toks.iter().map(|s| s.to_string()).collect(), &mut StaticFetcher::new([entry("Value", "type Value int"), entry("Helper", "func Helper() Value")]));
    assert_eq!((again, prompts_again), (c, prompts));
}
