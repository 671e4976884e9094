//! Shared helpers for integration tests: locating the repository fixtures,
//! the Go toolchain and a language server.

#![allow(dead_code)]

pub mod segment_ref;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Duration;

use ratg_core::context::{ContextBudget, ContextStore};
use ratg_core::eval::GoToolchain;
use ratg_core::extract::{scan_package, FocalUnit};
use ratg_core::generate::{generate, GenerationConfig, LspFetcher, ScriptedGenerator, TestCandidate};
use ratg_core::lsp::FetchOptions;
use ratg_core::prompt::Formulator;
use ratg_core::lsp::{ServerConfig, ServerHandle};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().expect("repo root")
}

pub fn fixtures_dir() -> PathBuf {
    repo_root().join("fixtures")
}

pub fn oracle(name: &str) -> PathBuf {
    fixtures_dir().join("oracle").join(name)
}

pub fn read_oracle(name: &str) -> String {
    fs::read_to_string(oracle(name)).unwrap_or_else(|e| panic!("oracle {name}: {e}"))
}

/// Compare against a committed golden file; `RATG_UPDATE_GOLDEN=1`
/// rewrites it instead.
pub fn assert_golden(name: &str, actual: &str) {
    let path = oracle(name);
    if std::env::var_os("RATG_UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).expect("write golden");
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("golden {name}: {e}"));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

pub fn go() -> GoToolchain {
    GoToolchain::new("go").expect("the Go toolchain must be on PATH for integration tests")
}

/// Copy the fixture module into a fresh temporary directory.
pub fn fixture_copy() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().expect("tempdir");
    copy_tree(&fixtures_dir(), tmp.path());
    tmp
}

pub fn copy_tree(from: &Path, to: &Path) {
    for entry in walkdir::WalkDir::new(from) {
        let entry = entry.expect("walk");
        let rel = entry.path().strip_prefix(from).expect("prefix");
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).expect("mkdir");
        } else {
            fs::copy(entry.path(), &dest).expect("copy");
        }
    }
}

fn build_stand_in() -> PathBuf {
    let out_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let exe = out_dir.join("golsp-lite");
    let tmp = out_dir.join(format!("golsp-lite.{}", std::process::id()));
    let status = Command::new("go")
        .args(["build", "-o"])
        .arg(&tmp)
        .arg(".")
        .current_dir(repo_root().join("tools/golsp-lite"))
        .env("GOTOOLCHAIN", "local")
        .status()
        .expect("go build of the language server stand-in");
    assert!(status.success(), "building tools/golsp-lite failed");
    fs::rename(&tmp, &exe).expect("install stand-in");
    exe
}

/// `RATG_GOPLS`, else `gopls` on `PATH`, else the bundled stand-in built
/// from `tools/golsp-lite`.
pub fn lsp_server() -> PathBuf {
    static SERVER: OnceLock<PathBuf> = OnceLock::new();
    SERVER
        .get_or_init(|| {
            if let Some(p) = std::env::var_os("RATG_GOPLS") {
                return PathBuf::from(p);
            }
            if let Ok(p) = ratg_core::lsp::resolve_executable(Path::new("gopls")) {
                return p;
            }
            build_stand_in()
        })
        .clone()
}

pub fn start_server(root: &Path) -> ServerHandle {
    let mut cfg = ServerConfig::new(lsp_server());
    cfg.request_timeout = Duration::from_secs(30);
    ServerHandle::start(root, &cfg).expect("language server starts")
}

pub struct OracleMutant {
    pub id: String,
    pub line: u32,
    pub original: String,
    pub mutated: String,
    pub status: String,
}

/// The hand-enumerated mutant table for `loops`.
pub fn mutant_oracle() -> Vec<OracleMutant> {
    read_oracle("loops_mutants.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            OracleMutant {
                id: f[0].into(),
                line: f[1].parse().unwrap(),
                original: f[2].into(),
                mutated: f[3].into(),
                status: f[4].into(),
            }
        })
        .collect()
}

/// Place the committed `loops` test suite into a fixture copy.
pub fn with_loops_suite(root: &Path) {
    fs::write(root.join("loops/suite_test.go"), read_oracle("loops_suite_test.go.txt")).unwrap();
}

pub const LOOPS_SUITE: [&str; 3] = ["TestSumTo", "TestClassify", "TestCountAbove"];

/// Run `tests` in `root/pkg` with a profile and return the `go tool cover
/// -func` total (as a ratio) together with the profile text.
pub fn toolchain_total(root: &Path, pkg: &str, tests: &[&str]) -> (f64, String) {
    let go = go();
    let limit = Duration::from_secs(300);
    let profile = root.join("toolchain.out");
    let filter = ratg_core::eval::run_filter(tests);
    let cover = format!("-coverprofile={}", profile.display());
    let out = go.run(&["test", "-count=1", "-run", &filter, &cover, "."], &root.join(pkg), limit).unwrap();
    assert!(out.success(), "{}", out.combined());
    let func = go.run(&["tool", "cover", &format!("-func={}", profile.display())], root, limit).unwrap();
    let total = func.stdout.lines().find(|l| l.starts_with("total:")).expect("total line");
    let pct: f64 = total.split_whitespace().last().unwrap().trim_end_matches('%').parse().unwrap();
    (pct / 100.0, fs::read_to_string(&profile).unwrap())
}

pub fn focal(root: &Path, pkg: &str, qualified: &str) -> FocalUnit {
    let scan = scan_package(&root.join(pkg)).expect("scan");
    scan.units.into_iter().find(|u| u.qualified_name() == qualified).expect("focal unit present")
}

/// Generate one candidate for `qualified` with a fresh language server and
/// the scripted token file `tokens_file`. Returns the candidate, every
/// prompt sent and the final context store.
pub fn scripted_run(root: &Path, pkg: &str, qualified: &str, tokens_file: &str) -> (TestCandidate, Vec<String>, ContextStore) {
    let unit = focal(root, pkg, qualified);
    let mut handle = start_server(root);
    let mut fetcher = LspFetcher::new(&mut handle, FetchOptions::default());
    let mut generator = ScriptedGenerator::from_file(&oracle(tokens_file)).expect("tokens");
    let mut store = ContextStore::with_go_reserved(ContextBudget::unlimited());
    let candidate = generate(
        &unit,
        &mut generator,
        &mut fetcher,
        &mut store,
        &Formulator::default(),
        &GenerationConfig::default(),
        1,
        None,
    )
    .expect("generation");
    drop(fetcher);
    handle.shutdown().expect("shutdown");
    (candidate, generator.prompts().to_vec(), store)
}

/// `identifier outcome token_index` per fetch record.
pub fn log_lines(c: &TestCandidate) -> Vec<String> {
    c.fetch_log
        .iter()
        .map(|r| format!("{} {} {}", r.identifier, serde_json::to_value(r.outcome).unwrap().as_str().unwrap(), r.token_index))
        .collect()
}

pub fn oracle_log(name: &str) -> Vec<String> {
    read_oracle(name).lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).map(str::to_string).collect()
}
