#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use walkdir::WalkDir;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().to_path_buf()
}

pub fn oracle(name: &str) -> PathBuf {
    repo_root().join("fixtures/oracle").join(name)
}

pub fn tokens_dir() -> PathBuf {
    oracle("run_tokens")
}

/// Compare with a pinned file; `RATG_UPDATE_GOLDEN=1` rewrites it.
pub fn assert_golden(name: &str, actual: &str) {
    let path = oracle(name);
    if std::env::var_os("RATG_UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "differs from {}", path.display());
}

/// `RATG_GOPLS`, else `gopls` on `PATH`, else the stand-in built from
/// `tools/golsp-lite`.
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
            let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
            let exe = out.join("golsp-lite");
            let tmp = out.join(format!("golsp-lite.cli.{}", std::process::id()));
            let status = Command::new("go")
                .args(["build", "-o"])
                .arg(&tmp)
                .arg(".")
                .current_dir(repo_root().join("tools/golsp-lite"))
                .env("GOTOOLCHAIN", "local")
                .status()
                .expect("go build of the language server stand-in");
            assert!(status.success(), "building tools/golsp-lite failed");
            fs::rename(&tmp, &exe).unwrap();
            exe
        })
        .clone()
}

/// A temporary directory holding `fixtures/` (the Go module, without the
/// oracle files).
pub fn workspace() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let src = repo_root().join("fixtures");
    for e in WalkDir::new(&src).into_iter().filter_entry(|e| e.file_name() != "oracle") {
        let e = e.unwrap();
        let target = tmp.path().join("fixtures").join(e.path().strip_prefix(&src).unwrap());
        if e.file_type().is_dir() {
            fs::create_dir_all(&target).unwrap();
        } else {
            fs::copy(e.path(), &target).unwrap();
        }
    }
    tmp
}

/// Every file under `dir`, relative path to contents.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    WalkDir::new(dir)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(dir).unwrap().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect()
}

/// Run the binary in `cwd` with a clean generator environment.
pub fn ratg(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratg"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RATG_GOPLS")
        .env_remove("RATG_LLM_ENDPOINT")
        .env_remove("RATG_LLM_TOKEN")
        .env_remove("RATG_LOG")
        .env("GOTOOLCHAIN", "local")
        .output()
        .expect("ratg runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), stdout(o), stderr(o));
}

pub fn read_json(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

/// Line coverage of `pkg` as reported by `go tool cover -func` for a run
/// of exactly `tests`, which are written into the package first.
pub fn toolchain_total(module: &Path, pkg: &str, test_file: &str, tests: &[&str]) -> f64 {
    let dir = module.join(pkg);
    let placed = dir.join("oracle_suite_test.go");
    fs::write(&placed, test_file).unwrap();
    let profile = dir.join("oracle.cov");
    let run = format!("^({})$", tests.join("|"));
    let out = Command::new("go")
        .args(["test", "-count=1", "-run", &run, "-coverprofile"])
        .arg(&profile)
        .arg(".")
        .current_dir(&dir)
        .env("GOTOOLCHAIN", "local")
        .output()
        .unwrap();
    let func = Command::new("go")
        .args(["tool", "cover", "-func"])
        .arg(&profile)
        .current_dir(&dir)
        .env("GOTOOLCHAIN", "local")
        .output()
        .unwrap();
    fs::remove_file(&placed).unwrap();
    fs::remove_file(&profile).unwrap();
    let text = String::from_utf8_lossy(&func.stdout);
    let total = text.lines().find(|l| l.starts_with("total:")).unwrap_or_else(|| {
        panic!("no total: {}\n{}", String::from_utf8_lossy(&out.stderr), String::from_utf8_lossy(&func.stderr))
    });
    total.split_whitespace().last().unwrap().trim_end_matches('%').parse::<f64>().unwrap() / 100.0
}

pub struct OracleMutant {
    pub line: u64,
    pub original: String,
    pub mutated: String,
    pub status: String,
}

pub fn mutant_oracle() -> Vec<OracleMutant> {
    fs::read_to_string(oracle("loops_mutants.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            OracleMutant { line: f[1].parse().unwrap(), original: f[2].into(), mutated: f[3].into(), status: f[4].into() }
        })
        .collect()
}
