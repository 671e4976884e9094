//! Evaluation of generated tests: compile rate, line coverage and mutation
//! score, run with the real Go toolchain.

mod compile;
mod coverage;
mod mutation;
mod report;
mod toolchain;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compile::{compile_check, compile_rate, parse_diagnostics, CompileResult, CompileStatus, Diagnostic};
pub use coverage::{
    parse_coverprofile, parse_test_results, run_filter, run_tests_with_coverage, CoverageError, CoverageReport,
    TestOutcome, TestRun,
};
pub use mutation::{
    micro_mutate, mutants_in_source, mutation_run, parse_gremlins_summary, run_external_mutator, tree_checksums,
    MutantStatus, Mutant, MutationOperator, MutationSummary,
};
pub use report::{aggregate_report, AggregateReport, AverageRow, EvalReport};
pub use toolchain::{CommandOutput, GoToolchain};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("Go toolchain not found: {0}")]
    ToolchainMissing(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not restore {0} after mutation")]
    RestoreFailed(PathBuf),
    #[error("sources under {0} changed during mutation testing")]
    TreeChanged(PathBuf),
    #[error("mutant {0} no longer matches the source")]
    StaleMutant(String),
    #[error("external mutation tool: {0}")]
    ExternalTool(String),
}

/// One generated test file to evaluate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateFile {
    pub id: String,
    /// Package directory relative to the module root.
    pub package_dir: String,
    pub file_name: String,
    pub test_name: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub compile_timeout: Duration,
    pub test_timeout: Duration,
    pub mutation: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            compile_timeout: Duration::from_secs(300),
            test_timeout: Duration::from_secs(120),
            mutation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectEvaluation {
    pub compile: Vec<CompileResult>,
    pub outcomes: BTreeMap<String, TestOutcome>,
    pub package_errors: BTreeMap<String, String>,
    pub coverage: CoverageReport,
    pub mutants: Vec<Mutant>,
    pub mutation: MutationSummary,
    pub report: EvalReport,
}

fn pkg_path(root: &Path, rel: &str) -> PathBuf {
    crate::lsp::workspace_file(root, rel)
}

/// Evaluate `files` against the module at `module_root`, which is modified
/// while this runs and restored before it returns.
///
/// Each file is compiled alone. Compiling files are then run together per
/// package; line coverage and the mutation baseline come from the tests
/// that passed. Coverage counts the packages that received candidates.
pub fn evaluate_project(
    go: &GoToolchain,
    project: &str,
    module_root: &Path,
    files: &[CandidateFile],
    options: &EvalOptions,
) -> Result<ProjectEvaluation, EvalError> {
    let mut compile = Vec::new();
    for f in files {
        let r = compile_check(go, &f.id, &f.text, &pkg_path(module_root, &f.package_dir), &f.file_name, options.compile_timeout)?;
        compile.push(r);
    }
    let compiled: Vec<&CandidateFile> = files
        .iter()
        .zip(&compile)
        .filter(|(_, r)| r.status == CompileStatus::Compiled)
        .map(|(f, _)| f)
        .collect();

    let packages: BTreeSet<&str> = files.iter().map(|f| f.package_dir.as_str()).collect();
    let mut placed = Vec::new();
    let result = (|| {
        for f in &compiled {
            let p = pkg_path(module_root, &f.package_dir).join(&f.file_name);
            fs::write(&p, &f.text)?;
            placed.push(p);
        }
        let mut outcomes = BTreeMap::new();
        let mut package_errors = BTreeMap::new();
        let mut coverage = CoverageReport::default();
        let mut mutants_all = Vec::new();
        for pkg in &packages {
            let dir = pkg_path(module_root, pkg);
            let tests: Vec<&str> = compiled.iter().filter(|f| f.package_dir == *pkg).map(|f| f.test_name.as_str()).collect();
            let mut passing: Vec<&str> = Vec::new();
            let mut first_cov = None;
            if !tests.is_empty() {
                let run = run_tests_with_coverage(go, &dir, &tests, options.test_timeout)?;
                if let Some(e) = &run.package_error {
                    package_errors.insert(pkg.to_string(), e.clone());
                }
                for (t, o) in &run.outcomes {
                    if *o == TestOutcome::Pass {
                        if let Some(x) = tests.iter().find(|x| *x == t) {
                            passing.push(x);
                        }
                    }
                }
                outcomes.extend(run.outcomes);
                first_cov = run.coverage;
            }
            // Baseline with passing tests only (the empty filter still
            // yields a profile listing every block).
            let base_cov = match first_cov {
                Some(c) if passing.len() == tests.len() => c,
                _ => run_tests_with_coverage(go, &dir, &passing, options.test_timeout)?.coverage.unwrap_or_default(),
            };
            coverage.merge(&base_cov);
            if options.mutation {
                mutants_all.extend(mutate_package(go, module_root, pkg, &passing, &base_cov, options.test_timeout)?);
            }
        }
        Ok::<_, EvalError>((outcomes, package_errors, coverage, mutants_all))
    })();
    for p in &placed {
        let _ = fs::remove_file(p);
    }
    let (outcomes, package_errors, coverage, mut mutants) = result?;
    renumber(&mut mutants);
    let mutation = MutationSummary::from_mutants(&mutants);
    let report = EvalReport {
        project: project.to_string(),
        candidates: files.len(),
        compiled: compiled.len(),
        passed: outcomes.values().filter(|o| **o == TestOutcome::Pass).count(),
        compile_rate: compile_rate(&compile),
        line_coverage: coverage.line_coverage(),
        mutants_total: mutation.total,
        mutants_covered: mutation.covered,
        mutants_killed: mutation.killed,
        mutator_coverage: mutation.mutator_coverage(),
    };
    Ok(ProjectEvaluation { compile, outcomes, package_errors, coverage, mutants, mutation, report })
}

fn mutate_package(
    go: &GoToolchain,
    module_root: &Path,
    pkg: &str,
    tests: &[&str],
    baseline: &CoverageReport,
    timeout: Duration,
) -> Result<Vec<Mutant>, EvalError> {
    let dir = pkg_path(module_root, pkg);
    let mut mutants = micro_mutate(&dir, pkg)?;
    mutation_run(go, module_root, &dir, &mut mutants, tests, baseline, timeout)?;
    Ok(mutants)
}

fn renumber(mutants: &mut [Mutant]) {
    for (n, m) in mutants.iter_mut().enumerate() {
        m.id = format!("M{}", n + 1);
    }
}

/// Mutation testing on its own, for files already known to compile.
/// `packages` lists every package to mutate (those without files get no
/// tests, so all their mutants are not covered); only tests named in
/// `passing` run. The tree is restored before returning.
pub fn mutate_project(
    go: &GoToolchain,
    module_root: &Path,
    packages: &[String],
    files: &[CandidateFile],
    passing: &BTreeSet<String>,
    timeout: Duration,
) -> Result<(Vec<Mutant>, MutationSummary), EvalError> {
    let mut placed = Vec::new();
    let result = (|| {
        for f in files {
            let p = pkg_path(module_root, &f.package_dir).join(&f.file_name);
            fs::write(&p, &f.text)?;
            placed.push(p);
        }
        let mut all = Vec::new();
        for pkg in packages {
            let tests: Vec<&str> = files
                .iter()
                .filter(|f| &f.package_dir == pkg && passing.contains(&f.test_name))
                .map(|f| f.test_name.as_str())
                .collect();
            let baseline = run_tests_with_coverage(go, &pkg_path(module_root, pkg), &tests, timeout)?
                .coverage
                .unwrap_or_default();
            all.extend(mutate_package(go, module_root, pkg, &tests, &baseline, timeout)?);
        }
        Ok::<_, EvalError>(all)
    })();
    for p in &placed {
        let _ = fs::remove_file(p);
    }
    let mut mutants = result?;
    renumber(&mut mutants);
    let summary = MutationSummary::from_mutants(&mutants);
    Ok((mutants, summary))
}
