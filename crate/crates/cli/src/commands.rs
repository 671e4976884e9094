//! The pipeline stages. Each reads its inputs from and writes its outputs
//! to the run directory, so stages can be rerun or resumed independently.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _};
use ratg_core::context::ContextStore;
use ratg_core::eval::{
    aggregate_report, evaluate_project, mutate_project, run_external_mutator, AggregateReport, CandidateFile,
    CompileStatus, EvalOptions, EvalReport, GoToolchain, Mutant, MutationSummary, ProjectEvaluation, TestOutcome,
};
use ratg_core::extract::{scan_module, FileError, FocalUnit};
use ratg_core::generate::{
    assemble_test_file, generate as generate_candidate, referenced_imports, rename_test, run_import_fixer,
    unique_test_names, ContextFetcher, FetchStatus, GenerationConfig, GenerationError, LspFetcher, NullFetcher,
    RemoteGenerator, ScriptedGenerator, StopReason, TestCandidate, TokenGenerator,
};
use ratg_core::lsp::{resolve_executable, FetchOptions, ServerConfig, ServerHandle};
use ratg_core::prompt::Formulator;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::config::{Backend, RunConfig};
use crate::run_dir::{LedgerKind, RunDir};

pub const MANIFEST: &str = "manifest.json";
pub const CANDIDATES: &str = "candidates.json";
pub const EVALUATION: &str = "eval/evaluation.json";
pub const EVAL_REPORT: &str = "eval/report.json";
pub const MUTANTS: &str = "mutation/mutants.json";
pub const MUTATION_SUMMARY: &str = "mutation/summary.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
const WORK: &str = "work";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub module_path: String,
    pub project_dir: PathBuf,
    pub units: Vec<FocalUnit>,
    pub errors: Vec<FileError>,
}

/// One assembled candidate test file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    /// `<focal key>_<index>`.
    pub id: String,
    pub focal: String,
    pub candidate_index: usize,
    pub package_dir: String,
    pub package_name: String,
    /// Test function name after de-duplication within the package.
    pub test_name: String,
    /// File name inside the package.
    pub file_name: String,
    /// Assembled file, relative to the run directory.
    pub file: String,
    pub stop_reason: StopReason,
    pub token_count: usize,
    pub fetch_hits: usize,
    pub fetch_misses: usize,
}

fn rel_join(base: &str, pkg: &str, name: &str) -> String {
    [base, pkg, name].iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join("/")
}

fn file_stem(unit_key_qualified: &str, index: usize) -> String {
    format!("{unit_key_qualified}_{index}")
}

/// Scan the project for focal units and write the manifest.
pub fn extract(cfg: &RunConfig, rd: &RunDir) -> anyhow::Result<Manifest> {
    let outcome = scan_module(cfg.project()).with_context(|| format!("scanning {}", cfg.project().display()))?;
    let filter = cfg.focal_filter();
    let units: Vec<FocalUnit> = outcome.units.into_iter().filter(|u| filter.accepts(u)).collect();
    for e in &outcome.errors {
        rd.record("extract", &e.path, LedgerKind::Error, &e.message)?;
    }
    let manifest = Manifest {
        module_path: cfg.module_path.clone(),
        project_dir: cfg.project().to_path_buf(),
        units,
        errors: outcome.errors,
    };
    rd.write_json(MANIFEST, &manifest)?;
    println!("extracted {} focal units ({} files with errors)", manifest.units.len(), manifest.errors.len());
    Ok(manifest)
}

fn token_file(dir: &Path, unit: &FocalUnit, index: usize) -> Option<PathBuf> {
    let pkg = dir.join(unit.package_dir());
    let q = unit.qualified_name();
    let numbered = pkg.join(format!("{}.tokens", file_stem(&q, index)));
    if numbered.is_file() {
        return Some(numbered);
    }
    let plain = pkg.join(format!("{q}.tokens"));
    (index == 1 && plain.is_file()).then_some(plain)
}

fn start_server(cfg: &RunConfig) -> anyhow::Result<ServerHandle> {
    let exe = resolve_executable(&cfg.gopls)
        .map_err(|e| anyhow!("language server `{}` unavailable: {e}", cfg.gopls.display()))?;
    ServerHandle::start(cfg.project(), &ServerConfig::new(exe)).context("starting the language server")
}

/// Generate candidates for every focal unit in the manifest (extracting
/// first when there is none), then assemble one test file per candidate.
pub fn generate(cfg: &RunConfig, rd: &RunDir) -> anyhow::Result<Vec<CandidateRecord>> {
    cfg.check_generator()?;
    let manifest: Manifest = if rd.exists(MANIFEST) { rd.read_json(MANIFEST)? } else { extract(cfg, rd)? };
    if manifest.project_dir != cfg.project() {
        bail!(
            "run directory belongs to {}, not {}; use another --run-dir",
            manifest.project_dir.display(),
            cfg.project().display()
        );
    }
    for stale in ["candidates", "context", "trace", "eval", "mutation", CANDIDATES, REPORT_JSON, REPORT_TXT] {
        rd.remove(stale)?;
    }

    // Resolve every external dependency before the first token.
    let mut server = if cfg.no_context { None } else { Some(start_server(cfg)?) };
    let mut remote = match cfg.generator.backend {
        Backend::Remote => Some(RemoteGenerator::new(
            cfg.generator.endpoint.clone().expect("checked"),
            cfg.generator.api_token.clone(),
            cfg.generator.temperature,
        )?),
        Backend::Scripted => None,
    };

    let gen_cfg = GenerationConfig { max_tokens: cfg.max_tokens, generator_retries: cfg.generator.retries };
    let formulator = Formulator::default();
    let mut produced: Vec<(FocalUnit, TestCandidate)> = Vec::new();
    let result = (|| {
        for unit in &manifest.units {
            let key = unit.key();
            let mut store = ContextStore::with_go_reserved(cfg.budget());
            for i in 1..=cfg.candidates {
                let id = file_stem(&key, i);
                let mut scripted;
                let generator: &mut dyn TokenGenerator = match remote.as_mut() {
                    Some(r) => r,
                    None => {
                        let dir = cfg.generator.tokens_dir.as_deref().expect("checked");
                        let Some(path) = token_file(dir, unit, i) else {
                            rd.record("generate", &id, LedgerKind::Skipped, "no token file")?;
                            continue;
                        };
                        match ScriptedGenerator::from_file(&path) {
                            Ok(g) => scripted = g,
                            Err(e) => {
                                rd.record("generate", &id, LedgerKind::Error, format!("{}: {e}", path.display()))?;
                                continue;
                            }
                        }
                        &mut scripted
                    }
                };
                let mut null = NullFetcher;
                let mut lsp;
                let fetcher: &mut dyn ContextFetcher = match server.as_mut() {
                    Some(h) => {
                        lsp = LspFetcher::new(h, FetchOptions::default());
                        &mut lsp
                    }
                    None => &mut null,
                };
                let trace = rd.path(format!("trace/{id}"));
                tracing::info!(candidate = %id, "generating");
                match generate_candidate(unit, generator, fetcher, &mut store, &formulator, &gen_cfg, i, Some(&trace)) {
                    Ok(c) => {
                        rd.write_json(format!("candidates/{id}.json"), &c)?;
                        rd.write_text(format!("context/{id}.txt"), &store.render())?;
                        produced.push((unit.clone(), c));
                    }
                    Err(e @ GenerationError::Scratch(_)) => return Err(anyhow::Error::new(e).context(id)),
                    Err(e) => rd.record("generate", &id, LedgerKind::Error, e.to_string())?,
                }
            }
        }
        Ok(())
    })();
    if let Some(h) = server {
        if let Err(e) = h.shutdown() {
            tracing::warn!("language server shutdown: {e}");
        }
    }
    result?;

    let records = assemble(cfg, rd, &manifest.module_path, &produced)?;
    rd.write_json(CANDIDATES, &records)?;
    println!(
        "generated {} candidates for {} focal units",
        records.len(),
        records.iter().map(|r| &r.focal).collect::<BTreeSet<_>>().len()
    );
    Ok(records)
}

fn assemble(
    cfg: &RunConfig,
    rd: &RunDir,
    module_path: &str,
    produced: &[(FocalUnit, TestCandidate)],
) -> anyhow::Result<Vec<CandidateRecord>> {
    let mut by_pkg: BTreeMap<&str, Vec<&(FocalUnit, TestCandidate)>> = BTreeMap::new();
    for p in produced {
        by_pkg.entry(p.0.package_dir()).or_default().push(p);
    }
    let mut records = Vec::new();
    for (pkg, items) in by_pkg {
        let names = unique_test_names(&items.iter().map(|(_, c)| c.test_name.as_str()).collect::<Vec<_>>());
        for ((unit, c), name) in items.into_iter().zip(names) {
            let id = file_stem(&c.focal, c.candidate_index);
            let source = if name == c.test_name { c.source_text.clone() } else { rename_test(&c.source_text, &name)? };
            let imports = referenced_imports(&source, &c.fetch_log, module_path, pkg);
            let mut text = assemble_test_file(&unit.package_name, &source, &imports);
            if let Some(tool) = &cfg.import_fixer {
                match run_import_fixer(tool, &text) {
                    Ok(fixed) => text = fixed,
                    Err(e) => rd.record("assemble", &id, LedgerKind::Error, e.to_string())?,
                }
            }
            let file_name =
                format!("ratg_{}_{}_test.go", unit.qualified_name().replace('.', "_"), c.candidate_index);
            let file = rel_join("candidates", pkg, &file_name);
            rd.write_text(&file, &text)?;
            let count = |s| c.fetch_log.iter().filter(|r| r.outcome == s).count();
            records.push(CandidateRecord {
                id,
                focal: c.focal.clone(),
                candidate_index: c.candidate_index,
                package_dir: pkg.to_string(),
                package_name: unit.package_name.clone(),
                test_name: name,
                file_name,
                file,
                stop_reason: c.stop_reason,
                token_count: c.token_count,
                fetch_hits: count(FetchStatus::Hit),
                fetch_misses: count(FetchStatus::Miss),
            });
        }
    }
    Ok(records)
}

fn candidate_files(rd: &RunDir, records: &[CandidateRecord]) -> anyhow::Result<Vec<CandidateFile>> {
    records
        .iter()
        .map(|r| {
            let text = fs::read_to_string(rd.path(&r.file)).with_context(|| format!("reading {}", r.file))?;
            Ok(CandidateFile {
                id: r.id.clone(),
                package_dir: r.package_dir.clone(),
                file_name: r.file_name.clone(),
                test_name: r.test_name.clone(),
                text,
            })
        })
        .collect()
}

/// Fresh copy of the project under the run directory, leaving out version
/// control and the run directory itself.
fn work_copy(cfg: &RunConfig, rd: &RunDir) -> anyhow::Result<PathBuf> {
    rd.remove(WORK)?;
    let dest = rd.path(WORK);
    let src = cfg.project();
    let skip = rd.root().to_path_buf();
    let walker = WalkDir::new(src).follow_links(false).into_iter().filter_entry(|e| {
        e.path() != skip && !(e.file_type().is_dir() && e.file_name() == ".git")
    });
    for entry in walker {
        let entry = entry?;
        let rel = entry.path().strip_prefix(src)?;
        let target = dest.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&target)?;
        } else if entry.path().is_file() {
            fs::copy(entry.path(), &target).with_context(|| format!("copying {}", entry.path().display()))?;
        }
    }
    Ok(dest)
}

fn toolchain() -> anyhow::Result<GoToolchain> {
    Ok(GoToolchain::new("go")?)
}

fn load_candidates(rd: &RunDir) -> anyhow::Result<Vec<CandidateRecord>> {
    if !rd.exists(CANDIDATES) {
        bail!("no candidates in {}; run `ratg generate` first", rd.root().display());
    }
    rd.read_json(CANDIDATES)
}

/// Compile, run and measure coverage of the generated tests on a copy of
/// the project.
pub fn evaluate(cfg: &RunConfig, rd: &RunDir) -> anyhow::Result<ProjectEvaluation> {
    let records = load_candidates(rd)?;
    let files = candidate_files(rd, &records)?;
    let go = toolchain()?;
    rd.remove("eval")?;
    rd.remove("mutation")?;
    let work = work_copy(cfg, rd)?;
    let options = EvalOptions {
        compile_timeout: cfg.compile_timeout(),
        test_timeout: cfg.test_timeout(),
        mutation: false,
    };
    let eval = evaluate_project(&go, &cfg.project_name(), &work, &files, &options);
    rd.remove(WORK)?;
    let eval = eval?;
    for (pkg, err) in &eval.package_errors {
        rd.record("evaluate", pkg, LedgerKind::Error, err)?;
    }
    rd.write_json(EVALUATION, &eval)?;
    rd.write_json(EVAL_REPORT, &eval.report)?;
    let r = &eval.report;
    println!(
        "compiled {}/{} candidates, {} passed, line coverage {:.2}%",
        r.compiled,
        r.candidates,
        r.passed,
        r.line_coverage * 100.0
    );
    Ok(eval)
}

/// Mutation testing with the tests that compiled and passed.
pub fn mutate(cfg: &RunConfig, rd: &RunDir) -> anyhow::Result<MutationSummary> {
    let records = load_candidates(rd)?;
    if !rd.exists(EVALUATION) {
        bail!("no evaluation in {}; run `ratg evaluate` first", rd.root().display());
    }
    let eval: ProjectEvaluation = rd.read_json(EVALUATION)?;
    let compiled: BTreeSet<&str> = eval
        .compile
        .iter()
        .filter(|c| c.status == CompileStatus::Compiled)
        .map(|c| c.candidate.as_str())
        .collect();
    let packages: Vec<String> = records.iter().map(|r| r.package_dir.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let records: Vec<CandidateRecord> = records.into_iter().filter(|r| compiled.contains(r.id.as_str())).collect();
    let files = candidate_files(rd, &records)?;
    let passing: BTreeSet<String> =
        eval.outcomes.iter().filter(|(_, o)| **o == TestOutcome::Pass).map(|(t, _)| t.clone()).collect();
    let go = toolchain()?;
    rd.remove("mutation")?;
    let work = work_copy(cfg, rd)?;
    let result = match &cfg.mutator {
        None => mutate_project(&go, &work, &packages, &files, &passing, cfg.test_timeout()).map_err(anyhow::Error::from),
        Some(tool) => external_mutation(cfg, rd, tool, &work, &packages, &files),
    };
    rd.remove(WORK)?;
    let (mutants, summary) = result?;
    rd.write_json(MUTANTS, &mutants)?;
    rd.write_json(MUTATION_SUMMARY, &summary)?;
    println!(
        "{} mutants: {} killed, {} survived, {} not covered, {} skipped (mutator coverage {:.2}%)",
        summary.total,
        summary.killed,
        summary.survived,
        summary.not_covered,
        summary.compile_skipped,
        summary.mutator_coverage() * 100.0
    );
    Ok(summary)
}

fn external_mutation(
    cfg: &RunConfig,
    rd: &RunDir,
    tool: &Path,
    work: &Path,
    packages: &[String],
    files: &[CandidateFile],
) -> anyhow::Result<(Vec<Mutant>, MutationSummary)> {
    let mut total = MutationSummary::default();
    for f in files {
        fs::write(work.join(&f.package_dir).join(&f.file_name), &f.text)?;
    }
    for pkg in packages {
        match run_external_mutator(tool, &cfg.mutator_args, &work.join(pkg)) {
            Ok(s) => {
                total.total += s.total;
                total.covered += s.covered;
                total.killed += s.killed;
                total.survived += s.survived;
                total.not_covered += s.not_covered;
                total.compile_skipped += s.compile_skipped;
            }
            Err(e) => rd.record("mutate", pkg, LedgerKind::Error, e.to_string())?,
        }
    }
    Ok((Vec::new(), total))
}

/// The evaluation report of one run directory, with mutation results merged
/// in when mutation testing ran.
pub fn project_report(rd: &RunDir) -> anyhow::Result<EvalReport> {
    if !rd.exists(EVAL_REPORT) {
        bail!("no evaluation in {}; run `ratg evaluate` first", rd.root().display());
    }
    let mut report: EvalReport = rd.read_json(EVAL_REPORT)?;
    if rd.exists(MUTATION_SUMMARY) {
        let m: MutationSummary = rd.read_json(MUTATION_SUMMARY)?;
        report.mutants_total = m.total;
        report.mutants_covered = m.covered;
        report.mutants_killed = m.killed;
        report.mutator_coverage = m.mutator_coverage();
    }
    Ok(report)
}

/// Aggregate the reports of `runs` and print the table; with `output`, also
/// write `report.json` and `report.txt` there.
pub fn report(runs: &[RunDir], output: Option<&RunDir>) -> anyhow::Result<AggregateReport> {
    let projects = runs.iter().map(project_report).collect::<anyhow::Result<Vec<_>>>()?;
    let agg = aggregate_report(&projects);
    let table = agg.table();
    if let Some(out) = output {
        out.write_json(REPORT_JSON, &agg)?;
        out.write_text(REPORT_TXT, &table)?;
    }
    print!("{table}");
    Ok(agg)
}
