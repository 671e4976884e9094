//! Per-project evaluation reports and the aggregate table.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub project: String,
    pub candidates: usize,
    pub compiled: usize,
    pub passed: usize,
    pub compile_rate: f64,
    pub line_coverage: f64,
    pub mutants_total: usize,
    pub mutants_covered: usize,
    pub mutants_killed: usize,
    pub mutator_coverage: f64,
}

/// Mean of every numeric column across projects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub candidates: f64,
    pub compiled: f64,
    pub passed: f64,
    pub compile_rate: f64,
    pub line_coverage: f64,
    pub mutants_total: f64,
    pub mutants_covered: f64,
    pub mutants_killed: f64,
    pub mutator_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub projects: Vec<EvalReport>,
    pub average: Option<AverageRow>,
}

const HEADERS: [&str; 10] = [
    "Project",
    "Candidates",
    "Compiled",
    "Passed",
    "Compile Rate",
    "Line Coverage",
    "Mutants",
    "Covered",
    "Killed",
    "Mutator Coverage",
];

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

pub fn aggregate_report(projects: &[EvalReport]) -> AggregateReport {
    let n = projects.len() as f64;
    let mean = |f: &dyn Fn(&EvalReport) -> f64| projects.iter().map(f).sum::<f64>() / n;
    let average = (!projects.is_empty()).then(|| AverageRow {
        candidates: mean(&|r| r.candidates as f64),
        compiled: mean(&|r| r.compiled as f64),
        passed: mean(&|r| r.passed as f64),
        compile_rate: mean(&|r| r.compile_rate),
        line_coverage: mean(&|r| r.line_coverage),
        mutants_total: mean(&|r| r.mutants_total as f64),
        mutants_covered: mean(&|r| r.mutants_covered as f64),
        mutants_killed: mean(&|r| r.mutants_killed as f64),
        mutator_coverage: mean(&|r| r.mutator_coverage),
    });
    AggregateReport { projects: projects.to_vec(), average }
}

impl AggregateReport {
    /// Fixed-width text table, one row per project plus an `Average` row.
    /// Rates are percentages with two decimals.
    pub fn table(&self) -> String {
        let mut rows: Vec<[String; 10]> = vec![HEADERS.map(String::from)];
        for r in &self.projects {
            rows.push([
                r.project.clone(),
                r.candidates.to_string(),
                r.compiled.to_string(),
                r.passed.to_string(),
                pct(r.compile_rate),
                pct(r.line_coverage),
                r.mutants_total.to_string(),
                r.mutants_covered.to_string(),
                r.mutants_killed.to_string(),
                pct(r.mutator_coverage),
            ]);
        }
        if let Some(a) = &self.average {
            rows.push([
                "Average".into(),
                format!("{:.2}", a.candidates),
                format!("{:.2}", a.compiled),
                format!("{:.2}", a.passed),
                pct(a.compile_rate),
                pct(a.line_coverage),
                format!("{:.2}", a.mutants_total),
                format!("{:.2}", a.mutants_covered),
                format!("{:.2}", a.mutants_killed),
                pct(a.mutator_coverage),
            ]);
        }
        let widths: Vec<usize> = (0..10).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
