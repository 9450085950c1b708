//! Experiment reports and CSV series. CSV numbers use the shortest
//! round-trip form, so equal inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use hjj_core::fatten::FatteningReport;
use hjj_core::viscous::VanishingViscosityReport;
use hjj_core::{GridFunction1D, JunctionGridFunction, NodeDiagnostics, SolveReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::problem::ProblemFile;

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub seed: u64,
    pub tol: f64,
    pub threads: usize,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSolution {
    pub solution: GridFunction1D,
    pub report: SolveReport,
}

/// Second solver run on the same problem and its distance to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub method: String,
    pub max_distance: f64,
    pub tolerance: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    /// `log2(e_h / e_{h/2})` against the previous (coarser) row.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub check: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outputs {
    Edges {
        edges: Vec<EdgeSolution>,
    },
    Junction {
        solution: JunctionGridFunction,
        report: SolveReport,
        diagnostics: NodeDiagnostics,
        cross_check: Option<CrossCheck>,
        /// `-A` for flux-limited problems.
        node_bound: Option<f64>,
    },
    Sweep {
        sweep: VanishingViscosityReport,
    },
    Fattening {
        study: FatteningReport,
    },
    Verify {
        checks: Vec<CheckResult>,
    },
    Convergence {
        /// What the errors are measured against.
        reference: String,
        rows: Vec<ConvergenceRow>,
        /// Least-squares slope of `log e` against `log h`.
        fitted_order: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub subcommand: String,
    pub run: RunMetadata,
    pub problem: Option<ProblemFile>,
    /// Set when a solver stopped short or produced non-finite values; the
    /// outputs are written anyway.
    pub partial: bool,
    pub warnings: Vec<String>,
    /// Series name to CSV file name, relative to the report.
    pub series: BTreeMap<String, String>,
    pub outputs: Outputs,
}

impl ExperimentReport {
    /// Number of profile series (edges) in the outputs.
    pub fn profile_edges(&self) -> usize {
        match &self.outputs {
            Outputs::Edges { edges } => edges.len(),
            Outputs::Junction { solution, .. } => solution.per_edge().len(),
            _ => 0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Writes to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn profile_csv<'a>(edges: impl IntoIterator<Item = &'a GridFunction1D>) -> String {
    let mut s = String::from("edge_index,x,u\n");
    for (i, g) in edges.into_iter().enumerate() {
        for (x, u) in g.positions().zip(&g.values) {
            writeln!(s, "{i},{x:?},{u:?}").unwrap();
        }
    }
    s
}

pub fn sweep_csv(sweep: &VanishingViscosityReport) -> String {
    let mut s = String::from("epsilon,node_value,kirchhoff_sum\n");
    for r in &sweep.records {
        writeln!(s, "{:?},{:?},{:?}", r.epsilon, r.node_value, r.kirchhoff_sum).unwrap();
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("h,error,observed_order\n");
    for r in rows {
        match r.observed_order {
            Some(q) => writeln!(s, "{:?},{:?},{q:?}", r.h, r.error).unwrap(),
            None => writeln!(s, "{:?},{:?},", r.h, r.error).unwrap(),
        }
    }
    s
}

pub fn fatten_csv(study: &FatteningReport) -> String {
    let mut s = String::from("epsilon,h2,node_value,reference_node_value,trace_error_1,trace_error_2\n");
    for r in &study.records {
        writeln!(
            s,
            "{:?},{:?},{:?},{:?},{:?},{:?}",
            r.epsilon, r.h2, r.node_value, r.reference_node_value, r.trace_error[0], r.trace_error[1]
        )
        .unwrap();
    }
    s
}

pub fn verify_csv(checks: &[CheckResult]) -> String {
    let mut s = String::from("suite,check,passed,value,tolerance\n");
    for c in checks {
        writeln!(s, "{},{},{},{:?},{:?}", c.suite, c.check, c.passed, c.value, c.tolerance).unwrap();
    }
    s
}

/// `log2(e_h / e_{h/2})` between consecutive rows, coarse to fine.
pub fn observed_orders(errors: &[f64]) -> Vec<Option<f64>> {
    std::iter::once(None)
        .chain(errors.windows(2).map(|w| Some((w[0] / w[1]).log2())))
        .collect()
}

/// Least-squares slope through `(log h, log e)`.
pub fn fitted_order(rows: &[(f64, f64)]) -> f64 {
    let n = rows.len() as f64;
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders() {
        let o = observed_orders(&[0.04, 0.02, 0.01]);
        assert_eq!(o[0], None);
        assert!((o[1].unwrap() - 1.0).abs() < 1e-12);
        let q = fitted_order(&[(0.1, 0.3), (0.05, 0.075), (0.025, 0.01875)]);
        assert!((q - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_layouts() {
        let rows = vec![
            ConvergenceRow {
                h: 0.5,
                error: 0.25,
                observed_order: None,
            },
            ConvergenceRow {
                h: 0.25,
                error: 0.125,
                observed_order: Some(1.0),
            },
        ];
        assert_eq!(convergence_csv(&rows), "h,error,observed_order\n0.5,0.25,\n0.25,0.125,1.0\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
