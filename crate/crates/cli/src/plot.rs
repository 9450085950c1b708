//! Gnuplot scripts for the CSV series of a report. The scripts are only
//! written, never executed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::report::{write_atomic, ExperimentReport, Outputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Profile,
    Sweep,
    Convergence,
}

impl PlotKind {
    pub fn series(self) -> &'static str {
        match self {
            PlotKind::Profile => "profile",
            PlotKind::Sweep => "sweep",
            PlotKind::Convergence => "convergence",
        }
    }

    pub fn script_name(self) -> String {
        format!("{}.gp", self.series())
    }
}

fn csv_for(report: &ExperimentReport, kind: PlotKind) -> CliResult<&str> {
    report
        .series
        .get(kind.series())
        .map(String::as_str)
        .ok_or_else(|| CliError::MissingSeries(kind.series().into()))
}

fn header(s: &mut String, title: &str, png: &str) {
    writeln!(s, "set terminal pngcairo size 900,600").unwrap();
    writeln!(s, "set output '{png}'").unwrap();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set title '{title}'").unwrap();
    writeln!(s, "set grid").unwrap();
}

pub fn plot_script(report: &ExperimentReport, kind: PlotKind) -> CliResult<String> {
    let csv = csv_for(report, kind)?;
    let mut s = String::new();
    match kind {
        PlotKind::Profile => {
            let k = report.profile_edges();
            if k == 0 {
                return Err(CliError::MissingSeries("profile".into()));
            }
            header(&mut s, &format!("{}: u along each edge", report.subcommand), "profile.png");
            writeln!(s, "set xlabel 'x'\nset ylabel 'u'\nset key bottom right").unwrap();
            writeln!(
                s,
                "plot for [i=0:{}] '{csv}' every ::1 using 2:(column(1) == i ? column(3) : 1/0) \\\n    with lines lw 2 title sprintf('edge %d', i)",
                k - 1
            )
            .unwrap();
        }
        PlotKind::Sweep => {
            let Outputs::Sweep { sweep } = &report.outputs else {
                return Err(CliError::MissingSeries("sweep".into()));
            };
            header(&mut s, "node value against epsilon", "sweep.png");
            writeln!(s, "set logscale x\nset xlabel 'epsilon'\nset ylabel 'u(0)'").unwrap();
            writeln!(
                s,
                "plot '{csv}' every ::1 using 1:2 with linespoints lw 2 title 'viscous', \\\n    {} with lines dt 2 title 'state constraint'",
                sweep.sc_reference
            )
            .unwrap();
        }
        PlotKind::Convergence => {
            let Outputs::Convergence { fitted_order, .. } = &report.outputs else {
                return Err(CliError::MissingSeries("convergence".into()));
            };
            header(&mut s, "max-norm error against h", "convergence.png");
            writeln!(s, "set logscale xy\nset xlabel 'h'\nset ylabel 'error'").unwrap();
            writeln!(s, "set label 1 sprintf('fitted slope %.3f', {fitted_order}) at graph 0.05, graph 0.9").unwrap();
            writeln!(s, "plot '{csv}' every ::1 using 1:2 with linespoints lw 2 title 'error'").unwrap();
        }
    }
    Ok(s)
}

/// Writes `<kind>.gp` next to the CSV it reads.
pub fn emit_plot_script(report: &ExperimentReport, kind: PlotKind, dir: &Path) -> CliResult<PathBuf> {
    let text = plot_script(report, kind)?;
    let path = dir.join(kind.script_name());
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
