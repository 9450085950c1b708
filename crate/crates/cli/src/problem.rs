//! JSON problem files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "K": 2,
//!   "edges": [
//!     { "length": 1.0, "n_cells": 400, "far_bc": { "kind": "state_constraint" },
//!       "hamiltonian": { "family": "abs_shift", "params": [0.0, 1.0] } },
//!     { "length": 1.0, "n_cells": 400,
//!       "hamiltonian": { "family": "expression", "expr": "abs(p) - 2" } }
//!   ],
//!   "junction": { "kind": "flux_limited", "A": -0.5 },
//!   "viscous": { "eps_list": [0.2, 0.1, 0.05] },
//!   "fatten": {
//!     "hamiltonian": { "expression": "max(abs(p1) - 1, abs(p2) - 2)" },
//!     "eps_list": [0.2, 0.1],
//!     "h2": { "cells_per_eps": 8 }
//!   }
//! }
//! ```

use std::fs;
use std::path::Path;

use hjj_core::edge::NodeBc;
use hjj_core::hamiltonian::{make_builtin, parse_expression, Hamiltonian2D};
use hjj_core::viscous::validate_sweep;
use hjj_core::{EdgeSpec, FarBc, Hamiltonian, JunctionCondition, JunctionProblem};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::report::write_atomic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    pub edges: Vec<EdgeEntry>,
    pub junction: JunctionCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscous: Option<ViscousSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fatten: Option<FattenSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub length: f64,
    pub n_cells: usize,
    #[serde(default)]
    pub far_bc: FarBc,
    pub hamiltonian: HamiltonianSpec,
    /// Junction-end condition for `solve-edge`; state constraint if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_bc: Option<NodeBc>,
}

/// A builtin family with `params = [b, c]`, or `family: "expression"` with
/// `expr` in `p` and `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
}

impl HamiltonianSpec {
    pub fn builtin(family: &str, b: f64, c: f64) -> Self {
        HamiltonianSpec {
            family: family.into(),
            params: vec![b, c],
            expr: None,
        }
    }

    pub fn expression(src: &str) -> Self {
        HamiltonianSpec {
            family: "expression".into(),
            params: Vec::new(),
            expr: Some(src.into()),
        }
    }

    pub fn build(&self) -> hjj_core::Result<Hamiltonian> {
        if self.family == "expression" {
            let Some(src) = &self.expr else {
                return Err(hjj_core::Error::MalformedParams {
                    family: self.family.clone(),
                    reason: "missing `expr`".into(),
                });
            };
            if !self.params.is_empty() {
                return Err(hjj_core::Error::MalformedParams {
                    family: self.family.clone(),
                    reason: "`params` is not used with an expression".into(),
                });
            }
            return parse_expression(src);
        }
        if self.expr.is_some() {
            return Err(hjj_core::Error::MalformedParams {
                family: self.family.clone(),
                reason: "`expr` is only used with family \"expression\"".into(),
            });
        }
        make_builtin(&self.family, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscousSection {
    pub eps_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hamiltonian2DSpec {
    /// Expression in `p1, p2, x1, x2`.
    Expression(String),
    MaxOf([HamiltonianSpec; 2]),
    AnisotropicQuadratic { k: f64, c: f64 },
}

impl Hamiltonian2DSpec {
    pub fn build(&self) -> hjj_core::Result<Hamiltonian2D> {
        match self {
            Hamiltonian2DSpec::Expression(src) => Hamiltonian2D::parse(src),
            Hamiltonian2DSpec::MaxOf([a, b]) => Hamiltonian2D::max_of(a.build()?, b.build()?),
            Hamiltonian2DSpec::AnisotropicQuadratic { k, c } => Hamiltonian2D::anisotropic_quadratic(*k, *c),
        }
    }
}

/// Tube grid spacing: one value for every `eps`, or `eps / cells_per_eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum H2Spacing {
    Fixed(f64),
    PerEps { cells_per_eps: usize },
}

impl H2Spacing {
    pub fn at(self, eps: f64) -> f64 {
        match self {
            H2Spacing::Fixed(h2) => h2,
            H2Spacing::PerEps { cells_per_eps } => eps / cells_per_eps as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FattenSection {
    pub hamiltonian: Hamiltonian2DSpec,
    pub eps_list: Vec<f64>,
    pub h2: H2Spacing,
}

impl FattenSection {
    /// `(eps, h2)` pairs in file order.
    pub fn grids(&self) -> Vec<(f64, f64)> {
        self.eps_list.iter().map(|&e| (e, self.h2.at(e))).collect()
    }
}

/// A validated problem file together with the objects built from it.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub junction: JunctionProblem,
    pub fatten: Option<Hamiltonian2D>,
}

impl ProblemFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem files serialize");
        s.push('\n');
        s
    }

    /// Cross-field validation; builds and probes every Hamiltonian.
    pub fn build(&self) -> CliResult<Problem> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.k == 0 {
            return Err(CliError::invalid("K", "must be at least 1"));
        }
        if self.k != self.edges.len() {
            return Err(CliError::invalid(
                "K",
                format!("K = {} but {} edges are listed", self.k, self.edges.len()),
            ));
        }
        let mut specs = Vec::with_capacity(self.k);
        let mut hams = Vec::with_capacity(self.k);
        for (i, e) in self.edges.iter().enumerate() {
            let spec = EdgeSpec::new(e.length, e.n_cells, e.far_bc).map_err(|err| CliError::invalid(format!("edges[{i}]"), err))?;
            if let Some(NodeBc::Dirichlet { value }) = e.node_bc {
                if !value.is_finite() {
                    return Err(CliError::invalid(format!("edges[{i}].node_bc"), "value must be finite"));
                }
            }
            let h = e
                .hamiltonian
                .build()
                .map_err(|err| CliError::invalid(format!("edges[{i}].hamiltonian"), err))?;
            specs.push(spec);
            hams.push(h);
        }
        let junction =
            JunctionProblem::new(specs, hams, self.junction).map_err(|err| CliError::invalid("junction", err))?;
        if let Some(v) = &self.viscous {
            validate_sweep(&junction, &v.eps_list).map_err(|err| CliError::invalid("viscous.eps_list", sweep_reason(err)))?;
        }
        let fatten = match &self.fatten {
            None => None,
            Some(f) => Some(self.build_fatten(f)?),
        };
        Ok(Problem {
            file: self.clone(),
            junction,
            fatten,
        })
    }

    fn build_fatten(&self, f: &FattenSection) -> CliResult<Hamiltonian2D> {
        if self.k != 2 {
            return Err(CliError::invalid("fatten", "the fattened junction needs K = 2"));
        }
        if f.eps_list.is_empty() {
            return Err(CliError::invalid("fatten.eps_list", "must not be empty"));
        }
        if f.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(CliError::invalid("fatten.eps_list", "entries must be positive"));
        }
        if f.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CliError::invalid("fatten.eps_list", "eps_list must decrease"));
        }
        match f.h2 {
            H2Spacing::Fixed(h2) if !(h2 > 0.0 && h2.is_finite()) => {
                return Err(CliError::invalid("fatten.h2", "must be positive"));
            }
            H2Spacing::PerEps { cells_per_eps: 0 } => {
                return Err(CliError::invalid("fatten.h2.cells_per_eps", "must be positive"));
            }
            _ => {}
        }
        for (eps, h2) in f.grids() {
            hjj_core::fatten::build_fat_domain(self.edges[0].length, self.edges[1].length, eps, h2)
                .map_err(|err| CliError::invalid("fatten", format!("eps = {eps}: {err}")))?;
        }
        f.hamiltonian
            .build()
            .map_err(|err| CliError::invalid("fatten.hamiltonian", err))
    }
}

fn sweep_reason(err: hjj_core::Error) -> String {
    match err {
        hjj_core::Error::InvalidSweep(msg) => msg,
        other => other.to_string(),
    }
}

/// Parses and validates problem text; `origin` names it in parse errors.
pub fn parse_problem(text: &str, origin: &str) -> CliResult<Problem> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    file.build()
}

pub fn load_problem(path: &Path) -> CliResult<Problem> {
    let text = fs::read_to_string(path).map_err(|e| CliError::invalid("--problem", format!("{}: {e}", path.display())))?;
    parse_problem(&text, &path.display().to_string())
}

pub fn write_problem(path: &Path, file: &ProblemFile) -> CliResult<()> {
    write_atomic(path, file.to_json().as_bytes())
}
