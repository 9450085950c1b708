//! Problems shared by the solver benchmarks.

use std::sync::Arc;

use hjj_core::fatten::{build_fat_domain, FatDomain};
use hjj_core::hamiltonian::make_builtin;
use hjj_core::{EdgeSpec, FarBc, Hamiltonian, Hamiltonian2D, JunctionCondition, JunctionProblem, Result};

pub fn abs_edge(n_cells: usize) -> Result<(Hamiltonian, EdgeSpec)> {
    Ok((
        make_builtin("abs_shift", &[0.0, 1.0])?,
        EdgeSpec::new(1.0, n_cells, FarBc::Dirichlet { value: 0.0 })?,
    ))
}

/// Three unit edges mixing the builtin families.
pub fn mixed_triple(n_cells: usize) -> Result<JunctionProblem> {
    let edges = vec![
        EdgeSpec::new(1.0, n_cells, FarBc::Dirichlet { value: 0.0 })?,
        EdgeSpec::new(1.0, n_cells, FarBc::StateConstraint)?,
        EdgeSpec::new(1.0, n_cells, FarBc::Neumann { slope: 0.0 })?,
    ];
    let hams = vec![
        make_builtin("abs_shift", &[0.5, 1.0])?,
        make_builtin("quadratic", &[0.0, 1.0])?,
        make_builtin("double_well", &[0.0, 3.0])?,
    ];
    JunctionProblem::new(edges, hams, JunctionCondition::StateConstraint)
}

pub fn abs_pair(n_cells: usize) -> Result<JunctionProblem> {
    let edges = vec![EdgeSpec::new(1.0, n_cells, FarBc::Dirichlet { value: 0.0 })?; 2];
    let hams = vec![make_builtin("abs_shift", &[0.0, 1.0])?; 2];
    JunctionProblem::new(edges, hams, JunctionCondition::StateConstraint)
}

pub fn fat_cross(epsilon: f64, h2: f64) -> Result<(Hamiltonian2D, Arc<FatDomain>)> {
    let h = Hamiltonian2D::parse("max(abs(p1) - 1 + 0.5 * x1, abs(p2) - 2)")?;
    Ok((h, Arc::new(build_fat_domain(1.0, 1.0, epsilon, h2)?)))
}
