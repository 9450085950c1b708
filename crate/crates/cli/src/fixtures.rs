//! Builtin junction problems used by `verify` and the acceptance suite.

use hjj_core::hamiltonian::make_builtin;
use hjj_core::{EdgeSpec, FarBc, JunctionCondition, JunctionProblem, Result};

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub problem: JunctionProblem,
}

type EdgeDef = (&'static str, f64, f64, FarBc);

fn build(defs: &[EdgeDef], n_cells: usize, condition: JunctionCondition) -> Result<JunctionProblem> {
    let mut edges = Vec::with_capacity(defs.len());
    let mut hams = Vec::with_capacity(defs.len());
    for &(family, b, c, far) in defs {
        edges.push(EdgeSpec::new(1.0, n_cells, far)?);
        hams.push(make_builtin(family, &[b, c])?);
    }
    JunctionProblem::new(edges, hams, condition)
}

const PINNED: FarBc = FarBc::Dirichlet { value: 0.0 };
const FREE: FarBc = FarBc::Neumann { slope: 0.0 };
const SC: FarBc = FarBc::StateConstraint;

const JUNCTIONS: [(&str, &[EdgeDef]); 5] = [
    ("abs_pair", &[("abs_shift", 0.0, 1.0, PINNED), ("abs_shift", 0.0, 2.0, PINNED)]),
    (
        "abs_triple",
        &[
            ("abs_shift", 0.5, 1.0, PINNED),
            ("abs_shift", -0.5, 1.5, SC),
            ("abs_shift", 0.0, 1.0, FREE),
        ],
    ),
    ("quadratic_pair", &[("quadratic", 0.0, 1.0, PINNED), ("quadratic", 0.5, 1.0, FREE)]),
    ("double_well_abs", &[("double_well", 0.0, 3.0, PINNED), ("abs_shift", 0.0, 3.0, FREE)]),
    (
        "double_well_quadratic",
        &[("double_well", 0.5, 3.0, PINNED), ("quadratic", -0.5, 4.0, FREE)],
    ),
];

/// State-constraint junctions mixing the builtin families, every edge of
/// unit length with `n_cells` cells.
pub fn junction_fixtures(n_cells: usize) -> Result<Vec<Fixture>> {
    JUNCTIONS
        .iter()
        .map(|&(name, defs)| {
            Ok(Fixture {
                name,
                problem: build(defs, n_cells, JunctionCondition::StateConstraint)?,
            })
        })
        .collect()
}

const FLUX: [(&str, &[EdgeDef], f64); 4] = [
    ("quadratic_pair_A0", &[("quadratic", 0.0, 1.0, FREE), ("quadratic", 0.5, 1.0, PINNED)], 0.0),
    ("quadratic_pair_A-0.5", &[("quadratic", 0.0, 1.0, FREE), ("quadratic", 0.5, 1.0, PINNED)], -0.5),
    ("abs_pair_A0.5", &[("abs_shift", 0.0, 1.0, PINNED), ("abs_shift", 0.0, 2.0, FREE)], 0.5),
    (
        "abs_triple_A-0.25",
        &[
            ("abs_shift", 0.5, 1.0, FREE),
            ("abs_shift", -0.5, 1.5, SC),
            ("quadratic", 0.0, 1.0, PINNED),
        ],
        -0.25,
    ),
];

/// Flux-limited junctions over quasiconvex families.
pub fn flux_limited_fixtures(n_cells: usize) -> Result<Vec<Fixture>> {
    FLUX.iter()
        .map(|&(name, defs, a)| {
            Ok(Fixture {
                name,
                problem: build(defs, n_cells, JunctionCondition::FluxLimited { a })?,
            })
        })
        .collect()
}

/// `H_i = |p| - 1` on `k` unit edges.
pub fn abs_star(k: usize, n_cells: usize, far: FarBc) -> Result<JunctionProblem> {
    let defs: Vec<EdgeDef> = (0..k).map(|_| ("abs_shift", 0.0, 1.0, far)).collect();
    build(&defs, n_cells, JunctionCondition::StateConstraint)
}

/// `H_i = (p - 1)^2 - 1` on `k` unit edges.
pub fn shifted_quadratic_star(k: usize, n_cells: usize, far: FarBc) -> Result<JunctionProblem> {
    let defs: Vec<EdgeDef> = (0..k).map(|_| ("quadratic", 1.0, 1.0, far)).collect();
    build(&defs, n_cells, JunctionCondition::StateConstraint)
}
