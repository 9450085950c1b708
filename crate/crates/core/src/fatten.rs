//! Two-edge junction thickened to a planar tube: the L-shaped union of
//! `[-a1, e/2] x [-e/2, e/2]` and `[-e/2, e/2] x [-a2, e/2]`, the state
//! constraint problem `u + H(Du, x) = 0` on it, and traces back onto the
//! axes for comparison with the one-dimensional junction built from the
//! reduced Hamiltonians.
//!
//! The grid is node-aligned: both axes are gridlines, so traces are read off
//! without interpolation.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::{node_slope, EdgeScheme, EdgeSpec, FarBc, GridFunction1D, Role, SlopeOrder, SolveReport, SolverParams};
use crate::error::{Error, Result};
use crate::hamiltonian::{reduce_2d, Axis, Hamiltonian, Hamiltonian2D};
use crate::junction::{solve_junction_direct, JunctionCondition, JunctionProblem};
use crate::numerics::sampled_min;

/// Samples per direction for the boundary minimizations.
const BOUNDARY_SAMPLES: usize = 24;
/// Resolution of the reduced Hamiltonians built by [`fattening_study`].
pub const REDUCTION_RESOLUTION: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Both arms.
    LShape,
    /// Only the first arm, `[-a1, 0] x [-e/2, e/2]`.
    Rectangle,
}

const W: usize = 0;
const E: usize = 1;
const S: usize = 2;
const N: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct FatDomain {
    shape: Shape,
    a1: f64,
    a2: f64,
    epsilon: f64,
    h2: f64,
    /// Half-width of the tube in cells.
    half: usize,
    /// Grid indices of the origin.
    origin: (usize, usize),
    /// Node counts minus one along each direction.
    extent: (usize, usize),
    index: Vec<Option<usize>>,
    cells: Vec<(usize, usize)>,
    /// Neighbour cells in the order W, E, S, N.
    neighbours: Vec<[Option<usize>; 4]>,
}

fn cells_in(len: f64, h: f64, what: &str) -> Result<usize> {
    let r = len / h;
    let k = r.round();
    if (r - k).abs() > 1e-9 * r.max(1.0) || k < 1.0 {
        return Err(Error::InvalidDomain(format!(
            "{what} = {len} is not a multiple of h2 = {h}"
        )));
    }
    Ok(k as usize)
}

/// L-shaped tube of width `epsilon` around `[-a1, 0] x {0}` and
/// `{0} x [-a2, 0]`.
pub fn build_fat_domain(a1: f64, a2: f64, epsilon: f64, h2: f64) -> Result<FatDomain> {
    check_sizes(a1.min(a2), epsilon, h2)?;
    FatDomain::build(Shape::LShape, a1, a2, epsilon, h2)
}

/// Single-arm rectangle `[-a, 0] x [-epsilon/2, epsilon/2]`.
pub fn build_fat_rectangle(a: f64, epsilon: f64, h2: f64) -> Result<FatDomain> {
    check_sizes(a, epsilon, h2)?;
    FatDomain::build(Shape::Rectangle, a, 0.0, epsilon, h2)
}

fn check_sizes(a_min: f64, epsilon: f64, h2: f64) -> Result<()> {
    if !(epsilon > 0.0 && h2 > 0.0 && a_min > 0.0) {
        return Err(Error::InvalidDomain("lengths, epsilon and h2 must be positive".into()));
    }
    if h2 > epsilon / 4.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidDomain(format!(
            "h2 = {h2} leaves fewer than 4 cells across a tube of width {epsilon}"
        )));
    }
    if !(epsilon < a_min / 2.0) {
        return Err(Error::InvalidDomain(format!(
            "epsilon = {epsilon} must be below half the shortest arm ({a_min})"
        )));
    }
    Ok(())
}

impl FatDomain {
    fn build(shape: Shape, a1: f64, a2: f64, epsilon: f64, h2: f64) -> Result<Self> {
        let half = cells_in(epsilon / 2.0, h2, "epsilon / 2")?;
        let o1 = cells_in(a1, h2, "a1")?;
        let (o2, extent) = match shape {
            Shape::LShape => {
                let o2 = cells_in(a2, h2, "a2")?;
                (o2, (o1 + half, o2 + half))
            }
            Shape::Rectangle => (half, (o1, 2 * half)),
        };
        let inside = |i: usize, j: usize| match shape {
            Shape::Rectangle => true,
            Shape::LShape => j.abs_diff(o2) <= half || i.abs_diff(o1) <= half,
        };
        let (n1, n2) = extent;
        let mut index = vec![None; (n1 + 1) * (n2 + 1)];
        let mut cells = Vec::new();
        for j in 0..=n2 {
            for i in 0..=n1 {
                if inside(i, j) {
                    index[j * (n1 + 1) + i] = Some(cells.len());
                    cells.push((i, j));
                }
            }
        }
        let at = |i: isize, j: isize| -> Option<usize> {
            if i < 0 || j < 0 || i as usize > n1 || j as usize > n2 {
                None
            } else {
                index[j as usize * (n1 + 1) + i as usize]
            }
        };
        let neighbours = cells
            .iter()
            .map(|&(i, j)| {
                let (i, j) = (i as isize, j as isize);
                [at(i - 1, j), at(i + 1, j), at(i, j - 1), at(i, j + 1)]
            })
            .collect();
        Ok(FatDomain {
            shape,
            a1,
            a2,
            epsilon,
            h2,
            half,
            origin: (o1, o2),
            extent,
            index,
            cells,
            neighbours,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    pub fn arm_lengths(&self) -> (f64, f64) {
        (self.a1, self.a2)
    }

    /// Grid nodes across the tube, `2 * half + 1`.
    pub fn nodes_across(&self) -> usize {
        2 * self.half + 1
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn position(&self, cell: usize) -> (f64, f64) {
        let (i, j) = self.cells[cell];
        (
            (i as f64 - self.origin.0 as f64) * self.h2,
            (j as f64 - self.origin.1 as f64) * self.h2,
        )
    }

    pub fn cell_at(&self, i: usize, j: usize) -> Option<usize> {
        if i > self.extent.0 || j > self.extent.1 {
            return None;
        }
        self.index[j * (self.extent.0 + 1) + i]
    }

    /// Cells with at least one missing neighbour.
    pub fn boundary_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&c| self.neighbours[c].iter().any(Option::is_none))
    }

    pub fn is_connected(&self) -> bool {
        if self.cells.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(c) = stack.pop() {
            for n in self.neighbours[c].iter().flatten() {
                if !seen[*n] {
                    seen[*n] = true;
                    count += 1;
                    stack.push(*n);
                }
            }
        }
        count == self.len()
    }

    /// Cells on the gridline of `axis`, from the far end to the origin.
    fn axis_cells(&self, axis: Axis) -> Result<Vec<usize>> {
        let (o1, o2) = self.origin;
        match (axis, self.shape) {
            (Axis::First, _) => (0..=o1).map(|i| self.cell_at(i, o2)).collect(),
            (Axis::Second, Shape::LShape) => (0..=o2).map(|j| self.cell_at(o1, j)).collect(),
            (Axis::Second, Shape::Rectangle) => None,
        }
        .ok_or_else(|| Error::InvalidDomain(format!("no arm along axis {}", axis.index())))
    }
}

#[derive(Debug, Clone)]
pub struct GridFunction2D {
    pub values: Vec<f64>,
    domain: Arc<FatDomain>,
}

impl GridFunction2D {
    pub fn constant(domain: Arc<FatDomain>, c: f64) -> Self {
        GridFunction2D {
            values: vec![c; domain.len()],
            domain,
        }
    }

    pub fn domain(&self) -> &FatDomain {
        &self.domain
    }

    /// Largest difference quotient between neighbouring cells.
    pub fn lipschitz(&self) -> f64 {
        let h = self.domain.h2;
        self.domain
            .neighbours
            .iter()
            .enumerate()
            .flat_map(|(c, nb)| nb.iter().flatten().map(move |&n| (c, n)))
            .map(|(c, n)| (self.values[c] - self.values[n]).abs() / h)
            .fold(0.0, f64::max)
    }
}

/// Slope constraint in one direction at one cell.
#[derive(Debug, Clone, Copy)]
enum Slope {
    /// Centred average, both neighbours present.
    Free(f64),
    /// Only the backward neighbour: test slopes `q >= p`.
    AtLeast(f64),
    /// Only the forward neighbour: test slopes `q <= p`.
    AtMost(f64),
}

/// The monotone scheme on a tube.
#[derive(Debug, Clone)]
pub struct Scheme2D {
    h: Hamiltonian2D,
    domain: Arc<FatDomain>,
    theta: (f64, f64),
    bound: f64,
}

impl Scheme2D {
    pub fn new(h: &Hamiltonian2D, domain: Arc<FatDomain>) -> Self {
        let bound = h.coercivity_bound();
        let (a1, a2) = (domain.a1, domain.a2);
        let positions = [(0.0, 0.0), (-a1, 0.0), (-0.5 * a1, 0.0), (0.0, -a2), (0.0, -0.5 * a2)];
        let theta = h.slope_lipschitz(2.0 * bound, &positions);
        Scheme2D {
            h: h.clone(),
            domain,
            theta,
            bound,
        }
    }

    pub fn theta(&self) -> (f64, f64) {
        self.theta
    }

    pub fn explicit_dt(&self, cfl: f64) -> f64 {
        let h = self.domain.h2;
        cfl * h / (self.theta.0 + self.theta.1 + h)
    }

    fn range(&self, s: Slope) -> (f64, f64) {
        match s {
            Slope::Free(p) => (p, p),
            Slope::AtLeast(p) => (p, p.max(self.bound)),
            Slope::AtMost(p) => (p.min(-self.bound), p),
        }
    }

    fn direction(&self, u: &[f64], c: usize, back: Option<usize>, fwd: Option<usize>, theta: f64) -> (Slope, f64) {
        let h = self.domain.h2;
        let uc = u[c];
        match (back, fwd) {
            (Some(b), Some(f)) => (
                Slope::Free((u[f] - u[b]) / (2.0 * h)),
                0.5 * theta * (u[f] - 2.0 * uc + u[b]) / h,
            ),
            (Some(b), None) => (Slope::AtLeast((uc - u[b]) / h), 0.0),
            (None, Some(f)) => (Slope::AtMost((u[f] - uc) / h), 0.0),
            (None, None) => unreachable!("tube is at least four cells wide"),
        }
    }

    /// Residual at one cell.
    pub fn residual(&self, u: &[f64], c: usize) -> f64 {
        let nb = &self.domain.neighbours[c];
        let (x1, x2) = self.domain.position(c);
        let (s1, v1) = self.direction(u, c, nb[W], nb[E], self.theta.0);
        let (s2, v2) = self.direction(u, c, nb[S], nb[N], self.theta.1);
        let (lo1, hi1) = self.range(s1);
        let (lo2, hi2) = self.range(s2);
        let hval = |q1: f64, q2: f64| self.h.value(q1, q2, x1, x2);
        let m = match (lo1 == hi1, lo2 == hi2) {
            (true, true) => hval(lo1, lo2),
            (false, true) => sampled_min(|q| hval(q, lo2), lo1, hi1, BOUNDARY_SAMPLES).1,
            (true, false) => sampled_min(|q| hval(lo1, q), lo2, hi2, BOUNDARY_SAMPLES).1,
            (false, false) => {
                sampled_min(
                    |q1| sampled_min(|q2| hval(q1, q2), lo2, hi2, BOUNDARY_SAMPLES).1,
                    lo1,
                    hi1,
                    BOUNDARY_SAMPLES,
                )
                .1
            }
        };
        u[c] + m - v1 - v2
    }

    pub fn residuals(&self, u: &GridFunction2D) -> Vec<f64> {
        (0..self.domain.len())
            .into_par_iter()
            .map(|c| self.residual(&u.values, c))
            .collect()
    }

    pub fn explicit_step(&self, u: &GridFunction2D, dt: f64) -> GridFunction2D {
        let r = self.residuals(u);
        GridFunction2D {
            values: u.values.iter().zip(&r).map(|(v, d)| v - dt * d).collect(),
            domain: u.domain.clone(),
        }
    }

    /// Constant level that is an interior sub-solution at the sampled positions.
    pub fn subsolution_level(&self) -> f64 {
        -(0..self.domain.len())
            .map(|c| {
                let (x1, x2) = self.domain.position(c);
                self.h.value(0.0, 0.0, x1, x2)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Explicit pseudo-time iteration from `init`.
    pub fn relax(&self, init: GridFunction2D, params: &SolverParams) -> (GridFunction2D, SolveReport) {
        let start = Instant::now();
        let dt = self.explicit_dt(params.cfl);
        let mut u = init;
        let mut iterations = 0;
        let mut res;
        loop {
            let r = self.residuals(&u);
            res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !res.is_finite() || res <= params.tol || iterations >= params.max_iters {
                break;
            }
            for (v, d) in u.values.iter_mut().zip(&r) {
                *v -= dt * d;
            }
            iterations += 1;
        }
        let report = SolveReport {
            iterations,
            final_residual: res,
            dt,
            converged: res <= params.tol,
            wall_time: start.elapsed().as_secs_f64(),
            dirichlet_not_attained: false,
        };
        (u, report)
    }
}

/// Solves the state-constraint problem on the tube by explicit pseudo-time
/// relaxation from a constant sub-solution; `params.relaxation` is ignored.
pub fn solve_fat_state_constraint(
    h: &Hamiltonian2D,
    domain: &FatDomain,
    params: &SolverParams,
) -> Result<(GridFunction2D, SolveReport)> {
    params.validate()?;
    let domain = Arc::new(domain.clone());
    let scheme = Scheme2D::new(h, domain.clone());
    let init = GridFunction2D::constant(domain, scheme.subsolution_level());
    Ok(scheme.relax(init, params))
}

/// Values on the gridline of `axis`, far end first; the last entry sits at
/// the origin. The returned edge carries a state-constraint far end.
pub fn extract_axis_trace(u: &GridFunction2D, axis: Axis) -> Result<GridFunction1D> {
    let dom = &u.domain;
    let cells = dom.axis_cells(axis)?;
    let length = match axis {
        Axis::First => dom.a1,
        Axis::Second => dom.a2,
    };
    let edge = EdgeSpec::new(length, cells.len() - 1, FarBc::StateConstraint)?;
    GridFunction1D::new(cells.iter().map(|&c| u.values[c]).collect(), edge, Role::Generic)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatteningRecord {
    pub epsilon: f64,
    pub h2: f64,
    pub node_value: f64,
    pub reference_node_value: f64,
    /// Max-norm trace error against the one-dimensional solution, per arm.
    pub trace_error: [f64; 2],
    /// Reduced-equation residual on each trace away from the junction square.
    pub reduced_residual: [f64; 2],
    /// `u(0) + H(s1, s2, 0)` with one-sided trace slopes at the origin.
    pub junction_supersolution: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatteningReport {
    pub hamiltonian: String,
    pub records: Vec<FatteningRecord>,
}

impl FatteningReport {
    /// Worst trace error per record.
    pub fn errors(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.trace_error[0].max(r.trace_error[1]))
            .collect()
    }
}

fn reduced_residual(trace: &GridFunction1D, h: &Hamiltonian, epsilon: f64) -> Result<f64> {
    let scheme = EdgeScheme::new(h, trace.edge)?;
    let n = trace.edge.n_cells;
    let v = &trace.values;
    Ok((1..n)
        .filter(|&j| trace.edge.position(j) <= -epsilon)
        .map(|j| scheme.interior_residual(j, v[j - 1], v[j], v[j + 1]).abs())
        .fold(0.0, f64::max))
}

/// For every `eps` (decreasing): solve on the tube with `h2 = eps /
/// cells_per_eps`, extract both traces, and compare them with the
/// state-constraint junction solution of the reduced Hamiltonians on the
/// matching 1-D grids. The epsilon values are solved in parallel.
pub fn fattening_study(
    h: &Hamiltonian2D,
    arms: (f64, f64),
    eps_list: &[f64],
    cells_per_eps: usize,
    params: &SolverParams,
) -> Result<FatteningReport> {
    if cells_per_eps == 0 {
        return Err(Error::Precondition("cells_per_eps must be positive".into()));
    }
    let grids: Vec<(f64, f64)> = eps_list
        .iter()
        .map(|&eps| (eps, eps / cells_per_eps as f64))
        .collect();
    fattening_study_on(h, arms, &grids, params)
}

/// [`fattening_study`] on explicit `(eps, h2)` pairs, `eps` decreasing.
pub fn fattening_study_on(
    h: &Hamiltonian2D,
    arms: (f64, f64),
    grids: &[(f64, f64)],
    params: &SolverParams,
) -> Result<FatteningReport> {
    if grids.is_empty() || grids.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(Error::InvalidSweep("eps_list must decrease".into()));
    }
    let domains = grids
        .iter()
        .map(|&(eps, h2)| build_fat_domain(arms.0, arms.1, eps, h2))
        .collect::<Result<Vec<_>>>()?;
    let reduced = [
        reduce_2d(h, Axis::First, REDUCTION_RESOLUTION)?,
        reduce_2d(h, Axis::Second, REDUCTION_RESOLUTION)?,
    ];
    let records = domains
        .par_iter()
        .map(|dom| study_one(h, &reduced, dom, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(FatteningReport {
        hamiltonian: h.source().to_string(),
        records,
    })
}

fn study_one(
    h: &Hamiltonian2D,
    reduced: &[Hamiltonian; 2],
    dom: &FatDomain,
    params: &SolverParams,
) -> Result<FatteningRecord> {
    let (u, rep) = solve_fat_state_constraint(h, dom, params)?;
    let traces = [extract_axis_trace(&u, Axis::First)?, extract_axis_trace(&u, Axis::Second)?];
    let problem = JunctionProblem::new(
        traces.iter().map(|t| t.edge).collect(),
        reduced.to_vec(),
        JunctionCondition::StateConstraint,
    )?;
    let (reference, _) = solve_junction_direct(&problem, &SolverParams::default())?;
    let mut trace_error = [0.0; 2];
    let mut reduced_res = [0.0; 2];
    for k in 0..2 {
        trace_error[k] = traces[k].max_distance(reference.edge(k))?;
        reduced_res[k] = reduced_residual(&traces[k], &problem.hamiltonians()[k], dom.epsilon)?;
    }
    let node_value = traces[0].node_value();
    let s1 = node_slope(&traces[0], SlopeOrder::Second);
    let s2 = node_slope(&traces[1], SlopeOrder::Second);
    Ok(FatteningRecord {
        epsilon: dom.epsilon,
        h2: dom.h2,
        node_value,
        reference_node_value: reference.node_value(),
        trace_error,
        reduced_residual: reduced_res,
        junction_supersolution: node_value + h.value(s1, s2, 0.0, 0.0),
        iterations: rep.iterations,
        converged: rep.converged,
        wall_time: rep.wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge::{solve_edge, NodeBc};
    use crate::hamiltonian::parse_expression;

    #[test]
    fn domain_examples() {
        let d = build_fat_domain(1.0, 1.0, 0.2, 0.05).unwrap();
        assert_eq!(d.nodes_across(), 5);
        assert!(d.is_connected());
        assert_eq!(d.shape(), Shape::LShape);
        assert!(matches!(build_fat_domain(1.0, 1.0, 0.2, 0.1), Err(Error::InvalidDomain(_))));
        assert!(matches!(build_fat_domain(1.0, 1.0, 0.6, 0.05), Err(Error::InvalidDomain(_))));
        let d = build_fat_domain(1.0, 2.0, 0.2, 0.05).unwrap();
        assert_eq!(d.arm_lengths(), (1.0, 2.0));
        // both axis gridlines lie inside, ending at the origin
        for axis in [Axis::First, Axis::Second] {
            let cells = d.axis_cells(axis).unwrap();
            let (x1, x2) = d.position(*cells.last().unwrap());
            assert_eq!((x1, x2), (0.0, 0.0));
            let far = d.position(cells[0]);
            assert!(far == (-1.0, 0.0) || far == (0.0, -2.0));
        }
    }

    #[test]
    fn boundary_cells_sit_on_the_tube_walls() {
        let d = build_fat_domain(1.0, 1.0, 0.2, 0.05).unwrap();
        for c in d.boundary_cells() {
            let (x1, x2) = d.position(c);
            let on_wall = (x1.abs() - 0.1).abs() < 1e-12
                || (x2.abs() - 0.1).abs() < 1e-12
                || (x1 + 1.0).abs() < 1e-12
                || (x2 + 1.0).abs() < 1e-12;
            assert!(on_wall, "({x1}, {x2})");
        }
    }

    #[test]
    fn rectangle_trace_matches_one_dimensional_solution() {
        let params = SolverParams::default();
        let h2 = Hamiltonian2D::parse("max(abs(p1) - 1 + 0.5*x1, abs(p2) - 5)").unwrap();
        let dom = build_fat_rectangle(1.0, 0.2, 0.025).unwrap();
        let (u, rep) = solve_fat_state_constraint(&h2, &dom, &params).unwrap();
        assert!(rep.converged);
        let trace = extract_axis_trace(&u, Axis::First).unwrap();
        let h1 = parse_expression("abs(p) - 1 + 0.5*x").unwrap();
        let (ref1, _) = solve_edge(&h1, &trace.edge, NodeBc::StateConstraint, &params).unwrap();
        assert!(trace.max_distance(&ref1).unwrap() < 2e-2);
        // constant across the tube
        let (o1, o2) = dom.origin;
        for i in 0..=o1 {
            let row: Vec<f64> = (0..=2 * dom.half).map(|j| u.values[dom.cell_at(i, j).unwrap()]).collect();
            assert!(row.iter().all(|v| (v - row[o2]).abs() < 2e-2));
        }
        assert!(extract_axis_trace(&u, Axis::Second).is_err());
    }

    #[test]
    fn symmetric_operator_gives_equal_traces() {
        let h2 = Hamiltonian2D::parse("max(abs(p1) - 1 + 0.3*x1, abs(p2) - 1 + 0.3*x2)").unwrap();
        let dom = build_fat_domain(1.0, 1.0, 0.2, 0.05).unwrap();
        let (u, rep) = solve_fat_state_constraint(&h2, &dom, &SolverParams::default()).unwrap();
        assert!(rep.converged);
        let a = extract_axis_trace(&u, Axis::First).unwrap();
        let b = extract_axis_trace(&u, Axis::Second).unwrap();
        assert!(a.max_distance(&b).unwrap() < 1e-6);
    }

    #[test]
    fn relaxation_from_below_is_monotone() {
        let h2 = Hamiltonian2D::parse("max(abs(p1) - 1, abs(p2) - 2)").unwrap();
        let dom = Arc::new(build_fat_domain(1.0, 1.0, 0.2, 0.05).unwrap());
        let scheme = Scheme2D::new(&h2, dom.clone());
        let dt = scheme.explicit_dt(0.9);
        let mut u = GridFunction2D::constant(dom, -3.0);
        for _ in 0..200 {
            let next = scheme.explicit_step(&u, dt);
            assert!(next.values.iter().zip(&u.values).all(|(a, b)| a >= b));
            u = next;
        }
    }

    #[test]
    fn max_form_study_at_one_width() {
        let h2 = Hamiltonian2D::parse("max(abs(p1) - 1, abs(p2) - 2)").unwrap();
        let rep = fattening_study(&h2, (1.0, 1.0), &[0.2], 8, &SolverParams::default()).unwrap();
        let r = &rep.records[0];
        assert!(r.converged);
        assert!(r.trace_error[0] <= 0.1 && r.trace_error[1] <= 0.1, "{r:?}");
        assert!(r.junction_supersolution >= -5e-2);
    }
}
