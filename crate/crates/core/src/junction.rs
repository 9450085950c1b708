//! K edges glued at a node: state-constraint and flux-limited junction
//! conditions, the constructive min-decomposition, and node diagnostics.
//!
//! Orientation: on every edge the coordinate increases toward the node, so
//! the slope seen from the node is `p_in = (u_0 - u_{n-1}) / h`. Admissible
//! test slopes at the node are `q >= p_in`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::{
    node_slope, one_sided_quotients, solve_edge, EdgeScheme, EdgeSpec, GridFunction1D, NodeBc,
    Relaxation, Role, SlopeOrder, SolveReport, SolverParams,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{make_flux_limiter, rightward_min_threshold, FluxLimiter, Hamiltonian};
use crate::numerics::{solve_bordered, Arm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JunctionCondition {
    StateConstraint,
    FluxLimited {
        #[serde(rename = "A")]
        a: f64,
    },
}

#[derive(Debug, Clone)]
pub struct JunctionProblem {
    edges: Vec<EdgeSpec>,
    hamiltonians: Vec<Hamiltonian>,
    condition: JunctionCondition,
}

impl JunctionProblem {
    /// Validates the edges and re-probes every Hamiltonian over its edge at
    /// the largest of the per-edge coercivity levels.
    pub fn new(
        edges: Vec<EdgeSpec>,
        hamiltonians: Vec<Hamiltonian>,
        condition: JunctionCondition,
    ) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidProblem("a junction needs at least one edge".into()));
        }
        if edges.len() != hamiltonians.len() {
            return Err(Error::InvalidProblem(format!(
                "{} edges but {} Hamiltonians",
                edges.len(),
                hamiltonians.len()
            )));
        }
        for e in &edges {
            e.validate()?;
        }
        if let JunctionCondition::FluxLimited { a } = condition {
            if !a.is_finite() {
                return Err(Error::InvalidProblem("flux limiter level A must be finite".into()));
            }
        }
        let hs = hamiltonians
            .into_iter()
            .zip(&edges)
            .map(|(h, e)| h.for_edge_length(e.length))
            .collect::<Result<Vec<_>>>()?;
        let level = hs.iter().map(Hamiltonian::coercivity_level).fold(0.0, f64::max);
        let hamiltonians = hs
            .into_iter()
            .map(|h| h.at_level(level))
            .collect::<Result<Vec<_>>>()?;
        let problem = JunctionProblem {
            edges,
            hamiltonians,
            condition,
        };
        if let JunctionCondition::FluxLimited { a } = condition {
            make_flux_limiter(&problem.hamiltonians, a)?;
        }
        Ok(problem)
    }

    pub fn k(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn hamiltonians(&self) -> &[Hamiltonian] {
        &self.hamiltonians
    }

    pub fn condition(&self) -> JunctionCondition {
        self.condition
    }

    pub fn with_condition(&self, condition: JunctionCondition) -> Result<Self> {
        Self::new(self.edges.clone(), self.hamiltonians.clone(), condition)
    }

    /// Same Hamiltonians and far conditions on grids with `n_cells` each.
    pub fn refined(&self, n_cells: usize) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeSpec::new(e.length, n_cells, e.far_bc))
            .collect::<Result<Vec<_>>>()?;
        Ok(JunctionProblem {
            edges,
            hamiltonians: self.hamiltonians.clone(),
            condition: self.condition,
        })
    }

    /// Largest grid spacing over the edges.
    pub fn max_spacing(&self) -> f64 {
        self.edges.iter().map(EdgeSpec::spacing).fold(0.0, f64::max)
    }
}

/// Per-edge grid functions sharing one node value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionGridFunction {
    per_edge: Vec<GridFunction1D>,
    node_value: f64,
}

impl JunctionGridFunction {
    /// Fails unless every edge ends at the same node value.
    pub fn new(per_edge: Vec<GridFunction1D>) -> Result<Self> {
        let node_value = per_edge
            .first()
            .ok_or_else(|| Error::InvalidProblem("no edges".into()))?
            .node_value();
        if per_edge.iter().any(|g| g.node_value() != node_value) {
            return Err(Error::GridMismatch("edges disagree at the node".into()));
        }
        Ok(JunctionGridFunction {
            per_edge,
            node_value,
        })
    }

    /// The constant `c` on the problem grids.
    pub fn constant(problem: &JunctionProblem, c: f64) -> Self {
        let per_edge = problem
            .edges
            .iter()
            .map(|&e| GridFunction1D::from_fn(e, Role::Generic, |_| c))
            .collect();
        JunctionGridFunction {
            per_edge,
            node_value: c,
        }
    }

    pub fn per_edge(&self) -> &[GridFunction1D] {
        &self.per_edge
    }

    pub fn edge(&self, i: usize) -> &GridFunction1D {
        &self.per_edge[i]
    }

    pub fn node_value(&self) -> f64 {
        self.node_value
    }

    pub fn shifted(&self, delta: f64) -> Self {
        JunctionGridFunction {
            per_edge: self.per_edge.iter().map(|g| g.shifted(delta)).collect(),
            node_value: self.node_value + delta,
        }
    }

    /// Max-norm distance over all edges.
    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        check_same_grid(self, other)?;
        self.per_edge
            .iter()
            .zip(&other.per_edge)
            .map(|(a, b)| a.max_distance(b))
            .try_fold(0.0, |m, d| d.map(|d| f64::max(m, d)))
    }

    fn from_values(problem_edges: &[EdgeSpec], values: Vec<Vec<f64>>, role: Role) -> Self {
        let node_value = values[0][problem_edges[0].n_cells];
        let per_edge = values
            .into_iter()
            .zip(problem_edges)
            .map(|(v, &e)| GridFunction1D {
                values: v,
                edge: e,
                role,
            })
            .collect();
        JunctionGridFunction {
            per_edge,
            node_value,
        }
    }
}

fn check_same_grid(a: &JunctionGridFunction, b: &JunctionGridFunction) -> Result<()> {
    let same = a.per_edge.len() == b.per_edge.len()
        && a
            .per_edge
            .iter()
            .zip(&b.per_edge)
            .all(|(x, y)| x.edge.n_cells == y.edge.n_cells && x.edge.length == y.edge.length);
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch("junction grid functions live on different grids".into()))
    }
}

/// `max(v - u)` over all nodes.
pub fn compare_grid_functions(v: &JunctionGridFunction, u: &JunctionGridFunction) -> Result<f64> {
    check_same_grid(v, u)?;
    Ok(v.per_edge
        .iter()
        .zip(&u.per_edge)
        .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| x - y))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone)]
enum NodeRule {
    /// `u0 + max_i min_{q >= p_i} H_i(q, 0)`
    StateConstraint,
    /// `max(u0 - c, state-constraint residual)`
    Dirichlet(f64),
    /// `u0 + max(A, max_i G_i(-p_i))` with `G_i` the nonincreasing part of
    /// the reflected `H_i`, i.e. `H_i(max(p_i, p0_i), 0)`.
    FluxLimited(FluxLimiter),
}

/// Residuals of a junction grid function: rows `0..n_i` per edge (the node
/// row excluded) and the node residual.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionResidual {
    pub edges: Vec<Vec<f64>>,
    pub node: f64,
}

impl JunctionResidual {
    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.iter().flatten().copied().chain([self.node])
    }

    pub fn max_abs(&self) -> f64 {
        self.all().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.all().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.all().fold(f64::INFINITY, f64::min)
    }
}

/// The discrete operator of a junction problem.
#[derive(Debug, Clone)]
pub struct JunctionScheme {
    edges: Vec<EdgeScheme>,
    rule: NodeRule,
}

impl JunctionScheme {
    pub fn new(problem: &JunctionProblem) -> Result<Self> {
        let edges = problem
            .edges
            .iter()
            .zip(&problem.hamiltonians)
            .map(|(&e, h)| EdgeScheme::new(h, e))
            .collect::<Result<Vec<_>>>()?;
        let rule = match problem.condition {
            JunctionCondition::StateConstraint => NodeRule::StateConstraint,
            JunctionCondition::FluxLimited { a } => {
                let reflected: Vec<Hamiltonian> =
                    problem.hamiltonians.iter().map(Hamiltonian::reflected).collect();
                NodeRule::FluxLimited(make_flux_limiter(&reflected, a)?)
            }
        };
        Ok(JunctionScheme { edges, rule })
    }

    pub(crate) fn single(h: &Hamiltonian, edge: EdgeSpec, node_bc: NodeBc) -> Result<Self> {
        let rule = match node_bc {
            NodeBc::Dirichlet { value } if !value.is_finite() => {
                return Err(Error::Precondition("Dirichlet data must be finite".into()))
            }
            NodeBc::Dirichlet { value } => NodeRule::Dirichlet(value),
            NodeBc::StateConstraint => NodeRule::StateConstraint,
        };
        Ok(JunctionScheme {
            edges: vec![EdgeScheme::new(h, edge)?],
            rule,
        })
    }

    pub fn edges(&self) -> &[EdgeScheme] {
        &self.edges
    }

    /// Largest monotone explicit step over all edges.
    pub fn explicit_dt(&self, cfl: f64) -> f64 {
        self.edges
            .iter()
            .map(|e| e.max_dt(cfl))
            .fold(f64::INFINITY, f64::min)
    }

    /// Node term of edge `i` at inward slope `p`; nondecreasing in `p`.
    #[inline]
    fn node_term(&self, i: usize, p: f64) -> f64 {
        match &self.rule {
            NodeRule::FluxLimited(l) => l.envelopes()[i].value(-p, 0.0),
            _ => self.edges[i].node_envelope(p),
        }
    }

    fn node_floor(&self) -> f64 {
        match &self.rule {
            NodeRule::FluxLimited(l) => l.limiter(),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Node residual given the node value and each edge's last interior
    /// value. Nondecreasing in `u0`, nonincreasing in every `before[i]`.
    pub fn node_residual(&self, u0: f64, before: &[f64]) -> f64 {
        self.node_linearization(u0, before).0
    }

    /// Residual, derivative in `u0`, and `(edge, derivative in before[edge])`.
    fn node_linearization(&self, u0: f64, before: &[f64]) -> (f64, f64, Option<(usize, f64)>) {
        let mut best = (self.node_floor(), None);
        for (i, e) in self.edges.iter().enumerate() {
            let v = self.node_term(i, e.node_inward_slope(u0, before[i]));
            if v > best.0 {
                best = (v, Some(i));
            }
        }
        let sc = u0 + best.0;
        if let NodeRule::Dirichlet(c) = self.rule {
            if u0 - c >= sc {
                return (u0 - c, 1.0, None);
            }
        }
        match best.1 {
            None => (sc, 1.0, None),
            Some(i) => {
                let e = &self.edges[i];
                let h = e.spacing();
                let p = e.node_inward_slope(u0, before[i]);
                let d = 1e-7 * (1.0 + p.abs());
                let g = ((self.node_term(i, p + d) - self.node_term(i, p - d)) / (2.0 * d))
                    .clamp(0.0, e.theta());
                (sc, 1.0 + g / h, Some((i, -g / h)))
            }
        }
    }

    fn residual_of(&self, u: &[Vec<f64>]) -> JunctionResidual {
        let edges = self
            .edges
            .iter()
            .zip(u)
            .map(|(e, v)| {
                let mut r = vec![0.0; e.spec().n_cells];
                e.residuals(v, &mut r);
                r
            })
            .collect();
        let n0 = self.edges[0].spec().n_cells;
        let before: Vec<f64> = self
            .edges
            .iter()
            .zip(u)
            .map(|(e, v)| v[e.spec().n_cells - 1])
            .collect();
        JunctionResidual {
            edges,
            node: self.node_residual(u[0][n0], &before),
        }
    }

    pub fn residuals(&self, u: &JunctionGridFunction) -> Result<JunctionResidual> {
        self.check_shape(u)?;
        let values: Vec<Vec<f64>> = u.per_edge.iter().map(|g| g.values.clone()).collect();
        Ok(self.residual_of(&values))
    }

    /// One explicit pseudo-time step.
    pub fn explicit_step(&self, u: &JunctionGridFunction, dt: f64) -> Result<JunctionGridFunction> {
        let r = self.residuals(u)?;
        let mut out = u.clone();
        for (g, re) in out.per_edge.iter_mut().zip(&r.edges) {
            for (v, d) in g.values.iter_mut().zip(re) {
                *v -= dt * d;
            }
        }
        let node = u.node_value - dt * r.node;
        for g in &mut out.per_edge {
            let n = g.edge.n_cells;
            g.values[n] = node;
        }
        out.node_value = node;
        Ok(out)
    }

    fn check_shape(&self, u: &JunctionGridFunction) -> Result<()> {
        let ok = u.per_edge.len() == self.edges.len()
            && u
                .per_edge
                .iter()
                .zip(&self.edges)
                .all(|(g, e)| g.values.len() == e.spec().n_cells + 1);
        if ok {
            Ok(())
        } else {
            Err(Error::GridMismatch("grid function does not match the scheme".into()))
        }
    }

    /// Constant level below which the state is an interior sub-solution on
    /// every edge.
    pub(crate) fn subsolution_level(&self) -> f64 {
        self.edges
            .iter()
            .map(EdgeScheme::subsolution_level)
            .fold(f64::INFINITY, f64::min)
    }

    fn initial_values(&self) -> Vec<Vec<f64>> {
        let c0 = self.subsolution_level();
        let node = match self.rule {
            NodeRule::Dirichlet(c) => c,
            _ => c0,
        };
        self.edges
            .iter()
            .map(|e| e.initial_guess(Some(node), c0))
            .collect()
    }

    /// Drives the residual below `params.tol`. `u` holds one vector per edge
    /// whose last entry is the (shared) node value.
    pub(crate) fn relax(&self, mut u: Vec<Vec<f64>>, params: &SolverParams) -> (Vec<Vec<f64>>, SolveReport) {
        let start = Instant::now();
        let dt0 = self.explicit_dt(params.cfl);
        let mut dt = dt0;
        let mut r = self.residual_of(&u);
        let mut res = r.max_abs();
        let mut iterations = 0;
        while iterations < params.max_iters && res.is_finite() && res > params.tol {
            iterations += 1;
            match params.relaxation {
                Relaxation::Explicit => {
                    self.apply_explicit(&mut u, &r, dt0);
                    r = self.residual_of(&u);
                    res = r.max_abs();
                }
                Relaxation::Implicit => {
                    let trial = self.implicit_update(&u, &r, dt);
                    let tr = trial.as_ref().map(|t| self.residual_of(t));
                    match (trial, tr) {
                        (Some(t), Some(tr)) if tr.max_abs() <= res => {
                            u = t;
                            r = tr;
                            res = r.max_abs();
                            dt = (dt * 4.0).min(1e16);
                        }
                        // the linearization misleads at the smallest step: fall back to the monotone explicit step
                        _ if dt <= dt0 => {
                            self.apply_explicit(&mut u, &r, dt0);
                            r = self.residual_of(&u);
                            res = r.max_abs();
                        }
                        _ => dt = (dt / 8.0).max(dt0),
                    }
                }
            }
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

    fn apply_explicit(&self, u: &mut [Vec<f64>], r: &JunctionResidual, dt: f64) {
        for (v, re) in u.iter_mut().zip(&r.edges) {
            for (x, d) in v.iter_mut().zip(re) {
                *x -= dt * d;
            }
        }
        let node = u[0][self.edges[0].spec().n_cells] - dt * r.node;
        for (v, e) in u.iter_mut().zip(&self.edges) {
            v[e.spec().n_cells] = node;
        }
    }

    /// Backward-Euler step `(I/dt + J) du = -R`.
    fn implicit_update(&self, u: &[Vec<f64>], r: &JunctionResidual, dt: f64) -> Option<Vec<Vec<f64>>> {
        let inv = 1.0 / dt;
        let n0 = self.edges[0].spec().n_cells;
        let u0 = u[0][n0];
        let before: Vec<f64> = self
            .edges
            .iter()
            .zip(u)
            .map(|(e, v)| v[e.spec().n_cells - 1])
            .collect();
        let (_, d0, coupling) = self.node_linearization(u0, &before);
        let mut arms = Vec::with_capacity(self.edges.len());
        for (i, (e, v)) in self.edges.iter().zip(u).enumerate() {
            let n = e.spec().n_cells;
            let mut arm = Arm::zeros(n);
            let [a0, a1] = e.far_jacobian(v[0], v[1]);
            arm.diag[0] = a0 + inv;
            arm.upper[0] = a1;
            for j in 1..n {
                let [l, c, rr] = e.interior_jacobian(j, v[j - 1], v[j + 1]);
                arm.lower[j] = l;
                arm.diag[j] = c + inv;
                arm.upper[j] = rr;
            }
            for (dst, src) in arm.rhs.iter_mut().zip(&r.edges[i]) {
                *dst = -src;
            }
            if let Some((k, g)) = coupling {
                if k == i {
                    arm.border = [g, 0.0];
                }
            }
            arms.push(arm);
        }
        let (du, d_node) = solve_bordered(&arms, d0 + inv, -r.node)?;
        let node = u0 + d_node;
        let out = u
            .iter()
            .zip(du)
            .map(|(v, d)| {
                let mut w: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + b).collect();
                w.push(node);
                w
            })
            .collect::<Vec<Vec<f64>>>();
        out.iter().all(|w| w.iter().all(|x| x.is_finite())).then_some(out)
    }
}

fn solve_with_scheme(problem: &JunctionProblem, params: &SolverParams) -> Result<(JunctionGridFunction, SolveReport)> {
    params.validate()?;
    let scheme = JunctionScheme::new(problem)?;
    let (values, report) = scheme.relax(scheme.initial_values(), params);
    let role = match problem.condition {
        JunctionCondition::StateConstraint => Role::StateConstraint,
        JunctionCondition::FluxLimited { .. } => Role::Generic,
    };
    Ok((JunctionGridFunction::from_values(&problem.edges, values, role), report))
}

/// Direct monotone scheme for the state-constraint junction problem.
pub fn solve_junction_direct(
    problem: &JunctionProblem,
    params: &SolverParams,
) -> Result<(JunctionGridFunction, SolveReport)> {
    if problem.condition != JunctionCondition::StateConstraint {
        return Err(Error::Precondition("direct solver expects a state-constraint junction".into()));
    }
    solve_with_scheme(problem, params)
}

/// Flux-limited junction problem.
pub fn solve_flux_limited(
    problem: &JunctionProblem,
    params: &SolverParams,
) -> Result<(JunctionGridFunction, SolveReport)> {
    if !matches!(problem.condition, JunctionCondition::FluxLimited { .. }) {
        return Err(Error::Precondition("flux-limited solver expects a flux-limited junction".into()));
    }
    solve_with_scheme(problem, params)
}

/// Dispatches on the junction condition.
pub fn solve_junction(
    problem: &JunctionProblem,
    params: &SolverParams,
) -> Result<(JunctionGridFunction, SolveReport)> {
    solve_with_scheme(problem, params)
}

/// Builds the state-constraint solution from per-edge problems: every edge
/// solves its own state-constraint problem, the node value is the smallest
/// of their node values, and edges not attaining it (beyond `2 h`) are
/// re-solved with that value as Dirichlet data.
pub fn solve_junction_constructive(
    problem: &JunctionProblem,
    params: &SolverParams,
) -> Result<(JunctionGridFunction, SolveReport)> {
    if problem.condition != JunctionCondition::StateConstraint {
        return Err(Error::Precondition(
            "constructive solver expects a state-constraint junction".into(),
        ));
    }
    let start = Instant::now();
    let pairs: Vec<(&EdgeSpec, &Hamiltonian)> =
        problem.edges.iter().zip(&problem.hamiltonians).collect();
    let sc = pairs
        .par_iter()
        .map(|(e, h)| solve_edge(h, e, NodeBc::StateConstraint, params))
        .collect::<Result<Vec<_>>>()?;
    let c_star = sc
        .iter()
        .map(|(g, _)| g.node_value())
        .fold(f64::INFINITY, f64::min);
    let solved = pairs
        .par_iter()
        .zip(sc)
        .map(|((e, h), (g, rep))| {
            if g.node_value() - c_star <= 2.0 * e.spacing() {
                Ok((g, rep))
            } else {
                solve_edge(h, e, NodeBc::Dirichlet { value: c_star }, params)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut iterations = 0;
    let mut final_residual: f64 = 0.0;
    let mut converged = true;
    let mut dt = f64::INFINITY;
    let mut per_edge = Vec::with_capacity(solved.len());
    for (mut g, rep) in solved {
        iterations += rep.iterations;
        final_residual = final_residual.max(rep.final_residual);
        converged &= rep.converged;
        dt = dt.min(rep.dt);
        let n = g.edge.n_cells;
        g.values[n] = c_star;
        per_edge.push(g);
    }
    let report = SolveReport {
        iterations,
        final_residual,
        dt,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        dirichlet_not_attained: false,
    };
    Ok((JunctionGridFunction::new(per_edge)?, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDiagnostics {
    pub node_value: f64,
    /// Second-order one-sided slopes at the node, one per edge.
    pub slopes: Vec<f64>,
    pub sc_residual: f64,
    pub flux_residual: Option<f64>,
    pub kirchhoff_sum: f64,
    pub p_bar: Vec<f64>,
    pub p_under: Vec<f64>,
}

/// Window of the one-sided difference quotients in [`node_diagnostics`].
pub const QUOTIENT_WINDOW: usize = 4;

pub fn node_diagnostics(u: &JunctionGridFunction, problem: &JunctionProblem) -> Result<NodeDiagnostics> {
    if u.per_edge.len() != problem.k() {
        return Err(Error::GridMismatch("edge count differs from the problem".into()));
    }
    let slopes: Vec<f64> = u
        .per_edge
        .iter()
        .map(|g| node_slope(g, SlopeOrder::Second))
        .collect();
    let node_value = u.node_value;
    let sc_residual = node_value
        + problem
            .hamiltonians
            .iter()
            .zip(&slopes)
            .map(|(h, &s)| h.envelope_at(0.0).min_right(s))
            .fold(f64::NEG_INFINITY, f64::max);
    let flux_residual = match problem.condition {
        JunctionCondition::FluxLimited { a } => {
            let reflected: Vec<Hamiltonian> =
                problem.hamiltonians.iter().map(Hamiltonian::reflected).collect();
            let limiter = make_flux_limiter(&reflected, a)?;
            let neg: Vec<f64> = slopes.iter().map(|s| -s).collect();
            Some(node_value + limiter.evaluate(&neg))
        }
        JunctionCondition::StateConstraint => None,
    };
    let (p_bar, p_under) = u
        .per_edge
        .iter()
        .map(|g| one_sided_quotients(g, QUOTIENT_WINDOW))
        .unzip();
    Ok(NodeDiagnostics {
        node_value,
        kirchhoff_sum: slopes.iter().sum(),
        slopes,
        sc_residual,
        flux_residual,
        p_bar,
        p_under,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeBoundBranch {
    StateConstraint,
    SlopeBound,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeBoundReport {
    pub distance_to_sc: f64,
    pub p_bar: f64,
    pub threshold: f64,
    pub branch: SlopeBoundBranch,
}

/// A sub-solution on one edge either is the state-constraint solution or has
/// its upper one-sided quotient at the node bounded by the tail onset of
/// `H(., 0)` (see [`rightward_min_threshold`]); tolerance `5e-2` on both.
pub fn subsolution_slope_bound_check(
    u: &GridFunction1D,
    h: &Hamiltonian,
    params: &SolverParams,
) -> Result<SlopeBoundReport> {
    let (sc, _) = solve_edge(h, &u.edge, NodeBc::StateConstraint, params)?;
    let distance_to_sc = u.max_distance(&sc)?;
    let (p_bar, _) = one_sided_quotients(u, QUOTIENT_WINDOW);
    let threshold = rightward_min_threshold(h);
    let branch = if distance_to_sc <= 5e-2 {
        SlopeBoundBranch::StateConstraint
    } else if p_bar <= threshold + 5e-2 {
        SlopeBoundBranch::SlopeBound
    } else {
        SlopeBoundBranch::Violation
    };
    Ok(SlopeBoundReport {
        distance_to_sc,
        p_bar,
        threshold,
        branch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge::FarBc;
    use crate::hamiltonian::make_builtin;

    fn abs_shift(c: f64) -> Hamiltonian {
        make_builtin("abs_shift", &[0.0, c]).unwrap()
    }

    fn problem(hs: Vec<Hamiltonian>, n: usize, cond: JunctionCondition) -> JunctionProblem {
        let edges = vec![EdgeSpec::new(1.0, n, FarBc::default()).unwrap(); hs.len()];
        JunctionProblem::new(edges, hs, cond).unwrap()
    }

    fn sup_error(g: &GridFunction1D, f: impl Fn(f64) -> f64) -> f64 {
        g.positions()
            .zip(&g.values)
            .map(|(x, v)| (v - f(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn direct_two_edge_abs_family() {
        let p = problem(vec![abs_shift(1.0), abs_shift(2.0)], 400, JunctionCondition::StateConstraint);
        let (u, rep) = solve_junction_direct(&p, &SolverParams::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((u.node_value() - 1.0).abs() < 2e-2);
        assert!(sup_error(u.edge(0), |_| 1.0) < 2e-2);
        assert!(sup_error(u.edge(1), |x| 2.0 - x.exp()) < 2e-2);
    }

    #[test]
    fn direct_single_and_triple_edges() {
        let p = problem(vec![abs_shift(1.0)], 200, JunctionCondition::StateConstraint);
        let (u, _) = solve_junction_direct(&p, &SolverParams::default()).unwrap();
        assert!(sup_error(u.edge(0), |_| 1.0) < 1e-6);
        let p = problem(
            vec![abs_shift(1.0), abs_shift(2.0), abs_shift(3.0)],
            400,
            JunctionCondition::StateConstraint,
        );
        let (u, rep) = solve_junction_direct(&p, &SolverParams::default()).unwrap();
        assert!(rep.converged);
        assert!((u.node_value() - 1.0).abs() < 2e-2);
    }

    #[test]
    fn explicit_and_implicit_relaxation_agree() {
        let p = problem(vec![abs_shift(1.0), abs_shift(2.0)], 100, JunctionCondition::StateConstraint);
        let (a, ra) = solve_junction_direct(&p, &SolverParams::explicit()).unwrap();
        let (b, rb) = solve_junction_direct(&p, &SolverParams::default()).unwrap();
        assert!(ra.converged && rb.converged);
        assert!(a.max_distance(&b).unwrap() < 1e-6);
        assert!(rb.iterations < ra.iterations);
    }

    #[test]
    fn constructive_examples() {
        let params = SolverParams::default();
        let p = problem(vec![abs_shift(1.0), abs_shift(2.0)], 400, JunctionCondition::StateConstraint);
        let (u, rep) = solve_junction_constructive(&p, &params).unwrap();
        assert!(rep.converged);
        assert_eq!(u.node_value(), u.edge(1).node_value());
        assert!(sup_error(u.edge(1), |x| 2.0 - x.exp()) < 2e-2);
        let (d, _) = solve_junction_direct(&p, &params).unwrap();
        assert!(u.max_distance(&d).unwrap() < 5e-2);

        let p = problem(vec![abs_shift(1.0), abs_shift(1.0)], 200, JunctionCondition::StateConstraint);
        let (u, _) = solve_junction_constructive(&p, &params).unwrap();
        assert!(u.per_edge().iter().all(|g| sup_error(g, |_| 1.0) < 1e-6));
    }

    #[test]
    fn constructive_quadratic_against_fine_edge_value() {
        let params = SolverParams::default();
        let q = make_builtin("quadratic", &[1.0, 1.0]).unwrap();
        let fine = EdgeSpec::new(1.0, 1600, FarBc::default()).unwrap();
        let (sc, _) = solve_edge(&q, &fine, NodeBc::StateConstraint, &params).unwrap();
        let oracle = sc.node_value();
        assert!(oracle < 5.0);
        let p = problem(vec![q, abs_shift(5.0)], 400, JunctionCondition::StateConstraint);
        let (u, _) = solve_junction_constructive(&p, &params).unwrap();
        assert!((u.node_value() - oracle).abs() < 2e-2, "{} vs {oracle}", u.node_value());
    }

    #[test]
    fn node_residual_is_monotone() {
        let hs = vec![abs_shift(1.0), make_builtin("double_well", &[-2.0, 0.0]).unwrap()];
        let p = problem(hs.clone(), 50, JunctionCondition::StateConstraint);
        let s = JunctionScheme::new(&p).unwrap();
        let grid = crate::numerics::linspace(-1.0, 1.0, 40);
        for &u0 in &grid {
            for &b in &grid {
                let r = s.node_residual(u0, &[b, 0.1]);
                assert!(s.node_residual(u0 + 0.01, &[b, 0.1]) >= r - 1e-12);
                assert!(s.node_residual(u0, &[b + 0.01, 0.1]) <= r + 1e-12);
                assert!(s.node_residual(u0, &[b, 0.11]) <= r + 1e-12);
            }
        }
    }

    #[test]
    fn diagnostics_examples() {
        let params = SolverParams::default();
        let p = problem(vec![abs_shift(1.0), abs_shift(2.0)], 400, JunctionCondition::StateConstraint);
        let (u, _) = solve_junction_direct(&p, &params).unwrap();
        let d = node_diagnostics(&u, &p).unwrap();
        assert!(d.slopes[0].abs() < 1e-2 && (d.slopes[1] + 1.0).abs() < 2e-2, "{d:?}");
        assert!(d.sc_residual.abs() < 1e-2);

        let p = problem(vec![abs_shift(1.0), abs_shift(1.0)], 100, JunctionCondition::StateConstraint);
        let c = JunctionGridFunction::constant(&p, 0.3);
        let d = node_diagnostics(&c, &p).unwrap();
        assert!((d.sc_residual - (0.3 - 1.0)).abs() < 1e-12);
        assert!(d.kirchhoff_sum.abs() < 1e-12);
    }

    #[test]
    fn comparison_of_shifts() {
        let p = problem(vec![abs_shift(1.0), abs_shift(2.0)], 100, JunctionCondition::StateConstraint);
        let (u, _) = solve_junction_direct(&p, &SolverParams::default()).unwrap();
        assert!((compare_grid_functions(&u.shifted(-0.3), &u).unwrap() + 0.3).abs() < 1e-12);
        assert_eq!(compare_grid_functions(&u, &u).unwrap(), 0.0);
        let other = problem(vec![abs_shift(1.0)], 100, JunctionCondition::StateConstraint);
        let c = JunctionGridFunction::constant(&other, 0.0);
        assert!(compare_grid_functions(&c, &u).is_err());
    }

    #[test]
    fn flux_limited_examples() {
        let params = SolverParams::default();
        for a in [-1.0, -0.5, 0.0] {
            let p = problem(vec![abs_shift(1.0), abs_shift(1.0)], 400, JunctionCondition::FluxLimited { a });
            let (u, rep) = solve_flux_limited(&p, &params).unwrap();
            assert!(rep.converged);
            assert!(u.node_value() <= -a + 2e-2);
            assert!((u.node_value() - (-a).min(1.0)).abs() < 2e-2, "A = {a}: {}", u.node_value());
        }
        let p = problem(vec![abs_shift(1.0)], 200, JunctionCondition::FluxLimited { a: -1.0 });
        let (u, _) = solve_flux_limited(&p, &params).unwrap();
        assert!(sup_error(u.edge(0), |_| 1.0) < 1e-6);
        let dw = make_builtin("double_well", &[0.0, 0.0]).unwrap();
        let edges = vec![EdgeSpec::new(1.0, 50, FarBc::default()).unwrap(); 2];
        assert!(matches!(
            JunctionProblem::new(edges, vec![abs_shift(1.0), dw], JunctionCondition::FluxLimited { a: 0.0 }),
            Err(Error::NotQuasiconvex(2))
        ));
    }

    #[test]
    fn slope_bound_branches() {
        let params = SolverParams::default();
        let h = abs_shift(1.0);
        let e = EdgeSpec::new(1.0, 400, FarBc::default()).unwrap();
        let (sc, _) = solve_edge(&h, &e, NodeBc::StateConstraint, &params).unwrap();
        let r = subsolution_slope_bound_check(&sc, &h, &params).unwrap();
        assert_eq!(r.branch, SlopeBoundBranch::StateConstraint);
        let (uc, _) = solve_edge(&h, &e, NodeBc::Dirichlet { value: 0.0 }, &params).unwrap();
        let r = subsolution_slope_bound_check(&uc, &h, &params).unwrap();
        assert_eq!(r.branch, SlopeBoundBranch::SlopeBound);
        assert!((r.p_bar + 1.0).abs() < 2e-2);
        let r = subsolution_slope_bound_check(&sc.shifted(-0.5), &h, &params).unwrap();
        assert_eq!(r.branch, SlopeBoundBranch::SlopeBound);
        assert!(r.p_bar.abs() < 1e-9);
        let steep = GridFunction1D::from_fn(e, Role::Generic, |x| 2.0 * x);
        let r = subsolution_slope_bound_check(&steep, &h, &params).unwrap();
        assert_eq!(r.branch, SlopeBoundBranch::Violation);
    }
}
