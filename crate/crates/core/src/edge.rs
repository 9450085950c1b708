//! Monotone finite differences for `u + H(u_x, x) = 0` on one edge `(-a, 0)`.
//!
//! Nodes are indexed `j = 0` (far end, `x = -a`) to `j = n` (junction end,
//! `x = 0`). Interior nodes use the Lax-Friedrichs numerical Hamiltonian;
//! state-constraint ends use the binding-test-slope envelope of
//! [`SlopeEnvelope`]. The stationary problem is reached by explicit
//! pseudo-time relaxation `u <- u - dt * R(u)`, which is a monotone
//! contraction for `dt <= h / (theta + h)`, or by its backward-Euler
//! counterpart (see [`Relaxation`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, SlopeEnvelope};
use crate::junction::JunctionScheme;

/// Boundary condition at the far end `x = -a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FarBc {
    Dirichlet { value: f64 },
    Neumann { slope: f64 },
    StateConstraint,
}

impl Default for FarBc {
    fn default() -> Self {
        FarBc::Neumann { slope: 0.0 }
    }
}

/// Condition at the junction end `x = 0` for stand-alone edge solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeBc {
    Dirichlet { value: f64 },
    StateConstraint,
}

/// Geometry and far-end data of one edge. The length is stored positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub length: f64,
    pub n_cells: usize,
    #[serde(default)]
    pub far_bc: FarBc,
}

impl EdgeSpec {
    pub fn new(length: f64, n_cells: usize, far_bc: FarBc) -> Result<Self> {
        let spec = EdgeSpec {
            length,
            n_cells,
            far_bc,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidEdge(format!(
                "length must be positive and finite, got {}",
                self.length
            )));
        }
        if self.n_cells < 8 {
            return Err(Error::InvalidEdge(format!(
                "n_cells must be at least 8, got {}",
                self.n_cells
            )));
        }
        match self.far_bc {
            FarBc::Dirichlet { value: v } | FarBc::Neumann { slope: v } if !v.is_finite() => {
                Err(Error::InvalidEdge("far boundary data must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    #[inline]
    pub fn position(&self, j: usize) -> f64 {
        if j == self.n_cells {
            0.0
        } else {
            -self.length + self.spacing() * j as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Role {
    StateConstraint,
    Dirichlet { value: f64 },
    Generic,
}

/// Nodal values on one edge; `values[n_cells]` sits at the junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction1D {
    pub values: Vec<f64>,
    pub edge: EdgeSpec,
    pub role: Role,
}

impl GridFunction1D {
    pub fn new(values: Vec<f64>, edge: EdgeSpec, role: Role) -> Result<Self> {
        if values.len() != edge.n_cells + 1 {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                edge.n_cells + 1,
                values.len()
            )));
        }
        Ok(GridFunction1D { values, edge, role })
    }

    /// Samples `f(x)` on the edge grid.
    pub fn from_fn(edge: EdgeSpec, role: Role, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..=edge.n_cells).map(|j| f(edge.position(j))).collect();
        GridFunction1D { values, edge, role }
    }

    pub fn node_value(&self) -> f64 {
        self.values[self.edge.n_cells]
    }

    pub fn spacing(&self) -> f64 {
        self.edge.spacing()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.edge.n_cells).map(|j| self.edge.position(j))
    }

    /// `max_j |u_{j+1} - u_j| / h`.
    pub fn lipschitz(&self) -> f64 {
        let h = self.spacing();
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / h)
            .fold(0.0, f64::max)
    }

    /// Max-norm distance to another function on the same grid.
    pub fn max_distance(&self, other: &GridFunction1D) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::GridMismatch(format!(
                "{} vs {} nodes",
                self.values.len(),
                other.values.len()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn shifted(&self, delta: f64) -> GridFunction1D {
        GridFunction1D {
            values: self.values.iter().map(|v| v + delta).collect(),
            edge: self.edge,
            role: Role::Generic,
        }
    }
}

/// How the pseudo-time iteration is advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relaxation {
    /// `u <- u - dt R(u)` with `dt = cfl h / (theta + h)`.
    Explicit,
    /// Backward Euler in pseudo-time, `(I/tau + J) du = -R(u)`, with `tau`
    /// starting at the explicit step and growing while the residual drops.
    /// Needed when `theta / h` is large: the explicit step count grows like
    /// `theta / h * ln(1 / tol)`.
    #[default]
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iters: usize,
    pub cfl: f64,
    #[serde(default)]
    pub relaxation: Relaxation,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-8,
            max_iters: 200_000,
            cfl: 0.9,
            relaxation: Relaxation::default(),
        }
    }
}

impl SolverParams {
    pub fn explicit() -> Self {
        SolverParams {
            relaxation: Relaxation::Explicit,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Precondition("tol must be positive".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Precondition("cfl must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    /// Pseudo-time step of the last iteration.
    pub dt: f64,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
    /// Node Dirichlet data above the state-constraint value: the returned
    /// function is the state-constraint solution.
    #[serde(default)]
    pub dirichlet_not_attained: bool,
}

/// `H((p- + p+)/2, x) - theta/2 (p+ - p-)`.
#[inline]
pub fn lax_friedrichs_flux(h: &Hamiltonian, p_minus: f64, p_plus: f64, theta: f64, x: f64) -> f64 {
    h.value(0.5 * (p_minus + p_plus), x) - 0.5 * theta * (p_plus - p_minus)
}

/// Supersolution residual at the junction end of an edge:
/// `u0 + min_{q >= p_in} H(q, 0)` with `p_in = (u0 - u_in) / h`.
pub fn boundary_supersolution_residual(h: &Hamiltonian, u0: f64, u_in: f64, spacing: f64) -> f64 {
    let env = h.envelope_at(0.0);
    u0 + env.min_right((u0 - u_in) / spacing)
}

/// The discrete operator on one edge, without the junction-end equation.
#[derive(Debug, Clone)]
pub struct EdgeScheme {
    h: Hamiltonian,
    spec: EdgeSpec,
    spacing: f64,
    theta: f64,
    far_env: Option<SlopeEnvelope>,
    node_env: SlopeEnvelope,
}

impl EdgeScheme {
    /// `theta` is the sampled slope-Lipschitz bound of `H` on `[-2P, 2P]`.
    pub fn new(h: &Hamiltonian, spec: EdgeSpec) -> Result<Self> {
        spec.validate()?;
        let bound = 2.0 * h.coercivity_bound();
        let theta = h.slope_lipschitz(-bound, bound, &[-spec.length, -0.5 * spec.length, 0.0]);
        let far_env = match spec.far_bc {
            FarBc::StateConstraint | FarBc::Dirichlet { .. } => Some(h.envelope_at(-spec.length)),
            FarBc::Neumann { .. } => None,
        };
        Ok(EdgeScheme {
            h: h.clone(),
            spec,
            spacing: spec.spacing(),
            theta,
            far_env,
            node_env: h.envelope_at(0.0),
        })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.h
    }

    pub fn spec(&self) -> &EdgeSpec {
        &self.spec
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Largest stable and monotone pseudo-time step for this edge.
    pub fn max_dt(&self, cfl: f64) -> f64 {
        cfl * self.spacing / (self.theta + self.spacing)
    }

    /// Lax-Friedrichs residual `u_j + H^(p-, p+, x_j)` at an interior node.
    #[inline]
    pub fn interior_residual(&self, j: usize, left: f64, centre: f64, right: f64) -> f64 {
        let pm = (centre - left) / self.spacing;
        let pp = (right - centre) / self.spacing;
        centre + lax_friedrichs_flux(&self.h, pm, pp, self.theta, self.spec.position(j))
    }

    /// Residual at `j = 0`. Dirichlet data is taken in the generalized
    /// sense, `max(u_0 - g, u_0 + min_{q <= p_in} H(q, -L))`, so data above
    /// the state-constraint value is lost instead of forcing a layer.
    #[inline]
    pub fn far_residual(&self, u0: f64, u1: f64) -> f64 {
        match self.spec.far_bc {
            FarBc::Dirichlet { value } => (u0 - value).max(self.far_sc_residual(u0, u1)),
            FarBc::Neumann { slope } => {
                let ghost = u1 - 2.0 * self.spacing * slope;
                self.interior_residual(0, ghost, u0, u1)
            }
            FarBc::StateConstraint => self.far_sc_residual(u0, u1),
        }
    }

    #[inline]
    fn far_sc_residual(&self, u0: f64, u1: f64) -> f64 {
        let p_in = (u1 - u0) / self.spacing;
        u0 + self.far_env.as_ref().expect("far envelope").min_left(p_in)
    }

    /// Slope toward the junction between the last two nodes.
    #[inline]
    pub fn node_inward_slope(&self, node: f64, before: f64) -> f64 {
        (node - before) / self.spacing
    }

    /// `min_{q >= p_in} H(q, 0)`.
    #[inline]
    pub fn node_envelope(&self, p_in: f64) -> f64 {
        self.node_env.min_right(p_in)
    }

    /// State-constraint residual at the junction end.
    #[inline]
    pub fn node_sc_residual(&self, node: f64, before: f64) -> f64 {
        node + self.node_envelope(self.node_inward_slope(node, before))
    }

    /// One pseudo-time step at an interior node.
    #[inline]
    pub fn interior_update(&self, j: usize, left: f64, centre: f64, right: f64, dt: f64) -> f64 {
        centre - dt * self.interior_residual(j, left, centre, right)
    }

    /// Fills `out[0..n]` with residuals of nodes `0..n-1`; `u` has `n + 1`
    /// entries and `u[n]` is taken as given.
    pub fn residuals(&self, u: &[f64], out: &mut [f64]) {
        let n = self.spec.n_cells;
        out[0] = self.far_residual(u[0], u[1]);
        for j in 1..n {
            out[j] = self.interior_residual(j, u[j - 1], u[j], u[j + 1]);
        }
    }

    /// `dH/dp` at `(p, x)` by central differences, clamped to `[-theta, theta]`.
    #[inline]
    fn h_slope(&self, p: f64, x: f64) -> f64 {
        let d = 1e-7 * (1.0 + p.abs());
        let g = (self.h.value(p + d, x) - self.h.value(p - d, x)) / (2.0 * d);
        g.clamp(-self.theta, self.theta)
    }

    /// Partial derivatives of the interior residual in `(left, centre, right)`.
    #[inline]
    pub(crate) fn interior_jacobian(&self, j: usize, left: f64, right: f64) -> [f64; 3] {
        let h = self.spacing;
        let hp = self.h_slope((right - left) / (2.0 * h), self.spec.position(j));
        let t = self.theta / (2.0 * h);
        [-hp / (2.0 * h) - t, 1.0 + self.theta / h, hp / (2.0 * h) - t]
    }

    /// Partial derivatives of the far residual in `(u0, u1)`.
    pub(crate) fn far_jacobian(&self, u0: f64, u1: f64) -> [f64; 2] {
        let h = self.spacing;
        match self.spec.far_bc {
            FarBc::Dirichlet { value } if u0 - value >= self.far_sc_residual(u0, u1) => [1.0, 0.0],
            FarBc::Neumann { .. } => [1.0 + self.theta / h, -self.theta / h],
            FarBc::StateConstraint | FarBc::Dirichlet { .. } => {
                let env = self.far_env.as_ref().expect("far envelope");
                let p = (u1 - u0) / h;
                let d = 1e-7 * (1.0 + p.abs());
                let g = ((env.min_left(p + d) - env.min_left(p - d)) / (2.0 * d)).clamp(-self.theta, 0.0);
                [1.0 - g / h, g / h]
            }
        }
    }

    /// Initial guess: linear from the far value (pinned or `fallback`) to the
    /// node value (pinned or `fallback`).
    pub(crate) fn initial_guess(&self, node: Option<f64>, fallback: f64) -> Vec<f64> {
        let n = self.spec.n_cells;
        let a = match self.spec.far_bc {
            FarBc::Dirichlet { value } => value,
            _ => fallback,
        };
        let b = node.unwrap_or(fallback);
        (0..=n)
            .map(|j| a + (b - a) * j as f64 / n as f64)
            .collect()
    }

    /// Level `c` with `c + H(0, x) <= 0` at the sampled positions: the
    /// constant `c` is an interior sub-solution.
    pub(crate) fn subsolution_level(&self) -> f64 {
        let xs = self.h.x_samples().iter().copied().chain([-self.spec.length, 0.0]);
        -xs.map(|x| self.h.value(0.0, x)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solves `u + H(u_x, x) = 0` on one edge with the given junction-end
/// condition.
///
/// Dirichlet data at the junction end is imposed in the generalized
/// viscosity sense, `max(u_n - c, u_n + min_{q >= p_in} H(q, 0)) = 0`: below
/// the state-constraint value this pins `u_n = c`; above it the data is lost
/// and the state-constraint solution is returned with
/// `dirichlet_not_attained` set.
pub fn solve_edge(
    h: &Hamiltonian,
    edge: &EdgeSpec,
    node_bc: NodeBc,
    params: &SolverParams,
) -> Result<(GridFunction1D, SolveReport)> {
    params.validate()?;
    let scheme = JunctionScheme::single(h, *edge, node_bc)?;
    let dirichlet = match node_bc {
        NodeBc::Dirichlet { value } => Some(value),
        NodeBc::StateConstraint => None,
    };
    let guess = scheme.edges()[0].initial_guess(dirichlet, scheme.subsolution_level());
    let (mut values, mut report) = scheme.relax(vec![guess], params);
    let u = values.pop().expect("one edge");
    let n = edge.n_cells;
    let not_attained = match dirichlet {
        Some(c) => report.converged && (u[n] - c).abs() > 10.0 * params.tol.max(1e-12),
        None => false,
    };
    report.dirichlet_not_attained = not_attained;
    let role = match dirichlet {
        Some(c) if !not_attained => Role::Dirichlet { value: c },
        _ => Role::StateConstraint,
    };
    Ok((GridFunction1D::new(u, *edge, role)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlopeOrder {
    First,
    Second,
}

/// One-sided slope at the junction end: `(u_n - u_{n-1})/h` or
/// `(3u_n - 4u_{n-1} + u_{n-2})/(2h)`.
pub fn node_slope(u: &GridFunction1D, order: SlopeOrder) -> f64 {
    let n = u.edge.n_cells;
    let h = u.spacing();
    let v = &u.values;
    match order {
        SlopeOrder::First => (v[n] - v[n - 1]) / h,
        SlopeOrder::Second => (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h),
    }
}

/// Largest and smallest of `(u_n - u_{n-k}) / (k h)` for `k = 1..=window`;
/// the window is clamped to `[1, n/2]`.
pub fn one_sided_quotients(u: &GridFunction1D, window: usize) -> (f64, f64) {
    let n = u.edge.n_cells;
    let h = u.spacing();
    let window = window.clamp(1, (n / 2).max(1));
    let un = u.values[n];
    (1..=window)
        .map(|k| (un - u.values[n - k]) / (k as f64 * h))
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), q| {
            (hi.max(q), lo.min(q))
        })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletRecord {
    pub c: f64,
    pub node_value: f64,
    pub slope: f64,
    /// `|c + H(slope, 0)|`
    pub equation_residual: f64,
    /// One-sided difference quotient of `H(., 0)` at the slope.
    pub h_derivative: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub sc_value: f64,
    pub records: Vec<DirichletRecord>,
    pub values_nondecreasing: bool,
    pub slopes_nondecreasing: bool,
    pub residuals_ok: bool,
    pub decreasing_part_ok: bool,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.values_nondecreasing
            && self.slopes_nondecreasing
            && self.residuals_ok
            && self.decreasing_part_ok
            && self.records.iter().all(|r| r.converged)
    }
}

/// Solves the Dirichlet problem for every `c` below the state-constraint
/// value and checks the structure of the junction-end data: node values and
/// slopes nondecreasing in `c`, `c + H(slope, 0) ~ 0`, and the slope on the
/// decreasing part of `H`.
pub fn check_dirichlet_structure(
    h: &Hamiltonian,
    edge: &EdgeSpec,
    c_list: &[f64],
    params: &SolverParams,
) -> Result<PropertyReport> {
    let (sc, _) = solve_edge(h, edge, NodeBc::StateConstraint, params)?;
    let sc_value = sc.node_value();
    if let Some(bad) = c_list.iter().find(|&&c| !(c < sc_value - 2.0 * params.tol)) {
        return Err(Error::Precondition(format!(
            "Dirichlet value {bad} is not below the state-constraint value {sc_value}"
        )));
    }
    let mut cs = c_list.to_vec();
    cs.sort_by(f64::total_cmp);
    let delta = 1e-5;
    let mut records = Vec::with_capacity(cs.len());
    for c in cs {
        let (u, rep) = solve_edge(h, edge, NodeBc::Dirichlet { value: c }, params)?;
        let slope = node_slope(&u, SlopeOrder::Second);
        records.push(DirichletRecord {
            c,
            node_value: u.node_value(),
            slope,
            equation_residual: (c + h.value(slope, 0.0)).abs(),
            h_derivative: (h.value(slope + delta, 0.0) - h.value(slope, 0.0)) / delta,
            converged: rep.converged,
        });
    }
    let values_nondecreasing = records
        .windows(2)
        .all(|w| w[1].node_value >= w[0].node_value - params.tol);
    let slopes_nondecreasing = records.windows(2).all(|w| w[1].slope >= w[0].slope - 1e-3);
    let residuals_ok = records.iter().all(|r| r.equation_residual <= 5e-2);
    let decreasing_part_ok = records.iter().all(|r| r.h_derivative <= 1e-2);
    Ok(PropertyReport {
        sc_value,
        records,
        values_nondecreasing,
        slopes_nondecreasing,
        residuals_ok,
        decreasing_part_ok,
    })
}
