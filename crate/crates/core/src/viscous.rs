//! The Kirchhoff-regularized junction problem
//! `-eps u'' + u + H_i(u', x) = 0` on every edge, `sum_i u_{x_i}(0) = 0`,
//! its vanishing-viscosity sweeps and the classification of the limit.
//!
//! Discretization: central differences on every edge, the node shared by
//! all edges, and a second-order one-sided stencil for each slope in the
//! Kirchhoff row. A far state-constraint end has no second-order analogue
//! and is treated as a homogeneous Neumann end.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::edge::{node_slope, EdgeSpec, FarBc, GridFunction1D, Role, SlopeOrder, SolveReport, SolverParams};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::junction::{solve_junction_direct, JunctionCondition, JunctionGridFunction, JunctionProblem};
use crate::numerics::{solve_bordered, Arm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscousParams {
    pub epsilon: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Backtracking factor of the damped Newton step.
    pub damping: f64,
    pub min_step: f64,
    pub continuation_start: f64,
}

impl Default for ViscousParams {
    fn default() -> Self {
        ViscousParams {
            epsilon: 0.1,
            newton_tol: 1e-10,
            max_newton: 60,
            damping: 0.5,
            min_step: 1.0 / 64.0,
            continuation_start: 1.0,
        }
    }
}

impl ViscousParams {
    pub fn with_epsilon(epsilon: f64) -> Self {
        ViscousParams {
            epsilon,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidSweep(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.newton_tol > 0.0 && self.damping > 0.0 && self.damping < 1.0 && self.min_step > 0.0) {
            return Err(Error::Precondition("invalid Newton parameters".into()));
        }
        if !(self.continuation_start > 0.0) {
            return Err(Error::Precondition("continuation_start must be positive".into()));
        }
        Ok(())
    }
}

/// Max-norm residuals of the discrete viscous system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscousResidual {
    /// Interior and far-end rows.
    pub edges: f64,
    /// The Kirchhoff row.
    pub node: f64,
}

impl ViscousResidual {
    pub fn max(&self) -> f64 {
        self.edges.max(self.node.abs())
    }
}

struct System<'a> {
    edges: &'a [EdgeSpec],
    hs: &'a [Hamiltonian],
}

struct Eval {
    rows: Vec<Vec<f64>>,
    node: f64,
}

impl Eval {
    fn norm(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .fold(self.node.abs(), |m, v| m.max(v.abs()))
    }
}

impl<'a> System<'a> {
    fn new(problem: &'a JunctionProblem) -> Self {
        System {
            edges: problem.edges(),
            hs: problem.hamiltonians(),
        }
    }

    /// Far-end slope of the ghost reflection, `None` for a pinned end.
    fn far_slope(e: &EdgeSpec) -> Option<f64> {
        match e.far_bc {
            FarBc::Dirichlet { .. } => None,
            FarBc::Neumann { slope } => Some(slope),
            FarBc::StateConstraint => Some(0.0),
        }
    }

    fn row(&self, i: usize, j: usize, v: &[f64], eps: f64) -> f64 {
        let e = &self.edges[i];
        let h = e.spacing();
        let x = e.position(j);
        if j == 0 {
            return match e.far_bc {
                FarBc::Dirichlet { value } => v[0] - value,
                _ => {
                    let g = Self::far_slope(e).unwrap_or(0.0);
                    let ghost = v[1] - 2.0 * h * g;
                    -eps * (v[1] - 2.0 * v[0] + ghost) / (h * h) + v[0] + self.hs[i].value(g, x)
                }
            };
        }
        let p = (v[j + 1] - v[j - 1]) / (2.0 * h);
        -eps * (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h) + v[j] + self.hs[i].value(p, x)
    }

    fn node_row(&self, u: &[Vec<f64>]) -> f64 {
        self.edges
            .iter()
            .zip(u)
            .map(|(e, v)| {
                let n = e.n_cells;
                (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * e.spacing())
            })
            .sum()
    }

    fn eval(&self, u: &[Vec<f64>], eps: f64) -> Eval {
        let rows = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| (0..e.n_cells).map(|j| self.row(i, j, &u[i], eps)).collect())
            .collect();
        Eval {
            rows,
            node: self.node_row(u),
        }
    }

    /// Newton matrix with finite-difference derivatives of the `H` terms.
    fn jacobian(&self, u: &[Vec<f64>], eps: f64, ev: &Eval) -> (Vec<Arm>, f64) {
        let mut arms = Vec::with_capacity(self.edges.len());
        let mut node_diag = 0.0;
        for (i, e) in self.edges.iter().enumerate() {
            let n = e.n_cells;
            let h = e.spacing();
            let v = &u[i];
            let mut arm = Arm::zeros(n);
            let d = eps / (h * h);
            match e.far_bc {
                FarBc::Dirichlet { .. } => arm.diag[0] = 1.0,
                _ => {
                    arm.diag[0] = 2.0 * d + 1.0;
                    arm.upper[0] = -2.0 * d;
                }
            }
            let hi = &self.hs[i];
            for j in 1..n {
                let x = e.position(j);
                let p = (v[j + 1] - v[j - 1]) / (2.0 * h);
                let base = hi.value(p, x);
                let sr = 1e-7 * (1.0 + v[j + 1].abs());
                let sl = 1e-7 * (1.0 + v[j - 1].abs());
                let dr = (hi.value(p + sr / (2.0 * h), x) - base) / sr;
                let dl = (hi.value(p - sl / (2.0 * h), x) - base) / sl;
                arm.lower[j] = -d + dl;
                arm.diag[j] = 2.0 * d + 1.0;
                arm.upper[j] = -d + dr;
            }
            for (dst, src) in arm.rhs.iter_mut().zip(&ev.rows[i]) {
                *dst = -src;
            }
            arm.border = [-2.0 / h, 0.5 / h];
            node_diag += 1.5 / h;
            arms.push(arm);
        }
        (arms, node_diag)
    }

    /// Damped Newton from `u`. Returns the iterate, iteration count and
    /// final residual norm; `Err` carries the same on stagnation.
    fn newton(
        &self,
        mut u: Vec<Vec<f64>>,
        eps: f64,
        params: &ViscousParams,
    ) -> std::result::Result<(Vec<Vec<f64>>, usize, f64, f64), (Vec<Vec<f64>>, usize, f64)> {
        let mut ev = self.eval(&u, eps);
        let mut norm = ev.norm();
        let mut last_step = 1.0;
        for it in 0..params.max_newton {
            if norm <= params.newton_tol {
                return Ok((u, it, norm, last_step));
            }
            let (arms, node_diag) = self.jacobian(&u, eps, &ev);
            let Some((du, d0)) = solve_bordered(&arms, node_diag, -ev.node) else {
                return Err((u, it, norm));
            };
            let mut step = 1.0;
            loop {
                let trial: Vec<Vec<f64>> = u
                    .iter()
                    .zip(&du)
                    .map(|(v, d)| {
                        let mut w: Vec<f64> = v.iter().zip(d).map(|(a, b)| a + step * b).collect();
                        w.push(v[v.len() - 1] + step * d0);
                        w
                    })
                    .collect();
                let tev = self.eval(&trial, eps);
                let tn = tev.norm();
                if tn.is_finite() && tn < norm {
                    u = trial;
                    ev = tev;
                    norm = tn;
                    last_step = step;
                    break;
                }
                step *= params.damping;
                if step < params.min_step {
                    return Err((u, it + 1, norm));
                }
            }
        }
        if norm <= params.newton_tol {
            Ok((u, params.max_newton, norm, last_step))
        } else {
            Err((u, params.max_newton, norm))
        }
    }

    /// Path-follows from `(u, from)` to `to` by halving `eps`; a failed leg is
    /// retried in quarter steps on the logarithmic scale.
    fn continue_to(
        &self,
        mut u: Vec<Vec<f64>>,
        from: f64,
        to: f64,
        params: &ViscousParams,
    ) -> (Vec<Vec<f64>>, usize, f64, f64, bool) {
        let mut schedule = Vec::new();
        let mut e = from;
        while e / 2.0 > to * (1.0 + 1e-12) {
            e /= 2.0;
            schedule.push(e);
        }
        schedule.push(to);
        let mut total = 0;
        let mut prev = from;
        let mut norm = f64::INFINITY;
        let mut last_step = 1.0;
        for target in schedule {
            match self.newton(u.clone(), target, params) {
                Ok((v, it, nrm, st)) => {
                    u = v;
                    total += it;
                    norm = nrm;
                    last_step = st;
                }
                Err((_, it, _)) => {
                    total += it;
                    let mut ok = true;
                    for k in 1..=4 {
                        let e = prev * (target / prev).powf(k as f64 / 4.0);
                        match self.newton(u.clone(), e, params) {
                            Ok((v, it, nrm, st)) => {
                                u = v;
                                total += it;
                                norm = nrm;
                                last_step = st;
                            }
                            Err((v, it, nrm)) => {
                                u = v;
                                total += it;
                                norm = nrm;
                                ok = false;
                                break;
                            }
                        }
                    }
                    if !ok {
                        return (u, total, norm, last_step, false);
                    }
                }
            }
            prev = target;
        }
        (u, total, norm, last_step, true)
    }

    fn initial(&self) -> Vec<Vec<f64>> {
        let k = self.hs.len() as f64;
        let c = -self.hs.iter().map(|h| h.value(0.0, 0.0)).sum::<f64>() / k;
        self.edges
            .iter()
            .map(|e| {
                let far = match e.far_bc {
                    FarBc::Dirichlet { value } => value,
                    _ => c,
                };
                (0..=e.n_cells)
                    .map(|j| far + (c - far) * j as f64 / e.n_cells as f64)
                    .collect()
            })
            .collect()
    }
}

fn to_grid(problem: &JunctionProblem, u: Vec<Vec<f64>>) -> Result<JunctionGridFunction> {
    let per_edge = u
        .into_iter()
        .zip(problem.edges())
        .map(|(v, &e)| GridFunction1D::new(v, e, Role::Generic))
        .collect::<Result<Vec<_>>>()?;
    JunctionGridFunction::new(per_edge)
}

fn from_grid(u: &JunctionGridFunction) -> Vec<Vec<f64>> {
    u.per_edge().iter().map(|g| g.values.clone()).collect()
}

/// Residuals of the discrete viscous system at `u`.
pub fn viscous_residual(problem: &JunctionProblem, u: &JunctionGridFunction, epsilon: f64) -> Result<ViscousResidual> {
    if u.per_edge().len() != problem.k()
        || u
            .per_edge()
            .iter()
            .zip(problem.edges())
            .any(|(g, e)| g.values.len() != e.n_cells + 1)
    {
        return Err(Error::GridMismatch("grid function does not match the problem".into()));
    }
    let ev = System::new(problem).eval(&from_grid(u), epsilon);
    Ok(ViscousResidual {
        edges: ev.rows.iter().flatten().fold(0.0, |m, v| m.max(v.abs())),
        node: ev.node,
    })
}

/// Solves the regularized problem at `params.epsilon`, path-following from
/// `params.continuation_start`. The junction condition of `problem` is
/// ignored: the node carries the Kirchhoff condition.
pub fn solve_viscous_kirchhoff(
    problem: &JunctionProblem,
    params: &ViscousParams,
) -> Result<(JunctionGridFunction, SolveReport)> {
    params.validate()?;
    let start = Instant::now();
    let sys = System::new(problem);
    let from = params.continuation_start.max(params.epsilon);
    let (u0, it0, n0, s0) = match sys.newton(sys.initial(), from, params) {
        Ok(r) => r,
        Err((u, it, n)) => {
            let report = SolveReport {
                iterations: it,
                final_residual: n,
                dt: 0.0,
                converged: false,
                wall_time: start.elapsed().as_secs_f64(),
                dirichlet_not_attained: false,
            };
            return Ok((to_grid(problem, u)?, report));
        }
    };
    let (u, it, norm, step, ok) = if from > params.epsilon {
        sys.continue_to(u0, from, params.epsilon, params)
    } else {
        (u0, 0, n0, s0, true)
    };
    let report = SolveReport {
        iterations: it0 + it,
        final_residual: norm,
        dt: step,
        converged: ok && norm <= params.newton_tol,
        wall_time: start.elapsed().as_secs_f64(),
        dirichlet_not_attained: false,
    };
    Ok((to_grid(problem, u)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    SelectsStateConstraint,
    NoGuarantee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitClass {
    SelectsStateConstraint,
    KirchhoffLimit,
    Undetermined,
}

/// Selection is guaranteed when the largest minimizers of the `H_i(., 0)`
/// sum to a nonpositive number.
pub fn predict_selection(problem: &JunctionProblem) -> Selection {
    let sum: f64 = problem
        .hamiltonians()
        .iter()
        .map(|h| h.minima().last().copied().unwrap_or(0.0))
        .sum();
    if sum <= 1e-9 {
        Selection::SelectsStateConstraint
    } else {
        Selection::NoGuarantee
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub node_value: f64,
    pub slopes: Vec<f64>,
    pub kirchhoff_sum: f64,
    pub newton_iters: usize,
    pub residual: f64,
    pub converged: bool,
    /// Largest discrete Lipschitz constant over the edges.
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingViscosityReport {
    /// Sorted by decreasing epsilon.
    pub records: Vec<SweepRecord>,
    pub extrapolated: f64,
    pub classification: LimitClass,
    pub predicted: Selection,
    pub sc_reference: f64,
    pub delta_sc: f64,
    pub delta_k: f64,
}

/// Default thresholds of [`classify_limit`].
pub const DELTA_SC: f64 = 5e-2;
pub const DELTA_K: f64 = 5e-2;

/// Linear extrapolation in `eps` to `eps = 0` through the last two records.
pub fn richardson(records: &[SweepRecord]) -> Option<f64> {
    let [.., a, b] = records else { return None };
    Some(b.node_value + (b.node_value - a.node_value) * b.epsilon / (a.epsilon - b.epsilon))
}

/// Classifies a sweep against the state-constraint node value.
pub fn classify_limit(records: &[SweepRecord], sc_value: f64, delta_sc: f64, delta_k: f64) -> LimitClass {
    let Some(extrapolated) = richardson(records) else {
        return LimitClass::Undetermined;
    };
    if records.len() < 3 {
        return LimitClass::Undetermined;
    }
    let last = &records[records.len() - 1];
    if (extrapolated - sc_value).abs() <= delta_sc {
        LimitClass::SelectsStateConstraint
    } else if extrapolated < sc_value - delta_sc && last.kirchhoff_sum.abs() <= delta_k {
        LimitClass::KirchhoffLimit
    } else {
        LimitClass::Undetermined
    }
}

/// Checks `eps_list` for a sweep on `problem`: at least three entries,
/// strictly decreasing, positive, and `h <= eps_min / 4` on every edge.
pub fn validate_sweep(problem: &JunctionProblem, eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidSweep("eps_list needs at least 3 entries".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidSweep("eps_list entries must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidSweep("eps_list must decrease".into()));
    }
    let eps_min = eps_list[eps_list.len() - 1];
    let h = problem.max_spacing();
    if h > eps_min / 4.0 {
        return Err(Error::InvalidSweep(format!(
            "grid too coarse: h = {h} exceeds eps_min / 4 = {}",
            eps_min / 4.0
        )));
    }
    Ok(())
}

/// Solves along `eps_list`, each solve warm-started from the previous one,
/// and classifies the limit against the state-constraint solution on the
/// same grid.
pub fn epsilon_sweep(
    problem: &JunctionProblem,
    eps_list: &[f64],
    params: &ViscousParams,
) -> Result<VanishingViscosityReport> {
    validate_sweep(problem, eps_list)?;
    let sc_problem = problem.with_condition(JunctionCondition::StateConstraint)?;
    let (sc, _) = solve_junction_direct(&sc_problem, &SolverParams::default())?;
    let sys = System::new(problem);
    let mut records = Vec::with_capacity(eps_list.len());
    let mut state: Option<(Vec<Vec<f64>>, f64)> = None;
    for &eps in eps_list {
        let (u, iters, norm, ok) = match state.take() {
            None => {
                let (g, rep) = solve_viscous_kirchhoff(problem, &ViscousParams { epsilon: eps, ..*params })?;
                (from_grid(&g), rep.iterations, rep.final_residual, rep.converged)
            }
            Some((u, prev)) => {
                let (u, it, norm, _, ok) = sys.continue_to(u, prev, eps, params);
                (u, it, norm, ok && norm <= params.newton_tol)
            }
        };
        let g = to_grid(problem, u.clone())?;
        let slopes: Vec<f64> = g
            .per_edge()
            .iter()
            .map(|e| node_slope(e, SlopeOrder::Second))
            .collect();
        records.push(SweepRecord {
            epsilon: eps,
            node_value: g.node_value(),
            kirchhoff_sum: slopes.iter().sum(),
            slopes,
            newton_iters: iters,
            residual: norm,
            converged: ok,
            lipschitz: g.per_edge().iter().map(GridFunction1D::lipschitz).fold(0.0, f64::max),
        });
        state = Some((u, eps));
    }
    let extrapolated = richardson(&records).expect("at least three records");
    Ok(VanishingViscosityReport {
        classification: classify_limit(&records, sc.node_value(), DELTA_SC, DELTA_K),
        extrapolated,
        predicted: predict_selection(problem),
        sc_reference: sc.node_value(),
        delta_sc: DELTA_SC,
        delta_k: DELTA_K,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::make_builtin;

    fn problem(family: &str, params: [f64; 2], k: usize, n: usize, far: FarBc) -> JunctionProblem {
        let h = make_builtin(family, &params).unwrap();
        JunctionProblem::new(
            vec![EdgeSpec::new(1.0, n, far).unwrap(); k],
            vec![h; k],
            JunctionCondition::StateConstraint,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_abs_problem_with_neumann_ends_is_flat() {
        let p = problem("abs_shift", [0.0, 1.0], 2, 200, FarBc::default());
        let (u, rep) = solve_viscous_kirchhoff(&p, &ViscousParams::with_epsilon(0.1)).unwrap();
        assert!(rep.converged, "{rep:?}");
        let r = viscous_residual(&p, &u, 0.1).unwrap();
        assert!(r.max() <= 1e-8);
        assert!((u.node_value() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dirichlet_far_ends_give_a_node_layer_below_the_sc_value() {
        let p = problem("abs_shift", [0.0, 1.0], 2, 400, FarBc::Dirichlet { value: 0.0 });
        let sc = 1.0 - (-1f64).exp();
        let mut last = f64::NEG_INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let (u, rep) = solve_viscous_kirchhoff(&p, &ViscousParams::with_epsilon(eps)).unwrap();
            assert!(rep.converged);
            let r = viscous_residual(&p, &u, eps).unwrap();
            assert!(r.node.abs() <= 1e-8 && r.edges <= 1e-8, "{r:?}");
            assert!(u.node_value() < sc);
            assert!(u.node_value() > last);
            last = u.node_value();
        }
    }

    #[test]
    fn large_viscosity_flattens() {
        let p = problem("abs_shift", [0.0, 1.0], 2, 100, FarBc::Dirichlet { value: 1.0 });
        let (u, rep) = solve_viscous_kirchhoff(&p, &ViscousParams::with_epsilon(1e3)).unwrap();
        assert!(rep.converged);
        assert!(u.per_edge().iter().flat_map(|g| &g.values).all(|v| (v - 1.0).abs() < 1e-2));
    }

    #[test]
    fn single_edge_tends_to_constant() {
        let p = problem("abs_shift", [0.0, 1.0], 1, 400, FarBc::default());
        let (u, rep) = solve_viscous_kirchhoff(&p, &ViscousParams::with_epsilon(0.025)).unwrap();
        assert!(rep.converged);
        assert!(u.edge(0).values.iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn selection_prediction() {
        assert_eq!(
            predict_selection(&problem("abs_shift", [0.0, 2.0], 2, 50, FarBc::default())),
            Selection::SelectsStateConstraint
        );
        assert_eq!(
            predict_selection(&problem("quadratic", [1.0, 1.0], 2, 50, FarBc::default())),
            Selection::NoGuarantee
        );
        assert_eq!(
            predict_selection(&problem("double_well", [-2.0, 0.0], 2, 50, FarBc::default())),
            Selection::SelectsStateConstraint
        );
    }

    #[test]
    fn sweep_validation() {
        let p = problem("abs_shift", [0.0, 1.0], 2, 400, FarBc::default());
        let bad = |eps: &[f64]| matches!(validate_sweep(&p, eps), Err(Error::InvalidSweep(_)));
        assert!(bad(&[0.2, 0.1]));
        assert!(bad(&[0.1, 0.2, 0.05]));
        assert!(bad(&[0.2, 0.1, 0.005]));
        assert!(validate_sweep(&p, &[0.2, 0.1, 0.05, 0.025]).is_ok());
        let err = validate_sweep(&p, &[0.1, 0.2, 0.05]).unwrap_err();
        assert!(err.to_string().contains("eps_list must decrease"));
    }

    #[test]
    fn classification_rules() {
        let rec = |eps: f64, v: f64, k: f64| SweepRecord {
            epsilon: eps,
            node_value: v,
            slopes: vec![],
            kirchhoff_sum: k,
            newton_iters: 0,
            residual: 0.0,
            converged: true,
            lipschitz: 0.0,
        };
        let near = [rec(0.2, 0.9, 0.0), rec(0.1, 0.95, 0.0), rec(0.05, 0.975, 0.0)];
        assert_eq!(classify_limit(&near, 1.0, DELTA_SC, DELTA_K), LimitClass::SelectsStateConstraint);
        let below = [rec(0.2, 0.3, 0.0), rec(0.1, 0.2, 0.0), rec(0.05, 0.1, 0.01)];
        assert_eq!(classify_limit(&below, 1.0, DELTA_SC, DELTA_K), LimitClass::KirchhoffLimit);
        let noisy = [rec(0.2, 0.3, 0.0), rec(0.1, 0.2, 0.0), rec(0.05, 0.1, 0.4)];
        assert_eq!(classify_limit(&noisy, 1.0, DELTA_SC, DELTA_K), LimitClass::Undetermined);
        assert!((richardson(&near).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_sweep_finds_kirchhoff_limit() {
        let p = problem("quadratic", [1.0, 1.0], 2, 400, FarBc::default());
        let rep = epsilon_sweep(&p, &[0.2, 0.1, 0.05, 0.025], &ViscousParams::default()).unwrap();
        assert!(rep.records.iter().all(|r| r.converged), "{rep:?}");
        assert_eq!(rep.classification, LimitClass::KirchhoffLimit, "{rep:?}");
        assert!(rep.extrapolated < rep.sc_reference - 0.05);
    }
}
