//! Seeded invariant checks over builtin fixtures.

use std::sync::Arc;

use hjj_core::edge::{check_dirichlet_structure, solve_edge, EdgeScheme, NodeBc};
use hjj_core::fatten::{build_fat_domain, GridFunction2D, Scheme2D};
use hjj_core::hamiltonian::{make_builtin, reduce_2d, Axis};
use hjj_core::junction::{
    compare_grid_functions, solve_flux_limited, solve_junction_constructive, solve_junction_direct,
    JunctionScheme,
};
use hjj_core::viscous::{solve_viscous_kirchhoff, viscous_residual, ViscousParams};
use hjj_core::{
    EdgeSpec, FarBc, Hamiltonian, Hamiltonian2D, JunctionCondition, JunctionProblem, Result, SolverParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fixtures::{abs_star, flux_limited_fixtures, junction_fixtures};
use crate::report::CheckResult;

/// Allowed decrease of an update under an upward perturbation.
pub const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub violations: usize,
    /// Largest decrease of any update seen; nonpositive when all passed.
    pub worst_decrease: f64,
}

impl TrialSummary {
    fn new(trials: usize) -> Self {
        TrialSummary {
            trials,
            violations: 0,
            worst_decrease: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, decreases: impl IntoIterator<Item = f64>) {
        let worst = decreases.into_iter().fold(f64::NEG_INFINITY, f64::max);
        self.worst_decrease = self.worst_decrease.max(worst);
        if !(worst <= MONOTONE_TOL) {
            self.violations += 1;
        }
    }
}

fn random_builtin(rng: &mut ChaCha8Rng, quasiconvex: bool) -> Result<Hamiltonian> {
    let families: &[&str] = if quasiconvex {
        &["abs_shift", "quadratic"]
    } else {
        &["abs_shift", "quadratic", "double_well"]
    };
    let family = families[rng.gen_range(0..families.len())];
    make_builtin(family, &[rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0)])
}

/// Interior 1-D update: nondecreasing in both neighbours and, at the
/// explicit step, in the centre value. Slopes are drawn from `[-P, P]`.
pub fn interior_monotonicity_trials(seed: u64, trials: usize) -> Result<TrialSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1d);
    let mut out = TrialSummary::new(trials);
    for _ in 0..trials {
        let h = random_builtin(&mut rng, false)?;
        let n = rng.gen_range(8..=200);
        let scheme = EdgeScheme::new(&h, EdgeSpec::new(rng.gen_range(0.5..2.0), n, FarBc::default())?)?;
        let dx = scheme.spacing();
        let bound = h.coercivity_bound();
        let j = rng.gen_range(1..n);
        let c = rng.gen_range(-2.0..2.0);
        let l = c - dx * rng.gen_range(-bound..bound);
        let r = c + dx * rng.gen_range(-bound..bound);
        let d = dx * bound * rng.gen_range(0.0..1.0);
        let dt = scheme.max_dt(0.9);
        let base = scheme.interior_update(j, l, c, r, dt);
        out.record([
            base - scheme.interior_update(j, l + d, c, r, dt),
            base - scheme.interior_update(j, l, c, r + d, dt),
            base - scheme.interior_update(j, l, c + d, r, dt),
        ]);
    }
    Ok(out)
}

/// Junction node: the residual is nonincreasing in every neighbour and the
/// explicit update is nondecreasing in the node value, for state-constraint
/// and flux-limited nodes with one to four edges.
pub fn node_monotonicity_trials(seed: u64, trials: usize) -> Result<TrialSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2e);
    let mut out = TrialSummary::new(trials);
    for _ in 0..trials {
        let k = rng.gen_range(1..=4);
        let flux = rng.gen_bool(0.5);
        let hams = (0..k)
            .map(|_| random_builtin(&mut rng, flux))
            .collect::<Result<Vec<_>>>()?;
        let n = rng.gen_range(8..=200);
        let edges = (0..k)
            .map(|_| EdgeSpec::new(rng.gen_range(0.5..2.0), n, FarBc::default()))
            .collect::<Result<Vec<_>>>()?;
        let condition = if flux {
            JunctionCondition::FluxLimited {
                a: rng.gen_range(-2.0..1.0),
            }
        } else {
            JunctionCondition::StateConstraint
        };
        let problem = JunctionProblem::new(edges, hams, condition)?;
        let scheme = JunctionScheme::new(&problem)?;
        let reach: Vec<f64> = problem
            .edges()
            .iter()
            .zip(problem.hamiltonians())
            .map(|(e, h)| e.spacing() * h.coercivity_bound())
            .collect();
        let u0 = rng.gen_range(-2.0..2.0);
        let before: Vec<f64> = reach.iter().map(|&m| u0 - rng.gen_range(-m..m)).collect();
        let base = scheme.node_residual(u0, &before);
        let i = rng.gen_range(0..k);
        let mut raised = before.clone();
        raised[i] += reach[i] * rng.gen_range(0.0..1.0);
        let d = reach.iter().copied().fold(f64::INFINITY, f64::min) * rng.gen_range(0.0..1.0);
        let dt = scheme.explicit_dt(0.9);
        let update = |v: f64| v - dt * scheme.node_residual(v, &before);
        out.record([
            scheme.node_residual(u0, &raised) - base,
            update(u0) - update(u0 + d),
        ]);
    }
    Ok(out)
}

/// One explicit step of the tube scheme is order preserving: raising one
/// value never lowers any updated value.
pub fn planar_monotonicity_trials(seed: u64, trials: usize) -> Result<TrialSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3f);
    let domain = Arc::new(build_fat_domain(1.0, 0.8, 0.2, 0.025)?);
    let hams = [
        Hamiltonian2D::anisotropic_quadratic(10.0, 2.0)?,
        Hamiltonian2D::max_of(make_builtin("abs_shift", &[0.0, 1.0])?, make_builtin("abs_shift", &[0.0, 2.0])?)?,
        Hamiltonian2D::parse("p1^2 + p1*p2 + 2*p2^2 - 1 + x1")?,
    ];
    let schemes: Vec<Scheme2D> = hams.iter().map(|h| Scheme2D::new(h, domain.clone())).collect();
    let h2 = domain.h2();
    let mut out = TrialSummary::new(trials);
    for _ in 0..trials {
        let s = rng.gen_range(0..schemes.len());
        let bound = hams[s].coercivity_bound();
        let (a, b) = (
            rng.gen_range(-0.5 * bound..0.5 * bound),
            rng.gen_range(-0.5 * bound..0.5 * bound),
        );
        let noise = 0.25 * h2 * bound;
        let mut u = GridFunction2D::constant(domain.clone(), 0.0);
        for (c, v) in u.values.iter_mut().enumerate() {
            let (x1, x2) = domain.position(c);
            *v = a * x1 + b * x2 + rng.gen_range(-noise..noise);
        }
        let mut raised = u.clone();
        let cell = rng.gen_range(0..domain.len());
        raised.values[cell] += 0.5 * h2 * bound * rng.gen_range(0.0..1.0);
        let dt = schemes[s].explicit_dt(0.9);
        let base = schemes[s].explicit_step(&u, dt);
        let moved = schemes[s].explicit_step(&raised, dt);
        out.record(base.values.iter().zip(&moved.values).map(|(x, y)| x - y));
    }
    Ok(out)
}

struct Checks(Vec<CheckResult>);

impl Checks {
    /// Passes when `value <= tolerance`.
    fn at_most(&mut self, suite: &str, check: impl Into<String>, value: f64, tolerance: f64) {
        self.0.push(CheckResult {
            suite: suite.into(),
            check: check.into(),
            passed: value <= tolerance,
            value,
            tolerance,
        });
    }
}

fn max_error(u: &hjj_core::GridFunction1D, exact: impl Fn(f64) -> f64) -> f64 {
    u.positions()
        .zip(&u.values)
        .map(|(x, v)| (v - exact(x)).abs())
        .fold(0.0, f64::max)
}

/// Runs every suite; `trials` randomized cases per monotonicity check.
pub fn run_checks(seed: u64, trials: usize, params: &SolverParams) -> Result<Vec<CheckResult>> {
    let mut ck = Checks(Vec::new());

    for family in ["abs_shift", "quadratic", "double_well"] {
        let h = make_builtin(family, &[0.3, 1.0])?;
        let p = h.coercivity_bound();
        let margin = (0..=64)
            .map(|k| p * (1.0 + k as f64 / 64.0))
            .flat_map(|q| [h.value(q, 0.0), h.value(-q, 0.0)])
            .fold(f64::INFINITY, f64::min)
            - h.coercivity_level();
        ck.at_most("hamiltonians", format!("coercive_beyond_bound[{family}]"), -margin, 0.0);
    }
    let aniso = Hamiltonian2D::anisotropic_quadratic(10.0, 0.0)?;
    let r1 = reduce_2d(&aniso, Axis::First, 64)?;
    let r2 = reduce_2d(&aniso, Axis::Second, 64)?;
    let gap = aniso.value(1.0, 1.0, 0.0, 0.0) - r1.value(1.0, 0.0).max(r2.value(1.0, 0.0));
    ck.at_most("hamiltonians", "max_form_differs_from_sum", (gap - 1.0).abs(), 1e-12);

    let abs1 = make_builtin("abs_shift", &[0.0, 1.0])?;
    let edge = EdgeSpec::new(1.0, 400, FarBc::default())?;
    let (u, _) = solve_edge(&abs1, &edge, NodeBc::StateConstraint, params)?;
    ck.at_most("edge", "state_constraint_constant", max_error(&u, |_| 1.0), 1e-2);
    let (u, _) = solve_edge(&abs1, &edge, NodeBc::Dirichlet { value: 0.0 }, params)?;
    ck.at_most("edge", "dirichlet_exponential", max_error(&u, |x| 1.0 - x.exp()), 1e-2);
    let cs: Vec<f64> = (0..8).map(|k| -1.5 + 0.3 * k as f64).collect();
    let rep = check_dirichlet_structure(&abs1, &edge, &cs, params)?;
    ck.at_most("edge", "dirichlet_structure", if rep.passed() { 0.0 } else { 1.0 }, 0.0);
    let slope_gap = rep
        .records
        .iter()
        .map(|r| (r.slope - (r.c - 1.0)).abs())
        .fold(0.0, f64::max);
    ck.at_most("edge", "dirichlet_slope_is_c_minus_1", slope_gap, 5e-3);

    for (name, t) in [
        ("monotone_interior_1d", interior_monotonicity_trials(seed, trials)?),
        ("monotone_node", node_monotonicity_trials(seed, trials)?),
        ("monotone_interior_2d", planar_monotonicity_trials(seed, trials)?),
    ] {
        ck.at_most("scheme", name, t.violations as f64, 0.0);
    }

    for fx in junction_fixtures(200)? {
        let (direct, _) = solve_junction_direct(&fx.problem, params)?;
        let (built, _) = solve_junction_constructive(&fx.problem, params)?;
        let tol = 5e-2f64.max(3.0 * fx.problem.max_spacing().sqrt());
        ck.at_most("junction", format!("direct_vs_constructive[{}]", fx.name), direct.max_distance(&built)?, tol);
        let min_sc = fx
            .problem
            .edges()
            .iter()
            .zip(fx.problem.hamiltonians())
            .map(|(e, h)| solve_edge(h, e, NodeBc::StateConstraint, params).map(|(g, _)| g.node_value()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        ck.at_most(
            "junction",
            format!("node_value_is_min_of_edges[{}]", fx.name),
            (direct.node_value() - min_sc).abs(),
            2e-2,
        );
    }

    for fx in flux_limited_fixtures(200)? {
        let JunctionCondition::FluxLimited { a } = fx.problem.condition() else {
            unreachable!("flux-limited fixture")
        };
        let (u, _) = solve_flux_limited(&fx.problem, params)?;
        ck.at_most("flux_limited", format!("node_below_minus_A[{}]", fx.name), u.node_value() + a, 2e-2);
        let scheme = JunctionScheme::new(&fx.problem)?;
        let mut worst: f64 = f64::NEG_INFINITY;
        for delta in [0.01, 0.1, 0.5] {
            let down = u.shifted(-delta);
            let up = u.shifted(delta);
            worst = worst
                .max(scheme.residuals(&down)?.max())
                .max(compare_grid_functions(&down, &u)?)
                .max(-scheme.residuals(&up)?.min())
                .max(compare_grid_functions(&u, &up)?);
        }
        ck.at_most("flux_limited", format!("shift_comparison[{}]", fx.name), worst, 10.0 * params.tol);
    }

    let star = abs_star(2, 400, FarBc::Dirichlet { value: 0.0 })?;
    let (u, rep) = solve_viscous_kirchhoff(&star, &ViscousParams::with_epsilon(0.05))?;
    let res = viscous_residual(&star, &u, 0.05)?;
    let worst = if rep.converged { res.edges.max(res.node) } else { f64::INFINITY };
    ck.at_most("viscous", "kirchhoff_identity", worst, 1e-8);

    Ok(ck.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trials_are_seeded() {
        let a = interior_monotonicity_trials(7, 50).unwrap();
        let b = interior_monotonicity_trials(7, 50).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
        assert_eq!(node_monotonicity_trials(3, 50).unwrap().violations, 0);
        assert_eq!(planar_monotonicity_trials(3, 20).unwrap().violations, 0);
    }
}
