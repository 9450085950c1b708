//! Hamiltonians `H(p, x)` on a single edge, their probing (coercivity bound,
//! minima, shape) and the envelope constructions used at the junction.
//!
//! A [`Hamiltonian`] is immutable after construction and cheap to clone: the
//! evaluation form sits behind an `Arc`, so one instance can be shared by
//! several solvers and threads.

mod envelope;
pub mod expr;
mod planar;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{golden_section_min, linspace, sampled_lipschitz, sampled_min};

pub use envelope::{
    make_flux_limiter, nonincreasing_part, rightward_min_threshold, FluxLimiter, SlopeEnvelope,
};
pub use expr::Expr;
pub use planar::{reduce_2d, Axis, Hamiltonian2D};

/// Hard cap for the coercivity probe.
pub const COERCIVITY_CAP: f64 = 1e4;
/// Default number of sampling intervals used by [`find_minima`].
pub const MINIMA_RESOLUTION: usize = 4096;

const MERGE_TOL: f64 = 1e-6;
const REFINE_TOL: f64 = 1e-8;

/// Closed-form families. `b` shifts the slope, `c` shifts the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `|p - b| - c`
    AbsShift,
    /// `(p - b)^2 - c`
    Quadratic,
    /// `((p - b)^2 - 1)^2 - c`
    DoubleWell,
    /// Free-form text, see [`parse_expression`].
    Expression,
}

impl Family {
    pub fn from_name(name: &str) -> Result<Family> {
        match name {
            "abs_shift" => Ok(Family::AbsShift),
            "quadratic" => Ok(Family::Quadratic),
            "double_well" => Ok(Family::DoubleWell),
            "expression" => Ok(Family::Expression),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::AbsShift => "abs_shift",
            Family::Quadratic => "quadratic",
            Family::DoubleWell => "double_well",
            Family::Expression => "expression",
        }
    }
}

/// Where a Hamiltonian came from; carried into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSource {
    Builtin { family: Family, b: f64, c: f64 },
    Expression { expr: String },
    Derived { description: String },
}

impl fmt::Display for HamiltonianSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HamiltonianSource::Builtin { family, b, c } => write!(f, "{}(b={b}, c={c})", family.name()),
            HamiltonianSource::Expression { expr } => write!(f, "expr({expr})"),
            HamiltonianSource::Derived { description } => f.write_str(description),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ShapeFlags {
    pub quasiconvex: bool,
    pub convex: bool,
    pub no_flat_parts: bool,
}

#[derive(Debug)]
enum Form {
    AbsShift { b: f64, c: f64 },
    Quadratic { b: f64, c: f64 },
    DoubleWell { b: f64, c: f64 },
    Expr(Expr),
    /// `H(min(p, p0), 0)`
    NonincreasingPart { inner: Hamiltonian, p0: f64 },
    /// `H(-p, x)`
    Reflected(Hamiltonian),
    /// `min_q H2(p, q, x, 0)` (axis 1) or `min_q H2(q, p, 0, x)` (axis 2)
    Reduced {
        h2: Hamiltonian2D,
        axis: Axis,
        resolution: usize,
    },
}

/// A continuous Hamiltonian `H(p, x)` for one edge, `x` in `[-a, 0]`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    form: Arc<Form>,
    source: HamiltonianSource,
    coercivity_level: f64,
    coercivity_bound: f64,
    minima: Vec<f64>,
    shape: ShapeFlags,
    x_samples: Vec<f64>,
}

/// Builds a closed-form Hamiltonian. `params` is `[b, c]` for every family.
///
/// Minima and shape flags are set analytically; the coercivity bound is
/// probed at the default level.
pub fn make_builtin(family: &str, params: &[f64]) -> Result<Hamiltonian> {
    let fam = Family::from_name(family)?;
    if fam == Family::Expression {
        return Err(Error::MalformedParams {
            family: family.into(),
            reason: "expression Hamiltonians take source text, not parameters".into(),
        });
    }
    if params.len() != 2 {
        return Err(Error::MalformedParams {
            family: family.into(),
            reason: format!("expected 2 parameters [b, c], got {}", params.len()),
        });
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::MalformedParams {
            family: family.into(),
            reason: "parameters must be finite".into(),
        });
    }
    let (b, c) = (params[0], params[1]);
    let (form, minima, shape) = match fam {
        Family::AbsShift => (
            Form::AbsShift { b, c },
            vec![b],
            ShapeFlags {
                quasiconvex: true,
                convex: true,
                no_flat_parts: true,
            },
        ),
        Family::Quadratic => (
            Form::Quadratic { b, c },
            vec![b],
            ShapeFlags {
                quasiconvex: true,
                convex: true,
                no_flat_parts: true,
            },
        ),
        Family::DoubleWell => (
            Form::DoubleWell { b, c },
            vec![b - 1.0, b + 1.0],
            ShapeFlags {
                quasiconvex: false,
                convex: false,
                no_flat_parts: true,
            },
        ),
        Family::Expression => unreachable!(),
    };
    let mut h = Hamiltonian {
        form: Arc::new(form),
        source: HamiltonianSource::Builtin { family: fam, b, c },
        coercivity_level: 0.0,
        coercivity_bound: 0.0,
        minima,
        shape,
        x_samples: vec![0.0],
    };
    let level = h.default_level();
    h.coercivity_bound = probe_coercivity(&h, level, &h.x_samples)?;
    h.coercivity_level = level;
    Ok(h)
}

/// Parses an expression in `p` and `x` into a Hamiltonian; bound, minima and
/// shape flags are determined by sampling on `x` in `[-1, 0]`.
pub fn parse_expression(src: &str) -> Result<Hamiltonian> {
    let expr = Expr::parse(src, &["p", "x"])?;
    let x_samples = if expr.uses("x") {
        linspace(-1.0, 0.0, 8)
    } else {
        vec![0.0]
    };
    let h = Hamiltonian {
        form: Arc::new(Form::Expr(expr)),
        source: HamiltonianSource::Expression {
            expr: src.to_string(),
        },
        coercivity_level: 0.0,
        coercivity_bound: 0.0,
        minima: Vec::new(),
        shape: ShapeFlags::default(),
        x_samples,
    };
    h.probed()
}

/// Smallest probed `P` such that `H(+-q, x) >= level` for every probed
/// `q >= P` and every `x` in `x_samples` (doubling search, then a scan and a
/// bisection to 1e-3).
pub fn probe_coercivity(h: &Hamiltonian, level: f64, x_samples: &[f64]) -> Result<f64> {
    if !level.is_finite() {
        return Err(Error::Precondition("coercivity level must be finite".into()));
    }
    let xs: &[f64] = if x_samples.is_empty() { &[0.0] } else { x_samples };
    let g = |q: f64| -> Result<f64> {
        let mut m = f64::INFINITY;
        for &x in xs {
            for p in [q, -q] {
                let v = h.value(p, x);
                if v.is_nan() {
                    return Err(Error::NotFinite { p, x });
                }
                m = m.min(v);
            }
        }
        Ok(m)
    };
    let mut hi = 1.0;
    let band_ok = |hi: f64| -> Result<bool> {
        for q in linspace(hi, 2.0 * hi, 64) {
            if g(q)? < level {
                return Ok(false);
            }
        }
        Ok(true)
    };
    while !band_ok(hi)? {
        hi *= 2.0;
        if hi > COERCIVITY_CAP {
            return Err(Error::NotCoercive {
                level,
                cap: COERCIVITY_CAP,
            });
        }
    }
    // Last sampled failure below `hi`, then bisect the crossing.
    let n = 2048;
    let pts = linspace(0.0, 2.0 * hi, n);
    let mut last_fail = None;
    for (k, &q) in pts.iter().enumerate() {
        if g(q)? < level {
            last_fail = Some(k);
        }
    }
    let p = match last_fail {
        None => 0.0,
        Some(k) => {
            let (mut a, mut b) = (pts[k], pts[(k + 1).min(n)]);
            while b - a > 1e-4 {
                let m = 0.5 * (a + b);
                if g(m)? < level {
                    a = m;
                } else {
                    b = m;
                }
            }
            b
        }
    };
    Ok(p.max(1e-3))
}

/// Local minimizers of `p -> H(p, 0)` on `[-bound, bound]`, each refined by
/// golden-section search to 1e-8, sorted, with duplicates within 1e-6 merged.
/// A flat bottom contributes both of its sampled ends.
pub fn find_minima(h: &Hamiltonian, bound: f64, resolution: usize) -> Vec<f64> {
    minima_of(|p| h.value(p, 0.0), bound, resolution)
}

pub(crate) fn minima_of<F: Fn(f64) -> f64>(f: F, bound: f64, resolution: usize) -> Vec<f64> {
    let n = resolution.max(64);
    let pts = linspace(-bound, bound, n);
    let vals: Vec<f64> = pts.iter().map(|&p| f(p)).collect();
    let flat = |a: f64, b: f64| (a - b).abs() <= 1e-13 * (1.0 + a.abs());
    let mut found = Vec::new();
    let mut i = 1;
    while i < n {
        let mut j = i;
        while j < n && flat(vals[j + 1], vals[i]) {
            j += 1;
        }
        let left_higher = vals[i - 1] > vals[i] && !flat(vals[i - 1], vals[i]);
        let right_higher = j < n && vals[j + 1] > vals[j] && !flat(vals[j + 1], vals[j]);
        if left_higher && right_higher {
            if i == j {
                let (p, _) = golden_section_min(&f, pts[i - 1], pts[i + 1], REFINE_TOL);
                found.push(p);
            } else {
                found.push(pts[i]);
                found.push(pts[j]);
            }
        }
        i = j + 1;
    }
    found.sort_by(f64::total_cmp);
    found.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    found
}

fn detect_shape<F: Fn(f64) -> f64>(f: F, bound: f64, n: usize) -> ShapeFlags {
    let pts = linspace(-bound, bound, n);
    let vals: Vec<f64> = pts.iter().map(|&p| f(p)).collect();
    let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let convex = vals
        .windows(3)
        .all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-9 * scale);
    let no_flat_parts = vals
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() > 1e-13 * (1.0 + w[0].abs()));
    // nonincreasing, then nondecreasing
    let mut rising = false;
    let mut quasiconvex = true;
    for w in vals.windows(2) {
        let d = w[1] - w[0];
        if d > 1e-12 * scale {
            rising = true;
        } else if d < -1e-12 * scale && rising {
            quasiconvex = false;
            break;
        }
    }
    ShapeFlags {
        quasiconvex,
        convex,
        no_flat_parts,
    }
}

impl Hamiltonian {
    /// `H(p, x)`.
    #[inline]
    pub fn value(&self, p: f64, x: f64) -> f64 {
        match &*self.form {
            Form::AbsShift { b, c } => (p - b).abs() - c,
            Form::Quadratic { b, c } => (p - b) * (p - b) - c,
            Form::DoubleWell { b, c } => {
                let s = (p - b) * (p - b) - 1.0;
                s * s - c
            }
            Form::Expr(e) => e.eval(&[p, x]),
            Form::NonincreasingPart { inner, p0 } => inner.value(p.min(*p0), 0.0),
            Form::Reflected(inner) => inner.value(-p, x),
            Form::Reduced {
                h2,
                axis,
                resolution,
            } => {
                let bound = h2.coercivity_bound();
                let f = |q: f64| match axis {
                    Axis::First => h2.value(p, q, x, 0.0),
                    Axis::Second => h2.value(q, p, 0.0, x),
                };
                sampled_min(f, -bound, bound, *resolution).1
            }
        }
    }

    pub fn source(&self) -> &HamiltonianSource {
        &self.source
    }

    pub fn coercivity_bound(&self) -> f64 {
        self.coercivity_bound
    }

    pub fn coercivity_level(&self) -> f64 {
        self.coercivity_level
    }

    /// Local minimizers of `p -> H(p, 0)`, ascending.
    pub fn minima(&self) -> &[f64] {
        &self.minima
    }

    pub fn shape(&self) -> ShapeFlags {
        self.shape
    }

    pub fn x_samples(&self) -> &[f64] {
        &self.x_samples
    }

    /// `1 + max_x |H(0, x)|`: solution values are bounded by `max_x |H(0, x)|`,
    /// so every solution slope satisfies `H(p, x) < level`.
    pub fn default_level(&self) -> f64 {
        1.0 + self
            .x_samples
            .iter()
            .map(|&x| self.value(0.0, x).abs())
            .fold(0.0, f64::max)
    }

    /// Replaces the minima list (problem files may pin it explicitly).
    pub fn with_minima(mut self, mut minima: Vec<f64>) -> Result<Self> {
        if minima.is_empty() || minima.iter().any(|m| !m.is_finite()) {
            return Err(Error::MalformedParams {
                family: self.source.to_string(),
                reason: "minima override must be a non-empty list of finite slopes".into(),
            });
        }
        minima.sort_by(f64::total_cmp);
        if minima.iter().any(|m| m.abs() >= self.coercivity_bound) {
            return Err(Error::MalformedParams {
                family: self.source.to_string(),
                reason: format!(
                    "minima override must lie in (-P, P) with P = {}",
                    self.coercivity_bound
                ),
            });
        }
        self.minima = minima;
        Ok(self)
    }

    /// Re-probes coercivity over positions in `[-length, 0]` and refreshes the
    /// derived data (bound, minima, shape) for sampled forms.
    pub fn for_edge_length(mut self, length: f64) -> Result<Self> {
        self.x_samples = if self.x_independent() {
            vec![0.0]
        } else {
            linspace(-length, 0.0, 16)
        };
        let level = self.default_level().max(self.coercivity_level);
        let bound = probe_coercivity(&self, level, &self.x_samples)?;
        self.coercivity_level = level;
        self.coercivity_bound = bound;
        if matches!(*self.form, Form::Expr(_) | Form::Reduced { .. } | Form::Reflected(_)) {
            self.minima = find_minima(&self, bound, MINIMA_RESOLUTION);
        }
        Ok(self)
    }

    /// Re-probes the coercivity bound at a higher level; a no-op when `level`
    /// does not exceed the current one.
    pub fn at_level(mut self, level: f64) -> Result<Self> {
        if level <= self.coercivity_level {
            return Ok(self);
        }
        let bound = probe_coercivity(&self, level, &self.x_samples)?;
        self.coercivity_level = level;
        self.coercivity_bound = bound;
        if matches!(*self.form, Form::Expr(_) | Form::Reduced { .. } | Form::Reflected(_)) {
            self.minima = find_minima(&self, bound, MINIMA_RESOLUTION);
        }
        Ok(self)
    }

    /// `p -> H(-p, x)`: the same Hamiltonian written in the coordinate that
    /// points away from the junction.
    pub fn reflected(&self) -> Hamiltonian {
        let mut minima: Vec<f64> = self.minima.iter().map(|m| -m).collect();
        minima.sort_by(f64::total_cmp);
        Hamiltonian {
            form: Arc::new(Form::Reflected(self.clone())),
            source: HamiltonianSource::Derived {
                description: format!("reflect({})", self.source),
            },
            coercivity_level: self.coercivity_level,
            coercivity_bound: self.coercivity_bound,
            minima,
            shape: self.shape,
            x_samples: self.x_samples.clone(),
        }
    }

    /// Sampled Lipschitz constant of `p -> H(p, x)` on `[lo, hi]`, maximized
    /// over the stored position samples and `extra_x`.
    pub fn slope_lipschitz(&self, lo: f64, hi: f64, extra_x: &[f64]) -> f64 {
        let extra = if self.x_independent() { &[][..] } else { extra_x };
        self.x_samples
            .iter()
            .chain(extra)
            .map(|&x| sampled_lipschitz(|p| self.value(p, x), lo, hi, 2048))
            .fold(0.0, f64::max)
    }

    /// Envelope of `H(., x)` built from the minima at `x` (stored minima when
    /// `x == 0`, a fresh search otherwise).
    pub fn envelope_at(&self, x: f64) -> SlopeEnvelope {
        SlopeEnvelope::new(self.clone(), x)
    }

    pub(crate) fn minima_at(&self, x: f64) -> Vec<f64> {
        if x == 0.0 || self.x_independent() {
            self.minima.clone()
        } else {
            minima_of(|p| self.value(p, x), self.coercivity_bound, MINIMA_RESOLUTION)
        }
    }

    /// Whether `H` is known not to depend on `x`.
    pub fn x_independent(&self) -> bool {
        match &*self.form {
            Form::AbsShift { .. } | Form::Quadratic { .. } | Form::DoubleWell { .. } => true,
            Form::NonincreasingPart { .. } => true,
            Form::Reflected(inner) => inner.x_independent(),
            Form::Expr(e) => !e.uses("x"),
            Form::Reduced { h2, .. } => !h2.depends_on_position(),
        }
    }

    fn probed(mut self) -> Result<Self> {
        let level = self.default_level();
        let bound = probe_coercivity(&self, level, &self.x_samples)?;
        for &x in &self.x_samples {
            for p in linspace(-bound, bound, 64) {
                let v = self.value(p, x);
                if !v.is_finite() {
                    return Err(Error::NotFinite { p, x });
                }
            }
        }
        self.coercivity_level = level;
        self.coercivity_bound = bound;
        self.minima = find_minima(&self, bound, MINIMA_RESOLUTION);
        self.shape = detect_shape(|p| self.value(p, 0.0), bound, MINIMA_RESOLUTION);
        Ok(self)
    }

    pub(crate) fn from_reduced(h2: Hamiltonian2D, axis: Axis, resolution: usize) -> Result<Self> {
        let description = format!("reduce({}, axis {})", h2.source(), axis.index());
        let independent = !h2.depends_on_position();
        let h = Hamiltonian {
            form: Arc::new(Form::Reduced {
                h2,
                axis,
                resolution,
            }),
            source: HamiltonianSource::Derived { description },
            coercivity_level: 0.0,
            coercivity_bound: 0.0,
            minima: Vec::new(),
            shape: ShapeFlags::default(),
            x_samples: if independent {
                vec![0.0]
            } else {
                linspace(-1.0, 0.0, 4)
            },
        };
        h.probed()
    }

    pub(crate) fn from_nonincreasing(inner: &Hamiltonian, p0: f64) -> Self {
        Hamiltonian {
            form: Arc::new(Form::NonincreasingPart {
                inner: inner.clone(),
                p0,
            }),
            source: HamiltonianSource::Derived {
                description: format!("nonincreasing_part({})", inner.source),
            },
            coercivity_level: inner.coercivity_level,
            coercivity_bound: inner.coercivity_bound,
            minima: vec![p0],
            shape: ShapeFlags {
                quasiconvex: true,
                convex: inner.shape.convex,
                no_flat_parts: false,
            },
            x_samples: vec![0.0],
        }
    }
}
