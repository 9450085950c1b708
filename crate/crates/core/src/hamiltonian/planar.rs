use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{expr::Expr, Hamiltonian, COERCIVITY_CAP};
use crate::error::{Error, Result};
use crate::numerics::linspace;

/// Coordinate axis of the two-edge fattened junction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    First,
    Second,
}

impl Axis {
    pub fn from_index(i: usize) -> Result<Axis> {
        match i {
            1 => Ok(Axis::First),
            2 => Ok(Axis::Second),
            other => Err(Error::Precondition(format!("axis must be 1 or 2, got {other}"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::First => 1,
            Axis::Second => 2,
        }
    }
}

enum Form2 {
    Expr(Expr),
    /// `max(H1(p1, x1), H2(p2, x2))`
    MaxOf(Hamiltonian, Hamiltonian),
    /// `p1^2 + k p2^2 - c`
    Anisotropic { k: f64, c: f64 },
}

impl fmt::Debug for Form2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form2::Expr(e) => write!(f, "Expr({:?})", e.source()),
            Form2::MaxOf(a, b) => write!(f, "MaxOf({}, {})", a.source(), b.source()),
            Form2::Anisotropic { k, c } => write!(f, "Anisotropic {{ k: {k}, c: {c} }}"),
        }
    }
}

/// A coercive Hamiltonian `H(p1, p2, x1, x2)` on the plane.
#[derive(Debug, Clone)]
pub struct Hamiltonian2D {
    form: Arc<Form2>,
    source: String,
    coercivity_level: f64,
    coercivity_bound: f64,
}

impl Hamiltonian2D {
    /// Expression in `p1, p2, x1, x2`.
    pub fn parse(src: &str) -> Result<Self> {
        let e = Expr::parse(src, &["p1", "p2", "x1", "x2"])?;
        Self::probed(Form2::Expr(e), format!("expr2({src})"))
    }

    /// `max(H1(p1, x1), H2(p2, x2))`.
    pub fn max_of(h1: Hamiltonian, h2: Hamiltonian) -> Result<Self> {
        let source = format!("max({}, {})", h1.source(), h2.source());
        Self::probed(Form2::MaxOf(h1, h2), source)
    }

    /// `p1^2 + k p2^2 - c` with `k > 0`.
    pub fn anisotropic_quadratic(k: f64, c: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite() && c.is_finite()) {
            return Err(Error::MalformedParams {
                family: "anisotropic_quadratic".into(),
                reason: "need finite k > 0 and finite c".into(),
            });
        }
        Self::probed(
            Form2::Anisotropic { k, c },
            format!("p1^2 + {k} p2^2 - {c}"),
        )
    }

    #[inline]
    pub fn value(&self, p1: f64, p2: f64, x1: f64, x2: f64) -> f64 {
        match &*self.form {
            Form2::Expr(e) => e.eval(&[p1, p2, x1, x2]),
            Form2::MaxOf(a, b) => a.value(p1, x1).max(b.value(p2, x2)),
            Form2::Anisotropic { k, c } => p1 * p1 + k * p2 * p2 - c,
        }
    }

    pub fn coercivity_bound(&self) -> f64 {
        self.coercivity_bound
    }

    /// Whether the value may depend on `(x1, x2)`.
    pub fn depends_on_position(&self) -> bool {
        match &*self.form {
            Form2::Expr(e) => e.uses("x1") || e.uses("x2"),
            Form2::MaxOf(a, b) => !(a.x_independent() && b.x_independent()),
            Form2::Anisotropic { .. } => false,
        }
    }

    pub fn coercivity_level(&self) -> f64 {
        self.coercivity_level
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Sampled Lipschitz constants in `p1` and `p2` over the square
    /// `[-r, r]^2` at the given positions.
    pub fn slope_lipschitz(&self, r: f64, positions: &[(f64, f64)]) -> (f64, f64) {
        let n = 128;
        let grid = linspace(-r, r, n);
        let mut t1: f64 = 0.0;
        let mut t2: f64 = 0.0;
        for &(x1, x2) in positions {
            for &a in &grid {
                for w in grid.windows(2) {
                    let d = w[1] - w[0];
                    t1 = t1.max(((self.value(w[1], a, x1, x2) - self.value(w[0], a, x1, x2)) / d).abs());
                    t2 = t2.max(((self.value(a, w[1], x1, x2) - self.value(a, w[0], x1, x2)) / d).abs());
                }
            }
        }
        (t1, t2)
    }

    fn probed(form: Form2, source: String) -> Result<Self> {
        let mut h = Hamiltonian2D {
            form: Arc::new(form),
            source,
            coercivity_level: 0.0,
            coercivity_bound: 0.0,
        };
        let positions = default_positions();
        let level = 1.0
            + positions
                .iter()
                .map(|&(x1, x2)| h.value(0.0, 0.0, x1, x2).abs())
                .fold(0.0, f64::max);
        h.coercivity_bound = probe_square(&h, level, &positions)?;
        h.coercivity_level = level;
        Ok(h)
    }
}

fn default_positions() -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = linspace(-1.0, 0.0, 4).into_iter().map(|x| (x, 0.0)).collect();
    v.extend(linspace(-1.0, 0.0, 4).into_iter().map(|x| (0.0, x)));
    v
}

/// Smallest probed `P` with `H >= level` on the square boundaries
/// `max(|p1|, |p2|) = q` for every probed `q >= P`.
fn probe_square(h: &Hamiltonian2D, level: f64, positions: &[(f64, f64)]) -> Result<f64> {
    let ring = |q: f64| -> Result<f64> {
        let mut m = f64::INFINITY;
        for t in linspace(-q, q, 32) {
            for &(x1, x2) in positions {
                for (a, b) in [(q, t), (-q, t), (t, q), (t, -q)] {
                    let v = h.value(a, b, x1, x2);
                    if v.is_nan() {
                        return Err(Error::NotFinite { p: a, x: x1 });
                    }
                    m = m.min(v);
                }
            }
        }
        Ok(m)
    };
    let mut hi = 1.0;
    let band_ok = |hi: f64| -> Result<bool> {
        for q in linspace(hi, 2.0 * hi, 64) {
            if ring(q)? < level {
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
    let n = 256;
    let pts = linspace(0.0, 2.0 * hi, n);
    let mut last_fail = None;
    for (k, &q) in pts.iter().enumerate() {
        if ring(q)? < level {
            last_fail = Some(k);
        }
    }
    let p = match last_fail {
        None => 0.0,
        Some(k) => {
            let (mut a, mut b) = (pts[k], pts[(k + 1).min(n)]);
            while b - a > 1e-4 {
                let m = 0.5 * (a + b);
                if ring(m)? < level {
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

/// Reduced Hamiltonian along one axis: `H1(p, x) = min_q H(p, q, x, 0)` or
/// `H2(p, x) = min_q H(q, p, 0, x)`, minimizing over `q` in `[-P, P]` on a
/// `resolution`-interval grid with a golden-section refinement.
pub fn reduce_2d(h2: &Hamiltonian2D, axis: Axis, resolution: usize) -> Result<Hamiltonian> {
    if resolution < 16 {
        return Err(Error::ResolutionTooCoarse(format!(
            "reduce_2d needs at least 16 samples, got {resolution}"
        )));
    }
    Hamiltonian::from_reduced(h2.clone(), axis, resolution)
}
