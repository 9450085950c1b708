use super::Hamiltonian;
use crate::error::{Error, Result};
use crate::numerics::{golden_section_min, linspace};

/// One-sided minimum envelopes of `q -> H(q, x)` at a fixed position.
///
/// `min_right(p) = inf_{q >= p} H(q, x)` and `min_left(p) = inf_{q <= p} H(q, x)`.
/// Coercivity means the infimum over a half-line is attained either at `p`
/// or at one of the local minimizers beyond it, so both are exact given the
/// minima list.
#[derive(Debug, Clone)]
pub struct SlopeEnvelope {
    h: Hamiltonian,
    x: f64,
    points: Vec<f64>,
    suffix: Vec<f64>,
    prefix: Vec<f64>,
}

impl SlopeEnvelope {
    pub fn new(h: Hamiltonian, x: f64) -> Self {
        let points = h.minima_at(x);
        let values: Vec<f64> = points.iter().map(|&p| h.value(p, x)).collect();
        let mut suffix = vec![f64::INFINITY; values.len() + 1];
        for k in (0..values.len()).rev() {
            suffix[k] = suffix[k + 1].min(values[k]);
        }
        let mut prefix = Vec::with_capacity(values.len());
        let mut run = f64::INFINITY;
        for v in &values {
            run = run.min(*v);
            prefix.push(run);
        }
        SlopeEnvelope {
            h,
            x,
            points,
            suffix,
            prefix,
        }
    }

    #[inline]
    pub fn min_right(&self, p: f64) -> f64 {
        let k = self.points.partition_point(|&m| m <= p);
        self.h.value(p, self.x).min(self.suffix[k])
    }

    #[inline]
    pub fn min_left(&self, p: f64) -> f64 {
        let k = self.points.partition_point(|&m| m < p);
        let below = if k == 0 { f64::INFINITY } else { self.prefix[k - 1] };
        self.h.value(p, self.x).min(below)
    }

    pub fn position(&self) -> f64 {
        self.x
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.h
    }
}

/// `H^-(p) = H(min(p, p0), 0)` for a Hamiltonian with a single minimizer `p0`.
///
/// The result agrees with `H` left of `p0` and is constant to the right;
/// it is evaluated at the junction, so `x` is ignored.
pub fn nonincreasing_part(h: &Hamiltonian) -> Result<Hamiltonian> {
    match h.minima() {
        [p0] => Ok(Hamiltonian::from_nonincreasing(h, *p0)),
        other => Err(Error::NotQuasiconvex(other.len())),
    }
}

/// The junction Hamiltonian `H_A(p_1..p_K) = max(A, max_i H_i^-(p_i, 0))`.
#[derive(Debug, Clone)]
pub struct FluxLimiter {
    limiter: f64,
    envelopes: Vec<Hamiltonian>,
}

pub fn make_flux_limiter(hamiltonians: &[Hamiltonian], limiter: f64) -> Result<FluxLimiter> {
    if !limiter.is_finite() {
        return Err(Error::Precondition("flux limiter level A must be finite".into()));
    }
    let envelopes = hamiltonians
        .iter()
        .map(nonincreasing_part)
        .collect::<Result<Vec<_>>>()?;
    Ok(FluxLimiter { limiter, envelopes })
}

impl FluxLimiter {
    /// Evaluates `H_A` at one slope per edge.
    pub fn evaluate(&self, slopes: &[f64]) -> f64 {
        debug_assert_eq!(slopes.len(), self.envelopes.len());
        self.envelopes
            .iter()
            .zip(slopes)
            .map(|(h, &p)| h.value(p, 0.0))
            .fold(self.limiter, f64::max)
    }

    pub fn limiter(&self) -> f64 {
        self.limiter
    }

    pub fn envelopes(&self) -> &[Hamiltonian] {
        &self.envelopes
    }

    pub fn len(&self) -> usize {
        self.envelopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envelopes.is_empty()
    }
}

/// Left end of the nondecreasing tail of `p -> H(p, 0)`: the smallest slope
/// `z` from which on every `z' >= z` satisfies `H(z') <= H(q)` for all
/// `q >= z'`. Computed by a suffix-minimum scan on `[-P, P]`, then refined
/// to the leftmost point attaining the minimum value near the scan result.
pub fn rightward_min_threshold(h: &Hamiltonian) -> f64 {
    let bound = h.coercivity_bound();
    let n = 4096;
    let pts = linspace(-bound, bound, n);
    let vals: Vec<f64> = pts.iter().map(|&p| h.value(p, 0.0)).collect();
    let mut suffix = vals.clone();
    for k in (0..n).rev() {
        suffix[k] = suffix[k].min(suffix[k + 1]);
    }
    let mut onset = n;
    for k in (0..n).rev() {
        let tol = 1e-12 * (1.0 + vals[k].abs());
        if vals[k] <= suffix[k + 1] + tol {
            onset = k;
        } else {
            break;
        }
    }
    if onset == 0 {
        return pts[0];
    }
    let f = |p: f64| h.value(p, 0.0);
    let lo = pts[onset - 1];
    let hi = pts[(onset + 1).min(n)];
    let (zg, vg) = golden_section_min(f, lo, hi, 1e-10);
    let (zg, vg) = if vals[onset] <= vg { (pts[onset], vals[onset]) } else { (zg, vg) };
    // leftmost point in [lo, zg] attaining the minimum value
    let tol = 4.0 * f64::EPSILON * (1.0 + vg.abs());
    let (mut a, mut b) = (lo, zg);
    if f(a) <= vg + tol {
        return a;
    }
    while b - a > 1e-9 {
        let m = 0.5 * (a + b);
        if f(m) <= vg + tol {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{make_builtin, parse_expression};

    fn abs1() -> Hamiltonian {
        make_builtin("abs_shift", &[0.0, 1.0]).unwrap()
    }

    #[test]
    fn nonincreasing_part_examples() {
        let hm = nonincreasing_part(&abs1()).unwrap();
        assert_eq!(hm.value(-2.0, 0.0), 1.0);
        assert_eq!(hm.value(0.0, 0.0), -1.0);
        assert_eq!(hm.value(5.0, 0.0), -1.0);
        let q = make_builtin("quadratic", &[1.0, 1.0]).unwrap();
        assert_eq!(nonincreasing_part(&q).unwrap().value(3.0, 0.0), -1.0);
        let dw = make_builtin("double_well", &[-2.0, 0.0]).unwrap();
        assert_eq!(nonincreasing_part(&dw).unwrap_err(), Error::NotQuasiconvex(2));
    }

    #[test]
    fn nonincreasing_part_is_envelope_and_monotone() {
        for h in [abs1(), make_builtin("quadratic", &[1.0, 1.0]).unwrap()] {
            let hm = nonincreasing_part(&h).unwrap();
            let p0 = h.minima()[0];
            let pts = linspace(-4.0, 4.0, 800);
            for w in pts.windows(2) {
                assert!(hm.value(w[0], 0.0) >= hm.value(w[1], 0.0) - 1e-12);
            }
            for &p in &pts {
                assert_eq!(hm.value(p, 0.0), h.value(p.min(p0), 0.0));
            }
        }
    }

    #[test]
    fn flux_limiter_examples() {
        let hs = vec![abs1(), abs1()];
        let l = make_flux_limiter(&hs, -0.5).unwrap();
        assert_eq!(l.evaluate(&[0.0, 0.0]), -0.5);
        let l = make_flux_limiter(&hs, -2.0).unwrap();
        assert_eq!(l.evaluate(&[-3.0, 0.0]), 2.0);
        let l = make_flux_limiter(&[abs1()], -1.0).unwrap();
        for p in [-3.0, -1.0, -0.25, 0.0] {
            assert_eq!(l.evaluate(&[p]), nonincreasing_part(&abs1()).unwrap().value(p, 0.0));
        }
        let dw = make_builtin("double_well", &[0.0, 0.0]).unwrap();
        assert!(make_flux_limiter(&[abs1(), dw], 0.0).is_err());
    }

    #[test]
    fn flux_limiter_is_nonincreasing_in_each_slope() {
        let hs = vec![abs1(), make_builtin("quadratic", &[1.0, 1.0]).unwrap()];
        let l = make_flux_limiter(&hs, -0.7).unwrap();
        let grid = linspace(-3.0, 3.0, 60);
        for &a in &grid {
            for w in grid.windows(2) {
                assert!(l.evaluate(&[w[0], a]) >= l.evaluate(&[w[1], a]) - 1e-12);
                assert!(l.evaluate(&[a, w[0]]) >= l.evaluate(&[a, w[1]]) - 1e-12);
            }
        }
    }

    #[test]
    fn envelopes_match_brute_force() {
        let dw = make_builtin("double_well", &[-2.0, 0.0]).unwrap();
        let env = dw.envelope_at(0.0);
        let grid = linspace(-8.0, 8.0, 16000);
        for p in linspace(-5.0, 3.0, 97) {
            let right = grid
                .iter()
                .filter(|&&q| q >= p)
                .map(|&q| dw.value(q, 0.0))
                .fold(dw.value(p, 0.0), f64::min);
            let left = grid
                .iter()
                .filter(|&&q| q <= p)
                .map(|&q| dw.value(q, 0.0))
                .fold(dw.value(p, 0.0), f64::min);
            assert!((env.min_right(p) - right).abs() < 1e-5, "right {p}");
            assert!((env.min_left(p) - left).abs() < 1e-5, "left {p}");
        }
    }

    #[test]
    fn envelope_at_interior_position_uses_local_minima() {
        let h = parse_expression("(p - x)^2 - 1").unwrap();
        let env = h.envelope_at(-0.5);
        assert!((env.min_right(-2.0) + 1.0).abs() < 1e-12);
        assert!((env.min_right(0.0) - h.value(0.0, -0.5)).abs() < 1e-12);
        assert!((env.min_left(0.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rightward_threshold_examples() {
        assert!(rightward_min_threshold(&abs1()).abs() < 1e-6);
        let q = make_builtin("quadratic", &[1.0, 1.0]).unwrap();
        assert!((rightward_min_threshold(&q) - 1.0).abs() < 1e-6);
        let dw = make_builtin("double_well", &[-2.0, 0.0]).unwrap();
        assert!((rightward_min_threshold(&dw) + 1.0).abs() < 1e-6);
        let flat = parse_expression("max(abs(p) - 2, -1)").unwrap();
        assert!((rightward_min_threshold(&flat) + 1.0).abs() < 1e-6);
    }
}
