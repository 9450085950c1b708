//! Scalar helpers shared by the solvers.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns the best point seen (endpoints included) and its value. For
/// unimodal `f` the bracket shrinks to width `tol`; for non-unimodal `f` the
/// result is still a point no worse than either endpoint.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut best = (lo, f(lo));
    let fb = f(hi);
    if fb < best.1 {
        best = (hi, fb);
    }
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// `n + 1` equispaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![lo];
    }
    let step = (hi - lo) / n as f64;
    (0..=n)
        .map(|k| if k == n { hi } else { lo + step * k as f64 })
        .collect()
}

/// Largest difference quotient of `f` on an `n`-interval grid of `[lo, hi]`.
pub fn sampled_lipschitz<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let pts = linspace(lo, hi, n);
    let vals: Vec<f64> = pts.iter().map(|&p| f(p)).collect();
    pts.windows(2)
        .zip(vals.windows(2))
        .map(|(p, v)| ((v[1] - v[0]) / (p[1] - p[0])).abs())
        .fold(0.0, f64::max)
}

/// Minimum of `f` over `[lo, hi]`: `samples`-interval scan followed by a
/// golden-section refinement around the best sample. Endpoints are always
/// evaluated exactly.
pub fn sampled_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let step = (hi - lo) / samples as f64;
    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..=samples {
        let p = if k == samples { hi } else { lo + step * k as f64 };
        let v = f(p);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let centre = if best_k == samples { hi } else { lo + step * best_k as f64 };
    let a = (centre - step).max(lo);
    let b = (centre + step).min(hi);
    let (x, fx) = golden_section_min(&f, a, b, 1e-11 * (1.0 + step));
    if fx < best {
        (x, fx)
    } else {
        (centre, best)
    }
}

/// One tridiagonal block of a bordered linear system.
///
/// Row `j < n` reads `lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j]`
/// where `x[n]` is the shared border unknown, so `upper[n-1]` couples the
/// block to the border. `border = [b1, b2]` are the border row coefficients
/// on `x[n-1]` and `x[n-2]`.
#[derive(Debug, Clone)]
pub struct Arm {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
    pub border: [f64; 2],
}

impl Arm {
    pub fn zeros(n: usize) -> Self {
        Arm {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            rhs: vec![0.0; n],
            border: [0.0; 2],
        }
    }
}

/// Thomas algorithm; `upper[n-1]` is ignored. `None` on a zero pivot.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return None;
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for j in 1..n {
        beta = diag[j] - lower[j] * c[j - 1];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        c[j] = if j + 1 < n { upper[j] / beta } else { 0.0 };
        d[j] = (rhs[j] - lower[j] * d[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        d[j] -= c[j] * d[j + 1];
    }
    Some(d)
}

/// Solves the arms plus the border row `node_diag x0 + sum_i border_i . x_i = node_rhs`
/// by block elimination. Returns per-arm solutions and the border value.
pub fn solve_bordered(arms: &[Arm], node_diag: f64, node_rhs: f64) -> Option<(Vec<Vec<f64>>, f64)> {
    let mut ys = Vec::with_capacity(arms.len());
    let mut zs = Vec::with_capacity(arms.len());
    let mut num = node_rhs;
    let mut den = node_diag;
    for arm in arms {
        let n = arm.diag.len();
        let y = thomas(&arm.lower, &arm.diag, &arm.upper, &arm.rhs)?;
        let mut e = vec![0.0; n];
        e[n - 1] = arm.upper[n - 1];
        let z = thomas(&arm.lower, &arm.diag, &arm.upper, &e)?;
        let [b1, b2] = arm.border;
        let (y2, z2) = if n >= 2 { (y[n - 2], z[n - 2]) } else { (0.0, 0.0) };
        num -= b1 * y[n - 1] + b2 * y2;
        den -= b1 * z[n - 1] + b2 * z2;
        ys.push(y);
        zs.push(z);
    }
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let x0 = num / den;
    let xs = ys
        .into_iter()
        .zip(zs)
        .map(|(y, z)| y.iter().zip(&z).map(|(a, b)| a - b * x0).collect())
        .collect();
    Some((xs, x0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_smooth_and_kinked_minima() {
        let (x, _) = golden_section_min(|p| (p - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        let (x, v) = golden_section_min(|p: f64| p.abs() - 1.0, -0.5, 0.25, 1e-12);
        assert!(x.abs() < 1e-11);
        assert!((v + 1.0).abs() < 1e-11);
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(-1.0, 0.0, 4);
        assert_eq!(v, vec![-1.0, -0.75, -0.5, -0.25, 0.0]);
    }

    #[test]
    fn lipschitz_of_abs_is_one() {
        assert!((sampled_lipschitz(f64::abs, -3.0, 3.0, 600) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_min_handles_double_well() {
        let f = |p: f64| ((p + 2.0).powi(2) - 1.0).powi(2) + 0.1 * p;
        let (x, _) = sampled_min(f, -5.0, 5.0, 64);
        // the tilt makes the left well deeper
        assert!((x + 3.0).abs() < 0.05);
    }

    #[test]
    fn bordered_solve_matches_dense() {
        // two arms of length 3 and 2 plus a border unknown
        let mut a = Arm::zeros(3);
        a.lower = vec![0.0, -1.0, -0.5];
        a.diag = vec![3.0, 4.0, 3.5];
        a.upper = vec![-1.0, -1.0, -0.7];
        a.rhs = vec![1.0, 2.0, 3.0];
        a.border = [-0.9, 0.2];
        let mut b = Arm::zeros(2);
        b.lower = vec![0.0, -1.2];
        b.diag = vec![2.5, 3.0];
        b.upper = vec![-0.3, -1.1];
        b.rhs = vec![-1.0, 0.5];
        b.border = [-0.4, 0.1];
        let (xs, x0) = solve_bordered(&[a.clone(), b.clone()], 2.0, 0.25).unwrap();
        let x = [xs[0][0], xs[0][1], xs[0][2], xs[1][0], xs[1][1], x0];
        // residuals of every row
        let r = [
            a.diag[0] * x[0] + a.upper[0] * x[1] - a.rhs[0],
            a.lower[1] * x[0] + a.diag[1] * x[1] + a.upper[1] * x[2] - a.rhs[1],
            a.lower[2] * x[1] + a.diag[2] * x[2] + a.upper[2] * x0 - a.rhs[2],
            b.diag[0] * x[3] + b.upper[0] * x[4] - b.rhs[0],
            b.lower[1] * x[3] + b.diag[1] * x[4] + b.upper[1] * x0 - b.rhs[1],
            2.0 * x0 + a.border[0] * x[2] + a.border[1] * x[1] + b.border[0] * x[4] + b.border[1] * x[3] - 0.25,
        ];
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }
}
