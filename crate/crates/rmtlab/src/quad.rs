//! Quadrature building blocks: Gauss-Legendre rules, composite panels,
//! arcsine-weight moments via the cosine substitution, and an adaptive
//! Simpson rule for smooth one-dimensional integrands.

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the moderate orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and its derivative by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule: `panels` panels of a `panel_order`-point
/// rule covering [a, b]. Returns global nodes and weights.
pub fn composite_gauss(a: f64, b: f64, panels: usize, panel_order: usize) -> (Vec<f64>, Vec<f64>) {
    let (xg, wg) = gauss_legendre(panel_order);
    let mut nodes = Vec::with_capacity(panels * panel_order);
    let mut weights = Vec::with_capacity(panels * panel_order);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in xg.iter().zip(&wg) {
            nodes.push(mid + 0.5 * h * x);
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Integral of `f` against the arcsine density of [a, b],
/// `(1/pi) \int_a^b f(x) dx / sqrt((x-a)(b-x))`.
///
/// Substituting `x = m + r cos(theta)` turns the weight into the uniform
/// measure on [0, pi]; the midpoint rule is then exact for trigonometric
/// polynomials of degree < 2n, i.e. exact for polynomial `f` of degree < 2n.
pub fn arcsine_average<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut sum = 0.0;
    for j in 0..n {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
        sum += f(m + r * theta.cos());
    }
    sum / n as f64
}

/// Integral `\int_a^b f(x) sqrt((x-a)(b-x)) dx` by the same substitution
/// (`dx sqrt(...) = r^2 sin^2(theta) dtheta`); exact for polynomial `f` of
/// degree < 2n - 2.
pub fn semicircle_integral<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut sum = 0.0;
    for j in 0..n {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
        let s = theta.sin();
        sum += f(m + r * theta.cos()) * s * s;
    }
    std::f64::consts::PI * r * r * sum / n as f64
}

/// Adaptive Simpson quadrature for a smooth integrand.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-13 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Accuracy(format!(
            "adaptive Simpson recursion exhausted on [{a}, {b}]"
        )));
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}
