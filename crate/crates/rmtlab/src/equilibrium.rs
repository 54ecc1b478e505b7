//! One-cut equilibrium measures in a polynomial external field.
//!
//! For `V_t = V/t` the Stieltjes transform of the (possibly signed) measure
//! is written as `G(z) = V'(z)/(2t) - h(z) R(z)` with
//! `R(z) = sqrt((z-a)(z-b))` and polynomial `h` of degree `deg V - 2`.
//! Requiring `G(z) = 1/z + O(z^{-2})` at infinity pins the endpoints through
//! two Laurent-coefficient conditions; `h` is then the polynomial part of
//! `V'/(2t R)`, read off exactly. Everything downstream is closed-form
//! algebra in `h` and the endpoints:
//!
//! * analytic `q_t(z) = h(z)^2 (z-a)(z-b)`,
//! * density `psi_t(x) = h(x) sqrt((x-a)(b-x)) / pi` on the cut, carrying
//!   the sign of `h` through the critical point (negative dip for t < 1),
//! * second derivative of the density at an interior zero without any
//!   finite differencing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::{horner, Potential};
use crate::quad::{arcsine_average, semicircle_integral};

/// Support interval of a one-cut measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub a: f64,
    pub b: f64,
}

impl Support {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    /// Density of the set-equilibrium (arcsine) measure of the interval,
    /// `1 / (pi sqrt((b-x)(x-a)))` for a < x < b.
    pub fn arcsine_density(&self, x: f64) -> Result<f64> {
        if !(self.a < x && x < self.b) {
            return Err(Error::Domain(format!(
                "x = {x} is not interior to [{}, {}]",
                self.a, self.b
            )));
        }
        Ok(1.0 / (std::f64::consts::PI * ((self.b - x) * (x - self.a)).sqrt()))
    }
}

/// One-cut equilibrium data for the field `V/t`.
///
/// Immutable after the solve; shares freely across threads.
#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    pub t: f64,
    pub support: Support,
    /// Monomial coefficients of the polynomial factor `h` in
    /// `q_t(z) = h(z)^2 (z-a)(z-b)`.
    pub poly_part: Vec<f64>,
    /// Recomputed total mass; equals 1 up to quadrature tolerance.
    pub mass_check: f64,
}

const BINOM_CENTRAL: [f64; 5] = [1.0, 2.0, 6.0, 20.0, 70.0]; // C(2k, k)

/// Taylor-shifts polynomial coefficients: returns coefficients of
/// `p(center + u)` as a polynomial in `u`.
fn taylor_shift(coeffs: &[f64], center: f64) -> Vec<f64> {
    let mut b = coeffs.to_vec();
    let n = b.len();
    for i in 0..n.saturating_sub(1) {
        for j in (i..n - 1).rev() {
            let bj1 = b[j + 1];
            b[j] += center * bj1;
        }
    }
    b
}

/// Laurent data of `V'/(2t R)` at infinity around the midpoint `m` with
/// half-width `r`: the two matching conditions and the shifted-basis
/// polynomial part.
struct LaurentData {
    /// Coefficient of `(z-m)^{-1}`; must vanish.
    res1: f64,
    /// Coefficient of `(z-m)^{-2}`; must equal 1 (unit total mass).
    res2: f64,
    /// Polynomial part in powers of `(z-m)`.
    poly_shifted: Vec<f64>,
}

fn laurent_data(vp_half_t: &[f64], m: f64, r: f64) -> LaurentData {
    // v_j = coefficients of V'(m+u)/(2t) in u
    let v = taylor_shift(vp_half_t, m);
    let deg = v.len() - 1; // = deg V - 1
    let half_r2 = (r / 2.0) * (r / 2.0);

    let mut res1 = 0.0;
    let mut res2 = 0.0;
    // 1/R = sum_k C(2k,k) (r/2)^{2k} (z-m)^{-2k-1}
    let mut pw = 1.0;
    for k in 0..BINOM_CENTRAL.len() {
        let c = BINOM_CENTRAL[k] * pw;
        if 2 * k <= deg {
            res1 += v[2 * k] * c;
        }
        if k >= 1 && 2 * k - 1 <= deg {
            res2 += v[2 * k - 1] * c;
        }
        pw *= half_r2;
    }

    let h_deg = deg.saturating_sub(1); // deg V - 2
    let mut poly_shifted = vec![0.0; h_deg + 1];
    for (i, slot) in poly_shifted.iter_mut().enumerate() {
        let mut acc = 0.0;
        let mut pw = 1.0;
        for (k, binom) in BINOM_CENTRAL.iter().enumerate() {
            let j = i + 2 * k + 1;
            if j > deg {
                break;
            }
            acc += v[j] * binom * pw;
            pw *= half_r2;
        }
        *slot = acc;
    }

    LaurentData {
        res1,
        res2,
        poly_shifted,
    }
}

fn shifted_to_monomial(shifted: &[f64], m: f64) -> Vec<f64> {
    // expand sum_i c_i (z - m)^i
    let mut out = vec![0.0; shifted.len()];
    // binomial table up to needed degree
    for (i, &ci) in shifted.iter().enumerate() {
        if ci == 0.0 {
            continue;
        }
        let mut term = vec![0.0; i + 1];
        term[0] = 1.0;
        // multiply (z - m)^i iteratively
        for _ in 0..i {
            let mut next = vec![0.0; term.len()];
            for (j, &tj) in term.iter().enumerate() {
                if tj == 0.0 {
                    continue;
                }
                next[j] += -m * tj;
                if j + 1 < next.len() {
                    next[j + 1] += tj;
                } else {
                    next.push(tj);
                }
            }
            term = next;
        }
        for (j, &tj) in term.iter().enumerate() {
            out[j] += ci * tj;
        }
    }
    out
}

/// Solves the one-cut problem for `V/t`.
///
/// The signed measure is used throughout: for `t < 1` near a critical field
/// the density dips negative around the interior zero instead of opening a
/// gap, which keeps the support a single interval through the transition.
pub fn solve_one_cut(p: &Potential, t: f64) -> Result<EquilibriumMeasure> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must be positive (got {t})")));
    }
    let d = p.degree();
    if d / 2 >= BINOM_CENTRAL.len() {
        return Err(Error::InvalidParameter(format!(
            "degree {d} exceeds the supported range (<= 8)"
        )));
    }
    let vp_half_t: Vec<f64> = p.deriv_coeffs().iter().map(|c| c / (2.0 * t)).collect();

    // initial guess: mean of the roots of V' and a half-width matching the
    // leading coefficient
    let cd = *p.coeffs().last().unwrap();
    let m0 = if d >= 2 {
        -p.coeffs()[d - 1] / (d as f64 * cd)
    } else {
        0.0
    };
    let r0 = 2.0
        * (2.0 * t / (d as f64 * cd * BINOM_CENTRAL[d / 2]))
            .powf(1.0 / d as f64);

    let residual = |m: f64, r: f64| -> (f64, f64) {
        let ld = laurent_data(&vp_half_t, m, r);
        (ld.res1, ld.res2 - 1.0)
    };

    let mut m = m0;
    let mut r = r0;
    let (mut f1, mut f2) = residual(m, r);
    let mut norm = f1.abs().max(f2.abs());
    let tol = 1e-12;
    let max_iter = 50;
    let mut converged = false;

    for _ in 0..max_iter {
        if norm < tol {
            converged = true;
            break;
        }
        // 2x2 Jacobian by central differences
        let dm = 1e-7 * (1.0 + m.abs());
        let dr = 1e-7 * (1.0 + r.abs());
        let (a1, a2) = residual(m + dm, r);
        let (b1, b2) = residual(m - dm, r);
        let (c1, c2) = residual(m, r + dr);
        let (e1, e2) = residual(m, r - dr);
        let j11 = (a1 - b1) / (2.0 * dm);
        let j21 = (a2 - b2) / (2.0 * dm);
        let j12 = (c1 - e1) / (2.0 * dr);
        let j22 = (c2 - e2) / (2.0 * dr);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 || !det.is_finite() {
            break;
        }
        let step_m = (f1 * j22 - f2 * j12) / det;
        let step_r = (j11 * f2 - j21 * f1) / det;

        // backtracking
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mt = m - lambda * step_m;
            let rt = r - lambda * step_r;
            if rt > 0.0 {
                let (g1, g2) = residual(mt, rt);
                let nn = g1.abs().max(g2.abs());
                if nn.is_finite() && nn < norm {
                    m = mt;
                    r = rt;
                    f1 = g1;
                    f2 = g2;
                    norm = nn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm < tol {
        converged = true;
    }
    if !converged {
        return Err(Error::NoOneCutSolution {
            iterations: max_iter,
            residual: norm,
        });
    }
    if r < 1e-8 {
        return Err(Error::DegenerateSupport(r));
    }

    let ld = laurent_data(&vp_half_t, m, r);
    let poly_part = shifted_to_monomial(&ld.poly_shifted, m);
    let support = Support { a: m - r, b: m + r };

    let h = poly_part.clone();
    let mass_check =
        semicircle_integral(support.a, support.b, 64, |x| horner(&h, x)) / std::f64::consts::PI;

    Ok(EquilibriumMeasure {
        t,
        support,
        poly_part,
        mass_check,
    })
}

impl EquilibriumMeasure {
    fn h(&self, x: f64) -> f64 {
        horner(&self.poly_part, x)
    }

    fn h_complex(&self, z: Complex64) -> Complex64 {
        self.poly_part
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// The analytic function `q_t(z) = h(z)^2 (z - a)(z - b)`; entire for
    /// polynomial fields. Equals `-(pi psi_t)^2` on the support and is a
    /// perfect square (hence >= 0) on the rest of the real line.
    pub fn q(&self, z: Complex64) -> Complex64 {
        let h = self.h_complex(z);
        h * h * (z - self.support.a) * (z - self.support.b)
    }

    pub fn q_real(&self, x: f64) -> f64 {
        let h = self.h(x);
        h * h * (x - self.support.a) * (x - self.support.b)
    }

    /// Density `psi_t(x) = h(x) sqrt((x-a)(b-x)) / pi` on the support.
    ///
    /// The analytic square root is resolved through the sign of `h`: at an
    /// interior critical point the value comes out negative for t < 1 and
    /// positive for t > 1 with no clipping.
    pub fn density(&self, x: f64) -> Result<f64> {
        if !self.support.contains(x) {
            return Err(Error::Domain(format!(
                "x = {x} lies outside the support [{}, {}]",
                self.support.a, self.support.b
            )));
        }
        let s = (x - self.support.a) * (self.support.b - x);
        Ok(self.h(x) * s.sqrt() / std::f64::consts::PI)
    }

    /// First and second derivatives of the density at an interior point,
    /// from the factored form (no finite differences, no cancellation at a
    /// quadratic zero).
    pub fn density_derivs(&self, x: f64) -> Result<(f64, f64, f64)> {
        if !(self.support.a < x && x < self.support.b) {
            return Err(Error::Domain(format!("x = {x} is not interior to the support")));
        }
        let a = self.support.a;
        let b = self.support.b;
        let s = (x - a) * (b - x);
        let sp = (a + b) - 2.0 * x;
        let spp = -2.0;
        let h = self.h(x);
        let dh: Vec<f64> = self
            .poly_part
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        let hp = horner(&dh, x);
        let d2h: Vec<f64> = dh
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        let hpp = horner(&d2h, x);

        let sq = s.sqrt();
        let pi = std::f64::consts::PI;
        let psi = h * sq / pi;
        let dpsi = (hp * sq + 0.5 * h * sp / sq) / pi;
        let d2psi = (hpp * sq + 1.5 * hp * sp / sq + 0.5 * h * spp / sq
            - 0.25 * h * sp * sp / (sq * s))
            / pi;
        Ok((psi, dpsi, d2psi))
    }
}

/// Central-difference derivative of `t -> t * psi_t(x)` at t = 1 against the
/// arcsine density of the t = 1 support. The two agree up to O(dt^2) plus
/// solver tolerance.
pub fn buyarov_rakhmanov_check(p: &Potential, x: f64, dt: f64) -> Result<(f64, f64)> {
    if !(dt > 0.0 && dt < 0.5) {
        return Err(Error::InvalidParameter(format!("dt = {dt} out of range")));
    }
    let em1 = solve_one_cut(p, 1.0)?;
    if !(em1.support.a < x && x < em1.support.b) {
        return Err(Error::Domain(format!("x = {x} is not interior to the support")));
    }
    let em_plus = solve_one_cut(p, 1.0 + dt)?;
    let em_minus = solve_one_cut(p, 1.0 - dt)?;
    let fd = ((1.0 + dt) * em_plus.density(x)? - (1.0 - dt) * em_minus.density(x)?) / (2.0 * dt);
    let w = em1.support.arcsine_density(x)?;
    Ok((fd, w))
}

/// Identity between the equilibrium density and the arcsine average of the
/// difference quotient of `V'`:
/// `psi_V(x) = (1/(2 pi^2 w(x))) \int (V'(x)-V'(y))/(x-y) d omega(y)`.
/// Returns (density value, quadrature value).
pub fn psi_v_identity_check(p: &Potential, x: f64) -> Result<(f64, f64)> {
    let em = solve_one_cut(p, 1.0)?;
    if !(em.support.a < x && x < em.support.b) {
        return Err(Error::Domain(format!("x = {x} is not interior to the support")));
    }
    let lhs = em.density(x)?;
    let w = em.support.arcsine_density(x)?;
    let dv = p.deriv_coeffs();

    let divided = |y: f64| divided_difference(&dv, x, y);
    let n = 64;
    let avg = arcsine_average(em.support.a, em.support.b, n, divided);
    // cosine-substitution rule is exact for polynomial integrands; a doubled
    // rule guards against misuse with future non-polynomial extensions
    let avg2 = arcsine_average(em.support.a, em.support.b, 2 * n, divided);
    if (avg - avg2).abs() > 1e-9 * (1.0 + avg.abs()) {
        return Err(Error::Accuracy(format!(
            "arcsine quadrature did not settle ({avg} vs {avg2})"
        )));
    }
    let rhs = avg2 / (2.0 * std::f64::consts::PI * std::f64::consts::PI * w);
    Ok((lhs, rhs))
}

/// `(p(x) - p(y)) / (x - y)` for a polynomial given by coefficients, exact
/// for y -> x (no cancellation).
fn divided_difference(coeffs: &[f64], x: f64, y: f64) -> f64 {
    // sum_k c_k (x^k - y^k)/(x-y) = sum_k c_k sum_{i+j=k-1} x^i y^j
    let mut total = 0.0;
    let mut hk = 0.0; // h_k = (x^k - y^k)/(x - y), built by h_{k} = x h_{k-1} + y^{k-1}
    let mut ypow = 1.0;
    for (k, &c) in coeffs.iter().enumerate() {
        if k > 0 {
            hk = x * hk + ypow;
            ypow *= y;
        }
        if k == 0 {
            continue;
        }
        total += c * hk;
    }
    total
}

/// Constants of the critical scaling at an interior quadratic zero of the
/// density.
#[derive(Debug, Clone, Copy)]
pub struct CriticalData {
    pub x_star: f64,
    /// psi_V''(x*) from the factored form of the density.
    pub psi_second: f64,
    /// c = pi psi_V''(x*) / 8.
    pub c: f64,
    /// Arcsine density of the support at x*.
    pub w_at_xstar: f64,
    pub l_param: f64,
    /// s = L pi c^{-1/3} w(x*).
    pub s: f64,
}

/// Validates that `x_star` is an interior quadratic zero of the t = 1 density
/// and assembles the scaling constants for coupling parameter `L`.
pub fn critical_constants(p: &Potential, x_star: f64, l_param: f64) -> Result<CriticalData> {
    let em = solve_one_cut(p, 1.0)?;
    if !(em.support.a < x_star && x_star < em.support.b) {
        return Err(Error::NotCritical(format!(
            "x* = {x_star} is not interior to the support"
        )));
    }
    let (psi, dpsi, d2psi) = em.density_derivs(x_star)?;
    let scale = 1.0 + em.support.radius();
    let tol = 1e-6;
    if psi.abs() > tol * scale {
        return Err(Error::NotCritical(format!("density at x* is {psi:e}, not zero")));
    }
    if dpsi.abs() > tol * scale {
        return Err(Error::NotCritical(format!(
            "density slope at x* is {dpsi:e}, not zero"
        )));
    }
    if d2psi <= tol {
        return Err(Error::NotCritical(format!(
            "density curvature at x* is {d2psi:e}, not positive"
        )));
    }
    let c = std::f64::consts::PI * d2psi / 8.0;
    let w = em.support.arcsine_density(x_star)?;
    let s = l_param * std::f64::consts::PI * c.powf(-1.0 / 3.0) * w;
    Ok(CriticalData {
        x_star,
        psi_second: d2psi,
        c,
        w_at_xstar: w,
        l_param,
        s,
    })
}

/// Conformal change of variable at the critical point,
/// `f(z) = [ (3/4) \int_{x*}^z (-q_V)^{1/2} dy ]^{1/3}`, real and increasing
/// on the real axis near x*, with `f'(x*) = c^{1/3}`.
pub fn conformal_map(p: &Potential, x_star: f64, z: Complex64) -> Result<Complex64> {
    let em = solve_one_cut(p, 1.0)?;
    if !(em.support.a < x_star && x_star < em.support.b) {
        return Err(Error::NotCritical(format!(
            "x* = {x_star} is not interior to the support"
        )));
    }
    // deflate the double zero of h at x*
    let shifted = taylor_shift(&em.poly_part, x_star);
    let scale: f64 = shifted.iter().map(|c| c.abs()).sum::<f64>().max(1e-300);
    if shifted[0].abs() > 1e-6 * scale || shifted.len() < 3 || shifted[1].abs() > 1e-6 * scale {
        return Err(Error::NotCritical(format!(
            "density factor does not have a double zero at x* = {x_star}"
        )));
    }
    let q_poly: Vec<f64> = shifted[2..].to_vec(); // h(x*+u) = u^2 Q(u)
    if q_poly[0].abs() <= 1e-12 * scale {
        return Err(Error::NotCritical(
            "zero of order higher than two at x*".into(),
        ));
    }

    // validity radius: distance to the endpoints and a Cauchy-type lower
    // bound on the nearest zero of Q
    let mut radius = (x_star - em.support.a).min(em.support.b - x_star);
    if q_poly.len() > 1 {
        let maxk = q_poly[1..]
            .iter()
            .fold(0.0f64, |acc, c| acc.max(c.abs()));
        if maxk > 0.0 {
            radius = radius.min(q_poly[0].abs() / (q_poly[0].abs() + maxk));
        }
    }
    radius *= 0.9;

    let delta = z - x_star;
    if delta.norm() > radius {
        return Err(Error::Domain(format!(
            "|z - x*| = {} exceeds the validity radius {radius}",
            delta.norm()
        )));
    }
    if delta.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }

    // bracket(z) = (3/4) \int_0^1 tau^2 Q(tau delta) sqrt(S(x*+tau delta)) dtau,
    // so that f = delta * bracket^{1/3}; bracket stays near the positive real
    // axis on the disk, making the principal cube root the right branch.
    let (nodes, weights) = crate::quad::gauss_legendre(40);
    let a = em.support.a;
    let b = em.support.b;
    let mut bracket = Complex64::new(0.0, 0.0);
    for (xg, wg) in nodes.iter().zip(&weights) {
        let tau = 0.5 * (xg + 1.0);
        let w = 0.5 * wg;
        let u = delta * tau;
        let qv = q_poly
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c);
        let y = x_star + u;
        let s = (y - a) * (b - y);
        bracket += w * tau * tau * qv * s.sqrt();
    }
    bracket *= 0.75;
    Ok(delta * bracket.powf(1.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{gaussian, quartic_family};
    use approx::assert_relative_eq;

    const INV_PI: f64 = std::f64::consts::FRAC_1_PI;
    const INV_2PI: f64 = 0.15915494309189535;

    #[test]
    fn semicircle_support_and_density() {
        let em = solve_one_cut(&gaussian(), 1.0).unwrap();
        assert_relative_eq!(em.support.a, -2.0, epsilon = 1e-12);
        assert_relative_eq!(em.support.b, 2.0, epsilon = 1e-12);
        assert_relative_eq!(em.density(0.0).unwrap(), INV_PI, epsilon = 1e-12);
        assert_relative_eq!(em.mass_check, 1.0, epsilon = 1e-12);
        for x in [-1.5f64, -0.3, 0.7, 1.9] {
            let expected = (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI);
            assert_relative_eq!(em.density(x).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn critical_quartic_density_closed_form() {
        let q = quartic_family(1.0, -2.0).unwrap();
        let em = solve_one_cut(&q.potential, 1.0).unwrap();
        assert_relative_eq!(em.support.a, -2.0, epsilon = 1e-10);
        assert_relative_eq!(em.support.b, 2.0, epsilon = 1e-10);
        // density (1/2pi) x^2 sqrt(4 - x^2) at 50 points
        for i in 0..50 {
            let x: f64 = -1.96 + 3.92 * i as f64 / 49.0;
            let expected = x * x * (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI);
            assert!((em.density(x).unwrap() - expected).abs() < 1e-9);
        }
        assert!((em.density(1.0).unwrap() - 0.27566444771089602).abs() < 1e-10);
        let (psi, dpsi, d2psi) = em.density_derivs(0.0).unwrap();
        assert!(psi.abs() < 1e-12);
        assert!(dpsi.abs() < 1e-12);
        assert_relative_eq!(d2psi, 2.0 * INV_PI, epsilon = 1e-10);
    }

    #[test]
    fn q_function_values() {
        let em = solve_one_cut(&gaussian(), 1.0).unwrap();
        assert_relative_eq!(em.q_real(0.0), -1.0, epsilon = 1e-12);
        assert_relative_eq!(em.q_real(3.0), 1.25, epsilon = 1e-12);

        // off-support value against the squared-transform quadrature:
        // q(x) = [ \int psi(y)/(y-x) dy + V'(x)/2 ]^2
        let x = 3.0;
        let integral = semicircle_integral(-2.0, 2.0, 256, |y| {
            1.0 / (2.0 * std::f64::consts::PI * (y - x))
        });
        let root = integral + 0.5 * gaussian().eval_deriv(x);
        assert_relative_eq!(em.q_real(x), root * root, epsilon = 1e-10);

        // fourth-order zero at the critical point
        let q = quartic_family(1.0, -2.0).unwrap();
        let em = solve_one_cut(&q.potential, 1.0).unwrap();
        assert!(em.q_real(0.0).abs() < 1e-20);
        for eps in [1e-2, 1e-3] {
            assert!(em.q_real(eps).abs() < 8.0 * eps.powi(4));
        }
    }

    #[test]
    fn q_sign_structure_on_and_off_support() {
        for t in [1.0, 1.02] {
            let q = quartic_family(1.0, -2.0).unwrap();
            let em = solve_one_cut(&q.potential, t).unwrap();
            for i in 0..60 {
                let x = em.support.a + (em.support.b - em.support.a) * i as f64 / 59.0;
                assert!(em.q_real(x) <= 1e-12);
            }
            for x in [em.support.b + 0.1, em.support.b + 1.0, em.support.a - 0.5] {
                assert!(em.q_real(x) >= -1e-12);
            }
        }
    }

    #[test]
    fn signed_density_through_the_transition() {
        let q = quartic_family(1.0, -2.0).unwrap();
        let below = solve_one_cut(&q.potential, 0.98).unwrap();
        assert!(below.density(0.0).unwrap() < 0.0);
        let above = solve_one_cut(&q.potential, 1.02).unwrap();
        assert!(above.density(0.0).unwrap() > 0.0);

        // at and above t = 1 the measure is an ordinary one: nonnegative
        // density across the whole support
        for t in [1.0, 1.02, 1.05] {
            let em = solve_one_cut(&q.potential, t).unwrap();
            for i in 0..=200 {
                let x = em.support.a + (em.support.b - em.support.a) * i as f64 / 200.0;
                assert!(em.density(x).unwrap() >= -1e-12, "t = {t}, x = {x}");
            }
        }

        // the negative set stays localized around the interior zero
        let mut neg_extent = 0.0f64;
        for i in 0..400 {
            let x = below.support.a + (below.support.b - below.support.a) * i as f64 / 399.0;
            if below.density(x).unwrap() < 0.0 {
                neg_extent = neg_extent.max(x.abs());
            }
        }
        assert!(neg_extent < 0.5, "negative set reached |x| = {neg_extent}");
    }

    #[test]
    fn mass_is_unit_near_criticality() {
        let q = quartic_family(1.0, -2.0).unwrap();
        for i in 0..11 {
            let t = 0.95 + 0.01 * i as f64;
            let em = solve_one_cut(&q.potential, t).unwrap();
            assert!((em.mass_check - 1.0).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn support_grows_with_t() {
        // weaker field (larger t) spreads the measure; for even fields the
        // support is symmetric
        let q = quartic_family(1.0, -2.0).unwrap();
        let mut prev_b = 0.0;
        for i in 0..9 {
            let t = 0.96 + 0.01 * i as f64;
            let em = solve_one_cut(&q.potential, t).unwrap();
            assert_relative_eq!(em.support.a, -em.support.b, epsilon = 1e-9);
            assert!(em.support.b > prev_b, "b_t not increasing at t = {t}");
            prev_b = em.support.b;
        }
        // Gaussian closed form: support of x^2/(2t) is [-2 sqrt t, 2 sqrt t]
        for t in [0.8, 1.0, 1.3] {
            let em = solve_one_cut(&gaussian(), t).unwrap();
            assert_relative_eq!(em.support.b, 2.0 * t.sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn translation_covariance() {
        // V(x - c) has the equilibrium data of V shifted by c; exercises a
        // nonzero midpoint in the endpoint solve
        let c = 0.3;
        // x^2/2 tilted: (x + b)^2/2 up to a constant = semicircle at -b
        let tilted = Potential::new(vec![0.0, 0.7, 0.5]).unwrap(); // (x + 0.7)^2/2 - const
        let em = solve_one_cut(&tilted, 1.0).unwrap();
        assert_relative_eq!(em.support.a, -2.7, epsilon = 1e-10);
        assert_relative_eq!(em.support.b, 1.3, epsilon = 1e-10);
        assert_relative_eq!(em.density(-0.7).unwrap(), INV_PI, epsilon = 1e-11);
        assert_relative_eq!(em.mass_check, 1.0, epsilon = 1e-11);

        // shifted critical quartic: (x-c)^4/4 - (x-c)^2
        let shifted = Potential::new(vec![
            c * c * c * c / 4.0 - c * c,
            -c * c * c + 2.0 * c,
            1.5 * c * c - 1.0,
            -c,
            0.25,
        ])
        .unwrap();
        let em = solve_one_cut(&shifted, 1.0).unwrap();
        assert_relative_eq!(em.support.a, -2.0 + c, epsilon = 1e-9);
        assert_relative_eq!(em.support.b, 2.0 + c, epsilon = 1e-9);
        let x = 1.0 + c;
        assert_relative_eq!(
            em.density(x).unwrap(),
            0.27566444771089602,
            epsilon = 1e-9
        );
        // scaling constants are translation invariant, critical point at c
        let cd = critical_constants(&shifted, c, 1.0).unwrap();
        assert_relative_eq!(cd.c, 0.25, epsilon = 1e-9);
        assert_relative_eq!(cd.s, 0.7937005259840998, epsilon = 1e-8);
        let h = 1e-4;
        let fp = conformal_map(&shifted, c, Complex64::new(c + h, 0.0)).unwrap();
        let fm = conformal_map(&shifted, c, Complex64::new(c - h, 0.0)).unwrap();
        assert!(((fp - fm).re / (2.0 * h) - 0.62996052494743658).abs() < 1e-6);
    }

    #[test]
    fn arcsine_density_values() {
        let sup = Support { a: -2.0, b: 2.0 };
        assert_relative_eq!(sup.arcsine_density(0.0).unwrap(), INV_2PI, epsilon = 1e-14);
        assert_relative_eq!(
            sup.arcsine_density(1.0).unwrap(),
            0.18377629847393068,
            epsilon = 1e-14
        );
        // inverse square-root divergence toward the endpoint
        let close = sup.arcsine_density(2.0 - 1e-8).unwrap();
        assert!(close > 1e3);
        assert_relative_eq!(
            close * (4.0f64 * 1e-8).sqrt() * std::f64::consts::PI,
            1.0,
            epsilon = 1e-4
        );
        let unit = Support { a: 0.0, b: 1.0 };
        assert_relative_eq!(
            unit.arcsine_density(0.5).unwrap(),
            2.0 * INV_PI,
            epsilon = 1e-14
        );
        assert!(sup.arcsine_density(2.5).is_err());
    }

    #[test]
    fn buyarov_rakhmanov_values_and_decay() {
        let q = quartic_family(1.0, -2.0).unwrap();
        let (fd, w) = buyarov_rakhmanov_check(&q.potential, 0.0, 1e-3).unwrap();
        assert_relative_eq!(w, INV_2PI, epsilon = 1e-14);
        assert!((fd - w).abs() < 1e-3);
        let (fd1, w1) = buyarov_rakhmanov_check(&q.potential, 1.0, 1e-3).unwrap();
        assert_relative_eq!(w1, 0.18377629847393068, epsilon = 1e-14);
        assert!((fd1 - w1).abs() < 1e-3);
        let (fdg, wg) = buyarov_rakhmanov_check(&gaussian(), 0.0, 1e-3).unwrap();
        assert_relative_eq!(wg, INV_2PI, epsilon = 1e-14);
        assert!((fdg - wg).abs() < 1e-3);

        // error shrinks with dt
        let (fd_coarse, _) = buyarov_rakhmanov_check(&q.potential, 0.0, 1e-2).unwrap();
        assert!((fd - w).abs() < (fd_coarse - w).abs());
    }

    #[test]
    fn density_identity_at_interior_points() {
        let (lhs, rhs) = psi_v_identity_check(&gaussian(), 0.0).unwrap();
        assert_relative_eq!(lhs, INV_PI, epsilon = 1e-12);
        assert!((lhs - rhs).abs() < 1e-12);

        let q = quartic_family(1.0, -2.0).unwrap();
        let (l0, r0) = psi_v_identity_check(&q.potential, 0.0).unwrap();
        assert!(l0.abs() < 1e-12 && r0.abs() < 1e-12);
        let (l1, r1) = psi_v_identity_check(&q.potential, 1.0).unwrap();
        assert_relative_eq!(l1, 0.27566444771089602, epsilon = 1e-10);
        assert!((l1 - r1).abs() < 1e-10);

        for p in [gaussian(), q.potential.clone()] {
            for i in 1..=10 {
                let x = -1.8 + 3.6 * i as f64 / 11.0;
                let (lhs, rhs) = psi_v_identity_check(&p, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-6, "x = {x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn critical_constants_for_unit_quartic() {
        let q = quartic_family(1.0, -2.0).unwrap();
        let cd = critical_constants(&q.potential, 0.0, 1.0).unwrap();
        assert_relative_eq!(cd.c, 0.25, epsilon = 1e-10);
        assert_relative_eq!(cd.psi_second, 2.0 * INV_PI, epsilon = 1e-10);
        assert_relative_eq!(cd.w_at_xstar, INV_2PI, epsilon = 1e-12);
        assert_relative_eq!(cd.s, 0.7937005259840998, epsilon = 1e-10);
        // linear in L
        let cd0 = critical_constants(&q.potential, 0.0, 0.0).unwrap();
        assert_eq!(cd0.s, 0.0);
        let cd2 = critical_constants(&q.potential, 0.0, 2.0).unwrap();
        assert_relative_eq!(cd2.s, 2.0 * cd.s, epsilon = 1e-14);
    }

    #[test]
    fn non_critical_inputs_are_rejected() {
        assert!(critical_constants(&gaussian(), 0.0, 1.0).is_err());
        let q = quartic_family(1.0, -1.9).unwrap();
        assert!(critical_constants(&q.potential, 0.0, 1.0).is_err());
        let qc = quartic_family(1.0, -2.0).unwrap();
        assert!(critical_constants(&qc.potential, 3.0, 1.0).is_err());
    }

    #[test]
    fn conformal_map_behavior() {
        let q = quartic_family(1.0, -2.0).unwrap();
        let f0 = conformal_map(&q.potential, 0.0, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(f0.norm(), 0.0);

        // numerical derivative at the critical point matches c^{1/3}
        let h = 1e-4;
        let fp = conformal_map(&q.potential, 0.0, Complex64::new(h, 0.0)).unwrap();
        let fm = conformal_map(&q.potential, 0.0, Complex64::new(-h, 0.0)).unwrap();
        let deriv = (fp - fm).re / (2.0 * h);
        assert!((deriv - 0.62996052494743658).abs() < 1e-6);
        assert!(fp.im.abs() < 1e-15);
        assert!(fp.re > 0.0 && fm.re < 0.0);

        // Schwarz reflection
        let z = Complex64::new(0.3, 0.2);
        let f = conformal_map(&q.potential, 0.0, z).unwrap();
        let fbar = conformal_map(&q.potential, 0.0, z.conj()).unwrap();
        assert!((f.conj() - fbar).norm() < 1e-12);

        // outside the validity disk
        assert!(conformal_map(&q.potential, 0.0, Complex64::new(1.9, 0.0)).is_err());
    }

    mod properties {
        use super::super::*;
        use crate::potential::quartic_family;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // unit mass and even symmetry across the quartic family near
            // its critical coupling
            #[test]
            fn quartic_family_mass_and_symmetry(
                g in 0.5f64..2.0,
                dt in -0.05f64..0.05,
                t in 0.96f64..1.04,
            ) {
                let tc = -2.0 * g.sqrt();
                let q = quartic_family(g, tc + dt).unwrap();
                let em = solve_one_cut(&q.potential, t).unwrap();
                prop_assert!((em.mass_check - 1.0).abs() < 1e-10);
                prop_assert!((em.support.a + em.support.b).abs() < 1e-9);
                // q_t is a perfect square off the support
                let x = em.support.b + 0.37;
                prop_assert!(em.q_real(x) >= -1e-12);
            }
        }
    }

    #[test]
    fn divided_difference_is_stable_near_coincidence() {
        let coeffs = [1.0, -2.0, 0.5, 3.0];
        let x = 0.7;
        let exact = divided_difference(&coeffs, x, x + 1e-13);
        // p'(x) as the confluent limit
        let deriv = -2.0 + 2.0 * 0.5 * x + 3.0 * 3.0 * x * x;
        assert_relative_eq!(exact, deriv, epsilon = 1e-10);
    }
}
