//! The three local scaling limits of the correlation kernel — sine, Airy,
//! and the critical Painleve II kernel — together with an in-repo Airy
//! evaluator so the crate carries no external special-function dependency.

use crate::error::{Error, Result};
use crate::painleve2::{psi_eval, HastingsMcLeodSolution, PsiConfig};
use crate::quad::adaptive_simpson;

/// Value of the Airy function and its derivative at a real point.
#[derive(Debug, Clone, Copy)]
pub struct AiryValue {
    pub ai: f64,
    pub aip: f64,
}

const AI_ZERO: f64 = 0.35502805388781723926; // 3^{-2/3} / Gamma(2/3)
const AIP_ZERO: f64 = -0.25881940379280679841; // -3^{-1/3} / Gamma(1/3)

/// Ai(x) and Ai'(x) for |x| <= 30, absolute error below 1e-10.
///
/// Regimes: Maclaurin series on [-7, 6] (the alternating sums stay small
/// enough that cancellation is harmless there), the exponential asymptotic
/// expansion beyond 6, and the oscillatory expansion below -7. The
/// oscillatory series only reaches 1e-10 absolute once |x| is past ~7,
/// which is why the series region is wider on the negative side.
pub fn airy(x: f64) -> Result<AiryValue> {
    if !x.is_finite() || x.abs() > 30.0 {
        return Err(Error::Domain(format!("Airy argument {x} outside [-30, 30]")));
    }
    if (-7.0..=6.0).contains(&x) {
        Ok(airy_series(x))
    } else if x > 6.0 {
        Ok(airy_asymptotic_positive(x))
    } else {
        Ok(airy_asymptotic_negative(x))
    }
}

/// Maclaurin series: `Ai = c1 f + c2 g` with
/// `f = sum 3^k (1/3)_k x^{3k} / (3k)!` and
/// `g = sum 3^k (2/3)_k x^{3k+1} / (3k+1)!`; term recurrences keep it to
/// O(terms) flops.
fn airy_series(x: f64) -> AiryValue {
    let x3 = x * x * x;
    let mut f = 1.0;
    let mut fa = 1.0; // running term of f
    let mut g = x;
    let mut gb = x;
    let mut fp = 0.0;
    let mut fc = if x != 0.0 { 0.5 * x * x } else { 0.0 }; // first term of f'
    fp += fc;
    let mut gp = 1.0;
    let mut gd = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        fa *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        f += fa;
        gb *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        g += gb;
        if k >= 2 {
            fc *= x3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0));
            fp += fc;
        }
        gd *= x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        gp += gd;
        if fa.abs() < 1e-18 * f.abs() && gb.abs() < 1e-18 * g.abs().max(1.0) {
            break;
        }
    }
    AiryValue {
        ai: AI_ZERO * f + AIP_ZERO * g,
        aip: AI_ZERO * fp + AIP_ZERO * gp,
    }
}

/// Asymptotic u_k, v_k coefficient pair streams, truncated at the smallest
/// term. `u_{k+1}/u_k = (6k+5)(6k+3)(6k+1) / (216 (k+1)(2k+1))`,
/// `v_k = (6k+1)/(1-6k) u_k`.
fn asymptotic_sums(zeta: f64, even_odd_split: bool) -> (f64, f64, f64, f64) {
    // returns (sum (-1)^k u_k zeta^-k, same for v) when !even_odd_split,
    // otherwise the four even/odd partial sums used on the negative axis
    let mut u = 1.0;
    let mut su_even = 1.0;
    let mut su_odd = 0.0;
    let mut sv_even = 1.0;
    let mut sv_odd = 0.0;
    let mut su = 1.0;
    let mut sv = 1.0;
    let mut pw = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..40 {
        let kf = k as f64;
        let ratio = (6.0 * kf + 5.0) * (6.0 * kf + 3.0) * (6.0 * kf + 1.0)
            / (216.0 * (kf + 1.0) * (2.0 * kf + 1.0));
        u *= ratio;
        pw /= zeta;
        let term_u = u * pw;
        if term_u.abs() > last {
            break; // past the optimal truncation point
        }
        last = term_u.abs();
        let v = (6.0 * (kf + 1.0) + 1.0) / (1.0 - 6.0 * (kf + 1.0)) * u;
        let term_v = v * pw;
        let k1 = k + 1;
        let sign = if k1 % 2 == 0 { 1.0 } else { -1.0 };
        su += sign * term_u;
        sv += sign * term_v;
        if even_odd_split {
            // grouping by parity of the index k1 with signs (-1)^{k1/2}
            if k1 % 2 == 0 {
                let s2 = if (k1 / 2) % 2 == 0 { 1.0 } else { -1.0 };
                su_even += s2 * term_u;
                sv_even += s2 * term_v;
            } else {
                let s2 = if (k1 / 2) % 2 == 0 { 1.0 } else { -1.0 };
                su_odd += s2 * term_u;
                sv_odd += s2 * term_v;
            }
        }
        if term_u.abs() < 1e-18 {
            break;
        }
    }
    if even_odd_split {
        (su_even, su_odd, sv_even, sv_odd)
    } else {
        (su, sv, 0.0, 0.0)
    }
}

fn airy_asymptotic_positive(x: f64) -> AiryValue {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (su, sv, _, _) = asymptotic_sums(zeta, false);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let pre = (-zeta).exp() / (2.0 * sqrt_pi);
    AiryValue {
        ai: pre * su / x.powf(0.25),
        aip: -pre * sv * x.powf(0.25),
    }
}

fn airy_asymptotic_negative(x: f64) -> AiryValue {
    let y = -x;
    let zeta = 2.0 / 3.0 * y.powf(1.5);
    let (pu, qu, pv, qv) = asymptotic_sums(zeta, true);
    // pu = sum (-1)^k u_{2k} zeta^{-2k},   qu = sum (-1)^k u_{2k+1} zeta^{-2k-1}
    // pv, qv likewise with v_k
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let arg = zeta - std::f64::consts::FRAC_PI_4;
    let (sin_a, cos_a) = arg.sin_cos();
    AiryValue {
        ai: (cos_a * pu + sin_a * qu) / (sqrt_pi * y.powf(0.25)),
        aip: (sin_a * pv - cos_a * qv) * y.powf(0.25) / sqrt_pi,
    }
}

/// Sine kernel `sin(pi (u-v)) / (pi (u-v))` with the confluent value 1.
pub fn k_bulk(u: f64, v: f64) -> f64 {
    let z = std::f64::consts::PI * (u - v);
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Airy kernel `(Ai(u) Ai'(v) - Ai'(u) Ai(v)) / (u - v)`; the diagonal is
/// `Ai'(u)^2 - u Ai(u)^2`.
pub fn k_edge(u: f64, v: f64) -> Result<f64> {
    let au = airy(u)?;
    if (u - v).abs() < 1e-7 {
        return Ok(au.aip * au.aip - u * au.ai * au.ai);
    }
    let av = airy(v)?;
    Ok((au.ai * av.aip - au.aip * av.ai) / (u - v))
}

/// Controls for the integral representation of the critical kernel.
#[derive(Debug, Clone, Copy)]
pub struct CritIntegralConfig {
    /// Default lower truncation of the s-integration.
    pub sigma_min: f64,
    /// Quadrature tolerance.
    pub quad_tol: f64,
    /// Bound accepted for the truncated tail.
    pub tail_tol: f64,
}

impl Default for CritIntegralConfig {
    fn default() -> Self {
        Self {
            sigma_min: -10.0,
            quad_tol: 1e-7,
            tail_tol: 1e-5,
        }
    }
}

/// Evaluation context for the critical kernel at a fixed deformation
/// parameter `s`: a Hastings-McLeod table plus integration controls.
///
/// Pure and immutable; grid sweeps may run concurrently.
#[derive(Debug, Clone)]
pub struct CritKernelContext<'a> {
    pub hm: &'a HastingsMcLeodSolution,
    pub s: f64,
    pub psi: PsiConfig,
    pub integral: CritIntegralConfig,
}

impl<'a> CritKernelContext<'a> {
    pub fn new(hm: &'a HastingsMcLeodSolution, s: f64) -> Result<Self> {
        if !(hm.s_min <= s && s <= hm.s_max) {
            return Err(Error::Domain(format!(
                "s = {s} outside the solved grid [{}, {}]",
                hm.s_min, hm.s_max
            )));
        }
        Ok(Self {
            hm,
            s,
            psi: PsiConfig::default(),
            integral: CritIntegralConfig::default(),
        })
    }
}

/// Critical kernel in the psi-function ratio form,
/// `[Phi1(u) Phi2(v) - Phi2(u) Phi1(v)] / (pi (u-v))`; the confluent
/// diagonal uses the exact zeta-derivatives from the system matrix.
pub fn k_crit(ctx: &CritKernelContext, u: f64, v: f64) -> Result<f64> {
    let pu = psi_eval(ctx.hm, u, ctx.s, &ctx.psi)?;
    if (u - v).abs() < 1e-7 {
        return Ok(k_crit_pair(&pu, &pu, u, u));
    }
    let pv = psi_eval(ctx.hm, v, ctx.s, &ctx.psi)?;
    Ok(k_crit_pair(&pu, &pv, u, v))
}

/// Kernel value from precomputed psi-values; lets grid sweeps share one
/// solve per distinct argument.
pub fn k_crit_pair(pu: &crate::painleve2::PsiValue, pv: &crate::painleve2::PsiValue, u: f64, v: f64) -> f64 {
    if (u - v).abs() < 1e-7 {
        (pu.phi2 * pu.dphi1 - pu.phi1 * pu.dphi2) / std::f64::consts::PI
    } else {
        (pu.phi1 * pv.phi2 - pu.phi2 * pv.phi1) / (std::f64::consts::PI * (u - v))
    }
}

/// Result of the integral representation with its truncation diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct CritIntegralValue {
    pub value: f64,
    /// Empirical bound on the discarded tail below `sigma_lo`.
    pub tail_bound: f64,
    /// Lower truncation actually used.
    pub sigma_lo: f64,
}

/// Critical kernel as the accumulated s-integral
/// `(1/pi) int_{-inf}^{s} [Phi1(u) Phi1(v) + Phi2(u) Phi2(v)] d sigma`.
///
/// The integrand at fixed (u, v) stays of order one until sigma reaches the
/// turning value `-2 max(u^2, v^2)` and decays super-exponentially past it,
/// so the truncation point moves with the arguments instead of sitting at
/// the table default. The discarded tail is bounded by fitting the observed
/// exponential decay near the truncation and reported with the result.
pub fn k_crit_integral_detailed(
    ctx: &CritKernelContext,
    u: f64,
    v: f64,
) -> Result<CritIntegralValue> {
    let turning = -2.0 * u.abs().max(v.abs()).powi(2);
    let wanted = (turning - 7.0).min(ctx.integral.sigma_min);
    let sigma_lo = wanted.max(ctx.hm.s_min);
    if sigma_lo >= ctx.s {
        return Err(Error::InvalidParameter(format!(
            "truncation {sigma_lo} is not below s = {}",
            ctx.s
        )));
    }

    let integrand = |sig: f64| -> Result<f64> {
        let pu = psi_eval(ctx.hm, u, sig, &ctx.psi)?;
        let pv = psi_eval(ctx.hm, v, sig, &ctx.psi)?;
        Ok((pu.phi1 * pv.phi1 + pu.phi2 * pv.phi2) / std::f64::consts::PI)
    };

    // fit the decay of the integrand envelope near the truncation point;
    // decay toward -infinity means growth in sigma, so the samples above
    // sigma_lo must dominate the ones at it
    let probe = 0.45;
    let mut samples = [0.0; 5];
    for (j, slot) in samples.iter_mut().enumerate() {
        *slot = integrand(sigma_lo + probe * j as f64)?.abs();
    }
    let at_cut = samples[0].max(samples[1]);
    let above = samples[3].max(samples[4]);
    let tail_bound = if at_cut < 1e-300 {
        0.0
    } else if above <= at_cut {
        f64::INFINITY // integrand is not decaying below the truncation
    } else {
        let growth = (above / at_cut).ln() / (3.0 * probe);
        at_cut / growth
    };
    if !(tail_bound <= ctx.integral.tail_tol) {
        return Err(Error::Truncation {
            bound: tail_bound,
            tol: ctx.integral.tail_tol,
        });
    }

    // adaptive quadrature; psi failures surface through a captured slot
    let failure = std::cell::RefCell::new(None);
    let f = |sig: f64| -> f64 {
        match integrand(sig) {
            Ok(val) => val,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let value = adaptive_simpson(&f, sigma_lo, ctx.s, ctx.integral.quad_tol)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(CritIntegralValue {
        value,
        tail_bound,
        sigma_lo,
    })
}

/// Convenience wrapper returning only the kernel value.
pub fn k_crit_integral(ctx: &CritKernelContext, u: f64, v: f64) -> Result<f64> {
    Ok(k_crit_integral_detailed(ctx, u, v)?.value)
}
