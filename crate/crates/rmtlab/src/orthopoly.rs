//! Three-term recurrences for the weight `exp(-N V)` and the finite-n
//! Christoffel-Darboux kernel.
//!
//! Moments of `exp(-N V)` are hopelessly ill-conditioned, so the
//! coefficients come from the discretized Stieltjes procedure: Lanczos with
//! full reorthogonalization on a composite Gauss rule, which is stable in
//! plain double precision with a few nodes per oscillation. Raw orthonormal
//! polynomials overflow for large `N V(x)`, so evaluation always runs on
//! the weighted functions `phi_k = e^{-N V/2} p_k` with the exponential
//! folded into the starting value.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad::composite_gauss;

/// Quadrature controls for the recurrence build.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Total node count; 0 picks `max(1024, 8 n_max)`.
    pub total_nodes: usize,
    pub panel_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            total_nodes: 0,
            panel_order: 16,
        }
    }
}

/// Recurrence data for the weight `exp(-N V)`:
/// `pi_{k+1} = (x - alpha_k) pi_k - beta_k pi_{k-1}` for the monic family.
///
/// `N` is any positive real; nothing here needs it to be an integer.
/// Immutable after construction; kernel evaluation over a grid can run
/// concurrently.
#[derive(Debug, Clone)]
pub struct RecurrenceTable {
    pub n_weight: f64,
    pub n_max: usize,
    /// alpha_0 .. alpha_{n_max - 1}.
    pub alpha: Vec<f64>,
    /// beta_0 .. beta_{n_max}; beta_0 is the total weight integral in the
    /// scaled measure (see `log_scale`).
    pub beta: Vec<f64>,
    /// The build subtracts `log_scale = max(-N V)` from the log-weight to
    /// keep node weights representable; `beta[0] * exp(log_scale)` is the
    /// true `int exp(-N V)`.
    pub log_scale: f64,
    /// Half-width of the quadrature interval used for the build.
    pub radius: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Truncation radius: the largest beta-integrand `x^{2 n_max} exp(-N V)`
/// must have dropped by e^{-79} from its peak at the cut, with 15% margin.
/// A rule based on the bare weight alone would land inside the support of
/// the equilibrium measure once N is large, cutting off mass the
/// orthonormal polynomials still carry.
fn truncation_radius(p: &Potential, n_weight: f64, n_max: usize) -> f64 {
    let mut radius = 0.0f64;
    for sign in [1.0, -1.0] {
        let g = |x: f64| 2.0 * n_max as f64 * x.ln() - n_weight * p.eval(sign * x);
        let mut x_hi = 1.0;
        let mut g_max = f64::NEG_INFINITY;
        loop {
            let steps = 4000;
            for i in 1..=steps {
                let x = x_hi * i as f64 / steps as f64;
                g_max = g_max.max(g(x));
            }
            if g(x_hi) < g_max - 90.0 || x_hi > 1e6 {
                break;
            }
            x_hi *= 2.0;
        }
        // walk inward from x_hi to the drop point
        let steps = 8000;
        let mut cut = x_hi;
        for i in (1..=steps).rev() {
            let x = x_hi * i as f64 / steps as f64;
            if g(x) >= g_max - 79.0 {
                cut = x;
                break;
            }
        }
        radius = radius.max(cut);
    }
    radius * 1.15
}

/// Builds the recurrence table by Lanczos with full reorthogonalization on
/// the discretized measure.
pub fn build_recurrence(
    p: &Potential,
    n_weight: f64,
    n_max: usize,
    quad: QuadratureConfig,
) -> Result<RecurrenceTable> {
    if !(n_weight > 0.0) || !n_weight.is_finite() {
        return Err(Error::InvalidParameter(format!("N = {n_weight}")));
    }
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let total = if quad.total_nodes == 0 {
        (8 * n_max).max(1024)
    } else {
        quad.total_nodes
    };
    if total < 4 * n_max {
        return Err(Error::InvalidParameter(format!(
            "node count {total} is below 4 n_max = {}",
            4 * n_max
        )));
    }
    let order = quad.panel_order.max(4);
    let panels = total.div_ceil(order);

    let radius = truncation_radius(p, n_weight, n_max);
    let (nodes, gauss_w) = composite_gauss(-radius, radius, panels, order);

    // scaled log-weight keeps the node weights representable
    let log_scale = nodes
        .iter()
        .fold(f64::NEG_INFINITY, |acc, &x| acc.max(-n_weight * p.eval(x)));
    let m = nodes.len();
    let mut d = vec![0.0; m];
    for i in 0..m {
        d[i] = (gauss_w[i] * (-n_weight * p.eval(nodes[i]) - log_scale).exp()).sqrt();
    }

    let beta0: f64 = d.iter().map(|v| v * v).sum();
    if !(beta0 > 0.0) {
        return Err(Error::Instability { k: 0, beta: beta0 });
    }

    let mut alpha = Vec::with_capacity(n_max);
    let mut beta = Vec::with_capacity(n_max + 1);
    beta.push(beta0);

    let inv = 1.0 / beta0.sqrt();
    let mut q_cur: Vec<f64> = d.iter().map(|v| v * inv).collect();
    let mut q_prev = vec![0.0; m];
    let mut basis: Vec<Vec<f64>> = vec![q_cur.clone()];
    let mut u = vec![0.0; m];

    for k in 0..n_max {
        for i in 0..m {
            u[i] = nodes[i] * q_cur[i];
        }
        let a_k: f64 = q_cur.iter().zip(&u).map(|(q, u)| q * u).sum();
        alpha.push(a_k);
        if k > 0 {
            let b_k = beta[k].sqrt();
            for i in 0..m {
                u[i] -= a_k * q_cur[i] + b_k * q_prev[i];
            }
        } else {
            for i in 0..m {
                u[i] -= a_k * q_cur[i];
            }
        }
        // full reorthogonalization, twice
        for _ in 0..2 {
            for qb in &basis {
                let proj: f64 = qb.iter().zip(&u).map(|(q, u)| q * u).sum();
                for i in 0..m {
                    u[i] -= proj * qb[i];
                }
            }
        }
        let b_next: f64 = u.iter().map(|v| v * v).sum();
        if !(b_next > 0.0) || !b_next.is_finite() || b_next < 1e-28 {
            return Err(Error::Instability {
                k: k + 1,
                beta: b_next,
            });
        }
        beta.push(b_next);
        let inv = 1.0 / b_next.sqrt();
        std::mem::swap(&mut q_prev, &mut q_cur);
        for i in 0..m {
            q_cur[i] = u[i] * inv;
        }
        basis.push(q_cur.clone());
    }

    Ok(RecurrenceTable {
        n_weight,
        n_max,
        alpha,
        beta,
        log_scale,
        radius,
        nodes,
        weights: gauss_w,
    })
}

impl RecurrenceTable {
    /// Quadrature nodes and plain Gauss weights of the build; handy for
    /// integrating kernel diagnostics with the same discretization.
    pub fn quadrature(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.weights)
    }

    /// True `beta_0 = int exp(-N V)`; may overflow for very deep wells, in
    /// which case use [`RecurrenceTable::log_beta0`].
    pub fn beta0_true(&self) -> f64 {
        self.beta[0] * self.log_scale.exp()
    }

    pub fn log_beta0(&self) -> f64 {
        self.beta[0].ln() + self.log_scale
    }

    /// Weighted orthonormal functions `phi_0(x) .. phi_n(x)`.
    fn phi_upto(&self, p: &Potential, n: usize, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        out[0] = (-0.5 * self.n_weight * p.eval(x) - 0.5 * self.log_beta0()).exp();
        if n >= 1 {
            out[1] = (x - self.alpha[0]) * out[0] / self.beta[1].sqrt();
        }
        for k in 1..n {
            out[k + 1] = ((x - self.alpha[k]) * out[k] - self.beta[k].sqrt() * out[k - 1])
                / self.beta[k + 1].sqrt();
        }
        out
    }

    /// Weighted functions together with their derivatives, from the
    /// differentiated recurrence.
    fn phi_and_deriv_upto(&self, p: &Potential, n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let phi = self.phi_upto(p, n, x);
        let mut dphi = vec![0.0; n + 1];
        dphi[0] = -0.5 * self.n_weight * p.eval_deriv(x) * phi[0];
        if n >= 1 {
            dphi[1] = (phi[0] + (x - self.alpha[0]) * dphi[0]) / self.beta[1].sqrt();
        }
        for k in 1..n {
            dphi[k + 1] = (phi[k] + (x - self.alpha[k]) * dphi[k]
                - self.beta[k].sqrt() * dphi[k - 1])
                / self.beta[k + 1].sqrt();
        }
        (phi, dphi)
    }
}

/// `phi_k(x) = e^{-N V(x)/2} p_k(x)` with `p_k` orthonormal for
/// `exp(-N V) dx`.
pub fn eval_weighted_poly(tab: &RecurrenceTable, p: &Potential, k: usize, x: f64) -> Result<f64> {
    if k > tab.n_max {
        return Err(Error::Index(format!(
            "k = {k} exceeds n_max = {}",
            tab.n_max
        )));
    }
    Ok(tab.phi_upto(p, k, x)[k])
}

/// Christoffel-Darboux kernel
/// `K_{n,N}(x, y) = sqrt(beta_n) (phi_n(x) phi_{n-1}(y) - phi_{n-1}(x) phi_n(y)) / (x - y)`
/// with the derivative form on the near-diagonal.
pub fn cd_kernel(tab: &RecurrenceTable, p: &Potential, n: usize, x: f64, y: f64) -> Result<f64> {
    if n < 1 || n > tab.n_max {
        return Err(Error::Index(format!("n = {n} outside 1..={}", tab.n_max)));
    }
    let b = tab.beta[n].sqrt();
    if (x - y).abs() < 1e-6 * tab.radius {
        let (phi, dphi) = tab.phi_and_deriv_upto(p, n, x);
        return Ok(b * (dphi[n] * phi[n - 1] - dphi[n - 1] * phi[n]));
    }
    let px = tab.phi_upto(p, n, x);
    let py = tab.phi_upto(p, n, y);
    Ok(b * (px[n] * py[n - 1] - px[n - 1] * py[n]) / (x - y))
}

/// Direct partial sum `sum_{k<n} phi_k(x) phi_k(y)`; the algebraic twin of
/// [`cd_kernel`], kept for cross-checks.
pub fn kernel_direct_sum(
    tab: &RecurrenceTable,
    p: &Potential,
    n: usize,
    x: f64,
    y: f64,
) -> Result<f64> {
    if n < 1 || n > tab.n_max {
        return Err(Error::Index(format!("n = {n} outside 1..={}", tab.n_max)));
    }
    let px = tab.phi_upto(p, n - 1, x);
    let py = tab.phi_upto(p, n - 1, y);
    Ok(px.iter().zip(&py).map(|(a, b)| a * b).sum())
}

/// Plain-text recurrence cache keyed by the full build parameters.
///
/// The directory comes from, in order: the explicit path, the
/// `RMTLAB_CACHE_DIR` environment variable, or a subdirectory of the
/// system temp dir. Cached tables carry no quadrature nodes; integrals of
/// kernel diagnostics need a freshly built table.
#[derive(Debug, Clone)]
pub struct RecurrenceCache {
    dir: PathBuf,
}

impl RecurrenceCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        let dir = dir
            .or_else(|| std::env::var_os("RMTLAB_CACHE_DIR").map(PathBuf::from))
            .unwrap_or_else(|| std::env::temp_dir().join("rmtlab-cache"));
        Self { dir }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn key(p: &Potential, n_weight: f64, n_max: usize, quad: QuadratureConfig) -> String {
        let coeffs: Vec<String> = p.coeffs().iter().map(|c| format!("{c:?}")).collect();
        format!(
            "coeffs=[{}];N={:?};n_max={};nodes={};order={}",
            coeffs.join(","),
            n_weight,
            n_max,
            quad.total_nodes,
            quad.panel_order
        )
    }

    fn file_for(&self, key: &str) -> PathBuf {
        // FNV-1a; collisions are harmless because the key is verified on load
        let mut h: u64 = 0xcbf29ce484222325;
        for b in key.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        self.dir.join(format!("rec_{h:016x}.txt"))
    }

    /// Loads the table for these parameters or builds and stores it.
    pub fn load_or_build(
        &self,
        p: &Potential,
        n_weight: f64,
        n_max: usize,
        quad: QuadratureConfig,
    ) -> Result<RecurrenceTable> {
        let key = Self::key(p, n_weight, n_max, quad);
        let path = self.file_for(&key);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Some(tab) = parse_cached(&text, &key, n_weight, n_max) {
                return Ok(tab);
            }
        }
        let tab = build_recurrence(p, n_weight, n_max, quad)?;
        std::fs::create_dir_all(&self.dir)?;
        let mut out = String::new();
        out.push_str("# rmtlab recurrence cache\n");
        out.push_str(&format!("# key = {key}\n"));
        out.push_str(&format!("# log_scale = {:?}\n", tab.log_scale));
        out.push_str(&format!("# radius = {:?}\n", tab.radius));
        out.push_str("k,alpha,beta\n");
        for k in 0..=n_max {
            let a = if k < n_max { tab.alpha[k] } else { 0.0 };
            out.push_str(&format!("{k},{a:?},{:?}\n", tab.beta[k]));
        }
        // write-then-rename so concurrent readers never see a torn file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, out)?;
        std::fs::rename(&tmp, &path)?;
        Ok(tab)
    }
}

fn parse_cached(text: &str, key: &str, n_weight: f64, n_max: usize) -> Option<RecurrenceTable> {
    let mut key_ok = false;
    let mut log_scale = None;
    let mut radius = None;
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# key = ") {
            key_ok = rest == key;
        } else if let Some(rest) = line.strip_prefix("# log_scale = ") {
            log_scale = rest.trim().parse::<f64>().ok();
        } else if let Some(rest) = line.strip_prefix("# radius = ") {
            radius = rest.trim().parse::<f64>().ok();
        } else if !line.starts_with('#') && !line.starts_with('k') && !line.trim().is_empty() {
            let mut it = line.split(',');
            let _k = it.next()?;
            alpha.push(it.next()?.trim().parse::<f64>().ok()?);
            beta.push(it.next()?.trim().parse::<f64>().ok()?);
        }
    }
    if !key_ok || beta.len() != n_max + 1 {
        return None;
    }
    alpha.truncate(n_max);
    Some(RecurrenceTable {
        n_weight,
        n_max,
        alpha,
        beta,
        log_scale: log_scale?,
        radius: radius?,
        nodes: Vec::new(),
        weights: Vec::new(),
    })
}
