//! Command-line front end: every subcommand reads an optional `key = value`
//! config file and emits CSV with a `#`-prefixed header block, to stdout or
//! to the configured output path.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use rmtlab::error::{Error, Result};
use rmtlab::harness::{
    bulk_experiment, double_scaling_experiment, edge_experiment, grid_axis, render_airy_csv,
    render_equilibrium_csv, render_kernel_finite_csv, render_kernel_limit_csv, render_report,
    ConfigMap, ExperimentConfig,
};
use rmtlab::painleve2::{psi_eval, solve_hastings_mcleod, PsiConfig};
use rmtlab::potential::gaussian;

#[derive(Parser)]
#[command(name = "rmtlab", about = "Correlation-kernel scaling laboratory", version)]
struct Cli {
    /// Path to a `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium density and q-function over an x-grid.
    Equilibrium,
    /// Finite-n Christoffel-Darboux kernel over an (x, y) grid.
    KernelFinite,
    /// Hastings-McLeod table (s, q, qp), or psi-function rows with --phi.
    Painleve {
        /// Emit (zeta, phi1, phi2) at fixed s instead of the q-table.
        #[arg(long)]
        phi: bool,
    },
    /// Limiting kernel over a (u, v) grid.
    KernelLimit {
        /// bulk | edge | crit | crit-integral
        #[arg(long)]
        which: String,
    },
    /// Airy function values over an x-grid.
    Airy,
    /// Bulk convergence experiment (sine kernel).
    VerifyBulk,
    /// Edge convergence experiment (Airy kernel).
    VerifyEdge,
    /// Double-scaling critical convergence experiment.
    VerifyCritical,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let map = match &cli.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::default(),
    };
    let cfg = ExperimentConfig::from_map(&map)?;

    let csv = match cli.command {
        Command::Equilibrium => {
            let p = cfg.potential.build()?;
            let t = map.get_f64("t")?.unwrap_or(1.0);
            let x_range = map.get_pair("x_range")?.unwrap_or((-2.5, 2.5));
            let points = map.get_usize("x_points")?.unwrap_or(101);
            render_equilibrium_csv(&p, t, x_range, points)?
        }
        Command::KernelFinite => {
            let p = cfg.potential.build()?;
            let n = map.get_usize("n")?.unwrap_or(40);
            let n_weight = map.get_f64("n_weight")?.unwrap_or(n as f64);
            let x_range = map.get_pair("x_range")?.unwrap_or((-2.0, 2.0));
            let points = map.get_usize("x_points")?.unwrap_or(21);
            render_kernel_finite_csv(
                &p,
                n,
                n_weight,
                x_range,
                points,
                cfg.quad,
                cfg.cache_dir.clone(),
            )?
        }
        Command::Painleve { phi } => {
            let hm = match map.get("table_in") {
                Some(path) => {
                    rmtlab::painleve2::HastingsMcLeodSolution::load(std::path::Path::new(path))?
                }
                None => solve_hastings_mcleod(cfg.hm_range.0, cfg.hm_range.1, cfg.hm_tol)?,
            };
            if let Some(path) = map.get("table_out") {
                hm.save(std::path::Path::new(path))?;
            }
            if phi {
                let s = map.get_f64("s")?.unwrap_or(0.0);
                let range = map.get_pair("zeta_range")?.unwrap_or((0.0, 4.0));
                let points = map.get_usize("zeta_points")?.unwrap_or(81);
                let psi_cfg = PsiConfig {
                    zeta_cap: range.0.abs().max(range.1.abs()).max(6.0),
                    ..PsiConfig::default()
                };
                let mut out = String::new();
                out.push_str("# rmtlab psi functions\n");
                out.push_str(&format!("# s = {s:.12e}\n"));
                out.push_str("zeta,phi1,phi2\n");
                for &z in &grid_axis(range, points) {
                    let v = psi_eval(&hm, z, s, &psi_cfg)?;
                    out.push_str(&format!("{z:.12e},{:.12e},{:.12e}\n", v.phi1, v.phi2));
                }
                out
            } else {
                let range = map.get_pair("s_range")?.unwrap_or((hm.s_min, hm.s_max));
                let points = map.get_usize("s_points")?.unwrap_or(201);
                let mut out = String::new();
                out.push_str("# rmtlab hastings-mcleod\n");
                out.push_str(&format!("# s_min = {:.12e}\n", hm.s_min));
                out.push_str(&format!("# s_max = {:.12e}\n", hm.s_max));
                out.push_str(&format!("# residual = {:.3e}\n", hm.tolerance));
                out.push_str("s,q,qp\n");
                for &s in &grid_axis(range, points) {
                    let (q, qp) = hm.q_at(s)?;
                    out.push_str(&format!("{s:.12e},{q:.12e},{qp:.12e}\n"));
                }
                out
            }
        }
        Command::KernelLimit { which } => {
            let range = map.get_pair("grid_range")?.unwrap_or(cfg.grid_range);
            let points = map.get_usize("grid_points")?.unwrap_or(cfg.grid_points);
            let s = map.get_f64("s")?.unwrap_or(0.0);
            if which.starts_with("crit") {
                let hm = solve_hastings_mcleod(cfg.hm_range.0, cfg.hm_range.1, cfg.hm_tol)?;
                render_kernel_limit_csv(&which, Some(&hm), s, range, points)?
            } else {
                render_kernel_limit_csv(&which, None, s, range, points)?
            }
        }
        Command::Airy => {
            let range = map.get_pair("x_range")?.unwrap_or((-10.0, 10.0));
            let points = map.get_usize("x_points")?.unwrap_or(201);
            render_airy_csv(range, points)?
        }
        Command::VerifyBulk => {
            // the bulk limit needs positive density at the reference point,
            // so the default field here is the Gaussian
            let p = match map.get("potential") {
                Some(_) => cfg.potential.build()?,
                None => gaussian(),
            };
            let x_ref = map.get_f64("x_ref")?.unwrap_or(0.0);
            let n_list = map
                .get_usize_list("n_list")?
                .unwrap_or_else(|| vec![20, 40, 60]);
            let rep = bulk_experiment(
                &p,
                x_ref,
                &n_list,
                cfg.grid_range,
                cfg.grid_points,
                cfg.quad,
            )?;
            render_report(&rep)
        }
        Command::VerifyEdge => {
            let p = match map.get("potential") {
                Some(_) => cfg.potential.build()?,
                None => gaussian(),
            };
            let rep = edge_experiment(&p, &cfg.n_list, cfg.grid_range, cfg.grid_points, cfg.quad)?;
            render_report(&rep)
        }
        Command::VerifyCritical => {
            let rep = double_scaling_experiment(&cfg)?;
            render_report(&rep)
        }
    };

    match &cfg.output {
        Some(path) => std::fs::write(path, csv).map_err(Error::Io)?,
        None => print!("{csv}"),
    }
    Ok(())
}
