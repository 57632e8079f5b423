use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use revheat_cli::config::DEFAULT_PROFILE;
use revheat_cli::output::emit;
use revheat_cli::{run, Command, ExperimentConfig, InvalidConfig, THREADS_ENV};
use serde_json::json;

/// Geodesics, cut loci and heat kernels on two-spheres of revolution.
#[derive(Parser)]
#[command(name = "revheat", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// `ellipsoid:B,C`, `sphere[:R]` or a JSON profile document.
    #[arg(long, default_value = DEFAULT_PROFILE)]
    profile: String,
    /// Seed of the bootstrap resampling in fits.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the JSON result here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the CSV table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write an SVG line plot here.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Print the equivalent configuration file instead of running.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct SpectralArgs {
    /// Largest angular frequency.
    #[arg(long)]
    n_max: Option<usize>,
    /// Radial modes per angular frequency.
    #[arg(long)]
    k_max: Option<usize>,
    /// Radial cells.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Sub {
    /// Run a configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        print_config: bool,
    },
    /// Profile data and assumption checks.
    Profile {
        #[command(flatten)]
        common: Common,
    },
    /// Expansion of the half-period in b - nu, and its value at nu.
    #[command(alias = "phi-expansion")]
    Phi {
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        order: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Geodesic from (a, 0) with launch angle eta, as CSV (t, r, theta).
    Geodesic {
        #[arg(long, allow_hyphen_values = true)]
        eta: f64,
        #[arg(long)]
        t_end: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Half-period by quadrature against its expansion over a nu grid.
    Cutlocus {
        /// `lo:hi:n`, evenly spaced.
        #[arg(long)]
        nu_grid: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Power-law fits at the cut-conjugate point.
    Degeneracy {
        /// cubic, segment or hinged.
        #[arg(long)]
        what: Option<String>,
        /// `lo,hi`: launch angles, or displacement fractions of d for hinged.
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        /// along or transverse (hinged only).
        #[arg(long)]
        direction: Option<String>,
        /// Equator angle of the second hinge point (hinged only).
        #[arg(long)]
        theta: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Spectral heat kernel between two points with an exponent fit.
    Heat {
        /// `r,theta` on the equator; `r` may be `a`.
        #[arg(long)]
        x: Option<String>,
        /// `r,theta`; `r` may be `a`.
        #[arg(long)]
        y: String,
        /// `lo:hi:n`, log-spaced.
        #[arg(long)]
        t_grid: Option<String>,
        #[command(flatten)]
        spectral: SpectralArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Both exact forms of the antipodal kernel on the unit sphere.
    S2Exact {
        /// `lo:hi:n`, log-spaced.
        #[arg(long)]
        t_grid: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Full acceptance suite as a pass/fail table.
    VerifyAll {
        #[command(flatten)]
        spectral: SpectralArgs,
        #[command(flatten)]
        common: Common,
    },
}

fn config(command: Command, common: Common, params: &[(&str, Option<String>)]) -> (ExperimentConfig, bool) {
    let mut cfg = ExperimentConfig::new(command);
    cfg.profile = common.profile;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.json = common.json;
    cfg.csv = common.csv;
    cfg.svg = common.svg;
    for (key, value) in params {
        if let Some(v) = value {
            cfg.set(key, v);
        }
    }
    (cfg, common.print_config)
}

fn spectral_params(s: &SpectralArgs) -> [(&'static str, Option<String>); 3] {
    [
        ("n_max", s.n_max.map(|v| v.to_string())),
        ("k_max", s.k_max.map(|v| v.to_string())),
        ("grid", s.grid.map(|v| v.to_string())),
    ]
}

fn to_config(sub: Sub) -> anyhow::Result<(ExperimentConfig, bool)> {
    let s = |v: Option<f64>| v.map(|x| x.to_string());
    let u = |v: Option<usize>| v.map(|x| x.to_string());
    Ok(match sub {
        Sub::Run { config, print_config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))
                .map_err(|e| InvalidConfig(format!("{e:#}")))?;
            (ExperimentConfig::from_text(&text)?, print_config)
        }
        Sub::Profile { common } => config(Command::Profile, common, &[]),
        Sub::Phi { nu, order, common } => {
            config(Command::Phi, common, &[("nu", s(nu)), ("order", u(order))])
        }
        Sub::Geodesic { eta, t_end, common } => config(
            Command::Geodesic,
            common,
            &[("eta", Some(eta.to_string())), ("t_end", s(t_end))],
        ),
        Sub::Cutlocus { nu_grid, order, common } => {
            config(Command::Cutlocus, common, &[("nu_grid", nu_grid), ("order", u(order))])
        }
        Sub::Degeneracy {
            what,
            window,
            samples,
            direction,
            theta,
            common,
        } => config(
            Command::Degeneracy,
            common,
            &[
                ("what", what),
                ("window", window),
                ("samples", u(samples)),
                ("direction", direction),
                ("theta", s(theta)),
            ],
        ),
        Sub::Heat {
            x,
            y,
            t_grid,
            spectral,
            common,
        } => {
            let mut params = vec![("x", x), ("y", Some(y)), ("t_grid", t_grid)];
            params.extend(spectral_params(&spectral));
            config(Command::Heat, common, &params)
        }
        Sub::S2Exact { t_grid, common } => config(Command::S2Exact, common, &[("t_grid", t_grid)]),
        Sub::VerifyAll { spectral, common } => {
            config(Command::VerifyAll, common, &spectral_params(&spectral))
        }
    })
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|e| InvalidConfig(format!("{THREADS_ENV} = {v:?}: {e}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn execute(sub: Sub) -> anyhow::Result<usize> {
    init_threads()?;
    let (cfg, print_config) = to_config(sub)?;
    let mut stdout = std::io::stdout().lock();
    if print_config {
        cfg.validate()?;
        stdout.write_all(cfg.to_text().as_bytes())?;
        return Ok(0);
    }
    let outcome = run(&cfg)?;
    emit(
        &outcome.report,
        cfg.json.as_deref(),
        cfg.csv.as_deref(),
        cfg.svg.as_deref(),
        &mut stdout,
    )?;
    Ok(outcome.failed_checks)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            let invalid = e.downcast_ref::<InvalidConfig>().is_some()
                || matches!(
                    e.downcast_ref::<revheat::Error>(),
                    Some(revheat::Error::OutOfRange { .. } | revheat::Error::InvalidProfile(_))
                );
            let report = json!({
                "error": {
                    "kind": if invalid { "invalid_config" } else { "computation" },
                    "message": format!("{e}"),
                    "causes": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
                }
            });
            eprintln!("{report}");
            ExitCode::from(if invalid { 2 } else { 3 })
        }
    }
}
