use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use oscnh_cli::config::{DirectionsParams, MultiscaleParams};
use oscnh_cli::{load_config, parse, run, LoadedConfig, Module, RunConfig, OUTPUT_ROOT_ENV};

/// Numerical experiments for homogenization of fully nonlinear elliptic
/// equations with oscillating Neumann data.
#[derive(Parser, Debug)]
#[command(name = "oscnh", version)]
struct Cli {
    /// Root directory for run outputs and the artifact cache.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = "oscnh-out")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// laplacian, pucci+:l,L, pucci-:l,L, or operator JSON.
    #[arg(long)]
    operator: Option<String>,
    /// trig, const:v, or an expression tree as JSON.
    #[arg(long)]
    g: Option<String>,
    /// Strictly decreasing eps values, e.g. 1/8,1/16,1/32.
    #[arg(long)]
    eps_list: Option<String>,
    /// Worker threads (1 = sequential).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory relative to the output root.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AngleArgs {
    /// Normal angles in radians, comma separated.
    #[arg(long)]
    angles: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify directions and measure lattice-translate distances and
    /// equidistribution; prints one JSON object per query.
    Directions {
        /// Direction as a,b (normalized); repeat for several queries.
        #[arg(long, required = true)]
        nu: Vec<String>,
        #[arg(long, default_value_t = 1_000_000)]
        denominator_bound: u64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 100.0)]
        window: f64,
        #[arg(long, default_value_t = 4096)]
        samples: usize,
    },
    /// Build (or reuse) the slope table over the angle list.
    ///
    /// slope_table.csv columns: task_id, angle, mu_bar, error_bar, c1, c2.
    Slope {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        angles: AngleArgs,
    },
    /// One cell solve per (angle, eps).
    ///
    /// sweep.csv columns: task_id, angle, eps, h, mu_eps, mu_eps_alt,
    /// flatness, lateral_sensitivity, iterations.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        angles: AngleArgs,
    },
    /// Scale book, slab slopes, second homogenization and composite barrier.
    ///
    /// slab_slopes.csv columns: task_id, k, mu_k, lateral_sensitivity.
    /// multiscale.json holds the full report including the scale book.
    Multiscale {
        #[command(flatten)]
        common: Common,
        /// Angles nu,nu1,nu2 in radians.
        #[arg(long)]
        directions: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        mu_bar_guess: Option<f64>,
    },
    /// Homogenized-operator table and eigenvalue invariance check.
    ///
    /// fbar_table.csv columns: task_id, theta, value (F̄ at diag(cos θ, sin θ)).
    /// invariance.csv columns: task_id, matrix, angle, deviation.
    Fbar {
        #[command(flatten)]
        common: Common,
        /// Seed of the random rotations.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convergence of u_eps to the homogenized solution on a domain.
    ///
    /// domain_convergence.csv columns: task_id, eps, sup_distance.
    /// u_eps.csv and u_homogenized.csv (finest eps) columns: i, j, world_x,
    /// world_y, value.
    Domain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        angles: AngleArgs,
        /// ellipse:a,b or annulus:r1,r2.
        #[arg(long)]
        domain: Option<String>,
        /// Distance of the compact subset from the boundary.
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Summarize every run manifest under the output root.
    Report,
}

fn base_config(common: &Common, module: Module) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let loaded = load_config(p)?;
            if loaded.config.module != module {
                anyhow::bail!("config selects module {:?}, but the subcommand is {:?}", loaded.config.module, module);
            }
            loaded.config
        }
        None => RunConfig::minimal(module),
    };
    if let Some(s) = &common.operator {
        cfg.operator = parse::operator(s)?;
    }
    if let Some(s) = &common.g {
        cfg.g = parse::data(s)?;
    }
    if let Some(s) = &common.eps_list {
        cfg.numerics.eps_list = parse::real_list(s)?;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    if common.output_dir.is_some() {
        cfg.output_dir = common.output_dir.clone();
    }
    Ok(cfg)
}

fn with_angles(mut cfg: RunConfig, angles: &AngleArgs) -> anyhow::Result<RunConfig> {
    if let Some(s) = &angles.angles {
        cfg.numerics.angle_list = parse::real_list(s)?;
    }
    Ok(cfg)
}

fn build_config(command: &Command) -> anyhow::Result<RunConfig> {
    match command {
        Command::Directions { nu, denominator_bound, eps, window, samples } => {
            let mut cfg = RunConfig::minimal(Module::Directions);
            let nu = nu
                .iter()
                .map(|s| match parse::real_list(s)?[..] {
                    [a, b] => Ok([a, b]),
                    _ => anyhow::bail!("--nu expects a,b, got {s:?}"),
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            cfg.directions = Some(DirectionsParams {
                nu,
                denominator_bound: *denominator_bound,
                eps: *eps,
                window: *window,
                samples: *samples,
            });
            Ok(cfg)
        }
        Command::Slope { common, angles } => with_angles(base_config(common, Module::Slope)?, angles),
        Command::Sweep { common, angles } => with_angles(base_config(common, Module::Sweep)?, angles),
        Command::Multiscale { common, directions, delta, eps, mu_bar_guess } => {
            let mut cfg = base_config(common, Module::Multiscale)?;
            let mut ms = match cfg.multiscale.take() {
                Some(ms) => ms,
                None => {
                    let dirs = directions.as_deref().context("--directions nu,nu1,nu2 is required without --config")?;
                    let (d, e) = (delta.context("--delta is required without --config")?, eps.context("--eps is required without --config")?);
                    let v = parse::real_list(dirs)?;
                    let [nu, nu1, nu2] = v[..] else { anyhow::bail!("--directions expects three angles") };
                    MultiscaleParams {
                        nu,
                        nu1,
                        nu2,
                        delta: d,
                        eps: e,
                        gates: Default::default(),
                        barrier: Default::default(),
                        mu_bar_guess: None,
                        kind: oscnh::multiscale::BarrierKind::Super,
                    }
                }
            };
            if let Some(s) = directions {
                let v = parse::real_list(s)?;
                let [nu, nu1, nu2] = v[..] else { anyhow::bail!("--directions expects three angles") };
                (ms.nu, ms.nu1, ms.nu2) = (nu, nu1, nu2);
            }
            ms.delta = delta.unwrap_or(ms.delta);
            ms.eps = eps.unwrap_or(ms.eps);
            ms.mu_bar_guess = mu_bar_guess.or(ms.mu_bar_guess);
            cfg.multiscale = Some(ms);
            Ok(cfg)
        }
        Command::Fbar { common, seed } => {
            let mut cfg = base_config(common, Module::Fbar)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            Ok(cfg)
        }
        Command::Domain { common, angles, domain, margin } => {
            let mut cfg = with_angles(base_config(common, Module::Domain)?, angles)?;
            if let Some(s) = domain {
                cfg.domain = Some(parse::domain(s)?);
            }
            if cfg.domain.is_none() {
                cfg.domain = Some(oscnh::domain::DomainSpec::ellipse(2.0, 1.5));
            }
            cfg.numerics.margin = margin.unwrap_or(cfg.numerics.margin);
            Ok(cfg)
        }
        Command::Report => unreachable!("report takes no config"),
    }
}

fn main_inner(cli: Cli) -> anyhow::Result<bool> {
    if let Command::Report = cli.command {
        for line in oscnh_cli::report(&cli.output_root)? {
            println!("{line}");
        }
        return Ok(true);
    }
    let config = build_config(&cli.command)?;
    let warnings = config.validate()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let loaded = LoadedConfig { config, warnings };
    let (manifest, out) = run(&loaded, &cli.output_root)?;
    if loaded.config.module == Module::Directions {
        print!("{}", std::fs::read_to_string(out.join("directions.jsonl"))?);
    }
    for t in manifest.tasks.iter().filter(|t| t.error.is_some()) {
        eprintln!("task {} failed: {}", t.id, t.error.as_deref().unwrap_or_default());
    }
    eprintln!(
        "{}: {} tasks ({} cached), outputs in {}",
        manifest.module,
        manifest.tasks.len(),
        manifest.cache_hits(),
        out.display()
    );
    Ok(!manifest.failed())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
