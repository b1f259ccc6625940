use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conformal_rigidity::error::Error;
use conformal_rigidity::experiments::{
    center_report, deficit_report, fit_report, parse_grid, ratio_probe, run_verify, sharpness_sweep, Config,
    RatioFamily, RatioOptions, SharpnessOptions, SingleOptions, Suite, VerifyOptions,
};
use conformal_rigidity::field::load_map_spec;

#[derive(Parser)]
#[command(name = "conformal", version, about = "Stability of conformal maps between spheres: checks and sweeps")]
struct Cli {
    /// JSON file with default values; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an invariant suite and print a JSON report.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Samples per (p, kappa) pair for the pointwise inequality.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Flat bump family: deficit and fitted distance against eps.
    Sharpness {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps_min: Option<f64>,
        #[arg(long)]
        eps_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        sphere_level: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stability ratio probe over a perturbation grid.
    Ratio {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// `log:LO:HI:K` or a comma-separated list.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deficit, energy and degree of a map spec.
    Deficit(SingleArgs),
    /// Nearest Möbius map (or flat Möbius map) to a map spec.
    Fit(SingleArgs),
    /// Möbius map that centers a map spec.
    Center(SingleArgs),
}

#[derive(clap::Args)]
struct SingleArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    level: Option<usize>,
}

enum Failure {
    Usage(String),
    Assertion,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownSuite(_)
            | Error::MalformedSpec(_)
            | Error::InvalidArgument(_)
            | Error::Io(_)
            | Error::UnsupportedDimension(_)
            | Error::InvalidLevel(_)
            | Error::InvalidEps(_)
            | Error::ResourceLimit { .. }
            | Error::DimensionMismatch { .. } => Failure::Usage(e.to_string()),
            _ => {
                eprintln!("error: {e}");
                Failure::Assertion
            }
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Usage(e.to_string()))
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.cmd {
        Cmd::Verify {
            suite,
            n,
            level,
            seed,
            samples,
        } => {
            let d = VerifyOptions::default();
            let opts = VerifyOptions {
                suite: suite.or(cfg.suite).map(|s| s.parse::<Suite>()).transpose()?.unwrap_or(d.suite),
                n: n.or(cfg.n).unwrap_or(d.n),
                level: level.or(cfg.level).unwrap_or(d.level),
                seed: seed.or(cfg.seed).unwrap_or(d.seed),
                fz_samples: samples.or(cfg.samples).unwrap_or(d.fz_samples),
                ..d
            };
            let rep = run_verify(&opts)?;
            println!("{}", json(&rep)?);
            for c in rep.failures() {
                eprintln!("FAILED {}: {} ({} {} {})", c.name, c.anchor, c.value, c.relation, c.bound);
            }
            if !rep.passed {
                return Err(Failure::Assertion);
            }
        }
        Cmd::Sharpness {
            n,
            eps_min,
            eps_max,
            points,
            level,
            sphere_level,
            out,
        } => {
            let d = SharpnessOptions::default();
            let opts = SharpnessOptions {
                n: n.or(cfg.n).unwrap_or(d.n),
                eps_min: eps_min.or(cfg.eps_min).unwrap_or(d.eps_min),
                eps_max: eps_max.or(cfg.eps_max).unwrap_or(d.eps_max),
                points: points.or(cfg.points).unwrap_or(d.points),
                level: level.or(cfg.level).unwrap_or(d.level),
                sphere_level: sphere_level.or(cfg.sphere_level).unwrap_or(d.sphere_level),
                include_zero: d.include_zero,
            };
            let rep = sharpness_sweep(&opts)?;
            write_out(&out.or(cfg.out.map(PathBuf::from)), &rep.csv())?;
            eprintln!(
                "deficit slope {:.4}, distance slope {:.4}, ratio spread {:.4} (empirical, implementation-dependent)",
                rep.deficit_slope, rep.distance_slope, rep.ratio_spread
            );
            if !rep.passed() {
                return Err(Failure::Assertion);
            }
        }
        Cmd::Ratio {
            family,
            n,
            grid,
            level,
            seed,
            out,
        } => {
            let d = RatioOptions::default();
            let opts = RatioOptions {
                family: family
                    .or(cfg.family)
                    .map(|s| s.parse::<RatioFamily>())
                    .transpose()?
                    .unwrap_or(d.family),
                n: n.or(cfg.n).unwrap_or(d.n),
                grid: grid.or(cfg.grid).map(|g| parse_grid(&g)).transpose()?.unwrap_or(d.grid),
                level: level.or(cfg.level).unwrap_or(d.level),
                seed: seed.or(cfg.seed).unwrap_or(d.seed),
                center_tol: d.center_tol,
            };
            let rep = ratio_probe(&opts)?;
            write_out(&out.or(cfg.out.map(PathBuf::from)), &rep.csv())?;
            eprintln!(
                "max ratio {:.6}, max linear ratio {:.6} (empirical, implementation-dependent)",
                rep.max_ratio, rep.max_linear_ratio
            );
            if !rep.bounded() {
                return Err(Failure::Assertion);
            }
        }
        Cmd::Deficit(a) => single(Kind::Deficit, a, &cfg)?,
        Cmd::Fit(a) => single(Kind::Fit, a, &cfg)?,
        Cmd::Center(a) => single(Kind::Center, a, &cfg)?,
    }
    Ok(())
}

enum Kind {
    Deficit,
    Fit,
    Center,
}

fn single(kind: Kind, a: SingleArgs, cfg: &Config) -> Result<(), Failure> {
    let field = load_map_spec(&a.spec, a.n.or(cfg.n))?;
    let opts = SingleOptions {
        level: a.level.or(cfg.level).unwrap_or(SingleOptions::default().level),
        ..Default::default()
    };
    let text = match kind {
        Kind::Deficit => json(&deficit_report(&field, &opts)?)?,
        Kind::Fit => json(&fit_report(&field, &opts)?)?,
        Kind::Center => json(&center_report(&field, &opts)?)?,
    };
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
