mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::Status;
use config::FileConfig;
use output::{AnyResult, Output};
use std::path::PathBuf;
use std::process::ExitCode;

/// Pseudo-spectral experiments for massless Maxwell-Dirac in Coulomb gauge.
///
/// Exit status: 0 when every check passes, 1 when an identity or acceptance
/// check fails, 2 on a runtime or configuration error.
#[derive(Parser, Debug)]
#[command(name = "mdlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with optional sections named after the subcommands.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Spatial dimension override.
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Points per axis override.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Data size override.
    #[arg(long, global = true)]
    eps: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Exact algebraic identities and partitions of unity.
    VerifyAlgebra,
    /// Time evolution with charge, constraint and shell diagnostics.
    Evolve,
    /// Outer Picard iteration and its contraction ratios.
    Picard,
    /// Renormalization and parametrix defects across an ε sweep.
    Parametrix,
    /// Knapp example: coherence on the slab and dispersal.
    Knapp,
    /// Resonance identities, null-form gains and bilinear estimates.
    Nullform,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyAlgebra => "verify-algebra",
            Command::Evolve => "evolve",
            Command::Picard => "picard",
            Command::Parametrix => "parametrix",
            Command::Knapp => "knapp",
            Command::Nullform => "nullform",
        }
    }
}

/// Applies the seed and the --d/--n/--eps overrides to the relevant section.
fn apply_overrides(cli: &Cli, fc: &mut FileConfig) {
    let seed = cli.seed.or(fc.seed);
    match cli.command {
        Command::VerifyAlgebra => {
            let c = &mut fc.verify_algebra;
            if let Some(s) = seed {
                c.seed = s;
            }
            if let Some(d) = cli.d {
                c.dims = vec![d];
            }
            if let Some(n) = cli.n {
                c.partition_n = vec![n];
            }
        }
        Command::Evolve => {
            let c = &mut fc.evolve;
            if let Some(s) = seed {
                c.seed = s;
            }
            c.d = cli.d.unwrap_or(c.d);
            c.n = cli.n.unwrap_or(c.n);
            c.eps = cli.eps.unwrap_or(c.eps);
        }
        Command::Picard => {
            let c = &mut fc.picard;
            if let Some(s) = seed {
                c.seed = s;
            }
            c.d = cli.d.unwrap_or(c.d);
            c.n = cli.n.unwrap_or(c.n);
            if let Some(e) = cli.eps {
                c.eps = vec![e, e / 2.0];
            }
        }
        Command::Parametrix => {
            let c = &mut fc.parametrix;
            if let Some(s) = seed {
                c.seed = s;
            }
            c.d = cli.d.unwrap_or(c.d);
            c.n = cli.n.unwrap_or(c.n);
            if let Some(e) = cli.eps {
                c.eps = vec![e, e / 2.0, e / 4.0];
            }
        }
        Command::Knapp => {
            fc.knapp.knapp.d = cli.d.unwrap_or(fc.knapp.knapp.d);
        }
        Command::Nullform => {
            let c = &mut fc.nullform;
            if let Some(s) = seed {
                c.offset = s;
            }
            c.d = cli.d.unwrap_or(c.d);
        }
    }
}

fn init_threads(threads: usize) -> AnyResult<usize> {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        if threads > 1 {
            eprintln!("warning: built without the `parallel` feature; running on one thread");
        }
        Ok(1)
    }
}

fn execute(cli: &Cli) -> AnyResult<Status> {
    let threads = init_threads(cli.threads)?;
    let raw = match &cli.config {
        Some(p) => Some(std::fs::read(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?),
        None => None,
    };
    let mut fc: FileConfig = match &raw {
        Some(bytes) => toml::from_str(std::str::from_utf8(bytes)?)?,
        None => FileConfig::default(),
    };
    apply_overrides(cli, &mut fc);
    let mut out = Output::new(&cli.out)?;
    let name = cli.command.name();
    let (status, section) = match cli.command {
        Command::VerifyAlgebra => (commands::verify_algebra(&fc.verify_algebra, &mut out)?, serde_json::to_value(&fc.verify_algebra)?),
        Command::Evolve => (commands::evolve(&fc.evolve, &mut out)?, serde_json::to_value(&fc.evolve)?),
        Command::Picard => (commands::picard(&fc.picard, &mut out)?, serde_json::to_value(&fc.picard)?),
        Command::Parametrix => (commands::parametrix(&fc.parametrix, &mut out)?, serde_json::to_value(&fc.parametrix)?),
        Command::Knapp => (commands::knapp(&fc.knapp, &mut out)?, serde_json::to_value(&fc.knapp)?),
        Command::Nullform => (commands::nullform(&fc.nullform, &mut out)?, serde_json::to_value(&fc.nullform)?),
    };
    out.finish(name, &section, raw.as_deref(), threads, status.label())?;
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::IdentityFailure) => {
            eprintln!("{}: one or more checks failed", cli.command.name());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
