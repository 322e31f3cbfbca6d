use std::path::PathBuf;
use std::process::ExitCode;

use bes_core::config::{load_config, Format};
use bes_core::report::{emit, load_bundle, run_stages, Stages};
use bes_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bes",
    version,
    about = "First-eigenvalue bounds and gradient checks on weighted warped models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify curvature and gradient hypotheses of every model.
    Certify(Common),
    /// Evaluate the closed-form bound queries.
    Bounds(Common),
    /// Run the domain sweeps.
    Solve(Common),
    /// Run the gradient checks (certifies first).
    Verify(Common),
    /// Run the soliton audits.
    Soliton(Common),
    /// Run everything, including the random model sweep.
    Run(Common),
    /// Re-emit a saved bundle.json in another format.
    Report {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutFormat>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Md,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Md => Format::Md,
            OutFormat::Json => Format::Json,
        }
    }
}

fn execute(common: Common, stages: Stages) -> Result<i32, Error> {
    if let Some(j) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::validation("jobs", e.to_string()))?;
    }
    let mut cfg = load_config(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = common.out {
        cfg.output.dir = o;
    }
    if let Some(f) = common.format {
        cfg.output.format = f.into();
    }
    let bundle = run_stages(&cfg, stages)?;
    for p in emit(&bundle, cfg.output.format, &cfg.output.dir)? {
        println!("{}", p.display());
    }
    println!("run hash {}", bundle.run_hash);
    Ok(bundle.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let only = |f: fn(&mut Stages)| {
        let mut s = Stages::NONE;
        f(&mut s);
        s
    };
    let result = match cli.command {
        Command::Certify(c) => execute(c, only(|s| s.certify = true)),
        Command::Bounds(c) => execute(c, only(|s| s.bounds = true)),
        Command::Solve(c) => execute(c, only(|s| s.solve = true)),
        Command::Verify(c) => execute(c, only(|s| s.verify = true)),
        Command::Soliton(c) => execute(c, only(|s| s.soliton = true)),
        Command::Run(c) => execute(c, Stages::ALL),
        Command::Report {
            bundle,
            out,
            format,
        } => load_bundle(&bundle).and_then(|b| {
            let dir = out.unwrap_or_else(|| b.inputs.output.dir.clone());
            let format = format.map(Format::from).unwrap_or(b.inputs.output.format);
            for p in emit(&b, format, &dir)? {
                println!("{}", p.display());
            }
            Ok(0)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
