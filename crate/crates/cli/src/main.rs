use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gangolli_cli::{Check, Command, Job, LoadedConfig};

#[derive(Parser)]
#[command(name = "gangolli", version, about = "Gangolli operators and spherical Lévy processes on S²")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spherical transform round trip of the configured function.
    Transform(Common),
    /// Symbol table and growth-bound report.
    Symbol(Common),
    /// Direct versus spectral application of the operator.
    Apply(Common),
    /// Run one verification suite.
    Verify {
        #[arg(long, value_enum)]
        which: Check,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate paths and compare zonal moments with the symbol.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Transform(c) => (Command::Transform, c),
        Cmd::Symbol(c) => (Command::Symbol, c),
        Cmd::Apply(c) => (Command::Apply, c),
        Cmd::Verify { which, common } => (Command::Verify(which), common),
        Cmd::Simulate(c) => (Command::Simulate, c),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let config = match LoadedConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = common
        .out
        .clone()
        .or_else(|| config.config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let job = Job::new(command, config, common.seed);
    let outcome = match job.run() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_files(&out_dir, &outcome.files) {
        eprintln!("error: cannot write to {}: {e}", out_dir.display());
        return ExitCode::from(2);
    }
    println!("gangolli {command}");
    for line in &outcome.summary {
        println!("  {line}");
    }
    for f in &outcome.files {
        println!("  wrote {}", out_dir.join(&f.name).display());
    }
    println!("{}", if outcome.pass { "PASS" } else { "FAIL" });
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn write_files(dir: &Path, files: &[gangolli_cli::OutputFile]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for f in files {
        std::fs::write(dir.join(&f.name), &f.contents)?;
    }
    Ok(())
}
