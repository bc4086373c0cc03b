use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twinosc::scan::output::{
    write_compare_csv, write_compare_jsonl, write_run_csv, write_run_jsonl, write_scan_csv,
    write_scan_jsonl,
};
use twinosc::scan::{presets, run_compare, run_curves, run_scan, ExperimentConfig, ScanError};

#[derive(Parser)]
#[command(name = "simulate", version, about = "Entanglement dynamics of two coupled oscillators in Ohmic baths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time series for one point, or for each entry of `points`.
    Run(Common),
    /// Death-time scan over the configured grid.
    Scan(Common),
    /// Markovian versus non-Markovian evolution of one point.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    config: Option<PathBuf>,
    /// Start from a checked-in preset instead of a file.
    #[arg(long, conflicts_with = "config", value_parser = presets::names())]
    preset: Option<String>,
    /// Output CSV path (default: the config's output.path, else stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, conflicts_with = "non_markovian")]
    markovian: bool,
    #[arg(long)]
    non_markovian: bool,
    /// Also write a JSON-lines mirror next to the CSV.
    #[arg(long)]
    jsonl: bool,
}

fn load(args: &Common) -> Result<ExperimentConfig, ScanError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(p), None) => ExperimentConfig::from_path(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        _ => return Err(ScanError::Config("give a config file or --preset".into())),
    };
    if args.markovian {
        cfg.markovian = true;
    }
    if args.non_markovian {
        cfg.markovian = false;
    }
    if let Some(p) = &args.output {
        cfg.output.path = Some(p.clone());
    }
    cfg.output.jsonl |= args.jsonl;
    if cfg.output.jsonl && cfg.output.path.is_none() {
        return Err(ScanError::Config("a JSON-lines mirror needs an output path".into()));
    }
    Ok(cfg)
}

fn emit(
    cfg: &ExperimentConfig,
    csv: impl Fn(&mut dyn Write) -> io::Result<()>,
    jsonl: impl Fn(&mut dyn Write) -> io::Result<()>,
) -> Result<(), ScanError> {
    let write_to = |path: &Path, f: &dyn Fn(&mut dyn Write) -> io::Result<()>| -> Result<(), ScanError> {
        let file = File::create(path)
            .map_err(|e| ScanError::Config(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    };
    match &cfg.output.path {
        Some(path) => {
            write_to(path, &csv)?;
            if cfg.output.jsonl {
                write_to(&path.with_extension("jsonl"), &jsonl)?;
            }
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), ScanError> {
    let (Command::Run(args) | Command::Scan(args) | Command::Compare(args)) = &command;
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(ScanError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ScanError::Config(e.to_string()))?;
    }
    let cfg = load(args)?;
    match command {
        Command::Run(_) => {
            let runs = run_curves(&cfg)?;
            emit(
                &cfg,
                |w| write_run_csv(w, &cfg, &runs),
                |w| write_run_jsonl(w, &cfg, &runs),
            )
        }
        Command::Scan(_) => {
            let out = run_scan(&cfg)?;
            emit(
                &cfg,
                |w| write_scan_csv(w, &cfg, &out),
                |w| write_scan_jsonl(w, &cfg, &out),
            )
        }
        Command::Compare(_) => {
            let cmp = run_compare(&cfg)?;
            emit(
                &cfg,
                |w| write_compare_csv(w, &cfg, &cmp),
                |w| write_compare_jsonl(w, &cfg, &cmp),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
