//! `subflow solve|verify|truncation-study|mms --config <path> --out <dir>`
//!
//! Log verbosity comes from `SUBFLOW_LOG` (e.g. `SUBFLOW_LOG=debug`).
//! Outer-iteration progress is printed to stderr as
//! `iter\t<k>\t<update>\t<margin>` lines.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use subflow::config::{load_config, Mode};
use subflow::run::{run, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(name = "subflow", version, about = "Subsonic Euler flow over a curved boundary: solve and verify")]
struct Cli {
    #[command(subcommand)]
    mode: ModeArg,
}

#[derive(Subcommand, Debug)]
enum ModeArg {
    /// Solve at the configured grid and write the fields.
    Solve(Common),
    /// Solve at two grids and run every diagnostic.
    Verify(Common),
    /// Compare solutions on nested truncated domains.
    TruncationStudy(Common),
    /// Manufactured-solution convergence study of the linear solver.
    Mms(Common),
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output` in the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the far-field entropy and Bernoulli formulas exactly as printed.
    #[arg(long)]
    strict_paper: bool,
    /// Seed for sampled diagnostics.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SUBFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.mode {
        ModeArg::Solve(a) => (Mode::Solve, a),
        ModeArg::Verify(a) => (Mode::Verify, a),
        ModeArg::TruncationStudy(a) => (Mode::TruncationStudy, a),
        ModeArg::Mms(a) => (Mode::Mms, a),
    };
    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    cfg.mode = mode;
    cfg.strict_paper |= args.strict_paper;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let result = run(&cfg, &out, &mut |label, r| {
        eprintln!("iter\t{}\t{:.6e}\t{:.6e}\t{label}", r.iteration, r.update, r.min_sonic_margin);
    });
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report.render());
            for f in outcome.report.failures() {
                eprintln!("FAIL {} = {:.6e} (threshold {:?})", f.key, f.value, f.threshold);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
