use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use twpa_core::network::{
    linear_grid, read_touchstone, resample, serialize_touchstone, DataFormat, FrequencyUnit,
};
use twpa_core::scenario::{
    parse_config, run_scenario, RunContext, ScenarioError, EXIT_COMPUTATION, EXIT_IO,
    EXIT_VALIDATION,
};

#[derive(Parser)]
#[command(name = "twpa", version, about = "Scenario runner for the TWPA toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV tables and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to io.output_dir, then ./out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the number of processors.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config and list every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Touchstone helpers.
    Touchstone {
        #[command(subcommand)]
        action: TouchstoneCmd,
    },
}

#[derive(Subcommand)]
enum TouchstoneCmd {
    /// Rewrite a file in another data format or frequency unit.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, value_enum)]
        unit: Option<Unit>,
    },
    /// Interpolate onto a uniform grid (Hz).
    Resample {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        stop: f64,
        #[arg(long)]
        step: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Ma,
    Db,
    Ri,
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    Hz,
    Khz,
    Mhz,
    Ghz,
}

fn fail(code: i32, json: String) -> ExitCode {
    eprintln!("{json}");
    ExitCode::from(code as u8)
}

fn io_failure(e: impl std::fmt::Display) -> ExitCode {
    let err = ScenarioError::Io(twpa_core::Error::Io(std::io::Error::other(e.to_string())));
    fail(EXIT_IO, err.to_json())
}

fn read_config(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path)
        .map_err(|e| io_failure(format!("cannot read {}: {e}", path.display())))
}

fn run(config: &Path, out: Option<PathBuf>, seed: Option<u64>, workers: Option<usize>) -> ExitCode {
    if let Some(n) = workers {
        if n == 0 {
            return fail(
                EXIT_VALIDATION,
                serde_json::json!({
                    "status": "validation_error",
                    "exit_code": EXIT_VALIDATION,
                    "message": "--workers must be >= 1",
                })
                .to_string(),
            );
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return fail(
                EXIT_COMPUTATION,
                ScenarioError::Computation(twpa_core::Error::Config(e.to_string())).to_json(),
            );
        }
    }
    let text = match read_config(config) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(issues) => {
            let e = ScenarioError::Validation(issues);
            return fail(e.exit_code(), e.to_json());
        }
    };
    let base = config.parent().unwrap_or(Path::new("."));
    let ctx = RunContext {
        config_text: &text,
        seed,
        base_dir: base,
    };
    let output = match run_scenario(&cfg, &ctx) {
        Ok(o) => o,
        Err(e) => {
            let e = ScenarioError::from_run(e);
            return fail(e.exit_code(), e.to_json());
        }
    };
    let dir = out.unwrap_or_else(|| match &cfg.io.output_dir {
        Some(d) => base.join(d),
        None => PathBuf::from("out"),
    });
    match output.write_to(&dir) {
        Ok(files) => {
            let doc = serde_json::json!({
                "status": "ok",
                "files": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
            });
            println!("{doc}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_IO, ScenarioError::Io(e).to_json()),
    }
}

fn validate(config: &Path) -> ExitCode {
    let text = match read_config(config) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let issues = parse_config(&text).err().unwrap_or_default();
    let doc = serde_json::json!({ "valid": issues.is_empty(), "issues": issues });
    println!("{doc}");
    if issues.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION as u8)
    }
}

fn touchstone(action: TouchstoneCmd) -> ExitCode {
    let (input, output) = match &action {
        TouchstoneCmd::Convert { input, output, .. }
        | TouchstoneCmd::Resample { input, output, .. } => (input.clone(), output.clone()),
    };
    let net = match read_touchstone(&input) {
        Ok(n) => n,
        Err(e) => return fail(EXIT_IO, ScenarioError::Io(e).to_json()),
    };
    let net = match action {
        TouchstoneCmd::Convert { format, unit, .. } => {
            let mut n = net;
            if let Some(f) = format {
                n.format = match f {
                    Format::Ma => DataFormat::MA,
                    Format::Db => DataFormat::DB,
                    Format::Ri => DataFormat::RI,
                };
            }
            if let Some(u) = unit {
                n.unit = match u {
                    Unit::Hz => FrequencyUnit::Hz,
                    Unit::Khz => FrequencyUnit::KHz,
                    Unit::Mhz => FrequencyUnit::MHz,
                    Unit::Ghz => FrequencyUnit::GHz,
                };
            }
            n
        }
        TouchstoneCmd::Resample {
            start, stop, step, ..
        } => {
            let grid = linear_grid(start, stop, step);
            if grid.is_empty() {
                return fail(
                    EXIT_VALIDATION,
                    serde_json::json!({
                        "status": "validation_error",
                        "exit_code": EXIT_VALIDATION,
                        "message": "empty resampling grid",
                    })
                    .to_string(),
                );
            }
            match resample(&net, &grid) {
                Ok(n) => n,
                Err(e) => return fail(EXIT_COMPUTATION, ScenarioError::Computation(e).to_json()),
            }
        }
    };
    let tmp = output.with_extension("s2p.tmp");
    let res = std::fs::write(&tmp, serialize_touchstone(&net))
        .and_then(|_| std::fs::rename(&tmp, &output));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            io_failure(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            workers,
        } => run(&config, out, seed, workers),
        Command::Validate { config } => validate(&config),
        Command::Touchstone { action } => touchstone(action),
    }
}
