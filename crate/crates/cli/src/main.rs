//! kslab: scenario-driven front end for the kernel-sum laboratory.
//!
//! Exit codes: 0 success, 1 validation error, 2 numeric failure,
//! 3 expectation failure.

mod run;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kslab_core::Complex64;
use run::{default_out_dir, run_scenario, RunFailure};
use scenario::{build_model, catalog_scenario, ModelSpec, Scenario, EXAMPLES};

#[derive(Parser)]
#[command(name = "kslab", version, about = "kernel-sum laboratory scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario document and write its artifacts.
    Run {
        /// Path to the scenario JSON document.
        scenario: PathBuf,
        /// Output directory (default: kslab-out/<scenario-name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of worker threads for independent analyses.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// List the bundled named examples.
    List {
        /// Emit the catalog as runnable scenario documents (JSON).
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a named example's kernel at one point.
    Eval {
        /// Example name (see `kslab list`).
        #[arg(long)]
        example: String,
        /// Evaluation point as RE,IM.
        #[arg(long, value_parser = parse_complex)]
        z: Complex64,
        /// Absolute evaluation tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected RE,IM".into());
    }
    let re: f64 = parts[0].trim().parse().map_err(|e| format!("bad real part: {e}"))?;
    let im: f64 = parts[1].trim().parse().map_err(|e| format!("bad imaginary part: {e}"))?;
    Ok(Complex64::new(re, im))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out, seed, threads } => cmd_run(scenario, out, seed, threads),
        Command::List { json } => cmd_list(json),
        Command::Eval { example, z, tol } => cmd_eval(&example, z, tol),
    }
}

fn cmd_run(
    path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: usize,
) -> ExitCode {
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(1);
        }
    };
    let scenario: Scenario = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!(
                "validation error in {} at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            );
            return ExitCode::from(1);
        }
    };
    if let Err(msg) = scenario.validate() {
        eprintln!("validation error in {}: {msg}", path.display());
        return ExitCode::from(1);
    }
    let out_dir = out.unwrap_or_else(|| default_out_dir(&scenario));
    match run_scenario(&scenario, &out_dir, seed, threads.max(1)) {
        Ok(summary) => {
            println!(
                "scenario '{}' passed ({} analyses); artifacts in {}",
                summary.scenario,
                summary.analyses.len(),
                out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(RunFailure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(2)
        }
        Err(RunFailure::Expectation(msg)) => {
            eprintln!("expectation failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn cmd_list(json: bool) -> ExitCode {
    if json {
        let docs: Vec<Scenario> = EXAMPLES.iter().map(catalog_scenario).collect();
        println!("{}", serde_json::to_string_pretty(&docs).expect("catalog serializes"));
    } else {
        println!("{:<16} {:<62} defaults", "name", "model");
        for e in EXAMPLES.iter() {
            println!("{:<16} {:<62} {}", e.name, e.summary, e.default_params);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_eval(example: &str, z: Complex64, tol: f64) -> ExitCode {
    let model = match build_model(&ModelSpec::Example {
        example: example.to_string(),
        params: serde_json::Map::new(),
    }) {
        Ok(m) => m,
        Err(msg) => {
            eprintln!("validation error: {msg}");
            return ExitCode::from(1);
        }
    };
    match model.kernel.evaluate(z, tol) {
        Ok(r) => {
            let closed = model
                .closed_form
                .as_ref()
                .and_then(|h| kslab_core::nevanlinna::FunctionHandle::eval(h, z, tol).ok());
            let closed_txt = match closed {
                Some(c) => format!(",\"closed_re\":{},\"closed_im\":{}", c.re, c.im),
                None => String::new(),
            };
            println!(
                "{{\"re\":{},\"im\":{},\"tail_bound\":{},\"terms\":{}{closed_txt}}}",
                r.value.re, r.value.im, r.tail_bound, r.terms_used
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("numeric failure: {e}");
            ExitCode::from(2)
        }
    }
}
