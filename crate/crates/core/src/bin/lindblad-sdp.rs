use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lindblad_sdp::config::{SweepConfig, SCHEMA_VERSION};
use lindblad_sdp::driver::{
    export_sdpa, prepare_selected, problem_size, run_sweep, verify_dump, write_outputs, write_text, SweepOverrides,
    CSV_COLUMNS, CSV_SCHEMA_VERSION,
};
use lindblad_sdp::dump::CandidateDump;
use lindblad_sdp::sdp::{ClarabelBackend, ConicBackend, Objective, SdpaScriptBackend};
use lindblad_sdp::Result;

#[derive(Parser)]
#[command(name = "lindblad-sdp", version, about = "Feasibility sweeps for locally conserving Lindblad descriptions of boundary-driven qubit chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Clarabel,
    /// cvxopt through the bundled SDPA script (needs python3 with cvxopt).
    Cvxopt,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every grid point of a config; writes CSV, dumps and a manifest.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        delta_tol: Option<f64>,
        /// Drop the trace equalities in the population-coherence problem.
        #[arg(long)]
        free_trace: bool,
        #[arg(long, value_enum, default_value = "clarabel")]
        solver: Solver,
    },
    /// Replay a candidate dump against the config it came from.
    Verify {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Write one grid point's conic problem in SDPA sparse format.
    ExportSdpa {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated grid indices, one per sweep axis.
        #[arg(long, default_value = "")]
        point: String,
        #[arg(long, default_value = "pop")]
        objective: Objective,
        /// Standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Formats, backends and, given a config, its grid.
    Info {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep {
            config,
            out_dir,
            parallelism,
            delta_tol,
            free_trace,
            solver,
        } => {
            let mut cfg = SweepConfig::load(&config)?;
            SweepOverrides {
                out_dir,
                parallelism,
                delta_tol,
                free_trace: free_trace.then_some(true),
            }
            .apply(&mut cfg)?;
            let backend: Box<dyn ConicBackend> = match solver {
                Solver::Clarabel => Box::new(ClarabelBackend::default()),
                Solver::Cvxopt => Box::new(SdpaScriptBackend::default()),
            };
            eprintln!("{} grid points x {} objectives", cfg.n_points()?, cfg.optimization.objectives.len());
            let report = run_sweep(&cfg, backend.as_ref())?;
            let csv = write_outputs(&cfg, &report)?;
            for r in report.rows.iter().filter(|r| r.failed) {
                eprintln!("failed [{}] {} {}: {} {}", r.point.selector(), r.point.label(), r.objective.as_str(), r.row.status, r.messages.join("; "));
            }
            println!("{} rows written to {} ({} failed)", report.rows.len(), csv.display(), report.n_failed());
            Ok(if report.n_failed() > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Verify { dump, config } => {
            let cfg = SweepConfig::load(&config)?;
            let d = CandidateDump::read(&dump)?;
            let r = verify_dump(&d, &cfg)?;
            println!("point       {}", r.grid_label);
            println!("objective   {}", r.objective.as_str());
            println!("tau stored  {:e}", r.stored_tau);
            println!("tau replay  {:e} ({})", r.recomputed_tau, if r.tau_matches { "match" } else { "MISMATCH" });
            println!(
                "gksl        {} (min eig L {:?}, R {:?})",
                ok(r.gksl.passed),
                r.gksl.min_eigenvalue_left,
                r.gksl.min_eigenvalue_right
            );
            println!("conservation {} (max violation {:e})", ok(r.conservation.passed), r.conservation.max_violation);
            if let Some(l) = &r.lemma {
                println!("lemma       {} (distance {:e} vs bound {:e})", ok(l.satisfied), l.trace_distance, l.bound);
            }
            for n in &r.notes {
                println!("note        {n}");
            }
            println!("{}", if r.passed { "VERIFIED" } else { "VERIFICATION FAILED" });
            Ok(if r.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::ExportSdpa {
            config,
            point,
            objective,
            out,
        } => {
            let cfg = SweepConfig::load(&config)?;
            let text = export_sdpa(&cfg, &point, objective)?;
            match out {
                Some(p) => write_text(&p, &text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Info { config } => {
            println!("lindblad-sdp {}", env!("CARGO_PKG_VERSION"));
            println!("config schema_version {SCHEMA_VERSION}");
            println!("csv schema_version {CSV_SCHEMA_VERSION}: {}", CSV_COLUMNS.join(","));
            let ext = SdpaScriptBackend::default();
            println!("backends: clarabel, cvxopt ({})", if ext.available() { "available" } else { "unavailable" });
            if let Some(path) = config {
                let cfg = SweepConfig::load(&path)?;
                println!("grid points {}", cfg.n_points()?);
                for (ax, vals) in cfg.sweep.iter().zip(cfg.axis_values()?) {
                    let shown: Vec<String> = vals.iter().map(ToString::to_string).collect();
                    println!("  {} [{}]: {}", ax.axis.name(), vals.len(), shown.join(" "));
                }
                let first = cfg.grid()?.into_iter().next().map(|p| p.selector()).unwrap_or_default();
                let (p, prep) = prepare_selected(&cfg, &first)?;
                println!("first point {}: dim {}", p.label(), prep.tables.dim());
                for &o in &cfg.optimization.objectives {
                    let (n, m) = problem_size(&cfg, &prep, o)?;
                    println!("  {}: {n} variables, {m} cone rows", o.as_str());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}
