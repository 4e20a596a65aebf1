#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperlab::cli::{
    load_config, parse_exponent, profile_table, render_reports, render_table, run_config, run_selected, write_outputs, Category,
    RunConfig, RunOutput,
};
use hyperlab::geom::catalog_listing;
use hyperlab::selftest::{run_selftest, selftest_config};
use hyperlab::soliton::{reevaluated_residual, shoot, Closure, ShootOptions, SolitonSpec};
use hyperlab::LabError;

#[derive(Parser)]
#[command(name = "hyperlab", version, about = "Higher-order mean curvature laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative quadrature tolerance, overriding the config.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Inequality tasks of a config.
    Verify(Common),
    /// Decay scans and rigidity checklists of a config.
    Scan(Common),
    /// Soliton tasks of a config, or a single shooting run.
    Soliton {
        #[command(flatten)]
        common: Common,
        #[command(subcommand)]
        action: Option<SolitonAction>,
    },
    /// Built-in surfaces and their parameters.
    Catalog,
    /// Acceptance checks; writes the self-test report when `--out` is given.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Subcommand)]
enum SolitonAction {
    /// Rotationally symmetric closed solution by shooting.
    Shoot {
        #[arg(long)]
        r: usize,
        /// Exponent as a number or `p/q`.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("HYPERLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("HYPERLAB_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn emit(out: &RunOutput, dir: Option<&Path>, csv: bool, quiet: bool) -> Result<(), LabError> {
    match dir {
        Some(dir) => {
            let written = write_outputs(dir, out, csv)?;
            if !quiet {
                for p in written {
                    eprintln!("wrote {}", p.display());
                }
            }
        }
        None => print!("{}", render_reports(&out.entries)),
    }
    if !quiet {
        for f in &out.failures {
            eprintln!("task {} ({}): {}", f.task, f.kind, f.reason);
        }
    }
    Ok(())
}

fn run_category(common: &Common, category: Category) -> Result<u8, LabError> {
    let path = common.config.as_ref().ok_or_else(|| LabError::Config {
        field: "--config".into(),
        message: "a config file is required".into(),
    })?;
    let mut config: RunConfig = load_config(path)?;
    if !config.has_category(category) {
        return Err(LabError::Config {
            field: "tasks".into(),
            message: "no task of the requested kind".into(),
        });
    }
    if let Some(tol) = common.tol {
        if !(tol > 0.0) {
            return Err(LabError::Config {
                field: "--tol".into(),
                message: format!("must be positive, got {tol}"),
            });
        }
        config.tolerances.quad_rel_tol = tol;
    }
    let out = run_selected(&config, Some(category));
    let dir = common.out.clone().or_else(|| config.output.dir.clone());
    emit(&out, dir.as_deref(), config.output.csv, common.quiet)?;
    Ok(out.exit_code() as u8)
}

fn run_shoot(r: usize, alpha: &str, delta: f64, m: usize, out: Option<&Path>) -> Result<u8, LabError> {
    let spec = SolitonSpec::new(r, parse_exponent(alpha)?, delta)?;
    let res = shoot(&spec, m, &ShootOptions::default())?;
    if res.closure != Closure::Closed {
        println!("no closed profile found ({:?})", res.closure);
        return Ok(1);
    }
    let residual = reevaluated_residual(&res, 400)?;
    println!("radius {:.6}", res.radius);
    println!("residual {residual:.3e}");
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("profile.csv");
    std::fs::write(&path, render_table(&profile_table("profile".into(), &res))?)?;
    println!("profile {}", path.display());
    Ok(0)
}

fn run_selftest_cmd(out: Option<&Path>, quiet: bool) -> Result<u8, LabError> {
    let results = run_selftest();
    for r in &results {
        if !quiet || !r.passed {
            println!(
                "[{}] criterion {:>2} {}: {} ({:.2}s)",
                if r.passed { "PASS" } else { "FAIL" },
                r.id,
                r.name,
                r.detail,
                r.seconds
            );
        }
    }
    if let Some(dir) = out {
        write_outputs(dir, &run_config(&selftest_config()), true)?;
    }
    Ok(u8::from(results.iter().any(|r| !r.passed)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Verify(c) => run_category(c, Category::Verify),
        Command::Scan(c) => run_category(c, Category::Scan),
        Command::Soliton { common, action } => match action {
            Some(SolitonAction::Shoot { r, alpha, delta, m, out }) => run_shoot(*r, alpha, *delta, *m, out.as_deref()),
            None => run_category(common, Category::Soliton),
        },
        Command::Catalog => {
            for (id, doc) in catalog_listing() {
                println!("{id:<16} {doc}");
            }
            Ok(0)
        }
        Command::Selftest { out, quiet } => run_selftest_cmd(out.as_deref(), *quiet),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
