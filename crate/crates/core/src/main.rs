use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dgstokes::cli::{
    comparison_markdown, defaults_help, rows_markdown, run_comparison, run_convergence, run_penalty_sweep, run_solve,
    ConfigFile, RunConfig, TableRow,
};
use dgstokes::Result;

#[derive(Parser)]
#[command(name = "dgstokes", version, about = "SIP-DG Stokes solver with hp-multigrid preconditioning", after_help = defaults_help())]
struct Args {
    #[command(subcommand)]
    verb: Verb,
    /// Configuration file with `[section]` headers and `key = value` lines.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set mesh.nx=64` (repeatable).
    #[arg(short = 's', long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// CSV output path (overrides run.output).
    #[arg(short, long, global = true)]
    output: Option<String>,
    /// Markdown output path (overrides run.markdown); the table is always printed.
    #[arg(short, long, global = true)]
    markdown: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Solve one configuration.
    Solve,
    /// Convergence study over converge.meshes.
    Converge,
    /// Compare multigrid variants over compare.meshes and compare.delta_etas.
    Compare,
    /// Repeat a solve with the penalty scaled by each of sweep.factors.
    PenaltySweep,
}

fn load(args: &Args) -> Result<RunConfig> {
    let mut file = match &args.config {
        Some(p) => ConfigFile::parse(&fs::read_to_string(p)?)?,
        None => ConfigFile::default(),
    };
    for o in &args.overrides {
        file.set(o)?;
    }
    let mut cfg = RunConfig::from_file(&file)?;
    if args.output.is_some() {
        cfg.output = args.output.clone();
    }
    if args.markdown.is_some() {
        cfg.markdown = args.markdown.clone();
    }
    Ok(cfg)
}

fn run(args: &Args) -> Result<bool> {
    let cfg = load(args)?;
    println!("# resolved configuration\n{}", cfg.to_config_text());
    println!("# problem parameters\n{}\n", cfg.problem_spec()?.echo());
    let (rows, markdown) = match args.verb {
        Verb::Solve => {
            let rows = vec![run_solve(&cfg)?];
            let md = rows_markdown(&rows);
            (rows, md)
        }
        Verb::Converge => {
            let table = run_convergence(&cfg)?;
            let rows = table.all_rows();
            let md = format!(
                "{}\nleast-squares orders: velocity {:.3}, pressure {:.3} (reference: {})\n",
                rows_markdown(&rows),
                table.order_u,
                table.order_p,
                table.reference
            );
            (rows, md)
        }
        Verb::Compare => {
            let rows = run_comparison(&cfg)?;
            let md = comparison_markdown(&rows);
            (rows, md)
        }
        Verb::PenaltySweep => {
            let rows = run_penalty_sweep(&cfg)?;
            let md = rows_markdown(&rows);
            (rows, md)
        }
    };
    println!("{markdown}");
    if let Some(path) = &cfg.output {
        TableRow::write_csv(&rows, fs::File::create(path)?)?;
    }
    if let Some(path) = &cfg.markdown {
        fs::write(path, &markdown)?;
    }
    Ok(rows.iter().filter(|r| r.note != "least_squares").all(|r| r.converged))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some runs did not converge");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
