use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use dibm::cases::OuterCondition;
use dibm::driver::{run_study, StudyConfig, StudyKind};
use dibm::error_analysis::ErrorRegion;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Study {
    H,
    Eps,
    Refined,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Region {
    All,
    Inside,
    Outside,
    Free,
}

/// Diffuse interface box method: convergence studies for the circle
/// interface problem.
#[derive(Parser, Debug)]
#[command(name = "dibm", version)]
struct Cli {
    #[arg(long, value_enum)]
    study: Study,
    /// Grid resolutions (h- and refined studies).
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Interface widths (ε-study).
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    /// Fixed ε for the h- and refined studies.
    #[arg(long)]
    eps: Option<f64>,
    /// Fixed grid resolution for the ε-study.
    #[arg(long)]
    n: Option<usize>,
    /// Half-width of the refinement band (refined study).
    #[arg(long)]
    band: Option<f64>,
    /// Relative residual tolerance of the CG solver.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "inside")]
    region: Region,
    /// Directory for per-run VTK files.
    #[arg(long)]
    vtk_out: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Impose u = 0 on the outer boundary instead of the exact trace.
    #[arg(long)]
    literal_outer_zero: bool,
    /// Run the rows of a study sequentially.
    #[arg(long)]
    single_thread: bool,
}

fn config(cli: &Cli) -> StudyConfig {
    let mut c = match cli.study {
        Study::H => StudyConfig::h_study(),
        Study::Eps => StudyConfig::eps_study(),
        Study::Refined => StudyConfig::refined_study(),
    };
    if let Some(v) = &cli.n_list {
        c.n_list = v.clone();
    }
    if let Some(v) = &cli.eps_list {
        c.eps_list = v.clone();
    }
    if let Some(v) = cli.eps {
        c.eps = v;
    }
    if let Some(v) = cli.n {
        c.n = v;
    }
    if let Some(v) = cli.tol {
        c.tol = v;
    }
    c.band = cli.band;
    c.region = match cli.region {
        Region::All => ErrorRegion::All,
        Region::Inside => ErrorRegion::InsideD,
        Region::Outside => ErrorRegion::OutsideD,
        Region::Free => ErrorRegion::FreeOnly,
    };
    if cli.literal_outer_zero {
        c.outer = OuterCondition::Zero;
    }
    c.vtk_out = cli.vtk_out.clone();
    c.single_thread = cli.single_thread;
    c
}

fn run(cli: &Cli) -> dibm::Result<()> {
    let cfg = config(cli);
    let table = run_study(&cfg)?;
    debug_assert!(cfg.kind == StudyKind::Eps || table.rows.len() == cfg.n_list.len());
    match &cli.csv_out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dibm: {e}");
            ExitCode::FAILURE
        }
    }
}
