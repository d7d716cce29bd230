use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mvdisp::data::{generate_slats, load_dataset, read_pfm, save_views, write_pfm, write_pgm, DatasetKind, SceneSpec};
use mvdisp::harness::{emit_csv, load_config, parse_schedule, rmse_against, run_experiment, Method, RunOptions};
use mvdisp::{plan_schedule, run_progressive, DisparityField, Error, PlanMode, Resolution, SolverConfig};

#[derive(Parser)]
#[command(name = "mvdisp", version, about = "Multiview variational disparity estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Flat key = value file with solver settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `crosshair` or `gate:k=K,c=C`. Defaults to a gate for linear arrays
    /// and crosshair for light fields.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    irls_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render the synthetic slats scene.
    GenSlats {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 31)]
        views: usize,
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 360)]
        height: usize,
        #[arg(long, default_value_t = 0.01)]
        noise_var: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate the reference-view disparity of a dataset.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "welsch-l1")]
        method: Method,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out_disp: PathBuf,
        #[arg(long)]
        out_png: Option<PathBuf>,
    },
    /// RMSE after every stage for each method and alpha, as CSV.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "l2-l2,l2-l1,l1-l1,welsch-l1")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.025,0.05,0.1,0.2,0.5,1,2,5")]
        alphas: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
        /// Record wall-clock seconds; otherwise the column is 0 and the
        /// output is reproducible byte for byte.
        #[arg(long)]
        record_runtime: bool,
    },
    /// RMSE of an estimate against ground truth.
    Eval {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Ground truth is at twice the estimate's resolution.
        #[arg(long)]
        hypotheses: bool,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Stage { source, .. } => exit_code(source),
        Error::Numerical { .. } | Error::Estimation(_) => 4,
        Error::Ingestion { .. } | Error::UnsupportedFormat(_) | Error::Io(_) | Error::Scene(_) => 3,
        Error::DimensionMismatch { .. } | Error::DegenerateGeometry(_) => 3,
        Error::Parameter(_) | Error::State(_) | Error::Plan(_) => 2,
    }
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path, SolverConfig::default())?,
        None => SolverConfig::default(),
    };
    if let Some(n) = args.irls_iters {
        cfg.irls_iters = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn plan_mode(args: &SolverArgs, kind: DatasetKind, cfg: &SolverConfig) -> Result<PlanMode, Error> {
    match (&args.schedule, kind) {
        (Some(text), _) => parse_schedule(text, cfg),
        (None, DatasetKind::Slats) => Ok(PlanMode::Gate {
            k: cfg.schedule_k,
            c: cfg.schedule_c,
        }),
        (None, DatasetKind::LightField) => Ok(PlanMode::Crosshair),
    }
}

fn gen_slats(out: &Path, views: usize, width: usize, height: usize, noise_var: f64, seed: u64) -> Result<(), Error> {
    let spec = SceneSpec {
        n_views: views,
        ..SceneSpec::scaled(width, height)
    };
    let scene = generate_slats(&spec)?.with_noise(noise_var, seed)?;
    save_views(out, &scene.views, Some(&scene.gt))?;
    println!("wrote {} views of {width}x{height} to {}", views, out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenSlats {
            out,
            views,
            width,
            height,
            noise_var,
            seed,
        } => gen_slats(&out, views, width, height, noise_var, seed),
        Command::Estimate {
            data,
            method,
            alpha,
            solver,
            out_disp,
            out_png,
        } => {
            let base = solver_config(&solver)?;
            let cfg = method.configure(&base, alpha.unwrap_or(base.alpha));
            let ds = load_dataset(&data)?;
            let plan = plan_schedule(&ds.views, plan_mode(&solver, ds.kind, &cfg)?)?;
            let stages = run_progressive(&ds.views, &plan, &cfg)?;
            let w = &stages.last().expect("plans have at least one stage").w;
            write_pfm(w.grid(), &out_disp)?;
            if let Some(png) = out_png {
                write_pgm(w.grid(), png, 16)?;
            }
            if let Some(gt) = &ds.gt {
                println!("rmse {}", rmse_against(w, gt)?);
            }
            Ok(())
        }
        Command::Sweep {
            data,
            methods,
            alphas,
            solver,
            out,
            record_runtime,
        } => {
            let cfg = solver_config(&solver)?;
            let ds = load_dataset(&data)?;
            let gt = ds
                .gt
                .as_ref()
                .ok_or_else(|| Error::ingestion(&data, "sweep needs ground truth"))?;
            let plan = plan_schedule(&ds.views, plan_mode(&solver, ds.kind, &cfg)?)?;
            let rows = run_experiment(&ds.views, gt, &methods, &alphas, &plan, &cfg, RunOptions { record_runtime })?;
            emit_csv(&rows, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Eval { est, gt, hypotheses } => {
            let est = DisparityField::base(read_pfm(&est)?);
            let gt_grid = read_pfm(&gt)?;
            let gt = if hypotheses {
                DisparityField::new(gt_grid, Resolution::Double)
            } else {
                DisparityField::base(gt_grid)
            };
            println!("{}", rmse_against(&est, &gt)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
