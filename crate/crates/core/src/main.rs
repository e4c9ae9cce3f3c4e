//! `scde` command-line interface.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scde::coupling::{
    average_load, make_regular, read_graph_file, sw_rewire, to_base_matrix, write_graph_file,
    BaseMatrix, TrainingAssignment,
};
use scde::de::{
    run_de, sigma2_from_snr_db, DeConfig, MmseEval, SystemScenario, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use scde::output::{
    fmt_f64, write_evaluation_log_csv, write_search_csv, write_summary_csv, write_threshold_csv,
    write_trajectory_csv,
};
use scde::search::{
    ensemble_search, EnsembleSpec, ScenarioParams, SearchConfig, DEFAULT_FINALISTS,
    DEFAULT_TARGET_BER,
};
use scde::threshold::{
    bp_threshold, ThresholdQuery, DEFAULT_ALPHA_HI, DEFAULT_ALPHA_LO, DEFAULT_ALPHA_TOL,
    DEFAULT_SUCCESS_BER, DEFAULT_THRESHOLD_MAX_ITER,
};
use scde::{Error, Result};

#[derive(Parser)]
#[command(
    name = "scde",
    version,
    about = "Spatially coupled density evolution toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a regular or small-world coupling graph file.
    Generate(GenerateArgs),
    /// Run density evolution on a graph file and write trajectory CSVs.
    De(DeArgs),
    /// Estimate the BP threshold by bisection over the propagation load.
    Threshold(ThresholdArgs),
    /// Sample and rank small-world ensemble instances.
    Search(SearchArgs),
    /// Print the average load of a training/propagation split.
    Avgload(AvgloadArgs),
}

/// Comma-separated factor indices.
#[derive(Debug, Clone)]
struct TrainingList(Vec<usize>);

fn parse_training_list(s: &str) -> std::result::Result<TrainingList, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| format!("bad index {t:?}: {e}"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(TrainingList)
}

#[derive(Args)]
#[group(id = "training", required = true, multiple = false)]
struct TrainingChoice {
    /// Training-phase size; nodes are chosen by factor degree.
    #[arg(long)]
    tau: Option<usize>,
    /// Explicit comma-separated training factor indices.
    #[arg(long = "training-set", value_parser = parse_training_list)]
    training_set: Option<TrainingList>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long = "L")]
    len: usize,
    #[arg(long = "W")]
    width: usize,
    /// Rewiring probability.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Number of clusters.
    #[arg(long, default_value_t = 2)]
    c: usize,
    #[command(flatten)]
    training: TrainingChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long = "snr-db", default_value_t = 10.0)]
    snr_db: f64,
    #[arg(long = "alpha-tr")]
    alpha_tr: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Replace the graph file's training set.
    #[arg(long = "training-set", value_parser = parse_training_list)]
    training_set: Option<TrainingList>,
    /// Use the MMSE lookup table instead of direct quadrature.
    #[arg(long = "mmse-table")]
    mmse_table: bool,
    /// Per-position trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration summary CSV.
    #[arg(long)]
    summary: PathBuf,
}

#[derive(Args)]
#[group(id = "system", required = true, multiple = false)]
struct SystemChoice {
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Single-position system without coupling.
    #[arg(long)]
    uncoupled: bool,
    /// Regular coupling of this chain length (use with --W).
    #[arg(long = "L", requires = "width")]
    len: Option<usize>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    system: SystemChoice,
    #[arg(long = "W")]
    width: Option<usize>,
    #[arg(long = "snr-db", default_value_t = 10.0)]
    snr_db: f64,
    /// Training-phase load; required when training rows exist.
    #[arg(long = "alpha-tr")]
    alpha_tr: Option<f64>,
    #[arg(long = "training-set", value_parser = parse_training_list)]
    training_set: Option<TrainingList>,
    #[arg(long = "alpha-lo", default_value_t = DEFAULT_ALPHA_LO)]
    alpha_lo: f64,
    #[arg(long = "alpha-hi", default_value_t = DEFAULT_ALPHA_HI)]
    alpha_hi: f64,
    #[arg(long = "alpha-tol", default_value_t = DEFAULT_ALPHA_TOL)]
    alpha_tol: f64,
    #[arg(long = "success-ber", default_value_t = DEFAULT_SUCCESS_BER)]
    success_ber: f64,
    #[arg(long = "max-iter", default_value_t = DEFAULT_THRESHOLD_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long = "mmse-table")]
    mmse_table: bool,
    /// Threshold report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluation log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long = "L")]
    len: usize,
    #[arg(long = "W")]
    width: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    c: usize,
    #[arg(long)]
    tau: usize,
    #[arg(long)]
    samples: usize,
    /// Master seed; instance seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "snr-db", default_value_t = 10.0)]
    snr_db: f64,
    #[arg(long = "alpha-tr")]
    alpha_tr: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long = "target-ber", default_value_t = DEFAULT_TARGET_BER)]
    target_ber: f64,
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also compute BP thresholds for the finalists.
    #[arg(long)]
    thresholds: bool,
    #[arg(long, default_value_t = DEFAULT_FINALISTS)]
    finalists: usize,
    #[arg(long = "alpha-lo", default_value_t = DEFAULT_ALPHA_LO)]
    alpha_lo: f64,
    #[arg(long = "alpha-hi", default_value_t = DEFAULT_ALPHA_HI)]
    alpha_hi: f64,
    #[arg(long = "alpha-tol", default_value_t = DEFAULT_ALPHA_TOL)]
    alpha_tol: f64,
    #[arg(long = "success-ber", default_value_t = DEFAULT_SUCCESS_BER)]
    success_ber: f64,
    #[arg(long = "threshold-max-iter", default_value_t = DEFAULT_THRESHOLD_MAX_ITER)]
    threshold_max_iter: usize,
    /// Evaluate the MMSE by direct quadrature instead of the lookup table.
    #[arg(long = "direct-mmse")]
    direct_mmse: bool,
    /// Ranked report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Graph file of the best instance.
    #[arg(long = "best-graph")]
    best_graph: Option<PathBuf>,
}

#[derive(Args)]
struct AvgloadArgs {
    #[arg(long = "alpha-tr")]
    alpha_tr: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    tau: usize,
    #[arg(long = "L")]
    len: usize,
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn mmse_mode(table: bool) -> MmseEval {
    if table {
        MmseEval::Table
    } else {
        MmseEval::Direct
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let reg = make_regular(a.len, a.width)?;
    let (graph, training) = match (a.training.tau, a.training.training_set) {
        (Some(tau), _) => sw_rewire(&reg, a.p, a.c, tau, a.seed)?,
        (None, Some(set)) => {
            let training = TrainingAssignment::new(set.0, a.len)?;
            if a.p == 0.0 {
                (reg, training)
            } else {
                // tau=1 only drives the degree-based pick, which is replaced.
                (sw_rewire(&reg, a.p, a.c, 1, a.seed)?.0, training)
            }
        }
        (None, None) => unreachable!("clap enforces one training choice"),
    };
    write_graph_file(&a.out, &graph, &training)
}

fn cmd_de(a: DeArgs) -> Result<()> {
    let (graph, file_training) = read_graph_file(&a.graph)?;
    let training = match a.training_set {
        Some(set) => TrainingAssignment::new(set.0, graph.len())?,
        None => file_training,
    };
    let b = to_base_matrix(&graph)?;
    let scen = SystemScenario::from_snr_db(a.snr_db, a.alpha_tr, a.alpha, training)?;
    let cfg = DeConfig {
        max_iter: a.max_iter,
        tol: a.tol,
        mmse: mmse_mode(a.mmse_table),
        keep_snapshots: true,
    };
    let traj = run_de(&b, &scen, &cfg)?;
    write_trajectory_csv(&traj, create(&a.out)?)?;
    write_summary_csv(&traj, create(&a.summary)?)?;
    let last = traj.final_summary();
    let mut out = io::stdout().lock();
    writeln!(out, "converged={}", traj.converged)?;
    writeln!(out, "iterations={}", traj.iterations_run)?;
    writeln!(out, "final_avg_ber={}", fmt_f64(last.avg_ber))?;
    writeln!(out, "final_max_ber={}", fmt_f64(last.max_ber))?;
    Ok(())
}

fn cmd_threshold(a: ThresholdArgs) -> Result<()> {
    let sigma2 = sigma2_from_snr_db(a.snr_db);
    let (base, training): (BaseMatrix, TrainingAssignment) = if a.system.uncoupled {
        if a.training_set.is_some() {
            return Err(Error::Config("--uncoupled takes no training set".into()));
        }
        (BaseMatrix::uncoupled(), TrainingAssignment::empty())
    } else {
        let (graph, file_training) = match (&a.system.graph, a.system.len) {
            (Some(path), _) => read_graph_file(path)?,
            (None, Some(len)) => {
                let width = a
                    .width
                    .ok_or_else(|| Error::Config("--L needs --W".into()))?;
                (make_regular(len, width)?, TrainingAssignment::empty())
            }
            (None, None) => unreachable!("clap enforces one system choice"),
        };
        let training = match a.training_set {
            Some(set) => TrainingAssignment::new(set.0, graph.len())?,
            None => file_training,
        };
        (to_base_matrix(&graph)?, training)
    };
    let alpha_tr = match (a.alpha_tr, training.tau()) {
        (Some(v), _) => v,
        (None, 0) => 1.0,
        (None, _) => {
            return Err(Error::Config(
                "--alpha-tr is required when training rows exist".into(),
            ))
        }
    };
    let query = ThresholdQuery {
        alpha_lo: a.alpha_lo,
        alpha_hi: a.alpha_hi,
        alpha_tol: a.alpha_tol,
        success_ber: a.success_ber,
        max_iter: a.max_iter,
        sir_tol: a.tol,
        mmse: mmse_mode(a.mmse_table),
        ..ThresholdQuery::new(base, sigma2, alpha_tr, training)
    };
    let result = bp_threshold(&query)?;
    if let Some(path) = &a.out {
        write_threshold_csv(&result, create(path)?)?;
    }
    if let Some(path) = &a.log {
        write_evaluation_log_csv(&result, create(path)?)?;
    }
    write_threshold_csv(&result, io::stdout().lock())
}

fn cmd_search(a: SearchArgs) -> Result<()> {
    let spec = EnsembleSpec {
        len: a.len,
        width: a.width,
        p: a.p,
        c: a.c,
        tau: a.tau,
        master_seed: a.seed,
        n_samples: a.samples,
    };
    let params = ScenarioParams {
        sigma2: sigma2_from_snr_db(a.snr_db),
        alpha_tr: a.alpha_tr,
        alpha: a.alpha,
    };
    let cfg = SearchConfig {
        target_ber: a.target_ber,
        de: DeConfig {
            max_iter: a.max_iter,
            tol: a.tol,
            mmse: mmse_mode(!a.direct_mmse),
            keep_snapshots: false,
        },
        with_thresholds: a.thresholds,
        finalists: a.finalists,
        alpha_lo: a.alpha_lo,
        alpha_hi: a.alpha_hi,
        alpha_tol: a.alpha_tol,
        success_ber: a.success_ber,
        threshold_max_iter: a.threshold_max_iter,
        workers: a.workers,
    };
    let report = ensemble_search(&spec, &params, &cfg)?;
    write_search_csv(&report, create(&a.out)?)?;
    if let (Some(path), Some((g, t))) = (&a.best_graph, &report.best) {
        write_graph_file(path, g, t)?;
    }
    for f in &report.failures {
        eprintln!(
            "instance {} (seed {}) failed: {}",
            f.index, f.instance_seed, f.message
        );
    }
    if let Some(best) = report.best_score() {
        let mut out = io::stdout().lock();
        writeln!(out, "best_index={}", best.index)?;
        writeln!(out, "best_seed={}", best.instance_seed)?;
        match best.iterations_to_target {
            Some(i) => writeln!(out, "best_iterations_to_target={i}")?,
            None => writeln!(out, "best_iterations_to_target=NOT_REACHED")?,
        }
        writeln!(out, "best_final_max_ber={}", fmt_f64(best.final_max_ber))?;
        if let Some(t) = &best.threshold {
            writeln!(out, "best_alpha_bp={}", fmt_f64(t.alpha_bp))?;
        }
    }
    Ok(())
}

fn cmd_avgload(a: AvgloadArgs) -> Result<()> {
    let v = average_load(a.alpha_tr, a.alpha, a.tau, a.len)?;
    writeln!(io::stdout().lock(), "{}", fmt_f64(v))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::De(a) => cmd_de(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Search(a) => cmd_search(a),
        Command::Avgload(a) => cmd_avgload(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
