//! Command-line front end. [`run`] returns the process exit code.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph_eval::{auc, auc15, confusion, roc_over_threshold, select_edges};
use crate::init::{initialize, InitMethod};
use crate::io::{
    ensure_dir, parent_dir, read_json, read_params, read_scores_dir, roc_pairs, write_edges, write_json, write_params,
    write_scores_dir, write_trace, Metrics, RunMeta, TruthFile,
};
use crate::model::FitConfig;
use crate::selection::{elbow_k, select_params, CvOptions, Grid};
use crate::solver::{distance_metric, fit, fit_with_truth};
use crate::sweep::{replicate_auc, run_sweep_with_threads, SweepPlan, Vary};
use crate::synth::{simulate, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(name = "latentgraph", version, about = "Latent graph estimation from multimodal functional scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Cca,
    CcaAggregate,
}

impl From<InitArg> for InitMethod {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Cca => InitMethod::Cca,
            InitArg::CcaAggregate => InitMethod::CcaAggregate,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate score matrices and ground truth from a spec file.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Initialize and fit the model to a data directory.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Fit configuration; defaults apply to omitted fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "cca")]
        init: InitArg,
        /// Latent dimension. Falls back to `r` from `--truth`, then the
        /// canonical-correlation elbow.
        #[arg(long)]
        k: Option<usize>,
        /// Record the distance to this ground truth in the trace.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Subtract per-row sample means before fitting.
        #[arg(long)]
        center: bool,
    },
    /// Compare a fit against the ground truth.
    Evaluate {
        /// Output directory of `fit`.
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicated simulate-and-fit runs over one varying setting.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// `s=1..P`, `N=100,200,400` or `k=1,2,3`.
        #[arg(long)]
        vary: String,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "cca")]
        init: InitArg,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated BIC selection of `s`, `alpha`, `tau1` and `tau2`.
    Select {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "cca")]
        init: InitArg,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<FitConfig> {
    let cfg = match path {
        Some(p) => read_json(p)?,
        None => FitConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_spec(path: &Path) -> Result<SyntheticSpec> {
    let spec: SyntheticSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

/// Thread cap from `LATENTGRAPH_THREADS`, else the number of cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var("LATENTGRAPH_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::invalid("LATENTGRAPH_THREADS", format!("expected a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn simulate_cmd(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = load_spec(spec_path)?;
    let (data, truth) = simulate(&spec)?;
    write_scores_dir(out, &data)?;
    write_json(&out.join("truth.json"), &TruthFile::from_truth(&truth))?;
    write_json(&out.join("spec.json"), &spec)?;
    RunMeta::new("simulate", Some(spec.seed), &json!({ "spec": spec })).write(out)
}

struct FitArgs<'a> {
    data: &'a Path,
    config: Option<&'a Path>,
    out: &'a Path,
    init: InitMethod,
    k: Option<usize>,
    truth: Option<&'a Path>,
    center: bool,
}

fn fit_cmd(a: FitArgs<'_>) -> Result<()> {
    let cfg = load_config(a.config)?;
    let mut data = read_scores_dir(a.data)?;
    if a.center {
        data = data.centered();
    }
    let truth = a.truth.map(read_json::<TruthFile>).transpose()?;
    let kmin = data.k_m().iter().copied().min().unwrap_or(1);
    let k = match (a.k, &truth) {
        (Some(k), _) => k,
        (None, Some(t)) => t.r,
        (None, None) => elbow_k(&data, kmin)?,
    };
    cfg.validate_for(data.p(), k)?;
    let init = initialize(&data, k, a.init, &cfg)?;
    let truth_params = match &truth {
        Some(t) if t.r == k => Some(t.params()?),
        Some(_) => {
            log::warn!("truth has a different latent dimension; distances are not recorded");
            None
        }
        None => None,
    };
    let (params, trace) = match &truth_params {
        Some(tp) => fit_with_truth(&data, &init, &cfg, tp)?,
        None => fit(&data, &init, &cfg)?,
    };
    ensure_dir(a.out)?;
    write_params(&a.out.join("params.json"), &params)?;
    write_trace(&a.out.join("trace.csv"), &trace)?;
    write_edges(&a.out.join("edges.csv"), &select_edges(&params, cfg.eps0, cfg.edge_rule))?;
    write_json(&a.out.join("config.json"), &cfg)?;
    let init_name = match a.init {
        InitMethod::Cca => "cca",
        InitMethod::CcaAggregate => "cca-aggregate",
    };
    RunMeta::new(
        "fit",
        None,
        &json!({ "config": cfg, "k": k, "init": init_name, "center": a.center }),
    )
    .write(a.out)
}

fn evaluate_cmd(est: &Path, truth_path: &Path, out: &Path) -> Result<()> {
    let params = read_params(&est.join("params.json"))?;
    let cfg_path = est.join("config.json");
    let cfg = load_config(cfg_path.exists().then_some(cfg_path.as_path()))?;
    let truth: TruthFile = read_json(truth_path)?;
    let graph = truth.graph()?;
    if graph.p != params.p() {
        return Err(Error::dims(format!("estimate has {} nodes, truth has {}", params.p(), graph.p)));
    }
    let est_graph = select_edges(&params, cfg.eps0, cfg.edge_rule);
    let (tpr, fpr) = confusion(&est_graph, &graph)?;
    let mut eps: Vec<f64> = est_graph.block_norms.iter().copied().collect();
    eps.push(f64::INFINITY);
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let curve = roc_over_threshold(&params, &eps, cfg.edge_rule, &graph)?;
    let (dist_max, dist_sum) = if truth.r == params.k() {
        let tp = truth.params()?;
        if tp.k_m() == params.k_m() {
            let (a, b) = distance_metric(&params, &tp)?;
            (Some(a), Some(b))
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };
    let metrics = Metrics {
        tpr,
        fpr,
        n_edges: est_graph.n_edges(),
        n_true_edges: graph.n_edges(),
        auc: Some(auc(&curve)),
        auc15: Some(auc15(&curve)),
        roc: roc_pairs(&curve),
        dist_max,
        dist_sum,
    };
    ensure_dir(&parent_dir(out))?;
    write_json(out, &metrics)?;
    RunMeta::new("evaluate", None, &json!({ "config": cfg, "truth_r": truth.r })).write(&parent_dir(out))
}

struct SweepArgs<'a> {
    spec: &'a Path,
    vary: &'a str,
    replicates: usize,
    config: Option<&'a Path>,
    init: InitMethod,
    k: Option<usize>,
    out: &'a Path,
}

fn sweep_cmd(a: SweepArgs<'_>) -> Result<()> {
    let spec = load_spec(a.spec)?;
    let config = load_config(a.config)?;
    let vary: Vary = a.vary.parse()?;
    let plan = SweepPlan {
        spec: spec.clone(),
        config: config.clone(),
        vary: vary.clone(),
        replicates: a.replicates,
        init: a.init,
        k: a.k,
    };
    let rows = run_sweep_with_threads(&plan, thread_count()?)?;
    ensure_dir(&parent_dir(a.out))?;
    let f = std::fs::File::create(a.out).map_err(|source| Error::File { path: a.out.to_path_buf(), source })?;
    let mut w = csv::Writer::from_writer(f);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| Error::File { path: a.out.to_path_buf(), source })?;
    if let Vary::S(_) = vary {
        for (rep, area, area15) in replicate_auc(&rows) {
            println!("replicate {rep}: AUC {area:.4} AUC15 {area15:.4}");
        }
    }
    RunMeta::new(
        "sweep",
        Some(spec.seed),
        &json!({ "spec": spec, "config": config, "vary": a.vary, "replicates": a.replicates, "k": a.k }),
    )
    .write(&parent_dir(a.out))
}

struct SelectArgs<'a> {
    data: &'a Path,
    grid: &'a Path,
    folds: usize,
    config: Option<&'a Path>,
    init: InitMethod,
    k: Option<usize>,
    seed: u64,
    out: &'a Path,
}

fn select_cmd(a: SelectArgs<'_>) -> Result<()> {
    let base = load_config(a.config)?;
    let grid: Grid = read_json(a.grid)?;
    let data = read_scores_dir(a.data)?;
    let kmin = data.k_m().iter().copied().min().unwrap_or(1);
    let k = match a.k {
        Some(k) => k,
        None => elbow_k(&data, kmin)?,
    };
    let opts = CvOptions { k, folds: a.folds, seed: a.seed, init: a.init, base: base.clone() };
    let sel = select_params(&data, &grid, &opts)?;
    let scores: Vec<_> = sel
        .scores
        .iter()
        .map(|(pt, score)| json!({ "s": pt.s, "alpha": pt.alpha, "tau1": pt.tau1, "tau2": pt.tau2, "score": score }))
        .collect();
    ensure_dir(&parent_dir(a.out))?;
    write_json(a.out, &json!({ "k": k, "config": sel.config, "scores": scores }))?;
    RunMeta::new(
        "select",
        Some(a.seed),
        &json!({ "grid": grid, "base": base, "folds": a.folds, "k": k }),
    )
    .write(&parent_dir(a.out))
}

/// Executes a parsed command.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { spec, out } => simulate_cmd(&spec, &out),
        Command::Fit { data, config, out, init, k, truth, center } => fit_cmd(FitArgs {
            data: &data,
            config: config.as_deref(),
            out: &out,
            init: init.into(),
            k,
            truth: truth.as_deref(),
            center,
        }),
        Command::Evaluate { est, truth, out } => evaluate_cmd(&est, &truth, &out),
        Command::Sweep { spec, vary, replicates, config, init, k, out } => sweep_cmd(SweepArgs {
            spec: &spec,
            vary: &vary,
            replicates,
            config: config.as_deref(),
            init: init.into(),
            k,
            out: &out,
        }),
        Command::Select { data, grid, folds, config, init, k, seed, out } => select_cmd(SelectArgs {
            data: &data,
            grid: &grid,
            folds,
            config: config.as_deref(),
            init: init.into(),
            k,
            seed,
            out: &out,
        }),
    }
}

/// Machine-readable description of `err` for stderr.
pub fn error_json(err: &Error) -> serde_json::Value {
    json!({ "error": err.kind(), "field": err.field(), "message": err.to_string() })
}

/// Exit status for `err`: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.kind() == "SchemaError" {
        2
    } else {
        1
    }
}

/// Parses `args`, runs the command and reports failures on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}
