use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;

use tbl_core::concentration::{run_concentration_experiment, ExperimentConfig};
use tbl_core::doubling::{graph_doubling_report, DoublingReport};
use tbl_core::gcn::{lipschitz_b, FeatureMatrix, GcnSpec};
use tbl_core::graph::{degree_stats, graph_metric, shortest_path_metric, Diameter, Graph};
use tbl_core::random_graphs::{check_admissible, er_event_study, CkRule, ErdosRenyiSpec, LogBase};
use tbl_core::risk::{
    corollary32_bound, theorem31_bound, theorem32_bound, BoundReport, LossKind, LossSpec, NoisyBoundParams,
    TransductiveTask,
};
use tbl_core::transport::DiscreteMeasure;

use crate::error::CliError;
use crate::io::{builtin_graph, emit, read_features, read_gcn, read_graph, to_csv, to_json, write_atomic};
use crate::{Mode, Output, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: C,
    #[serde(flatten)]
    result: R,
}

fn report<C: Serialize, R: Serialize>(command: &str, config: C, result: R) -> Vec<u8> {
    to_json(&Report {
        schema_version: SCHEMA_VERSION,
        command,
        config,
        result,
    })
}

#[derive(Debug, Serialize)]
struct GraphConfig<'a> {
    graph: &'a Path,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_limit: Option<usize>,
}

#[derive(Debug, Serialize)]
struct MetricResult {
    k: usize,
    edges: usize,
    connected: bool,
    diam: Diameter,
    deg_min: usize,
    deg_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<&'static str>,
}

pub fn metric(path: &Path, out: &Output) -> Result<(), CliError> {
    let g = read_graph(path)?;
    let stats = degree_stats(&g);
    let connected = g.is_connected();
    let result = MetricResult {
        k: g.k(),
        edges: g.edge_count(),
        connected,
        diam: shortest_path_metric(&g).diameter(),
        deg_min: stats.deg_min,
        deg_max: stats.deg_max,
        warning: (!connected).then_some("graph is disconnected; distances between components are infinite"),
    };
    let config = GraphConfig { graph: path, exact_limit: None };
    emit(out.output.as_deref(), &report("metric", config, result))
}

#[derive(Debug, Serialize)]
struct DoublingResult {
    k: usize,
    #[serde(flatten)]
    report: DoublingReport,
}

pub fn doubling(path: &Path, exact_limit: usize, out: &Output) -> Result<(), CliError> {
    let g = read_graph(path)?;
    let result = DoublingResult {
        k: g.k(),
        report: graph_doubling_report(&g, exact_limit)?,
    };
    let config = GraphConfig {
        graph: path,
        exact_limit: Some(exact_limit),
    };
    emit(out.output.as_deref(), &report("doubling", config, result))
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("space").required(true).args(["graph", "builtin"])))]
pub struct ConcentrationArgs {
    /// Edge-list graph; its shortest-path metric is used.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Built-in graph: star:k, complete:k, path:k or cycle:k.
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "4,16,64,256")]
    n_list: Vec<u64>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = tbl_core::doubling::DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Serialize)]
struct ConcentrationConfig<'a> {
    command: &'a str,
    space: String,
    k: usize,
    measure: &'a str,
    alpha: f64,
    #[serde(flatten)]
    experiment: &'a ExperimentConfig,
}

pub fn concentration(args: &ConcentrationArgs) -> Result<(), CliError> {
    let (g, space) = match (&args.graph, &args.builtin) {
        (Some(path), _) => (read_graph(path)?, path.display().to_string()),
        (None, Some(name)) => (builtin_graph(name)?, name.clone()),
        (None, None) => return Err(CliError::usage("one of --graph or --builtin is required")),
    };
    if args.n_list.is_empty() {
        return Err(CliError::usage("--n-list is empty"));
    }
    let metric = graph_metric(&g)?;
    let mut experiment = ExperimentConfig::new(args.n_list.clone(), args.trials as usize, args.seed);
    experiment.delta = args.delta;
    experiment.exact_limit = args.exact_limit;
    let rows = run_concentration_experiment(&metric, &DiscreteMeasure::uniform(g.k()), &experiment)?;
    let config = ConcentrationConfig {
        command: "concentration",
        space,
        k: g.k(),
        measure: "uniform",
        alpha: 0.5,
        experiment: &experiment,
    };
    emit(args.out.output.as_deref(), &to_csv(&config, &rows))
}

/// `absolute`, `squared:<clip>` or `huber:<delta>`.
pub fn parse_loss(text: &str) -> Result<LossSpec, CliError> {
    let param = |v: &str| {
        v.parse::<f64>()
            .map_err(|e| CliError::usage(format!("bad loss parameter in {text:?}: {e}")))
    };
    let kind = match text.split_once(':') {
        None if text == "absolute" => LossKind::Absolute,
        Some(("squared", v)) => LossKind::SquaredClipped { clip: param(v)? },
        Some(("huber", v)) => LossKind::Huber { delta: param(v)? },
        _ => return Err(CliError::usage(format!("unknown loss {text:?}"))),
    };
    Ok(LossSpec::new(kind)?)
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Feature CSV, d_in rows by k columns.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Network whose class the bound covers.
    #[arg(long)]
    gcn: PathBuf,
    /// Network realizing the labels; defaults to --gcn.
    #[arg(long)]
    teacher: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, default_value = "absolute")]
    loss: String,
    /// Lipschitz constant B for t31.
    #[arg(long)]
    lipschitz: Option<f64>,
    /// Output-space diameter; defaults to the range of the teacher and class outputs.
    #[arg(long)]
    diam_eout: Option<f64>,
    /// Degree threshold for t32; defaults to the minimum degree of the graph.
    #[arg(long)]
    c_k: Option<f64>,
    /// Feature magnitude bound for t32/c32; defaults to the largest feature entry.
    #[arg(long)]
    m_feat: Option<f64>,
    /// Erdős–Rényi constant C for c32.
    #[arg(long, default_value_t = 3.0)]
    er_c: f64,
    #[command(flatten)]
    out: Output,
}

/// Everything a bound evaluation needs after inputs are loaded.
pub struct BoundRequest<'a> {
    pub mode: Mode,
    pub graph: &'a Graph,
    pub features: Option<&'a FeatureMatrix>,
    pub class: &'a GcnSpec,
    pub teacher: &'a GcnSpec,
    /// Extra networks whose outputs must fit in the output space.
    pub outputs: &'a [GcnSpec],
    pub n: usize,
    pub delta: f64,
    pub loss: LossSpec,
    pub lipschitz: Option<f64>,
    pub diam_eout: Option<f64>,
    pub c_k: Option<f64>,
    pub m_feat: Option<f64>,
    pub er_c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedBound {
    pub mode: Mode,
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub loss: LossSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_feat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub er_c: Option<f64>,
    /// Whether the supplied graph satisfies diam ≤ 2 and deg₋ ≥ c_k.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub admissible: Option<bool>,
}

/// Task with uniform node measure and `diam(E_out)` fitted or overridden.
pub fn build_task(req: &BoundRequest) -> Result<TransductiveTask, CliError> {
    let features = req
        .features
        .ok_or_else(|| CliError::usage("this mode needs --features"))?;
    let mut task = TransductiveTask::new(
        req.graph.clone(),
        features.clone(),
        req.teacher.clone(),
        DiscreteMeasure::uniform(req.graph.k()),
        req.loss,
        req.n,
    )?;
    match req.diam_eout {
        Some(d) if d >= 0.0 && d.is_finite() => task.diam_eout = d,
        Some(d) => return Err(CliError::Domain(format!("diam_eout {d} must be finite and nonnegative"))),
        None => {
            let mut outputs = vec![req.class.clone()];
            outputs.extend_from_slice(req.outputs);
            task.fit_output_range(&outputs)?;
        }
    }
    Ok(task)
}

pub fn compute_bound(req: &BoundRequest) -> Result<(BoundReport, ResolvedBound), CliError> {
    let mut resolved = ResolvedBound {
        mode: req.mode,
        k: req.graph.k(),
        n: req.n,
        delta: req.delta,
        loss: req.loss,
        c_k: None,
        m_feat: None,
        er_c: None,
        admissible: None,
    };
    let report = match req.mode {
        Mode::T31 | Mode::C31 => {
            let task = build_task(req)?;
            let b = match (req.mode, req.lipschitz) {
                (Mode::T31, Some(b)) => b,
                (Mode::T31, None) => return Err(CliError::usage("t31 needs --lipschitz")),
                _ => lipschitz_b(req.class, req.graph, task.diam_eout)?,
            };
            theorem31_bound(&task, b, req.delta)?
        }
        Mode::T32 | Mode::C32 => {
            let m_feat = match (req.m_feat, req.features) {
                (Some(m), _) => m,
                (None, Some(x)) => x.max_abs(),
                (None, None) => return Err(CliError::usage("this mode needs --m-feat or --features")),
            };
            let c_k = req.c_k.unwrap_or(degree_stats(req.graph).deg_min as f64);
            let params = NoisyBoundParams {
                k: req.graph.k(),
                n: req.n,
                c_k,
                m_feat,
                b_loss: req.loss.lipschitz_bl,
                delta: req.delta,
            };
            resolved.m_feat = Some(m_feat);
            if req.mode == Mode::T32 {
                resolved.c_k = Some(c_k);
                resolved.admissible = Some(check_admissible(req.graph, c_k).admissible);
                theorem32_bound(req.class, &params)?
            } else {
                resolved.er_c = Some(req.er_c);
                corollary32_bound(req.class, &params, req.er_c.sqrt() / 2.0)?
            }
        }
    };
    Ok((report, resolved))
}

#[derive(Debug, Serialize)]
struct BoundConfig<'a> {
    graph: &'a Path,
    features: Option<&'a Path>,
    gcn: &'a Path,
    teacher: &'a Path,
    #[serde(flatten)]
    resolved: ResolvedBound,
}

#[derive(Debug, Serialize)]
struct BoundResult {
    report: BoundReport,
}

pub fn bound(args: &BoundArgs) -> Result<(), CliError> {
    let graph = read_graph(&args.graph)?;
    let features = args.features.as_deref().map(read_features).transpose()?;
    let class = read_gcn(&args.gcn)?;
    let teacher_path = args.teacher.as_deref().unwrap_or(&args.gcn);
    let teacher = match &args.teacher {
        Some(p) => read_gcn(p)?,
        None => class.clone(),
    };
    let req = BoundRequest {
        mode: args.mode,
        graph: &graph,
        features: features.as_ref(),
        class: &class,
        teacher: &teacher,
        outputs: &[],
        n: args.n,
        delta: args.delta,
        loss: parse_loss(&args.loss)?,
        lipschitz: args.lipschitz,
        diam_eout: args.diam_eout,
        c_k: args.c_k,
        m_feat: args.m_feat,
        er_c: args.er_c,
    };
    let (report_value, resolved) = compute_bound(&req)?;
    let config = BoundConfig {
        graph: &args.graph,
        features: args.features.as_deref(),
        gcn: &args.gcn,
        teacher: teacher_path,
        resolved,
    };
    emit(
        args.out.output.as_deref(),
        &report("bound", config, BoundResult { report: report_value }),
    )
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LogBaseArg {
    Natural,
    Two,
}

impl From<LogBaseArg> for LogBase {
    fn from(b: LogBaseArg) -> Self {
        match b {
            LogBaseArg::Natural => LogBase::Natural,
            LogBaseArg::Two => LogBase::Two,
        }
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("probability").required(true).args(["c", "p"])))]
pub struct ErStudyArgs {
    #[arg(long)]
    k: usize,
    /// Constant C > 2 in p(k) = (C log k / k)^{1/2}.
    #[arg(long)]
    c: Option<f64>,
    /// Fixed edge probability.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum, default_value = "natural")]
    log_base: LogBaseArg,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Degree threshold; defaults to the lower end of the degree window.
    #[arg(long)]
    c_k: Option<f64>,
    /// Per-sample CSV path.
    #[arg(long)]
    rows: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

pub struct ErStudyRequest {
    pub spec: ErdosRenyiSpec,
    pub c_k: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub delta: f64,
}

/// Runs the event study; returns the JSON summary and the per-sample CSV.
pub fn run_er_study(req: &ErStudyRequest, command: &str) -> Result<(Vec<u8>, Vec<u8>), CliError> {
    let rule = req.c_k.map_or(CkRule::Window, |c_k| CkRule::Fixed { c_k });
    let study = er_event_study(&req.spec, rule, req.samples, req.seed, req.delta)?;
    let summary = report(command, study.summary.spec, &study.summary);
    let rows = to_csv(&study.summary.spec, &study.rows);
    Ok((summary, rows))
}

pub fn er_study(args: &ErStudyArgs) -> Result<(), CliError> {
    let spec = match (args.c, args.p) {
        (Some(c), _) => ErdosRenyiSpec::derived(args.k, c, args.log_base.into())?,
        (None, Some(p)) => ErdosRenyiSpec::fixed(args.k, p)?,
        (None, None) => return Err(CliError::usage("one of --c or --p is required")),
    };
    let req = ErStudyRequest {
        spec,
        c_k: args.c_k,
        samples: args.samples as usize,
        seed: args.seed,
        delta: args.delta,
    };
    let (summary, rows) = run_er_study(&req, "er-study")?;
    if let Some(path) = &args.rows {
        write_atomic(path, &rows)?;
    }
    emit(args.out.output.as_deref(), &summary)
}
