use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tbl_core::gcn::{random_gcn, FeatureMatrix, GcnSpec};
use tbl_core::graph::{degree_stats, shortest_path_metric, Diameter, Graph};
use tbl_core::random_graphs::{sample_er_with_rng, ErdosRenyiSpec, LogBase};
use tbl_core::risk::{validate_bound_montecarlo, BoundReport, ValidationReport};

use crate::commands::{compute_bound, parse_loss, run_er_study, BoundRequest, ErStudyRequest, ResolvedBound};
use crate::error::CliError;
use crate::io::{builtin_graph, emit, read_features, read_gcn, read_graph, read_text, resolve, to_csv, to_json, write_atomic};
use crate::{Mode, Output, SCHEMA_VERSION};

/// Stream ids for setup draws; Monte Carlo trials use streams below `1 << 48`.
const GRAPH_STREAM: u64 = 1 << 48;
const FEATURE_STREAM: u64 = 2 << 48;
const TEACHER_STREAM: u64 = 3 << 48;
const POOL_STREAM: u64 = 4 << 48;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RunConfig {
    Coverage(Box<CoverageConfig>),
    ErEvents(ErEventsConfig),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum GraphSource {
    File(PathBuf),
    Builtin(String),
    ErdosRenyi(ErGraph),
}

fn default_true() -> bool {
    true
}

fn default_attempts() -> u64 {
    1000
}

fn default_er_c() -> f64 {
    3.0
}

fn default_loss() -> String {
    "absolute".into()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ErGraph {
    k: usize,
    c: f64,
    #[serde(default)]
    log_base: LogBase,
    /// Redraw until the sample has diameter at most 2.
    #[serde(default = "default_true")]
    require_diam_le_2: bool,
    #[serde(default = "default_attempts")]
    max_attempts: u64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum FeatureSource {
    File(PathBuf),
    Random { d_in: usize, bound: f64 },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ClassConfig {
    t: u32,
    dims: Vec<usize>,
    activation: String,
    betas: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum TeacherSource {
    File(PathBuf),
    Random(ClassConfig),
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PoolConfig {
    #[serde(default)]
    files: Vec<PathBuf>,
    /// Number of random members drawn from the teacher's class.
    #[serde(default)]
    random: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CoverageConfig {
    #[serde(default)]
    seed: u64,
    graph: GraphSource,
    features: FeatureSource,
    teacher: TeacherSource,
    #[serde(default)]
    pool: PoolConfig,
    n: usize,
    delta: f64,
    trials: usize,
    mode: Mode,
    #[serde(default = "default_loss")]
    loss: String,
    lipschitz: Option<f64>,
    diam_eout: Option<f64>,
    c_k: Option<f64>,
    m_feat: Option<f64>,
    #[serde(default = "default_er_c")]
    er_c: f64,
    /// Per-trial gap CSV path.
    gaps_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ErEventsConfig {
    k: usize,
    c: Option<f64>,
    p: Option<f64>,
    #[serde(default)]
    log_base: LogBase,
    samples: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_delta_er")]
    delta: f64,
    c_k: Option<f64>,
    rows_csv: Option<PathBuf>,
}

fn default_delta_er() -> f64 {
    0.5
}

fn setup_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Serialize)]
struct GraphFacts {
    k: usize,
    edges: usize,
    diam: Diameter,
    deg_min: usize,
    deg_max: usize,
    /// Index of the accepted Erdős–Rényi draw.
    #[serde(skip_serializing_if = "Option::is_none")]
    attempt: Option<u64>,
}

fn load_graph(source: &GraphSource, base: &Path, seed: u64) -> Result<(Graph, Option<u64>), CliError> {
    match source {
        GraphSource::File(p) => Ok((read_graph(&resolve(base, p))?, None)),
        GraphSource::Builtin(name) => Ok((builtin_graph(name)?, None)),
        GraphSource::ErdosRenyi(er) => {
            let spec = ErdosRenyiSpec::derived(er.k, er.c, er.log_base)?;
            for attempt in 0..er.max_attempts.max(1) {
                let g = sample_er_with_rng(&spec, &mut setup_rng(seed, GRAPH_STREAM | attempt));
                if !er.require_diam_le_2 || shortest_path_metric(&g).diameter().at_most(2.0) {
                    return Ok((g, Some(attempt)));
                }
            }
            Err(CliError::Domain(format!(
                "no draw with diameter at most 2 in {} attempts",
                er.max_attempts
            )))
        }
    }
}

fn load_teacher(source: &TeacherSource, base: &Path, seed: u64) -> Result<GcnSpec, CliError> {
    match source {
        TeacherSource::File(p) => read_gcn(&resolve(base, p)),
        TeacherSource::Random(class) => Ok(random_gcn(
            class.t,
            &class.dims,
            class.activation.parse()?,
            &class.betas,
            &mut setup_rng(seed, TEACHER_STREAM),
        )?),
    }
}

#[derive(Debug, Serialize)]
struct CoverageResult {
    graph: GraphFacts,
    resolved: ResolvedBound,
    bound: BoundReport,
    validation: ValidationReport,
}

#[derive(Debug, Serialize)]
struct GapRow {
    trial: usize,
    gap: f64,
    covered: bool,
}

fn coverage(cfg: &CoverageConfig, base: &Path) -> Result<(CoverageResult, Vec<u8>), CliError> {
    let (graph, attempt) = load_graph(&cfg.graph, base, cfg.seed)?;
    let features = match &cfg.features {
        FeatureSource::File(p) => read_features(&resolve(base, p))?,
        FeatureSource::Random { d_in, bound } => {
            if !(*bound >= 0.0 && bound.is_finite()) {
                return Err(CliError::Domain(format!("feature bound {bound} must be finite and nonnegative")));
            }
            FeatureMatrix::random(*d_in, graph.k(), *bound, &mut setup_rng(cfg.seed, FEATURE_STREAM))
        }
    };
    let teacher = load_teacher(&cfg.teacher, base, cfg.seed)?;
    let mut pool = vec![teacher.clone()];
    for p in &cfg.pool.files {
        pool.push(read_gcn(&resolve(base, p))?);
    }
    let mut rng = setup_rng(cfg.seed, POOL_STREAM);
    for _ in 0..cfg.pool.random {
        pool.push(random_gcn(
            teacher.t(),
            teacher.dims(),
            teacher.activation().clone(),
            teacher.betas(),
            &mut rng,
        )?);
    }
    let req = BoundRequest {
        mode: cfg.mode,
        graph: &graph,
        features: Some(&features),
        class: &teacher,
        teacher: &teacher,
        outputs: &pool,
        n: cfg.n,
        delta: cfg.delta,
        loss: parse_loss(&cfg.loss)?,
        lipschitz: cfg.lipschitz,
        diam_eout: cfg.diam_eout,
        c_k: cfg.c_k,
        m_feat: cfg.m_feat,
        er_c: cfg.er_c,
    };
    let (bound, resolved) = compute_bound(&req)?;
    let mut task = crate::commands::build_task(&req)?;
    task.n = cfg.n;
    let validation = validate_bound_montecarlo(&task, &pool, bound.bound, cfg.delta, cfg.trials, cfg.seed)?;
    let gaps: Vec<GapRow> = validation
        .gaps
        .iter()
        .enumerate()
        .map(|(trial, &gap)| GapRow {
            trial,
            gap,
            covered: gap <= bound.bound,
        })
        .collect();
    let gap_csv = to_csv(cfg, &gaps);
    let stats = degree_stats(&graph);
    let facts = GraphFacts {
        k: graph.k(),
        edges: graph.edge_count(),
        diam: shortest_path_metric(&graph).diameter(),
        deg_min: stats.deg_min,
        deg_max: stats.deg_max,
        attempt,
    };
    Ok((
        CoverageResult {
            graph: facts,
            resolved,
            bound,
            validation,
        },
        gap_csv,
    ))
}

#[derive(Debug, Serialize)]
struct ValidateReport<'a, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: R,
}

pub fn validate(path: &Path, out: &Output) -> Result<(), CliError> {
    let text = read_text(path)?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    match &config {
        RunConfig::Coverage(cfg) => {
            let (result, gaps) = coverage(cfg, base)?;
            if let Some(p) = &cfg.gaps_csv {
                write_atomic(&resolve(base, p), &gaps)?;
            }
            let body = to_json(&ValidateReport {
                schema_version: SCHEMA_VERSION,
                command: "validate",
                config: &config,
                result,
            });
            emit(out.output.as_deref(), &body)
        }
        RunConfig::ErEvents(cfg) => {
            let spec = match (cfg.c, cfg.p) {
                (Some(c), None) => ErdosRenyiSpec::derived(cfg.k, c, cfg.log_base)?,
                (None, Some(p)) => ErdosRenyiSpec::fixed(cfg.k, p)?,
                _ => return Err(CliError::usage("er_events needs exactly one of c or p")),
            };
            let req = ErStudyRequest {
                spec,
                c_k: cfg.c_k,
                samples: cfg.samples,
                seed: cfg.seed,
                delta: cfg.delta,
            };
            let (summary, rows) = run_er_study(&req, "validate")?;
            if let Some(p) = &cfg.rows_csv {
                write_atomic(&resolve(base, p), &rows)?;
            }
            emit(out.output.as_deref(), &summary)
        }
    }
}
