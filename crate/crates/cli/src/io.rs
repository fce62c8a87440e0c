use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tbl_core::gcn::{FeatureMatrix, GcnSpec};
use tbl_core::graph::Graph;
use tbl_core::linalg::Matrix;

use crate::error::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_graph(path: &Path) -> Result<Graph, CliError> {
    read_text(path)?
        .parse::<Graph>()
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// `star:k`, `complete:k`, `path:k` or `cycle:k`.
pub fn builtin_graph(name: &str) -> Result<Graph, CliError> {
    let (family, k) = name
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("builtin {name:?} is not of the form family:k")))?;
    let k: usize = k
        .parse()
        .map_err(|e| CliError::usage(format!("builtin {name:?}: bad size: {e}")))?;
    if k == 0 {
        return Err(CliError::usage("builtin graphs need at least one vertex"));
    }
    match family {
        "star" => Ok(Graph::star(k)),
        "complete" => Ok(Graph::complete(k)),
        "path" => Ok(Graph::path(k)),
        "cycle" if k >= 3 => Ok(Graph::cycle(k)),
        "cycle" => Err(CliError::usage("cycles need at least 3 vertices")),
        other => Err(CliError::usage(format!("unknown builtin family {other:?}"))),
    }
}

pub fn read_gcn(path: &Path) -> Result<GcnSpec, CliError> {
    let spec = GcnSpec::from_json(&read_text(path)?);
    spec.map_err(|e| match CliError::from(e) {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Feature CSV with `d_in` rows and `k` columns; a non-numeric first row is a header.
pub fn read_features(path: &Path) -> Result<FeatureMatrix, CliError> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if idx == 0 => continue,
            Err(e) => {
                return Err(CliError::usage(format!("{}: row {}: {e}", path.display(), idx + 1)));
            }
        }
    }
    let d_in = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if d_in == 0 || k == 0 {
        return Err(CliError::usage(format!("{}: empty feature matrix", path.display())));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(CliError::usage(format!("{}: ragged feature rows", path.display())));
    }
    let matrix = Matrix::from_row_major(d_in, k, rows.concat()).expect("rectangular");
    Ok(FeatureMatrix::new(matrix)?)
}

/// Resolves `path` against `base` when it is relative.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Writes `content` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| CliError::usage(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(content).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, content: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, content),
        None => std::io::stdout()
            .write_all(content)
            .map_err(|e| CliError::usage(format!("cannot write stdout: {e}"))),
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports serialize");
    out.push(b'\n');
    out
}

/// CSV with a leading `#` line that carries the schema version and resolved config.
pub fn to_csv<T: serde::Serialize, C: serde::Serialize>(config: &C, rows: &[T]) -> Vec<u8> {
    let mut out = format!(
        "# schema_version={} config={}\n",
        crate::SCHEMA_VERSION,
        serde_json::to_string(config).expect("config serializes")
    )
    .into_bytes();
    let mut writer = csv::Writer::from_writer(&mut out);
    for row in rows {
        writer.serialize(row).expect("rows serialize");
    }
    writer.flush().expect("in-memory write");
    drop(writer);
    out
}
