//! On-disk formats. Matrices go to CSV, structured results to JSON. Node and
//! basis indices in files are 1-based.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph_eval::RocPoint;
use crate::model::{GraphEstimate, ModelParams, ScoreBundle};
use crate::solver::FitTrace;
use crate::synth::GroundTruth;

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File { path: path.to_path_buf(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(file_err(dir))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(file_err(path))?;
    Ok(csv::Writer::from_writer(f))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(file_err(path))?;
    Ok(csv::Reader::from_reader(f))
}

fn parse_num<T: std::str::FromStr>(text: &str, path: &Path, what: &str) -> Result<T> {
    text.trim().parse().map_err(|_| Error::Schema {
        field: format!("{}:{what}", path.display()),
        message: format!("cannot parse {text:?}"),
    })
}

/// File name of modality `m` (0-based) inside a data directory.
pub fn scores_file(m: usize) -> String {
    format!("scores_m{}.csv", m + 1)
}

/// Writes one modality as `node,basis,sample_1..sample_N`.
pub fn write_scores_csv(path: &Path, scores: &DMatrix<f64>, p: usize) -> Result<()> {
    let km = scores.nrows() / p.max(1);
    if km * p != scores.nrows() {
        return Err(Error::dims(format!("{} rows is not a multiple of p = {p}", scores.nrows())));
    }
    let mut w = csv_writer(path)?;
    let mut header = vec!["node".to_string(), "basis".to_string()];
    header.extend((1..=scores.ncols()).map(|n| format!("sample_{n}")));
    w.write_record(&header)?;
    for i in 0..p {
        for l in 0..km {
            let mut rec = vec![(i + 1).to_string(), (l + 1).to_string()];
            rec.extend(scores.row(i * km + l).iter().map(|&x| fmt_f64(x)));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(file_err(path))
}

/// Reads a file written by [`write_scores_csv`]; returns `(p, matrix)`.
pub fn read_scores_csv(path: &Path) -> Result<(usize, DMatrix<f64>)> {
    let mut r = csv_reader(path)?;
    let header = r.headers()?.clone();
    if header.len() < 3 || &header[0] != "node" || &header[1] != "basis" {
        return Err(Error::Schema {
            field: format!("{}:header", path.display()),
            message: "expected node,basis,sample_1..".into(),
        });
    }
    let n = header.len() - 2;
    let mut keys = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let node: usize = parse_num(&rec[0], path, "node")?;
        let basis: usize = parse_num(&rec[1], path, "basis")?;
        keys.push((node, basis));
        for x in rec.iter().skip(2) {
            values.push(parse_num::<f64>(x, path, "sample")?);
        }
    }
    let p = keys.iter().map(|k| k.0).max().unwrap_or(0);
    let km = keys.iter().map(|k| k.1).max().unwrap_or(0);
    let expected: Vec<(usize, usize)> = (1..=p).flat_map(|i| (1..=km).map(move |l| (i, l))).collect();
    if p == 0 || keys != expected {
        return Err(Error::Schema {
            field: format!("{}:node", path.display()),
            message: "rows must list every (node, basis) pair in order".into(),
        });
    }
    Ok((p, DMatrix::from_row_slice(p * km, n, &values)))
}

/// Writes every modality of `data` into `dir`.
pub fn write_scores_dir(dir: &Path, data: &ScoreBundle) -> Result<()> {
    ensure_dir(dir)?;
    for m in 0..data.modalities() {
        write_scores_csv(&dir.join(scores_file(m)), data.scores(m), data.p())?;
    }
    Ok(())
}

/// Reads `scores_m1.csv`, `scores_m2.csv`, … until one is missing.
pub fn read_scores_dir(dir: &Path) -> Result<ScoreBundle> {
    let mut mats = Vec::new();
    let mut p = None;
    while dir.join(scores_file(mats.len())).exists() {
        let path = dir.join(scores_file(mats.len()));
        let (pm, y) = read_scores_csv(&path)?;
        if p.is_some_and(|p| p != pm) {
            return Err(Error::dims(format!("{} has {pm} nodes, expected {}", path.display(), p.unwrap())));
        }
        p = Some(pm);
        mats.push(y);
    }
    if mats.len() < 2 {
        return Err(Error::File {
            path: dir.join(scores_file(mats.len())),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "need at least two modalities"),
        });
    }
    ScoreBundle::new(p.unwrap(), mats)
}

pub fn to_nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_nested(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Schema { field: field.into(), message: "ragged matrix".into() });
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(file_err(path))
}

/// Parses JSON, reporting the path of the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // serde names the unknown key only in the message
        let field = if field == "." { unknown_field(&message).unwrap_or(field) } else { field };
        Error::Schema { field, message }
    })
}

fn unknown_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    parse_json(&text)
}

/// `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub p: usize,
    pub r: usize,
    /// Unordered true edges `[i, j]` with `i < j`.
    pub edges: Vec<[usize; 2]>,
    /// `1` where the `(i, j)` block of `Ω` is nonzero.
    pub omega_support: Vec<Vec<u8>>,
    pub omega: Vec<Vec<f64>>,
    pub a: Vec<Vec<Vec<f64>>>,
    pub l: Vec<Vec<Vec<f64>>>,
}

impl TruthFile {
    pub fn from_truth(t: &GroundTruth) -> Self {
        let support = (0..t.p)
            .map(|i| {
                (0..t.p)
                    .map(|j| {
                        let blk = t.omega.view((i * t.r, j * t.r), (t.r, t.r));
                        u8::from(blk.iter().any(|&x| x != 0.0))
                    })
                    .collect()
            })
            .collect();
        TruthFile {
            p: t.p,
            r: t.r,
            edges: t.edges.edges.iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
            omega_support: support,
            omega: to_nested(&t.omega),
            a: t.a_mats.iter().map(to_nested).collect(),
            l: t.l_mats.iter().map(to_nested).collect(),
        }
    }

    pub fn graph(&self) -> Result<GraphEstimate> {
        if let Some(e) = self.edges.iter().find(|e| e[0] == 0 || e[1] == 0 || e[0].max(e[1]) > self.p || e[0] == e[1]) {
            return Err(Error::Schema { field: "edges".into(), message: format!("bad edge {e:?}") });
        }
        Ok(GraphEstimate::from_edges(self.p, self.edges.iter().map(|e| (e[0] - 1, e[1] - 1))))
    }

    /// True transforms and the neighborhood blocks implied by `Ω`.
    pub fn params(&self) -> Result<ModelParams> {
        let omega = from_nested(&self.omega, "omega")?;
        let a = self
            .a
            .iter()
            .map(|m| from_nested(m, "a"))
            .collect::<Result<Vec<_>>>()?;
        ModelParams::new(a, crate::synth::population_b(&omega, self.p, self.r)?)
    }
}

/// `params.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub p: usize,
    pub k: usize,
    /// `A^m` as `k × k_m` arrays.
    pub a: Vec<Vec<Vec<f64>>>,
    /// `B_i` as `k × k(p−1)` arrays, neighbors in increasing order.
    pub b: Vec<Vec<Vec<f64>>>,
}

impl From<&ModelParams> for ParamsFile {
    fn from(params: &ModelParams) -> Self {
        ParamsFile {
            p: params.p(),
            k: params.k(),
            a: params.a_mats.iter().map(to_nested).collect(),
            b: params.b.iter().map(to_nested).collect(),
        }
    }
}

impl ParamsFile {
    pub fn to_params(&self) -> Result<ModelParams> {
        let a = self.a.iter().map(|m| from_nested(m, "a")).collect::<Result<Vec<_>>>()?;
        let b = self.b.iter().map(|m| from_nested(m, "b")).collect::<Result<Vec<_>>>()?;
        let params = ModelParams::new(a, b)?;
        if params.p() != self.p || params.k() != self.k {
            return Err(Error::Schema { field: "p".into(), message: "p and k disagree with the arrays".into() });
        }
        Ok(params)
    }
}

pub fn write_params(path: &Path, params: &ModelParams) -> Result<()> {
    write_json(path, &ParamsFile::from(params))
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    read_json::<ParamsFile>(path)?.to_params()
}

/// `trace.csv`; row `0` holds the objective at the starting point.
pub fn write_trace(path: &Path, trace: &FitTrace) -> Result<()> {
    let with_dist = trace.records.iter().any(|r| r.distance.is_some());
    let mut w = csv_writer(path)?;
    let mut header = vec!["iter", "objective", "max_change"];
    if with_dist {
        header.extend(["dist_max", "dist_sum"]);
    }
    w.write_record(&header)?;
    let mut first = vec!["0".to_string(), fmt_f64(trace.initial_objective), String::new()];
    if with_dist {
        first.extend([String::new(), String::new()]);
    }
    w.write_record(&first)?;
    for r in &trace.records {
        let mut rec = vec![r.iter.to_string(), fmt_f64(r.objective), fmt_f64(r.max_change)];
        if with_dist {
            let (mx, sm) = r.distance.unwrap_or((f64::NAN, f64::NAN));
            rec.extend([fmt_f64(mx), fmt_f64(sm)]);
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(file_err(path))
}

/// `edges.csv`: one row per unordered pair.
pub fn write_edges(path: &Path, est: &GraphEstimate) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["i", "j", "norm_ij", "norm_ji", "selected"])?;
    for i in 0..est.p {
        for j in i + 1..est.p {
            w.write_record([
                (i + 1).to_string(),
                (j + 1).to_string(),
                fmt_f64(est.block_norms[(i, j)]),
                fmt_f64(est.block_norms[(j, i)]),
                u8::from(est.has_edge(i, j)).to_string(),
            ])?;
        }
    }
    w.flush().map_err(file_err(path))
}

/// `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tpr: f64,
    pub fpr: f64,
    pub n_edges: usize,
    pub n_true_edges: usize,
    /// Over a sweep of the edge threshold on the fitted block norms.
    pub auc: Option<f64>,
    pub auc15: Option<f64>,
    pub roc: Vec<[f64; 2]>,
    pub dist_max: Option<f64>,
    pub dist_sum: Option<f64>,
}

pub fn roc_pairs(curve: &[RocPoint]) -> Vec<[f64; 2]> {
    curve.iter().map(|pt| [pt.fpr, pt.tpr]).collect()
}

/// `run_meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub command: String,
    pub seed: Option<u64>,
    /// SHA-256 of the canonical JSON of every setting that affects output.
    pub config_sha256: String,
    pub version: String,
}

impl RunMeta {
    pub fn new(command: &str, seed: Option<u64>, settings: &serde_json::Value) -> Self {
        let canonical = serde_json::to_string(settings).unwrap_or_default();
        let digest = Sha256::digest(canonical.as_bytes());
        RunMeta {
            command: command.into(),
            seed,
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("run_meta.json"), self)
    }
}

/// Directory that holds `path`, for writing `run_meta.json` next to a file.
pub fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
