use std::fmt;
use std::fs::File;

use rayon::prelude::*;
use serde::Serialize;

use hd_core::dimension::{corollary4_table, folner_profile, score_report};
use hd_core::edge_space::EdgeFunction;
use hd_core::graph::{ball, induced_window};
use hd_core::hodge::hodge_decompose_finite;
use hd_core::quasi_iso::{qi_row, QiRow, QuasiMap};
use hd_core::{GraphFamily, OrientedEdge, VertexId};

use crate::args::{parse_radii, Cli, Command, Common, GraphSource};
use crate::output::{write_json, Table};

pub const SCORES_HEADER: [&str; 9] = ["family", "edge_tail", "edge_head", "R", "star", "diamond", "hd", "cg_iters", "residual"];
pub const FOLNER_HEADER: [&str; 7] = ["family", "radius", "V", "E", "sigma", "ratio_v", "ratio_e"];
pub const COR4_HEADER: [&str; 5] = ["family", "window_radius", "score_radius", "hd_dim_estimate", "sigma_over_E"];
pub const QI_HEADER: [&str; 9] = [
    "map_name",
    "window_radius",
    "k_est",
    "density_gap",
    "wobble",
    "lemma5_ratio",
    "lemma5_bound",
    "lemma6_ratio",
    "lemma6_bound",
];
pub const DECOMPOSE_HEADER: [&str; 5] = ["tail", "head", "u", "star", "diamond"];

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(hd_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<hd_core::Error> for CliError {
    fn from(e: hd_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Scores(a) => &a.common,
        Command::Folner(a) => &a.common,
        Command::Qicheck(a) => &a.common,
        Command::Cor4(a) => &a.common,
        Command::Decompose(a) => &a.common,
        Command::Window(a) => &a.common,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let c = common(&cli.command);
    if !(c.tol > 0.0 && c.tol < 1.0) {
        return Err(CliError::Config(format!("--tol must lie in (0, 1), got {}", c.tol)));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = c.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Scores(a) => {
            let family = family(&a.common)?;
            let radii = radii(&a.radii)?;
            let edge = match &a.edge {
                Some(s) => parse_edge(&family, s)?,
                None => family.origin_edge(),
            };
            let rep = score_report(&family, &edge, &radii, a.common.tol)?;
            if let Some(bad) = rep.reports.iter().find(|r| !r.converged) {
                return Err(hd_core::Error::SolverFailure(*bad).into());
            }
            let rows = (0..radii.len())
                .map(|i| ScoresRow {
                    family: family.name().to_string(),
                    edge_tail: family.format_vertex(&edge.tail),
                    edge_head: family.format_vertex(&edge.head),
                    radius: radii[i],
                    star: rep.star_embedded[i],
                    diamond: rep.diamond[i],
                    hd: rep.hd[i],
                    cg_iters: rep.reports[i].iterations,
                    residual: rep.reports[i].residual,
                })
                .collect();
            emit(&a.common, Table { command: "scores", header: &SCORES_HEADER, rows })
        }
        Command::Folner(a) => {
            let family = family(&a.common)?;
            let radii = radii(&a.radii)?;
            let center = center(&family, a.center.as_deref())?;
            let rows = folner_profile(&family, &center, &radii)?
                .into_iter()
                .map(|r| FolnerCsv {
                    family: family.name().to_string(),
                    radius: r.radius,
                    v: r.num_vertices,
                    e: r.num_edges,
                    sigma: r.sigma_size,
                    ratio_v: r.ratio_v,
                    ratio_e: r.ratio_e,
                })
                .collect();
            emit(&a.common, Table { command: "folner", header: &FOLNER_HEADER, rows })
        }
        Command::Cor4(a) => {
            let family = family(&a.common)?;
            let radii = radii(&a.window_radii)?;
            if a.factor == 0 {
                return Err(CliError::Config("--factor must be at least 1".into()));
            }
            let center = center(&family, a.center.as_deref())?;
            let rows = corollary4_table(&family, &center, &radii, a.factor, a.common.tol)?
                .into_iter()
                .map(|r| Cor4Csv {
                    family: family.name().to_string(),
                    window_radius: r.window_radius,
                    score_radius: r.score_radius,
                    hd_dim_estimate: r.hd_dim_estimate,
                    sigma_over_e: r.sigma_over_e,
                })
                .collect();
            emit(&a.common, Table { command: "cor4", header: &COR4_HEADER, rows })
        }
        Command::Qicheck(a) => {
            let family = family(&a.common)?;
            let radii = radii(&a.radii)?;
            let names: Vec<String> = match &a.maps {
                Some(s) => s.split(',').map(|t| t.trim().to_string()).collect(),
                None => QuasiMap::BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
            };
            let maps = names
                .iter()
                .map(|n| QuasiMap::builtin(n, &family).map_err(|e| CliError::Config(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let jobs: Vec<(usize, usize)> =
                (0..maps.len()).flat_map(|m| radii.iter().map(move |&r| (m, r))).collect();
            let rows = jobs
                .par_iter()
                .map(|&(m, r)| {
                    let cutoff = 4 * (r + 1) * maps[m].claimed_distortion().ceil() as usize;
                    qi_row(&maps[m], r, cutoff).map(QiCsv::from)
                })
                .collect::<hd_core::Result<Vec<_>>>()?;
            emit(&a.common, Table { command: "qicheck", header: &QI_HEADER, rows })
        }
        Command::Decompose(a) => decompose(a),
        Command::Window(a) => {
            let family = family(&a.common)?;
            let center = center(&family, a.center.as_deref())?;
            let w = ball(&family, &center, a.radius)?;
            Ok(write_json(&w.export(&family), a.common.out.as_deref())?)
        }
    }
}

fn emit<R: Serialize>(c: &Common, table: Table<'_, R>) -> Result<()> {
    Ok(table.write(c.format, c.out.as_deref())?)
}

fn family(c: &Common) -> Result<GraphFamily> {
    GraphFamily::by_name(&c.family, c.d).map_err(|e| CliError::Config(e.to_string()))
}

fn radii(s: &str) -> Result<Vec<usize>> {
    parse_radii(s).map_err(CliError::Config)
}

fn center(family: &GraphFamily, s: Option<&str>) -> Result<VertexId> {
    match s {
        Some(s) => family.parse_vertex(s).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(family.origin()),
    }
}

fn parse_edge(family: &GraphFamily, s: &str) -> Result<OrientedEdge> {
    let (a, b) = s
        .split_once("->")
        .ok_or_else(|| CliError::Config(format!("edge {s:?} is not of the form tail->head")))?;
    let (a, b) = (center(family, Some(a))?, center(family, Some(b))?);
    if !family.is_edge(&a, &b) {
        return Err(CliError::Config(format!("{s} is not an edge of {}", family.name())));
    }
    Ok(OrientedEdge::new(a, b))
}

#[derive(Serialize)]
struct ScoresRow {
    family: String,
    edge_tail: String,
    edge_head: String,
    #[serde(rename = "R")]
    radius: usize,
    star: f64,
    diamond: f64,
    hd: f64,
    cg_iters: usize,
    residual: f64,
}

#[derive(Serialize)]
struct FolnerCsv {
    family: String,
    radius: usize,
    #[serde(rename = "V")]
    v: usize,
    #[serde(rename = "E")]
    e: usize,
    sigma: usize,
    ratio_v: f64,
    ratio_e: f64,
}

#[derive(Serialize)]
struct Cor4Csv {
    family: String,
    window_radius: usize,
    score_radius: usize,
    hd_dim_estimate: f64,
    #[serde(rename = "sigma_over_E")]
    sigma_over_e: f64,
}

#[derive(Serialize)]
struct QiCsv {
    map_name: String,
    window_radius: usize,
    k_est: f64,
    density_gap: usize,
    wobble: Option<usize>,
    lemma5_ratio: f64,
    lemma5_bound: f64,
    lemma6_ratio: Option<f64>,
    lemma6_bound: Option<f64>,
}

impl From<QiRow> for QiCsv {
    fn from(r: QiRow) -> Self {
        QiCsv {
            map_name: r.map_name,
            window_radius: r.window_radius,
            k_est: r.k_est,
            density_gap: r.density_gap,
            wobble: r.wobble,
            lemma5_ratio: r.lemma5_ratio,
            lemma5_bound: r.lemma5_bound,
            lemma6_ratio: r.lemma6_ratio,
            lemma6_bound: r.lemma6_bound,
        }
    }
}

#[derive(Serialize)]
struct DecomposeRow {
    tail: String,
    head: String,
    u: f64,
    star: f64,
    diamond: f64,
}

fn read_rows(path: &std::path::Path) -> Result<Vec<(String, String, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(File::open(path)?);
    let headers = reader.headers().map_err(|e| CliError::Config(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["tail", "head", "value"] {
        return Err(CliError::Config(format!("{}: expected header tail,head,value", path.display())));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
        let value: f64 = rec[2]
            .parse()
            .map_err(|_| CliError::Config(format!("bad value {:?}", &rec[2])))?;
        if !value.is_finite() {
            return Err(CliError::Config(format!("non-finite value {:?}", &rec[2])));
        }
        rows.push((rec[0].to_string(), rec[1].to_string(), value));
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no edges", path.display())));
    }
    Ok(rows)
}

fn decompose(a: &crate::args::DecomposeArgs) -> Result<()> {
    let rows = read_rows(&a.input)?;
    let family = match a.graph {
        GraphSource::Family => family(&a.common)?,
        GraphSource::Finite => {
            let mut labels: Vec<String> = Vec::new();
            let mut index = std::collections::HashMap::new();
            let mut edges = Vec::new();
            for (t, h, _) in &rows {
                let mut id = |l: &String| {
                    *index.entry(l.clone()).or_insert_with(|| {
                        labels.push(l.clone());
                        labels.len() - 1
                    })
                };
                let (i, j) = (id(t), id(h));
                edges.push((i, j));
            }
            GraphFamily::finite("input", labels, &edges).map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    let mut verts = Vec::new();
    let mut oriented = Vec::new();
    for (t, h, v) in &rows {
        let (x, y) = (center(&family, Some(t))?, center(&family, Some(h))?);
        verts.push(x);
        verts.push(y);
        oriented.push((OrientedEdge::new(x, y), *v));
    }
    verts.sort_unstable();
    verts.dedup();
    let window = induced_window(&family, &verts)?;
    let mut values = vec![0.0; window.num_edges()];
    let mut seen = vec![false; window.num_edges()];
    for (e, v) in oriented {
        let (k, sign) = window.find_edge(&e).ok_or_else(|| CliError::Config(format!("{e} is not an edge")))?;
        if std::mem::replace(&mut seen[k], true) {
            return Err(CliError::Config(format!("edge {e} listed twice")));
        }
        values[k] = sign * v;
    }
    let u = EdgeFunction::new(&window, values)?;
    let parts = hodge_decompose_finite(&window, &u, a.common.tol)?;
    if !parts.report.converged {
        return Err(hd_core::Error::SolverFailure(parts.report).into());
    }
    let out = (0..window.num_edges())
        .map(|k| {
            let e = window.oriented_edge(k);
            DecomposeRow {
                tail: family.format_vertex(&e.tail),
                head: family.format_vertex(&e.head),
                u: u.values()[k],
                star: parts.star.values()[k],
                diamond: parts.diamond.values()[k],
            }
        })
        .collect();
    emit(&a.common, Table { command: "decompose", header: &DECOMPOSE_HEADER, rows: out })
}
