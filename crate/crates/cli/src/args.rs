use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hdtool", version, about = "Harmonic Dirichlet dimension experiments on graph families")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Star, diamond and hd scores of one edge along a radius schedule.
    Scores(ScoresArgs),
    /// Boundary-to-volume ratios of balls.
    Folner(FolnerArgs),
    /// Distortion, wobbling and energy checks for built-in maps.
    Qicheck(QiArgs),
    /// hd trace over growing balls next to the isoperimetric bound.
    Cor4(Cor4Args),
    /// Finite Hodge decomposition of an edge function read from CSV.
    Decompose(DecomposeArgs),
    /// JSON export of a ball window.
    Window(WindowArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Graph family: z1..z6, lattice, tree3..tree16, tree, ladder, comb, diag.
    #[arg(long, default_value = "z2")]
    pub family: String,
    /// Dimension for `lattice` or degree for `tree`.
    #[arg(long)]
    pub d: Option<usize>,
    /// Relative residual tolerance of the solver.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoresArgs {
    #[command(flatten)]
    pub common: Common,
    /// Score radii, `2,4,8` or `1..8`.
    #[arg(long, default_value = "1,2,4,8")]
    pub radii: String,
    /// Edge as `tail->head`, e.g. `(0,0)->(1,0)`; defaults to the origin edge.
    #[arg(long)]
    pub edge: Option<String>,
}

#[derive(Debug, Args)]
pub struct FolnerArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "1..8")]
    pub radii: String,
    /// Ball center; defaults to the origin.
    #[arg(long)]
    pub center: Option<String>,
}

#[derive(Debug, Args)]
pub struct QiArgs {
    #[command(flatten)]
    pub common: Common,
    /// Window radii.
    #[arg(long, default_value = "2,4")]
    pub radii: String,
    /// Comma-separated map names (all built-in maps if omitted).
    #[arg(long)]
    pub maps: Option<String>,
}

#[derive(Debug, Args)]
pub struct Cor4Args {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "2,4,8")]
    pub window_radii: String,
    /// Score radius as a multiple of the window radius.
    #[arg(long, default_value_t = 4)]
    pub factor: usize,
    #[arg(long)]
    pub center: Option<String>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV with rows `tail,head,value`. With `--graph finite` the vertex
    /// labels are free-form and the listed edges form the whole graph;
    /// otherwise the window is the subgraph of `--family` induced on the
    /// listed vertices.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "family")]
    pub graph: GraphSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphSource {
    Family,
    Finite,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long)]
    pub center: Option<String>,
}

/// Parses `2,4,8` or the inclusive range `1..8`.
pub fn parse_radii(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    let radii: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| format!("bad range start in {s:?}"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad range end in {s:?}"))?;
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad radius {t:?}")))
            .collect::<Result<_, _>>()?
    };
    if radii.is_empty() {
        return Err("empty radius list".into());
    }
    if radii.iter().any(|&r| r == 0) {
        return Err("radii must be at least 1".into());
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err("radii must be strictly increasing".into());
    }
    Ok(radii)
}
