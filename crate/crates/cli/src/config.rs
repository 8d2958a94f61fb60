use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hardy_core::{cone_admissible, ConeSpec, HardyParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const AFTER_HELP: &str = "\
Cones: full, punctured, complement-sigma0, half-space, band:<theta1>:<theta2> (radians).

CSV columns, in order:
  command,d,k,p,a,b,cone,mesh,h,closed_form,closed_form_source,numeric_M,lambda,gap,
  trace_kind,trace,extrapolated,observed_order,fitted_rate,checks_passed,status,message
The trace column holds x:value pairs separated by ';'. Floats use shortest round-trip decimals.

Exit codes: 0 all rows ok (or without closed form) and every gap within --tol;
1 some row failed, a check failed, or a gap exceeded --tol; 2 invalid input; 3 I/O error.";

#[derive(Debug, Parser)]
#[command(
    name = "hardy",
    version,
    about = "Sharp constants of Hardy inequalities with weights |y|^a |z|^-b on cones",
    after_help = AFTER_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Closed-form constant (when known) and the numeric spherical minimum.
    Constant(CommonArgs),
    /// Numeric spherical minimum with its minimizing profile.
    Spectrum(CommonArgs),
    /// Quotients of the u_δ family and cutoff strip energies.
    Verify(CommonArgs),
    /// `constant` over the cartesian product of comma-separated flag lists.
    Sweep(CommonArgs),
    /// Every known closed form against the numeric solver.
    Table(CommonArgs),
}

impl CommandArgs {
    pub fn split(self) -> (Command, CommonArgs) {
        match self {
            CommandArgs::Constant(a) => (Command::Constant, a),
            CommandArgs::Spectrum(a) => (Command::Spectrum, a),
            CommandArgs::Verify(a) => (Command::Verify, a),
            CommandArgs::Sweep(a) => (Command::Sweep, a),
            CommandArgs::Table(a) => (Command::Table, a),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Dimension of the ambient space.
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<usize>,
    /// Dimension of the y factor, 1 ≤ k < d.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Integrability exponent, p > 1.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Exponent of |y|.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Vec<f64>,
    /// Exponent of 1/|z|.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub b: Vec<f64>,
    /// full, punctured, complement-sigma0, half-space or band:<θ1>:<θ2>.
    #[arg(long, value_delimiter = ',')]
    pub cone: Vec<String>,
    /// Number of elements of the angular mesh.
    #[arg(long)]
    pub mesh: Option<usize>,
    /// δ values of the u_δ trace; give the flag without values for none.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub deltas: Option<Vec<f64>>,
    /// Cutoff levels h of the strip-energy trace.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub hs: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file, written atomically; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with defaults for any of these flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Upper bound on concurrently evaluated cells.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Allowed |numeric − closed form|, relative to max(1, |closed form|).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Constant,
    Spectrum,
    Verify,
    Sweep,
    Table,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Constant => "constant",
            Command::Spectrum => "spectrum",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Table => "table",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One `(params, cone)` evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub params: HardyParams,
    #[serde(with = "cone_text")]
    pub cone: ConeSpec,
}

mod cone_text {
    use hardy_core::ConeSpec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(cone: &ConeSpec, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(cone)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ConeSpec, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A validated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub cells: Vec<Cell>,
    pub mesh_size: usize,
    pub delta_list: Vec<f64>,
    pub h_list: Vec<u32>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub tol: f64,
    /// Not echoed: the report must not depend on it.
    #[serde(skip, default = "default_jobs")]
    pub jobs: usize,
}

pub const DEFAULT_MESH: usize = 512;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_DELTAS: [f64; 3] = [0.2, 0.1, 0.05];
pub const DEFAULT_HS: [u32; 3] = [4, 8, 16];

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellSpec {
    d: usize,
    k: usize,
    p: f64,
    a: f64,
    b: f64,
    cone: String,
}

/// The `--config` file: every flag, plus explicit `cells` for `table`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    d: Option<OneOrMany<usize>>,
    k: Option<OneOrMany<usize>>,
    p: Option<OneOrMany<f64>>,
    a: Option<OneOrMany<f64>>,
    b: Option<OneOrMany<f64>>,
    cone: Option<OneOrMany<String>>,
    mesh: Option<usize>,
    deltas: Option<Vec<f64>>,
    hs: Option<Vec<u32>>,
    format: Option<Format>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    tol: Option<f64>,
    cells: Option<Vec<CellSpec>>,
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::ConfigParse {
        path: path.to_path_buf(),
        source,
    })
}

fn pick<T>(flag: Vec<T>, file: Option<OneOrMany<T>>) -> Vec<T> {
    if flag.is_empty() {
        file.map(OneOrMany::into_vec).unwrap_or_default()
    } else {
        flag
    }
}

fn parse_cone(text: &str) -> Result<ConeSpec, CliError> {
    Ok(text.parse::<ConeSpec>()?)
}

fn only<T: Copy>(name: &str, values: &[T]) -> Result<T, CliError> {
    match values {
        [x] => Ok(*x),
        [] => Err(CliError::Config(format!("--{name} is required"))),
        _ => Err(CliError::Config(format!(
            "--{name} takes a single value except for sweep"
        ))),
    }
}

/// The cells of the built-in table: every closed form, including the
/// fractional Laplacian rows `d = n + 1`, `k = 1`, `a = 1 − 2s`.
pub fn builtin_table() -> Vec<Cell> {
    let mut cells = Vec::new();
    let mut push = |d, k, p, a, b, cone| {
        cells.push(Cell {
            params: HardyParams::new(d, k, p, a, b).expect("built-in parameters are valid"),
            cone,
        })
    };
    for n in [2usize, 3] {
        for s in [0.25, 0.5, 0.75] {
            push(n + 1, 1, 2.0, 1.0 - 2.0 * s, 0.0, ConeSpec::FullSpace);
            push(n + 1, 1, 2.0, 1.0 - 2.0 * s, 0.0, ConeSpec::HalfSpace);
        }
    }
    // a = p − k, b = 0
    push(3, 1, 2.0, 1.0, 0.0, ConeSpec::FullSpace);
    push(4, 2, 3.0, 1.0, 0.0, ConeSpec::FullSpace);
    push(5, 2, 1.5, -0.5, 0.0, ConeSpec::FullSpace);
    push(3, 1, 2.0, 0.0, 0.0, ConeSpec::PuncturedSpace);
    push(4, 1, 3.0, 0.5, -0.5, ConeSpec::PuncturedSpace);
    push(3, 1, 2.0, 0.0, 0.0, ConeSpec::ComplementSigma0);
    push(4, 2, 2.0, -0.5, 0.0, ConeSpec::ComplementSigma0);
    push(5, 1, 2.0, 0.5, 0.3, ConeSpec::ComplementSigma0);
    push(3, 1, 1.5, 0.7, 0.0, ConeSpec::ComplementSigma0);
    push(4, 2, 3.0, 1.5, 0.0, ConeSpec::ComplementSigma0);
    // numeric only
    push(3, 1, 3.0, 0.5, 0.0, ConeSpec::ComplementSigma0);
    push(4, 1, 1.5, 0.0, 0.0, ConeSpec::HalfSpace);
    push(4, 1, 3.0, 2.5, 0.0, ConeSpec::HalfSpace);
    push(3, 1, 2.0, 1.5, 0.0, ConeSpec::HalfSpace);
    cells
}

impl RunConfig {
    /// Merges flags over the optional config file and validates the result.
    pub fn resolve(command: Command, args: CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_config(path)?,
            None => ConfigFile::default(),
        };
        let ds = pick(args.d, file.d);
        let ks = pick(args.k, file.k);
        let ps = pick(args.p, file.p);
        let as_ = pick(args.a, file.a);
        let bs = pick(args.b, file.b);
        let cones = pick(args.cone, file.cone)
            .iter()
            .map(|c| parse_cone(c))
            .collect::<Result<Vec<_>, _>>()?;

        let cells = match command {
            Command::Table => match file.cells {
                Some(specs) => specs
                    .into_iter()
                    .map(|c| {
                        Ok(Cell {
                            params: HardyParams::new(c.d, c.k, c.p, c.a, c.b)?,
                            cone: parse_cone(&c.cone)?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
                None => builtin_table(),
            },
            Command::Sweep => {
                let mut cells = Vec::new();
                for &d in &ds {
                    for &k in &ks {
                        for &p in &ps {
                            for &a in &as_ {
                                for &b in &bs {
                                    for &cone in &cones {
                                        if k == 0 || k >= d {
                                            continue;
                                        }
                                        let params = HardyParams::new(d, k, p, a, b)?;
                                        // cartesian grids contain inadmissible corners
                                        if cone_admissible(&params, &cone).cone_admissible {
                                            cells.push(Cell { params, cone });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                cells
            }
            _ => {
                let params = HardyParams::new(
                    only("d", &ds)?,
                    only("k", &ks)?,
                    only("p", &ps)?,
                    only("a", &as_)?,
                    only("b", &bs)?,
                )?;
                let cone = only("cone", &cones)?;
                let report = cone_admissible(&params, &cone);
                if !report.cone_admissible {
                    return Err(hardy_core::HardyError::Inadmissible(report.notes.join("; ")).into());
                }
                vec![Cell { params, cone }]
            }
        };

        let mesh_size = args.mesh.or(file.mesh).unwrap_or(DEFAULT_MESH);
        if mesh_size < 2 {
            return Err(CliError::Config(format!("--mesh must be at least 2, got {mesh_size}")));
        }
        let tol = args.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
        }
        let jobs = args.jobs.or(file.jobs).unwrap_or_else(default_jobs);
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }

        let (delta_list, h_list) = if command == Command::Verify {
            let deltas = args.deltas.or(file.deltas).unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
            if let Some(bad) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
                return Err(CliError::Config(format!("δ values must be positive, got {bad}")));
            }
            let params = cells[0].params;
            let superdegenerate = params.k_plus_a() >= params.p();
            let hs = match args.hs.or(file.hs) {
                Some(hs) => {
                    if hs.contains(&0) {
                        return Err(CliError::Config("cutoff levels must be at least 1".into()));
                    }
                    if !hs.is_empty() && !superdegenerate {
                        return Err(CliError::Config(format!(
                            "cutoff traces need k + a >= p, got k + a = {} < p = {}",
                            params.k_plus_a(),
                            params.p()
                        )));
                    }
                    hs
                }
                None if superdegenerate => DEFAULT_HS.to_vec(),
                None => Vec::new(),
            };
            (deltas, hs)
        } else {
            (Vec::new(), Vec::new())
        };

        Ok(RunConfig {
            command,
            cells,
            mesh_size,
            delta_list,
            h_list,
            output_path: args.out.or(file.out),
            format: args.format.or(file.format).unwrap_or_default(),
            tol,
            jobs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(d: usize, k: usize, p: f64, a: f64, cone: &str) -> CommonArgs {
        CommonArgs {
            d: vec![d],
            k: vec![k],
            p: vec![p],
            a: vec![a],
            b: vec![0.0],
            cone: vec![cone.into()],
            ..Default::default()
        }
    }

    #[test]
    fn verify_defaults_depend_on_the_threshold() {
        let below = RunConfig::resolve(Command::Verify, args(3, 1, 2.0, 0.0, "complement-sigma0")).unwrap();
        assert_eq!(below.delta_list, DEFAULT_DELTAS);
        assert!(below.h_list.is_empty());
        let at = RunConfig::resolve(Command::Verify, args(3, 1, 2.0, 1.0, "complement-sigma0")).unwrap();
        assert_eq!(at.h_list, DEFAULT_HS);
        let constant = RunConfig::resolve(Command::Constant, args(3, 1, 2.0, 1.0, "full")).unwrap();
        assert!(constant.delta_list.is_empty() && constant.h_list.is_empty());
    }

    #[test]
    fn rejects_bad_values() {
        let mut a = args(3, 1, 2.0, 0.0, "full");
        a.mesh = Some(1);
        assert!(matches!(
            RunConfig::resolve(Command::Constant, a),
            Err(CliError::Config(_))
        ));
        let mut a = args(3, 1, 2.0, 0.0, "full");
        a.tol = Some(-1.0);
        assert!(RunConfig::resolve(Command::Constant, a).is_err());
        let mut a = args(3, 1, 2.0, 0.0, "full");
        a.deltas = Some(vec![0.1, 0.0]);
        assert!(RunConfig::resolve(Command::Verify, a).is_err());
        let mut a = args(3, 1, 2.0, 0.0, "full");
        a.d.push(4);
        assert!(RunConfig::resolve(Command::Constant, a).is_err());
        assert!(RunConfig::resolve(Command::Constant, args(3, 3, 2.0, 0.0, "full")).is_err());
    }

    #[test]
    fn builtin_table_is_admissible() {
        for cell in builtin_table() {
            assert!(cone_admissible(&cell.params, &cell.cone).cone_admissible, "{cell:?}");
        }
    }

    #[test]
    fn run_config_round_trips() {
        let cfg = RunConfig::resolve(Command::Table, CommonArgs::default()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.cells, cfg.cells);
        assert_eq!(back.tol, cfg.tol);
    }
}
