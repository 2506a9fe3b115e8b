//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration or input error,
//! 3 numerical failure, 4 selftest failure.

use crate::anisotropy::{compute_auto, compute_general, compute_parallel, easy_axis, AnisotropyTensor};
use crate::cell_solver::{exchange_tensor_on, solve_cell_on, CellMesh};
use crate::config::{Config, OutputFormat};
use crate::energy::{constant_minimizer, evaluate_e0, EnergyParams, MagnetizationField};
use crate::error::{Error, Result};
use crate::gamma_validator::sweep;
use crate::profiles::FilmGeometry;
use crate::quadrature::PlaneRule;
use crate::report::{
    render, write_corrector_csv, AhomReport, EasyAxisReport, EnergyOutput, GhomReport, SweepReport,
};
use crate::selftest;
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "roughfilm", version, about = "Homogenized energy of thin films with periodic rough surfaces")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Homogenized anisotropy matrix.
    Ahom {
        /// Use the single-kernel formula; the geometry must have f2 = f1 + a.
        #[arg(long)]
        parallel: bool,
        /// Also write the matrices as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Homogenized exchange tensor from the cell problem.
    Ghom {
        /// Slope ξ as six comma-separated numbers, row-major (3 rows, 2 columns).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Option<Vec<f64>>,
        /// Write the corrector for --xi as CSV.
        #[arg(long, requires = "xi")]
        field: Option<PathBuf>,
    },
    /// Constant minimizer of the reduced energy.
    EasyAxis,
    /// Reduced energy of a sampled magnetization field.
    Energy {
        /// CSV with columns x_index, y_index, m1, m2, m3.
        #[arg(long)]
        field: PathBuf,
    },
    /// Finite-ε energies against the homogenized target.
    GammaSweep {
        /// Constant magnetization, normalized before use.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        m: Vec<f64>,
        /// Strictly decreasing ε values.
        #[arg(long, value_delimiter = ',', default_value = "0.125,0.0625,0.03125,0.015625")]
        eps: Vec<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the built-in validation suite.
    Selftest,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

/// Parses `argv` (program name first), runs the command, and returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: thread pool: {e}");
            return 1;
        }
    };
    let started = Instant::now();
    let result = pool.install(|| dispatch(&cli));
    let _ = writeln!(err, "elapsed: {:.3} s", started.elapsed().as_secs_f64());
    match result {
        Ok((text, code)) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 2;
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load(cli: &Cli) -> Result<Config> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    Config::load(path)
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn anisotropy(cfg: &Config, geom: &FilmGeometry<f64>) -> Result<AnisotropyTensor<f64>> {
    compute_auto(geom, &cfg.rules.cell_rule, &PlaneRule::new(cfg.rules.plane_rule)?)
}

/// Writes the rendered report to `output.path` when it asks for JSON.
fn mirror(cfg: &Config, text: &str) -> Result<()> {
    if let (Some(p), OutputFormat::Json) = (&cfg.output.path, cfg.output.format) {
        create(&cfg.base_dir.join(p))?.write_all(text.as_bytes())?;
    }
    Ok(())
}

fn csv_target(cfg: &Config, flag: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| match (cfg.output.format, &cfg.output.path) {
        (OutputFormat::Csv, Some(p)) => Some(cfg.base_dir.join(p)),
        _ => None,
    })
}

fn dispatch(cli: &Cli) -> Result<(String, i32)> {
    match &cli.command {
        Command::Selftest => {
            let cfg = cli.config.as_ref().map(|p| Config::load(p)).transpose()?;
            let geom = cfg.as_ref().map(Config::geometry).transpose()?;
            let extra = match (&cfg, &geom) {
                (Some(c), Some(g)) => Some((g, &c.rules.cell_rule, &c.rules.plane_rule)),
                _ => None,
            };
            let report = selftest::run(extra)?;
            let code = if report.passed { 0 } else { 4 };
            Ok((render(&report)?, code))
        }
        Command::Ahom { parallel, csv } => {
            let cfg = load(cli)?;
            let geom = cfg.geometry()?;
            let plane = PlaneRule::new(cfg.rules.plane_rule)?;
            let a = if *parallel {
                compute_parallel(&geom, &cfg.rules.cell_rule, &plane)?
            } else {
                compute_general(&geom, &cfg.rules.cell_rule, &plane)?
            };
            let report = AhomReport::new(&a, &cfg.rules);
            let text = render(&report)?;
            if let Some(p) = csv_target(&cfg, csv) {
                report.write_csv(create(&p)?)?;
            }
            mirror(&cfg, &text)?;
            Ok((text, 0))
        }
        Command::Ghom { xi, field } => {
            let cfg = load(cli)?;
            let geom = cfg.geometry()?;
            let mesh = CellMesh::new(&geom, &cfg.mesh)?;
            let g = exchange_tensor_on(&mesh)?;
            let sol = match xi {
                Some(v) => Some(solve_cell_on(&mesh, parse_xi(v)?)?),
                None => None,
            };
            if let (Some(p), Some(s)) = (field, &sol) {
                write_corrector_csv(&mesh, s, create(p)?)?;
            }
            let text = render(&GhomReport::new(&g, &cfg.mesh, sol.as_ref()))?;
            mirror(&cfg, &text)?;
            Ok((text, 0))
        }
        Command::EasyAxis => {
            let cfg = load(cli)?;
            let geom = cfg.geometry()?;
            let a = anisotropy(&cfg, &geom)?;
            let e = easy_axis(&a);
            let report = EasyAxisReport {
                formula_used: a.formula,
                m: e.axis,
                energy: geom.omega().area() * e.value,
                spectrum: e.spectrum,
                degenerate: e.degenerate,
            };
            let text = render(&report)?;
            mirror(&cfg, &text)?;
            Ok((text, 0))
        }
        Command::Energy { field } => {
            let cfg = load(cli)?;
            let geom = cfg.geometry()?;
            let params = EnergyParams::new(cfg.params()?, geom.clone())?;
            let m = read_field(field, &geom)?;
            let a = anisotropy(&cfg, &geom)?;
            let g = exchange_tensor_on(&CellMesh::new(&geom, &cfg.mesh)?)?;
            let e = evaluate_e0(&m, &g, &a, &params)?;
            let c = constant_minimizer(&g, &a, &params);
            let text = render(&EnergyOutput {
                exchange_term: e.exchange_term,
                anisotropy_term: e.anisotropy_term,
                total: e.total,
                constant_minimum: c.energy,
                grid: m.shape(),
            })?;
            mirror(&cfg, &text)?;
            Ok((text, 0))
        }
        Command::GammaSweep { m, eps, csv } => {
            let cfg = load(cli)?;
            let geom = cfg.geometry()?;
            let m = parse_unit(m)?;
            let a = anisotropy(&cfg, &geom)?;
            let sw = sweep(&geom, m, eps, &cfg.validator, &a)?;
            let report = SweepReport { formula_used: a.formula, sweep: sw };
            let text = render(&report)?;
            if let Some(p) = csv_target(&cfg, csv) {
                report.write_csv(create(&p)?)?;
            }
            mirror(&cfg, &text)?;
            Ok((text, 0))
        }
    }
}

fn parse_xi(v: &[f64]) -> Result<[[f64; 2]; 3]> {
    if v.len() != 6 {
        return Err(Error::InvalidArgument(format!("--xi needs 6 numbers, got {}", v.len())));
    }
    Ok([[v[0], v[1]], [v[2], v[3]], [v[4], v[5]]])
}

fn parse_unit(v: &[f64]) -> Result<[f64; 3]> {
    if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("--m needs 3 finite numbers".into()));
    }
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        return Err(Error::InvalidArgument("--m must be nonzero".into()));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// Reads `x_index, y_index, m1, m2, m3` rows; a header row is optional.
pub fn read_field(path: &Path, geom: &FilmGeometry<f64>) -> Result<MagnetizationField<f64>> {
    let bad = |msg: String| Error::ShapeMismatch(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if line == 0 && rec.get(0).is_some_and(|s| s.parse::<usize>().is_err()) {
            continue;
        }
        if rec.len() != 5 {
            return Err(bad(format!("row {line}: expected 5 columns")));
        }
        let i: usize = rec[0].parse().map_err(|_| bad(format!("row {line}: bad x_index")))?;
        let j: usize = rec[1].parse().map_err(|_| bad(format!("row {line}: bad y_index")))?;
        let mut m = [0.0; 3];
        for (c, v) in m.iter_mut().enumerate() {
            *v = rec[2 + c].parse().map_err(|_| bad(format!("row {line}: bad m{}", c + 1)))?;
        }
        rows.push((i, j, m));
    }
    let nx = rows.iter().map(|r| r.0).max().map_or(0, |v| v + 1);
    let ny = rows.iter().map(|r| r.1).max().map_or(0, |v| v + 1);
    if rows.len() != nx * ny {
        return Err(bad(format!("{} rows do not fill a {nx}×{ny} grid", rows.len())));
    }
    let mut values = vec![None; nx * ny];
    for (i, j, m) in rows {
        if values[i * ny + j].replace(m).is_some() {
            return Err(bad(format!("node ({i}, {j}) appears twice")));
        }
    }
    let values = values.into_iter().map(|v| v.expect("grid filled")).collect();
    MagnetizationField::new(*geom.omega(), [nx, ny], values)
}
