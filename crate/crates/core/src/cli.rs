//! Command-line front end: argument types, dispatch and artifact writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::channels::{lossy_wigner_grid, LossParams};
use crate::error::PsdfsError;
use crate::fock::C64;
use crate::measures::{measure_sweep, MeasureReport};
use crate::quad;
use crate::state::{density_matrix, psdfs_closed_form, psdfs_matrix_oracle, StateParams};
use crate::tomography::{detected_grid, DetectorParams, QuadratureDistribution};
use crate::wigner::{wigner_grid, GridGeometry, ParityOracle, PhaseSpaceGrid};

#[derive(Debug, Parser)]
#[command(
    name = "psdfs",
    version,
    about = "Photon-subtracted displaced Fock states: Wigner functions, measures, loss and homodyne detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fock amplitudes of the state as JSON.
    State(StateArgs),
    /// Wigner function on a grid (CSV: re_gamma, im_gamma, w).
    Wigner(WignerArgs),
    /// Measures for each alpha of a sweep (JSON array or CSV rows).
    Measures(MeasuresArgs),
    /// Wigner function after photon loss (CSV: re_gamma, im_gamma, w).
    Evolve(EvolveArgs),
    /// Detected Wigner grid (q, p, w_det) and homodyne curve (q_theta, pr).
    Tomo(TomoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl FromStr for AxisSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected min:max:steps, got '{s}'"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
        let (min, max) = (num(parts[0])?, num(parts[1])?);
        let steps = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("'{}': {e}", parts[2]))?;
        if !(min.is_finite() && max.is_finite()) || max <= min || steps < 2 {
            return Err(format!("need finite min < max and steps >= 2, got '{s}'"));
        }
        Ok(Self { min, max, steps })
    }
}

/// `a`, `a+bi`, `bi` and the like.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let z = C64::from_str(s.trim()).map_err(|_| format!("cannot parse complex number '{s}'"))?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(format!("alpha must be finite, got '{s}'"));
    }
    Ok(z)
}

#[derive(Debug, Clone, Args)]
pub struct StateSpec {
    /// Fock parameter.
    #[arg(long)]
    pub n: usize,
    /// Number of subtracted photons.
    #[arg(long)]
    pub k: usize,
    /// Displacement, e.g. 0.5 or 0.5+0.2i.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: C64,
    /// Fock truncation; chosen automatically when omitted.
    #[arg(long)]
    pub dim: Option<usize>,
}

impl StateSpec {
    pub fn params(&self) -> crate::Result<StateParams> {
        match self.dim {
            Some(d) => StateParams::with_dim(self.n, self.k, self.alpha, d),
            None => StateParams::new(self.n, self.k, self.alpha),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridSpec {
    /// Grid for both axes (or the real / Q axis with --grid-im).
    #[arg(long, default_value = "-4:4:161", allow_hyphen_values = true)]
    pub grid: AxisSpec,
    /// Separate imaginary / P axis.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_im: Option<AxisSpec>,
}

impl GridSpec {
    pub fn geometry(&self) -> crate::Result<GridGeometry> {
        let re = self.grid;
        let im = self.grid_im.unwrap_or(re);
        GridGeometry::new((re.min, re.max, re.steps), (im.min, im.max, im.steps))
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputSpec {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    #[command(flatten)]
    pub state: StateSpec,
    #[command(flatten)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Args)]
pub struct WignerArgs {
    #[command(flatten)]
    pub state: StateSpec,
    #[command(flatten)]
    pub grid: GridSpec,
    /// Also evaluate the displaced-parity oracle at every node.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Args)]
pub struct MeasuresArgs {
    /// Fock parameter.
    #[arg(long)]
    pub n: usize,
    /// Number of subtracted photons.
    #[arg(long)]
    pub k: usize,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: Vec<C64>,
    /// Real alpha sweep min:max:steps, appended after --alpha.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_sweep: Option<AxisSpec>,
    #[command(flatten)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub state: StateSpec,
    /// Rescaled time kappa*t.
    #[arg(long, allow_hyphen_values = true)]
    pub kt: f64,
    #[command(flatten)]
    pub grid: GridSpec,
    #[command(flatten)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Args)]
pub struct TomoArgs {
    #[command(flatten)]
    pub state: StateSpec,
    /// Detector efficiency in (0, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    /// Local-oscillator phase (radians).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    /// (Q, P) grid of the detected Wigner function.
    #[command(flatten)]
    pub grid: GridSpec,
    /// Q_theta nodes of the homodyne curve.
    #[arg(long, default_value = "-6:6:241", allow_hyphen_values = true)]
    pub q_grid: AxisSpec,
    /// Detected Wigner grid output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Homodyne curve output; defaults to the grid path with `_pr` appended
    /// to the file stem.
    #[arg(long)]
    pub pr_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<PsdfsError> for CliError {
    fn from(e: PsdfsError) -> Self {
        Self {
            code: if e.is_validation() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::runtime(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::runtime(format!("csv error: {e}"))
    }
}

type CliResult = Result<(), CliError>;

/// Round to 12 significant digits; negative zero becomes zero.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// CSV cell: 12 significant digits, exponent notation outside `[1e-5, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    let r = round12(x);
    let a = r.abs();
    if r == 0.0 || (1e-5..1e15).contains(&a) || !r.is_finite() {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if !(n.is_i64() || n.is_u64()) => json!(round12(x)),
            _ => Value::Number(n),
        },
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

/// Where a command writes when no output file is given, and its summary lines.
pub struct Streams<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Streams<'_> {
    /// Summary lines go to `out` unless the artifact itself does.
    fn summary(&mut self, artifact_to_out: bool) -> &mut dyn Write {
        if artifact_to_out {
            &mut *self.err
        } else {
            &mut *self.out
        }
    }
}

fn open_output<'a>(path: Option<&Path>, out: &'a mut dyn Write) -> io::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(out),
    })
}

fn write_json(path: Option<&Path>, value: Value, out: &mut dyn Write) -> CliResult {
    let mut out = open_output(path, out)?;
    serde_json::to_writer_pretty(&mut out, &round_json(value))
        .map_err(|e| CliError::runtime(format!("json error: {e}")))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn require_json(format: Option<Format>) -> CliResult {
    match format {
        Some(Format::Csv) => Err(CliError::validation("this command only writes json")),
        _ => Ok(()),
    }
}

/// Grid rows in C order under the given column names.
pub fn write_grid(
    path: Option<&Path>,
    format: Format,
    names: [&str; 3],
    grid: &PhaseSpaceGrid,
    out: &mut dyn Write,
) -> CliResult {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(open_output(path, out)?);
            w.write_record(names)?;
            for (x, y, v) in grid.rows() {
                w.write_record([fmt_num(x), fmt_num(y), fmt_num(v)])?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Json => {
            let rows: Vec<Value> = grid
                .rows()
                .map(|(x, y, v)| json!({ names[0]: x, names[1]: y, names[2]: v }))
                .collect();
            write_json(path, Value::Array(rows), out)
        }
    }
}

/// Runs against the process's standard streams.
pub fn run(cli: Cli) -> CliResult {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut err = io::stderr();
    let result = run_with(
        cli,
        &mut Streams {
            out: &mut out,
            err: &mut err,
        },
    );
    out.flush()?;
    result
}

pub fn run_with(cli: Cli, s: &mut Streams) -> CliResult {
    match cli.command {
        Command::State(a) => cmd_state(&a, s),
        Command::Wigner(a) => cmd_wigner(&a, s),
        Command::Measures(a) => cmd_measures(&a, s),
        Command::Evolve(a) => cmd_evolve(&a, s),
        Command::Tomo(a) => cmd_tomo(&a, s),
    }
}

pub fn cmd_state(a: &StateArgs, s: &mut Streams) -> CliResult {
    require_json(a.output.format)?;
    let p = a.state.params()?;
    let v = psdfs_closed_form(&p)?;
    let amps: Vec<[f64; 2]> = v.amps.iter().map(|z| [z.re, z.im]).collect();
    let value = json!({
        "params": { "n": p.n, "k": p.k, "alpha": [p.alpha.re, p.alpha.im], "dim": p.dim },
        "amplitudes": amps,
        "norm_check": v.norm_sqr(),
        "tail_mass": v.tail_mass(),
    });
    write_json(a.output.out.as_deref(), value, s.out)
}

pub fn cmd_wigner(a: &WignerArgs, s: &mut Streams) -> CliResult {
    let p = a.state.params()?;
    let geometry = a.grid.geometry()?;
    let grid = wigner_grid(&p, &geometry)?;
    let format = a.output.format.unwrap_or(Format::Csv);
    write_grid(
        a.output.out.as_deref(),
        format,
        ["re_gamma", "im_gamma", "w"],
        &grid,
        s.out,
    )?;
    let sum = s.summary(a.output.out.is_none());
    writeln!(sum, "min={}", fmt_num(grid.min()))?;
    writeln!(sum, "integral={}", fmt_num(grid.integral()))?;
    if a.oracle {
        let oracle = ParityOracle::new(&density_matrix(&psdfs_matrix_oracle(&p)?))?;
        let deviations: crate::Result<Vec<f64>> = geometry
            .nodes()
            .par_iter()
            .zip(grid.values.par_iter())
            .map(|(&(x, y), &w)| Ok((oracle.eval(C64::new(x, y))? - w).abs()))
            .collect();
        let worst = deviations?.into_iter().fold(0.0, f64::max);
        writeln!(sum, "oracle_max_dev={:e}", round12(worst))?;
        if worst > 1e-8 {
            return Err(CliError::runtime(format!(
                "closed form and parity oracle differ by {worst:e} (> 1e-8)"
            )));
        }
    }
    Ok(())
}

pub fn cmd_measures(a: &MeasuresArgs, s: &mut Streams) -> CliResult {
    let mut alphas = a.alpha.clone();
    if let Some(sweep) = a.alpha_sweep {
        alphas.extend(
            quad::linspace(sweep.min, sweep.max, sweep.steps)
                .into_iter()
                .map(|x| C64::new(x, 0.0)),
        );
    }
    if alphas.is_empty() {
        return Err(CliError::validation(
            "give at least one value with --alpha or --alpha-sweep",
        ));
    }
    let reports = measure_sweep(a.n, a.k, &alphas);
    match a.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            let value =
                serde_json::to_value(&reports).map_err(|e| CliError::runtime(e.to_string()))?;
            write_json(a.output.out.as_deref(), value, s.out)?;
        }
        Format::Csv => write_reports_csv(a.output.out.as_deref(), &reports, s.out)?,
    }
    if reports.iter().any(|r| r.is_complete()) {
        return Ok(());
    }
    let all_params = reports.iter().all(|r| r.errors.contains_key("params"));
    let first = reports[0]
        .errors
        .values()
        .next()
        .cloned()
        .unwrap_or_default();
    Err(CliError {
        code: if all_params { 2 } else { 1 },
        message: format!("no parameter point succeeded: {first}"),
    })
}

/// Flat report rows; missing measures are empty cells and `error` joins the
/// per-measure messages.
pub fn write_reports_csv(
    path: Option<&Path>,
    reports: &[MeasureReport],
    out: &mut dyn Write,
) -> CliResult {
    let mut w = csv::Writer::from_writer(open_output(path, out)?);
    w.write_record([
        "n",
        "k",
        "alpha_re",
        "alpha_im",
        "linear_entropy",
        "skew",
        "wln",
        "rel_entropy_ng",
        "s_qq",
        "s_pp",
        "s_qp",
        "error",
    ])?;
    let cell = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
    for r in reports {
        let cov = r.covariance.as_ref();
        let error = r
            .errors
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join("; ");
        w.write_record([
            r.params.n.to_string(),
            r.params.k.to_string(),
            fmt_num(r.params.alpha[0]),
            fmt_num(r.params.alpha[1]),
            cell(r.linear_entropy),
            cell(r.skew),
            cell(r.wln),
            cell(r.rel_entropy_ng),
            cell(cov.map(|c| c.s_qq)),
            cell(cov.map(|c| c.s_pp)),
            cell(cov.map(|c| c.s_qp)),
            error,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_evolve(a: &EvolveArgs, s: &mut Streams) -> CliResult {
    let p = a.state.params()?;
    let lp = LossParams::new(a.kt)?;
    let grid = lossy_wigner_grid(&p, lp, &a.grid.geometry()?)?;
    let format = a.output.format.unwrap_or(Format::Csv);
    write_grid(
        a.output.out.as_deref(),
        format,
        ["re_gamma", "im_gamma", "w"],
        &grid,
        s.out,
    )?;
    let sum = s.summary(a.output.out.is_none());
    writeln!(sum, "min={}", fmt_num(grid.min()))?;
    writeln!(sum, "integral={}", fmt_num(grid.integral()))?;
    Ok(())
}

fn default_pr_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_pr{ext}"))
}

pub fn cmd_tomo(a: &TomoArgs, s: &mut Streams) -> CliResult {
    let p = a.state.params()?;
    let dp = DetectorParams::new(a.eta, a.theta)?;
    let format = a.format.unwrap_or(Format::Csv);
    let grid = detected_grid(&p, dp, &a.grid.geometry()?)?;
    write_grid(a.out.as_deref(), format, ["q", "p", "w_det"], &grid, s.out)?;

    let pr = QuadratureDistribution::new(&p, dp)?;
    let qs = quad::linspace(a.q_grid.min, a.q_grid.max, a.q_grid.steps);
    let values = pr.curve(&qs)?;
    let pr_path = a
        .pr_out
        .clone()
        .or_else(|| a.out.as_deref().map(default_pr_path));
    let curve = PhaseSpaceCurve {
        qs: &qs,
        values: &values,
    };
    curve.write(pr_path.as_deref(), format, s.out)?;

    let (lo, hi) = pr.support();
    let (total, _) = quad::adaptive(|q| pr.eval(q).unwrap_or(f64::NAN), lo, hi, 1e-9);
    let sum = s.summary(a.out.is_none() || pr_path.is_none());
    writeln!(sum, "w_det_min={}", fmt_num(grid.min()))?;
    writeln!(sum, "w_det_integral={}", fmt_num(grid.integral()))?;
    writeln!(sum, "pr_integral={}", fmt_num(total))?;
    Ok(())
}

struct PhaseSpaceCurve<'a> {
    qs: &'a [f64],
    values: &'a [f64],
}

impl PhaseSpaceCurve<'_> {
    fn write(&self, path: Option<&Path>, format: Format, out: &mut dyn Write) -> CliResult {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(open_output(path, out)?);
                w.write_record(["q_theta", "pr"])?;
                for (q, v) in self.qs.iter().zip(self.values) {
                    w.write_record([fmt_num(*q), fmt_num(*v)])?;
                }
                w.flush()?;
                Ok(())
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .qs
                    .iter()
                    .zip(self.values)
                    .map(|(q, v)| json!({ "q_theta": q, "pr": v }))
                    .collect();
                write_json(path, Value::Array(rows), out)
            }
        }
    }
}

/// Worker count from the raw `PSDFS_THREADS` value; `None` means automatic.
pub fn thread_count(raw: Option<&str>) -> Result<Option<usize>, CliError> {
    let Some(raw) = raw else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::validation(format!(
            "PSDFS_THREADS must be a nonnegative integer, got '{raw}'"
        ))
    })?;
    Ok((n > 0).then_some(n))
}

/// Sizes the global worker pool from `PSDFS_THREADS` (unset or 0 = automatic).
pub fn configure_threads() -> CliResult {
    let raw = std::env::var("PSDFS_THREADS").ok();
    if let Some(n) = thread_count(raw.as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    Ok(())
}
