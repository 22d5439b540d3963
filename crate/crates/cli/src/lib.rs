//! Command-line front end for `wavelet-comove`.
//!
//! `comove <command> [flags]` runs one analysis and writes its CSV grids and
//! PNG heatmaps into the output directory. Everything is computed before
//! anything is written, and each file is written through a temporary file
//! and a rename. Exit status is 0 on success, 2 on a usage error and 1 on a
//! data or numerical error.

pub mod config;
pub mod heatmap;
pub mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use wavelet_comove::coherence::coherence_from_fields;
use wavelet_comove::cwt::{build_grid, CwtPlan, DEFAULT_DJ, DEFAULT_OMEGA0};
use wavelet_comove::entropy::{cweem, weem, EntropyReport, ExpBase, WhiteNoiseReference};
use wavelet_comove::significance::{coherence_significance, partial_coherence_significance, MIN_RUNS};
use wavelet_comove::{
    align, classify_phase, describe, load_csv, partial_coherence, power, CoherenceResult, CsvOptions, FilterKind,
    Matrix, PartialForm, ScaleGrid, ShapeStats, Smoother, TimeSeries, WaveletFilter,
};

use config::{ConfigError, KeyKind};
pub use heatmap::render_heatmap;
pub use output::export_grid;

/// Failure of a CLI run.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Input {
        path: String,
        #[source]
        source: wavelet_comove::Error,
    },
    #[error(transparent)]
    Data(#[from] wavelet_comove::Error),
    #[error("writing {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "comove", version, about = "Wavelet co-movement and entropy analysis")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Descriptive statistics of each input series.
    Stats(StatsArgs),
    /// Morlet wavelet power spectrum.
    Cwt(CwtArgs),
    /// Wavelet coherence and phase of two series.
    Coherence(CoherenceArgs),
    /// Partial wavelet coherence of x and y controlling for z.
    Pcoh(PcohArgs),
    /// Wavelet energy entropy measure over a range of levels.
    Weem(WeemArgs),
    /// Cross wavelet energy entropy measure in both directions.
    Cweem(CweemArgs),
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Transform {
    #[default]
    None,
    Log,
    Diff,
    Logdiff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Image,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaseArg {
    E,
    #[value(name = "2")]
    Two,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum WnArg {
    #[default]
    Analytic,
    Mc,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum PartialFormArg {
    #[default]
    Standard,
    Printed,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Date column name.
    #[arg(long = "date-col", default_value = "date")]
    date_col: String,
    /// Value column name (defaults to the first non-date column).
    #[arg(long = "value-col")]
    value_col: Option<String>,
    /// Transform applied after alignment.
    #[arg(long, value_enum, default_value_t)]
    transform: Transform,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Key=value file of default flags; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ImageOutputArgs {
    /// Comma-separated output formats.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Csv, Format::Image])]
    format: Vec<Format>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Smallest scale, in time units (default: two sampling intervals).
    #[arg(long)]
    s0: Option<f64>,
    /// Scale spacing in octaves.
    #[arg(long, default_value_t = DEFAULT_DJ)]
    dj: f64,
    /// Morlet centre frequency.
    #[arg(long, default_value_t = DEFAULT_OMEGA0)]
    omega0: f64,
}

#[derive(Args, Debug)]
struct SignificanceArgs {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Monte Carlo surrogate runs; 0 skips the test.
    #[arg(long, default_value_t = wavelet_comove::significance::DEFAULT_RUNS)]
    runs: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    /// Range of decomposition levels, `A:B` or a single level.
    #[arg(long, default_value = "2:7")]
    levels: String,
    /// Wavelet filter.
    #[arg(long, default_value = "la8")]
    filter: String,
    /// Exponent base of the measure.
    #[arg(long, value_enum)]
    base: Option<BaseArg>,
    /// White-noise reference entropy.
    #[arg(long, value_enum, default_value_t)]
    wn: WnArg,
    /// Monte Carlo white-noise runs (with `--wn mc`).
    #[arg(long = "mc-runs", default_value_t = 100)]
    mc_runs: usize,
    /// Random seed for the Monte Carlo reference.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// CSV file of the first series.
    #[arg(long)]
    x: PathBuf,
    /// Optional second series, aligned with the first.
    #[arg(long)]
    y: Option<PathBuf>,
    /// Optional third series, aligned with the first.
    #[arg(long)]
    z: Option<PathBuf>,
    /// Ljung-Box lag.
    #[arg(long = "lb-lag", default_value_t = 1)]
    lb_lag: usize,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CwtArgs {
    /// CSV file of the first series.
    #[arg(long)]
    x: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    formats: ImageOutputArgs,
}

#[derive(Args, Debug)]
struct CoherenceArgs {
    /// CSV file of the first series.
    #[arg(long)]
    x: PathBuf,
    /// CSV file of the second series.
    #[arg(long)]
    y: PathBuf,
    /// Report squared coherence.
    #[arg(long)]
    squared: bool,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    significance: SignificanceArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    formats: ImageOutputArgs,
}

#[derive(Args, Debug)]
struct PcohArgs {
    /// CSV file of the first series.
    #[arg(long)]
    x: PathBuf,
    /// CSV file of the second series.
    #[arg(long)]
    y: PathBuf,
    /// CSV file of the control series.
    #[arg(long)]
    z: PathBuf,
    /// Report squared partial coherence.
    #[arg(long)]
    squared: bool,
    /// Partial coherency formula.
    #[arg(long = "partial-form", value_enum, default_value_t)]
    partial_form: PartialFormArg,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    significance: SignificanceArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    formats: ImageOutputArgs,
}

#[derive(Args, Debug)]
struct WeemArgs {
    /// CSV file of the first series.
    #[arg(long)]
    x: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    entropy: EntropyArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CweemArgs {
    /// CSV file of the first series.
    #[arg(long)]
    x: PathBuf,
    /// CSV file of the second series.
    #[arg(long)]
    y: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    entropy: EntropyArgs,
    #[command(flatten)]
    output: OutputArgs,
}

/// Runs the CLI on `args` (program name first), printing summaries to
/// stdout and errors to stderr. Returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match with_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match execute(cli) {
        Ok((dir, artifacts)) => match output::commit(&dir, &artifacts) {
            Ok(paths) => {
                for (path, a) in paths.iter().zip(&artifacts) {
                    let _ = writeln!(out, "{}: {}", path.display(), a.summary);
                }
                0
            }
            Err(source) => {
                let e = CliError::Output {
                    path: dir.display().to_string(),
                    source,
                };
                let _ = writeln!(err, "error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Splices the flags of a `--config` file in front of the command-line
/// flags of the subcommand.
fn with_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(sub_pos) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(args);
    };
    let sub_pos = sub_pos + 1;
    let mut path: Option<String> = None;
    let mut i = sub_pos + 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            path = args.get(i + 1).map(|p| p.to_string_lossy().into_owned());
            i += 2;
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
            i += 1;
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(args) };

    let root = Cli::command();
    let sub_name = args[sub_pos].to_string_lossy().into_owned();
    let Some(sub) = root.find_subcommand(&sub_name) else {
        // let clap report the unknown command
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
        path: path.clone(),
        source,
    })?;
    let classify = |key: &str| {
        if let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key)) {
            return if arg.get_action().takes_values() {
                KeyKind::Value
            } else {
                KeyKind::Switch
            };
        }
        let elsewhere = root
            .get_subcommands()
            .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key)));
        if elsewhere {
            KeyKind::Foreign
        } else {
            KeyKind::Unknown
        }
    };
    let injected = config::to_args(&text, classify)?;
    let mut spliced: Vec<OsString> = args[..=sub_pos].to_vec();
    spliced.extend(injected.into_iter().map(OsString::from));
    spliced.extend(args[sub_pos + 1..].iter().cloned());
    Ok(spliced)
}

fn execute(cli: Cli) -> Result<(PathBuf, Vec<output::Artifact>), CliError> {
    match cli.command {
        Command::Stats(a) => {
            let artifacts = stats(&a)?;
            Ok((a.output.out, artifacts))
        }
        Command::Cwt(a) => {
            let artifacts = cwt_command(&a)?;
            Ok((a.output.out, artifacts))
        }
        Command::Coherence(a) => {
            let artifacts = coherence_command(&a)?;
            Ok((a.output.out, artifacts))
        }
        Command::Pcoh(a) => {
            let artifacts = pcoh_command(&a)?;
            Ok((a.output.out, artifacts))
        }
        Command::Weem(a) => {
            let artifacts = weem_command(&a)?;
            Ok((a.output.out, artifacts))
        }
        Command::Cweem(a) => {
            let artifacts = cweem_command(&a)?;
            Ok((a.output.out, artifacts))
        }
    }
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{flag}: {msg}"))
}

fn load(path: &Path, input: &InputArgs) -> Result<TimeSeries, CliError> {
    let options = CsvOptions {
        date_column: input.date_col.clone(),
        value_column: input.value_col.clone(),
    };
    let wrap = |source| CliError::Input {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(|e| wrap(wavelet_comove::Error::Io(e)))?;
    load_csv(file, &options).map_err(wrap)
}

fn transform(x: TimeSeries, t: Transform) -> Result<TimeSeries, CliError> {
    Ok(match t {
        Transform::None => x,
        Transform::Log => x.ln()?,
        Transform::Diff => x.diff()?,
        Transform::Logdiff => x.ln()?.diff()?,
    })
}

/// Loads and aligns every path, then applies the transform.
fn load_aligned(paths: &[&Path], input: &InputArgs) -> Result<Vec<TimeSeries>, CliError> {
    let mut series: Vec<TimeSeries> = paths.iter().map(|p| load(p, input)).collect::<Result<_, _>>()?;
    if series.len() > 1 {
        // intersect everything with the first series, then trim the rest to it
        let mut base = series[0].clone();
        for other in &series[1..] {
            base = align(&base, other)?.0;
        }
        for s in series.iter_mut() {
            *s = align(&base, s)?.1;
        }
    }
    series.into_iter().map(|s| transform(s, input.transform)).collect()
}

fn label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn make_grid(args: &GridArgs, x: &TimeSeries) -> Result<ScaleGrid, CliError> {
    let dt = x.dt();
    let s0 = args.s0.unwrap_or(2.0 * dt);
    if !(s0 > 0.0) {
        return Err(usage("--s0", "must be positive"));
    }
    if !(args.dj > 0.0) {
        return Err(usage("--dj", "must be positive"));
    }
    if !(args.omega0 >= 5.0) {
        return Err(usage("--omega0", "must be at least 5"));
    }
    Ok(build_grid(x.len(), dt, s0, args.dj, args.omega0)?)
}

fn check_significance(args: &SignificanceArgs) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(usage("--alpha", "must lie strictly between 0 and 1"));
    }
    if args.runs != 0 && args.runs < MIN_RUNS {
        return Err(usage("--runs", format!("must be 0 or at least {MIN_RUNS}")));
    }
    Ok(())
}

fn csv_artifact(
    name: &str,
    summary: String,
    write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> output::Artifact {
    let mut bytes = Vec::new();
    write(&mut bytes).expect("writing to memory cannot fail");
    output::Artifact {
        name: name.to_string(),
        bytes,
        summary,
    }
}

fn stats(a: &StatsArgs) -> Result<Vec<output::Artifact>, CliError> {
    if a.lb_lag == 0 {
        return Err(usage("--lb-lag", "must be positive"));
    }
    let paths: Vec<&Path> = [Some(a.x.as_path()), a.y.as_deref(), a.z.as_deref()]
        .into_iter()
        .flatten()
        .collect();
    // statistics are per series; no alignment
    let mut text = String::from(
        "series,n,mean,std_dev,min,max,skewness,excess_kurtosis,jarque_bera,ljung_box,ljung_box_lag\n",
    );
    for p in &paths {
        let s = transform(load(p, &a.input)?, a.input.transform)?;
        let d = describe(&s, a.lb_lag)?;
        let shape = match d.shape {
            ShapeStats::Regular {
                skewness,
                excess_kurtosis,
                jarque_bera,
                ljung_box,
            } => [skewness, excess_kurtosis, jarque_bera, ljung_box],
            ShapeStats::Degenerate => [f64::NAN; 4],
        };
        let _ = write!(
            text,
            "{},{},{},{},{},{}",
            label(p),
            d.n,
            d.mean,
            d.std_dev,
            d.min,
            d.max
        );
        for v in shape {
            let _ = write!(text, ",{}", output::format_value(v));
        }
        let _ = writeln!(text, ",{}", d.ljung_box_lag);
    }
    Ok(vec![output::Artifact {
        name: "stats.csv".into(),
        bytes: text.into_bytes(),
        summary: format!("{} series", paths.len()),
    }])
}

fn wants(formats: &ImageOutputArgs, f: Format) -> bool {
    formats.format.contains(&f)
}

fn image_artifact(
    name: &str,
    field: &Matrix<f64>,
    grid: &ScaleGrid,
    coi: &[f64],
    mask: Option<&Matrix<bool>>,
) -> output::Artifact {
    let mut bytes = Vec::new();
    render_heatmap(field, grid, coi, mask, &mut bytes).expect("encoding to memory cannot fail");
    let raster = format!("{}x{} grid", field.cols(), field.rows());
    output::Artifact {
        name: name.into(),
        bytes,
        summary: format!("heatmap of {raster}"),
    }
}

fn coi_artifact(coi: &[f64]) -> output::Artifact {
    csv_artifact("coi.csv", format!("{} boundary values", coi.len()), |w| {
        output::export_coi(coi, w)
    })
}

fn cwt_command(a: &CwtArgs) -> Result<Vec<output::Artifact>, CliError> {
    let x = load_aligned(&[&a.x], &a.input)?.remove(0);
    let grid = make_grid(&a.grid, &x)?;
    let field = CwtPlan::new(x.len(), x.dt(), &grid)?.transform(x.values())?;
    let p = power(&field);
    let mut artifacts = Vec::new();
    if wants(&a.formats, Format::Csv) {
        let shape = format!("{}x{} wavelet power grid", p.rows(), p.cols());
        artifacts.push(csv_artifact("power.csv", shape, |w| export_grid(&p, &grid, None, w)));
        artifacts.push(coi_artifact(field.coi()));
    }
    if wants(&a.formats, Format::Image) {
        let peak = p.as_slice().iter().copied().fold(0.0, f64::max);
        let scaled = p.map(|&v| if peak > 0.0 { v / peak } else { 0.0 });
        artifacts.push(image_artifact("power.png", &scaled, &grid, field.coi(), None));
    }
    Ok(artifacts)
}

/// Every `step`-th time and scale point of the phase field.
fn phase_arrows(r: &CoherenceResult) -> Result<String, CliError> {
    let (rows, cols) = r.phase.shape();
    let t_step = cols.div_ceil(40).max(1);
    let s_step = rows.div_ceil(20).max(1);
    let mut text = String::from("time_index,scale,theta,class,arrow\n");
    for row in (0..rows).step_by(s_step) {
        let scale = output::format_scale(r.grid.scales()[row]);
        for c in (0..cols).step_by(t_step) {
            let theta = r.phase[(row, c)];
            if theta.is_nan() || r.magnitude[(row, c)].is_nan() {
                continue;
            }
            let class = classify_phase(theta)?;
            let _ = writeln!(text, "{c},{scale},{theta},{},{}", class.name(), class.arrow());
        }
    }
    Ok(text)
}

fn coherence_outputs(
    prefix: &str,
    r: &CoherenceResult,
    squared: bool,
    formats: &ImageOutputArgs,
    sig_note: String,
) -> Vec<output::Artifact> {
    let field = if squared { r.squared() } else { r.magnitude.clone() };
    let mask = r.significance_mask.as_ref();
    let mut artifacts = Vec::new();
    let what = if squared { "squared coherence" } else { "coherence" };
    if wants(formats, Format::Csv) {
        let summary = format!("{}x{} {what} grid{sig_note}", field.rows(), field.cols());
        artifacts.push(csv_artifact(&format!("{prefix}.csv"), summary, |w| {
            export_grid(&field, &r.grid, mask, w)
        }));
        let summary = format!("{}x{} phase grid", r.phase.rows(), r.phase.cols());
        let phase_name = if prefix == "coherence" {
            "phase.csv".to_string()
        } else {
            format!("{prefix}_phase.csv")
        };
        artifacts.push(csv_artifact(&phase_name, summary, |w| {
            export_grid(&r.phase, &r.grid, None, w)
        }));
        artifacts.push(coi_artifact(&r.coi));
    }
    if wants(formats, Format::Image) {
        artifacts.push(image_artifact(&format!("{prefix}.png"), &field, &r.grid, &r.coi, mask));
    }
    artifacts
}

fn sig_note(field: Option<(&wavelet_comove::SignificanceField, f64)>) -> String {
    match field {
        Some((f, frac)) => format!(
            ", {:.1}% of reliable points significant at alpha={} ({} runs, seed {})",
            100.0 * frac,
            f.alpha,
            f.runs,
            f.seed
        ),
        None => String::new(),
    }
}

fn coherence_command(a: &CoherenceArgs) -> Result<Vec<output::Artifact>, CliError> {
    check_significance(&a.significance)?;
    let s = load_aligned(&[&a.x, &a.y], &a.input)?;
    let grid = make_grid(&a.grid, &s[0])?;
    let sig = &a.significance;
    let (r, note) = if sig.runs > 0 {
        let (r, f) = coherence_significance(&s[0], &s[1], &grid, sig.alpha, sig.runs, sig.seed)?;
        let note = sig_note(Some((&f, f.reliable_fraction(&grid, &r.coi))));
        (r, note)
    } else {
        let plan = CwtPlan::new(s[0].len(), s[0].dt(), &grid)?;
        let wx = plan.transform(s[0].values())?;
        let wy = plan.transform(s[1].values())?;
        (coherence_from_fields(&wx, &wy, &Smoother::for_field(&wx))?, String::new())
    };
    let mut artifacts = coherence_outputs("coherence", &r, a.squared, &a.formats, note);
    if wants(&a.formats, Format::Csv) {
        let text = phase_arrows(&r)?;
        let count = text.lines().count() - 1;
        artifacts.push(output::Artifact {
            name: "phase_arrows.csv".into(),
            bytes: text.into_bytes(),
            summary: format!("{count} subsampled phase arrows"),
        });
    }
    Ok(artifacts)
}

fn pcoh_command(a: &PcohArgs) -> Result<Vec<output::Artifact>, CliError> {
    check_significance(&a.significance)?;
    let s = load_aligned(&[&a.x, &a.y, &a.z], &a.input)?;
    let grid = make_grid(&a.grid, &s[0])?;
    let form = match a.partial_form {
        PartialFormArg::Standard => PartialForm::Standard,
        PartialFormArg::Printed => PartialForm::Printed,
    };
    let sig = &a.significance;
    let (r, note) = if sig.runs > 0 {
        let (r, f) = partial_coherence_significance(&s[0], &s[1], &s[2], &grid, form, sig.alpha, sig.runs, sig.seed)?;
        let note = sig_note(Some((&f, f.reliable_fraction(&grid, &r.coi)))) + " (experimental)";
        (r, note)
    } else {
        (partial_coherence(&s[0], &s[1], &s[2], &grid, form)?, String::new())
    };
    let undefined = r
        .undefined
        .as_ref()
        .map_or(0, |m| m.as_slice().iter().filter(|&&u| u).count());
    let note = if undefined > 0 {
        format!("{note}, {undefined} undefined points")
    } else {
        note
    };
    Ok(coherence_outputs("partial_coherence", &r, a.squared, &a.formats, note))
}

fn parse_levels(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || usage("--levels", format!("expected A:B with 1 <= A <= B, got '{spec}'"));
    let (a, b) = match spec.split_once(':') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (spec.trim(), spec.trim()),
    };
    let a = usize::from_str(a).map_err(|_| bad())?;
    let b = usize::from_str(b).map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

struct EntropySetup {
    levels: (usize, usize),
    filter: WaveletFilter,
    base: ExpBase,
    reference: WhiteNoiseReference,
}

fn entropy_setup(a: &EntropyArgs, default_base: ExpBase) -> Result<EntropySetup, CliError> {
    let levels = parse_levels(&a.levels)?;
    let kind = FilterKind::from_str(&a.filter).map_err(|e| usage("--filter", e))?;
    let base = match a.base {
        None => default_base,
        Some(BaseArg::E) => ExpBase::Natural,
        Some(BaseArg::Two) => ExpBase::Two,
    };
    let reference = match a.wn {
        WnArg::Analytic => WhiteNoiseReference::Analytic,
        WnArg::Mc => {
            if a.mc_runs == 0 {
                return Err(usage("--mc-runs", "must be positive"));
            }
            WhiteNoiseReference::MonteCarlo {
                runs: a.mc_runs,
                seed: a.seed,
            }
        }
    };
    Ok(EntropySetup {
        levels,
        filter: WaveletFilter::new(kind),
        base,
        reference,
    })
}

fn weem_command(a: &WeemArgs) -> Result<Vec<output::Artifact>, CliError> {
    let setup = entropy_setup(&a.entropy, ExpBase::Natural)?;
    let x = load_aligned(&[&a.x], &a.input)?.remove(0);
    let mut text = String::from("J,WE,WE_wn,WEEM\n");
    for j in setup.levels.0..=setup.levels.1 {
        let r = weem(x.values(), j, &setup.filter, setup.base, setup.reference)?;
        let _ = writeln!(text, "{j},{},{},{}", r.we, r.we_wn, r.measure);
    }
    let summary = format!(
        "WEEM for J={}..{} ({}, base {}, {} reference)",
        setup.levels.0,
        setup.levels.1,
        setup.filter.name(),
        setup.base,
        setup.reference
    );
    Ok(vec![output::Artifact {
        name: "weem.csv".into(),
        bytes: text.into_bytes(),
        summary,
    }])
}

fn cweem_row(text: &mut String, j: usize, direction: &str, r: &EntropyReport) {
    let _ = writeln!(
        text,
        "{j},{direction},{},{},{},{}",
        r.we,
        r.we_wn,
        r.measure,
        u8::from(r.smoothed)
    );
}

fn cweem_command(a: &CweemArgs) -> Result<Vec<output::Artifact>, CliError> {
    let setup = entropy_setup(&a.entropy, ExpBase::Two)?;
    let s = load_aligned(&[&a.x, &a.y], &a.input)?;
    let (lx, ly) = (label(&a.x), label(&a.y));
    let forward = format!("{lx}->{ly}");
    let backward = format!("{ly}->{lx}");
    let mut text = String::from("J,direction,WE_kl,WE_wn,CWEEM,smoothed\n");
    for j in setup.levels.0..=setup.levels.1 {
        let xy = cweem(s[0].values(), s[1].values(), j, &setup.filter, setup.base, setup.reference)?;
        let yx = cweem(s[1].values(), s[0].values(), j, &setup.filter, setup.base, setup.reference)?;
        cweem_row(&mut text, j, &forward, &xy);
        cweem_row(&mut text, j, &backward, &yx);
    }
    let summary = format!(
        "CWEEM {forward} and {backward} for J={}..{} ({}, base {}, {} reference)",
        setup.levels.0,
        setup.levels.1,
        setup.filter.name(),
        setup.base,
        setup.reference
    );
    Ok(vec![output::Artifact {
        name: "cweem.csv".into(),
        bytes: text.into_bytes(),
        summary,
    }])
}
