//! Command-line front end.
//!
//! Every flag can also be set through an environment variable named
//! `HSDISP_<FLAG>` (upper case, dashes as underscores). A JSON file given by
//! `--config` supplies defaults; flags and environment variables win over it.
//!
//! Exit codes: 0 success, 1 internal failure, 2 invalid input, 3 a
//! validation comparison failed (the report is still written).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corrector::{
    assemble_system, neumann_residual, solve_closed_form, solve_regular, SecondCorrector,
};
use crate::dispersion::{density_for, dispersion_phs, sweep_csv, DispersionResult, QuadSpec};
use crate::error::{Error, Result};
use crate::material::{conductivity_bounds, first_corrector, ConductivityBounds, TwoPhaseProfile};
use crate::minimizer::minimum_from_packing;
use crate::packing::{
    greedy_apollonian, load_packing, radii_csv, random_greedy, to_json_string, write_atomic,
    BallPacking, Generator, SearchSpec, StopCriterion,
};
use crate::validate::{run_validation, Suite, ValidateOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Emit {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "hsdisp",
    version,
    about = "Conductivity and dispersion of periodic Hashin–Shtrikman structures"
)]
pub struct Cli {
    /// JSON file with default parameters (unknown keys are rejected).
    #[arg(long, global = true, env = "HSDISP_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output path; written atomically. Standard output when absent.
    #[arg(long, global = true, env = "HSDISP_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, env = "HSDISP_EMIT")]
    pub emit: Option<Emit>,
    #[arg(long, global = true, env = "HSDISP_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "HSDISP_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equivalent conductivity and first-corrector coefficients.
    Homogenize(ProfileArgs),
    /// Second-corrector coefficients and the consistency of the 12-row system.
    Corrector(ProfileArgs),
    /// Dispersion coefficient of a ball packing.
    Dispersion(DispersionArgs),
    /// Build a ball packing of the flat torus.
    Pack(PackArgs),
    /// Truncated Apollonian estimate of the minimum of the dispersion functional.
    Minimize(MinimizeArgs),
    /// Run the oracle comparisons and write a report.
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Default)]
pub struct ProfileArgs {
    #[arg(long, env = "HSDISP_ALPHA")]
    pub alpha: Option<f64>,
    #[arg(long, env = "HSDISP_BETA")]
    pub beta: Option<f64>,
    #[arg(long, env = "HSDISP_THETA")]
    pub theta: Option<f64>,
    #[arg(long, env = "HSDISP_DIM")]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Packing file (JSON) supplying the radii.
    #[arg(long, env = "HSDISP_PACKING_FILE", conflicts_with = "apollonian")]
    pub packing_file: Option<PathBuf>,
    /// Build a greedy Apollonian packing with this many balls instead.
    #[arg(long, env = "HSDISP_APOLLONIAN")]
    pub apollonian: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct PackArgs {
    #[arg(long, env = "HSDISP_DIM")]
    pub dim: Option<usize>,
    #[arg(long, env = "HSDISP_MAX_BALLS")]
    pub max_balls: Option<usize>,
    #[arg(long, env = "HSDISP_MIN_RADIUS")]
    pub min_radius: Option<f64>,
    #[arg(long, env = "HSDISP_TARGET_COVERAGE")]
    pub target_coverage: Option<f64>,
    /// Search grid points per axis.
    #[arg(long, env = "HSDISP_GRID")]
    pub grid: Option<usize>,
    /// Polish grid maximizers to machine precision.
    #[arg(long, env = "HSDISP_REFINE")]
    pub refine: Option<bool>,
    /// apollonian or random-greedy.
    #[arg(long, env = "HSDISP_GENERATOR")]
    pub generator: Option<String>,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    #[arg(long, env = "HSDISP_DIM")]
    pub dim: Option<usize>,
    /// Number of Apollonian balls.
    #[arg(long, env = "HSDISP_BUDGET")]
    pub budget: Option<usize>,
    /// Where to write the radii table (CSV).
    #[arg(long, env = "HSDISP_RADII_FILE")]
    pub radii_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// all, material, corrector, dispersion, packing, minimizer or bloch.
    #[arg(long, env = "HSDISP_SUITE")]
    pub suite: Option<String>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub theta: Option<f64>,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub emit: Option<String>,
    pub search: Option<SearchSpec>,
    pub stop: Option<StopCriterion>,
    pub quad: Option<QuadSpec>,
    pub generator: Option<String>,
    pub packing_file: Option<PathBuf>,
    pub apollonian: Option<usize>,
    pub budget: Option<usize>,
    pub suite: Option<String>,
    pub validate: Option<ValidateOptions>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// A command's primary output.
struct Output {
    text: String,
    code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Self {
            text,
            code: EXIT_OK,
        }
    }
}

/// Parses the process arguments, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("hsdisp: {e}");
            ExitCode::from(if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_INTERNAL
            })
        }
    }
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli) -> Result<u8> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be positive"));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let emit = match (cli.emit, config.emit.as_deref()) {
        (Some(e), _) => e,
        (None, None) => Emit::Json,
        (None, Some(s)) => Emit::from_str(s, true)
            .map_err(|_| Error::invalid(format!("unknown emit format {s:?}")))?,
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let out = match cli.command {
        Command::Homogenize(a) => cmd_homogenize(&profile_from(&a, &config)?, emit)?,
        Command::Corrector(a) => cmd_corrector(&profile_from(&a, &config)?, emit)?,
        Command::Dispersion(a) => cmd_dispersion(&a, &config, emit)?,
        Command::Pack(a) => cmd_pack(&a, &config, emit, seed, cli.out.as_deref())?,
        Command::Minimize(a) => cmd_minimize(&a, &config, emit)?,
        Command::Validate(a) => cmd_validate(&a, &config, emit, seed)?,
    };
    match &cli.out {
        Some(path) => write_atomic(path, out.text.as_bytes())?,
        None => print!("{}", out.text),
    }
    Ok(out.code)
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| {
        Error::invalid(format!(
            "--{name} is required (flag, HSDISP_ variable or config key)"
        ))
    })
}

fn profile_from(a: &ProfileArgs, c: &RunConfig) -> Result<TwoPhaseProfile> {
    TwoPhaseProfile::new(
        required(a.alpha.or(c.alpha), "alpha")?,
        required(a.beta.or(c.beta), "beta")?,
        required(a.theta.or(c.theta), "theta")?,
        required(a.dim.or(c.dim), "dim")?,
    )
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Two-column name,value CSV.
fn pairs_csv(rows: &[(&str, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "value"])?;
    for (k, v) in rows {
        w.write_record([k.to_string(), format!("{v:.16e}")])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Serialize)]
struct HomogenizeRecord {
    profile: TwoPhaseProfile,
    m: f64,
    b1t: f64,
    b2t: f64,
    ct: f64,
    bounds: ConductivityBounds,
}

pub fn homogenize_record(profile: &TwoPhaseProfile) -> Result<String> {
    cmd_homogenize(profile, Emit::Json).map(|o| o.text)
}

fn cmd_homogenize(profile: &TwoPhaseProfile, emit: Emit) -> Result<Output> {
    let fc = first_corrector(profile)?;
    let bounds = conductivity_bounds(profile)?;
    let text = match emit {
        Emit::Json => json(&HomogenizeRecord {
            profile: *profile,
            m: fc.m,
            b1t: fc.b1t,
            b2t: fc.b2t,
            ct: fc.ct,
            bounds,
        })?,
        Emit::Csv => pairs_csv(&[
            ("m", fc.m),
            ("b1t", fc.b1t),
            ("b2t", fc.b2t),
            ("ct", fc.ct),
            ("harmonic", bounds.harmonic),
            ("arithmetic", bounds.arithmetic),
            ("hs_lower", bounds.hs_lower),
        ])?,
    };
    Ok(Output::ok(text))
}

#[derive(Debug, Serialize)]
struct CorrectorRecord {
    profile: TwoPhaseProfile,
    closed_form: SecondCorrector,
    regular: SecondCorrector,
    max_row_residual: f64,
    rank_matrix: usize,
    rank_augmented: usize,
    neumann_closed_form: [f64; 2],
    neumann_regular: [f64; 2],
}

fn cmd_corrector(profile: &TwoPhaseProfile, emit: Emit) -> Result<Output> {
    let fc = first_corrector(profile)?;
    let closed = solve_closed_form(&fc, profile)?;
    let regular = solve_regular(&fc, profile)?;
    let sys = assemble_system(&fc, profile)?;
    let (ra, rb) = sys.ranks();
    let nc = neumann_residual(&closed, profile);
    let nr = neumann_residual(&regular, profile);
    let text = match emit {
        Emit::Json => json(&CorrectorRecord {
            profile: *profile,
            closed_form: closed,
            regular,
            max_row_residual: sys.max_abs_residual(&closed),
            rank_matrix: ra,
            rank_augmented: rb,
            neumann_closed_form: [nc.0, nc.1],
            neumann_regular: [nr.0, nr.1],
        })?,
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["coefficient", "closed_form", "regular"])?;
            for (i, name) in crate::corrector::UNKNOWN_LABELS.iter().enumerate() {
                w.write_record([
                    name.to_string(),
                    format!("{:.16e}", closed.unknowns()[i]),
                    format!("{:.16e}", regular.unknowns()[i]),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            String::from_utf8(bytes).expect("csv output is utf-8")
        }
    };
    Ok(Output::ok(text))
}

#[derive(Debug, Serialize)]
struct DispersionOutput {
    profile: TwoPhaseProfile,
    m: f64,
    d_phs: f64,
    sum_radii_n2: f64,
    cell_volume: f64,
    j_value: f64,
    quad_error: f64,
    balls: usize,
    generator: &'static str,
}

fn cmd_dispersion(a: &DispersionArgs, c: &RunConfig, emit: Emit) -> Result<Output> {
    let profile = profile_from(&a.profile, c)?;
    let file = a.packing_file.clone().or_else(|| c.packing_file.clone());
    let budget = a.apollonian.or(c.apollonian);
    let packing = match (file, budget) {
        (Some(path), None) => load_packing(path)?,
        (None, Some(n)) => {
            let stop = StopCriterion {
                max_balls: Some(n),
                ..Default::default()
            };
            greedy_apollonian(profile.dim, &stop, &c.search.unwrap_or_default())?
        }
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "give either --packing-file or --apollonian, not both",
            ))
        }
        (None, None) => return Err(Error::invalid("--packing-file or --apollonian is required")),
    };
    if packing.dim() != profile.dim {
        return Err(Error::MixedDimension {
            expected: profile.dim,
            found: packing.dim(),
        });
    }
    let density = density_for(&profile, &c.quad.unwrap_or_default())?;
    let res: DispersionResult = dispersion_phs(&density, &packing.radii(), profile.dim)?;
    let m = first_corrector(&profile)?.m;
    let text = match emit {
        Emit::Json => json(&DispersionOutput {
            profile,
            m,
            d_phs: res.d_phs,
            sum_radii_n2: res.sum_radii_n2,
            cell_volume: res.cell_volume,
            j_value: res.density.j_value,
            quad_error: res.density.quad_error,
            balls: packing.len(),
            generator: packing.generator().as_str(),
        })?,
        Emit::Csv => sweep_csv(&[(profile, m, res)])?,
    };
    Ok(Output::ok(text))
}

fn packing_text(p: &BallPacking, emit: Emit) -> Result<String> {
    match emit {
        Emit::Json => Ok(to_json_string(p)),
        Emit::Csv => radii_csv(p),
    }
}

fn cmd_pack(
    a: &PackArgs,
    c: &RunConfig,
    emit: Emit,
    seed: u64,
    out: Option<&Path>,
) -> Result<Output> {
    let dim = required(a.dim.or(c.dim), "dim")?;
    let base = c.stop.unwrap_or_default();
    let stop = StopCriterion {
        max_balls: a.max_balls.or(base.max_balls),
        min_radius: a.min_radius.or(base.min_radius),
        target_coverage: a.target_coverage.or(base.target_coverage),
    };
    let mut spec = c.search.unwrap_or_default();
    if let Some(g) = a.grid {
        spec.grid = Some(g);
    }
    if let Some(r) = a.refine {
        spec.refine = r;
    }
    let generator = a
        .generator
        .as_deref()
        .or(c.generator.as_deref())
        .unwrap_or("apollonian");
    let built = match Generator::parse(generator) {
        Some(Generator::Apollonian) => greedy_apollonian(dim, &stop, &spec),
        Some(Generator::RandomGreedy) => random_greedy(dim, &stop, &spec, seed),
        _ => {
            return Err(Error::invalid(format!(
                "unknown generator {generator:?} (apollonian or random-greedy)"
            )))
        }
    };
    match built {
        Ok(p) => Ok(Output::ok(packing_text(&p, emit)?)),
        Err(Error::SearchBudgetExceeded { partial }) => {
            // keep what was built, but report the failure
            let text = packing_text(&partial, emit)?;
            match out {
                Some(path) => write_atomic(path, text.as_bytes())?,
                None => print!("{text}"),
            }
            Err(Error::SearchBudgetExceeded { partial })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Serialize)]
struct MinimizeRecord {
    dim: usize,
    budget: usize,
    i_lower: f64,
    i_upper: f64,
    radii_file: Option<String>,
    coverage: f64,
    deficit: f64,
}

fn cmd_minimize(a: &MinimizeArgs, c: &RunConfig, emit: Emit) -> Result<Output> {
    let dim = required(a.dim.or(c.dim), "dim")?;
    let budget = required(a.budget.or(c.budget), "budget")?;
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!(
            "minimize supports N in 1..=3, got {dim}"
        )));
    }
    if budget == 0 {
        return Err(Error::invalid("--budget must be positive"));
    }
    let stop = StopCriterion {
        max_balls: Some(budget),
        ..Default::default()
    };
    let packing = greedy_apollonian(dim, &stop, &c.search.unwrap_or_default())?;
    if let Some(path) = &a.radii_file {
        write_atomic(path, radii_csv(&packing)?.as_bytes())?;
    }
    let m = minimum_from_packing(packing)?;
    let rec = MinimizeRecord {
        dim,
        budget,
        i_lower: m.i_lower,
        i_upper: m.i_upper,
        radii_file: a.radii_file.as_ref().map(|p| p.display().to_string()),
        coverage: m.coverage,
        deficit: m.deficit,
    };
    let text = match emit {
        Emit::Json => json(&rec)?,
        Emit::Csv => {
            let mut s = String::from("dim,budget,i_lower,i_upper,coverage,deficit,radii_file\n");
            let _ = writeln!(
                s,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                rec.dim,
                rec.budget,
                rec.i_lower,
                rec.i_upper,
                rec.coverage,
                rec.deficit,
                rec.radii_file.as_deref().unwrap_or("")
            );
            s
        }
    };
    Ok(Output::ok(text))
}

fn cmd_validate(a: &ValidateArgs, c: &RunConfig, emit: Emit, seed: u64) -> Result<Output> {
    let name = a.suite.as_deref().or(c.suite.as_deref()).unwrap_or("all");
    let suite = Suite::parse(name).ok_or_else(|| {
        Error::invalid(format!(
            "unknown suite {name:?}; expected one of {:?}",
            Suite::NAMES
        ))
    })?;
    let report = run_validation(suite, seed, &c.validate.unwrap_or_default())?;
    for f in report.failures() {
        eprintln!(
            "hsdisp: check failed: {}.{} (error {:e}, tolerance {:e})",
            f.suite, f.name, f.error, f.tolerance
        );
    }
    let text = match emit {
        Emit::Json => report.to_json()?,
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "suite",
                "name",
                "value",
                "reference",
                "error",
                "tolerance",
                "passed",
            ])?;
            for ch in &report.checks {
                w.write_record([
                    ch.suite.to_string(),
                    ch.name.clone(),
                    format!("{:.16e}", ch.value),
                    ch.reference
                        .map(|r| format!("{r:.16e}"))
                        .unwrap_or_default(),
                    format!("{:.16e}", ch.error),
                    format!("{:.16e}", ch.tolerance),
                    ch.passed.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            String::from_utf8(bytes).expect("csv output is utf-8")
        }
    };
    Ok(Output {
        text,
        code: if report.passed {
            EXIT_OK
        } else {
            EXIT_VALIDATION
        },
    })
}
