//! `isodeform`: build, sample, classify and test planar deformations.
//!
//! Exit codes: 0 pass, 1 test failed, 2 input error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use isodeform::analysis::{self, PolarGrid, Scheme};
use isodeform::config::{ExperimentConfig, GeometryConfig, MapConfig};
use isodeform::euler::{euler_characteristic, BinaryGrid};
use isodeform::experiment::{deformed_excursion, weak_isotropy_test};
use isodeform::field::sample_field;
use isodeform::geometry::rotation_invariance_report;
use isodeform::polar_map::{PolarMap, SampledMap};
use isodeform::profile::RadialProfile;
use isodeform::spiral::{build_spiral, SpiralSpec};
use isodeform::Error;

#[derive(Parser, Debug)]
#[command(name = "isodeform", version, about = "Isotropy-preserving planar deformations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the spiral of a spec file, write it as a sampled polar map and print the validation report.
    Build(BuildArgs),
    /// Sample any map (builtin name, linear matrix or spiral spec, as JSON) into a polar map file.
    Sample(SampleArgs),
    /// Decide whether a sampled polar map is a spiral.
    Classify(ClassifyArgs),
    /// Residuals of the f, g, h equations for a sampled map against a profile.
    Residuals(ResidualArgs),
    /// Rotation invariance of pushforward areas and lengths.
    Geometry(GeometryArgs),
    /// Monte Carlo weak-isotropy test of Euler characteristics.
    Isotropy(IsotropyArgs),
    /// Euler characteristic of a mask (binary PGM, or rows of `#` and `.`).
    Euler(EulerArgs),
    /// Print the manual page (roff) generated from these flags.
    Manual,
}

#[derive(Args, Debug)]
struct Output {
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Radii in the lattice.
    #[arg(long, default_value_t = 64)]
    nr: usize,
    /// Angles per radius.
    #[arg(long, default_value_t = 64)]
    ntheta: usize,
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Spiral spec (JSON with eps1, eps2, theta0, profile).
    #[arg(long = "config", alias = "spec")]
    config: PathBuf,
    /// Polar map file to write.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the validation report (default stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Samples are taken at nr uniform radii on [0, r_max].
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// JSON map description: "identity", {"linear": [[a, b], [c, d]]} or a spiral spec.
    #[arg(long)]
    map: String,
    /// Outer radius of the samples (capped at the map's own r_max).
    #[arg(long, default_value_t = 2.0)]
    r_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Polar map file.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// analytic | central-difference[:step]
    #[arg(long, default_value = "central-difference:1e-5")]
    scheme: String,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ResidualArgs {
    /// Polar map file.
    #[arg(long)]
    map: PathBuf,
    /// Profile file (`profile v1`).
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value = "central-difference:1e-5")]
    scheme: String,
    /// Pass iff the largest residual is at most this.
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct GeometryArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct IsotropyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: config value, then available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for PGM dumps of the first replicate's mask per level and rotation.
    #[arg(long)]
    dump_masks: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EulerArgs {
    #[arg(long)]
    mask: PathBuf,
    #[command(flatten)]
    output: Output,
}

/// Input errors exit with 2.
#[derive(Debug)]
struct InputError(String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

impl From<io::Error> for InputError {
    fn from(e: io::Error) -> Self {
        InputError(e.to_string())
    }
}

impl From<serde_json::Error> for InputError {
    fn from(e: serde_json::Error) -> Self {
        InputError(e.to_string())
    }
}

type Outcome = Result<bool, InputError>;

fn read_text(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), InputError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| InputError(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, InputError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn uniform_radii(r_max: f64, nr: usize) -> Vec<f64> {
    (0..nr).map(|i| r_max * i as f64 / (nr - 1) as f64).collect()
}

fn check_grid(grid: &GridArgs) -> Result<(), InputError> {
    if grid.nr < 2 || grid.ntheta < 4 {
        return Err(InputError("need --nr ≥ 2 and --ntheta ≥ 4".into()));
    }
    Ok(())
}

fn cmd_build(args: &BuildArgs) -> Outcome {
    check_grid(&args.grid)?;
    let spec = SpiralSpec::from_json(&read_text(&args.config)?)?;
    let report_out = args.report.as_deref();
    let map = match build_spiral(&spec) {
        Ok(m) => m,
        Err(Error::Validation(report)) => {
            emit(report_out, &to_json(&report)?)?;
            return Err(InputError(format!("profile is invalid: {}", report.summary())));
        }
        Err(e) => return Err(e.into()),
    };
    let angles = analysis::uniform_angles(args.grid.ntheta);
    let text = SampledMap::write(&map, &uniform_radii(spec.profile.r_max(), args.grid.nr), &angles);
    emit(Some(&args.out), &text)?;
    let report = isodeform::validate_profile(
        &spec.profile,
        &isodeform::profile::uniform_grid(spec.profile.r_max(), 256),
        spec.profile.tolerance(),
    )?;
    emit(report_out, &to_json(&report)?)?;
    Ok(report.passed)
}

fn cmd_sample(args: &SampleArgs) -> Outcome {
    check_grid(&args.grid)?;
    let cfg: MapConfig =
        serde_json::from_str(&args.map).or_else(|_| serde_json::from_str(&format!("\"{}\"", args.map)))?;
    let map = cfg.build()?;
    let r_max = args.r_max.min(map.polar().r_max());
    if r_max.is_nan() || r_max <= 0.0 {
        return Err(InputError("--r-max must be positive".into()));
    }
    let angles = analysis::uniform_angles(args.grid.ntheta);
    let text = SampledMap::write(map.polar(), &uniform_radii(r_max, args.grid.nr), &angles);
    emit(args.out.as_deref(), &text)?;
    Ok(true)
}

fn load_sampled(path: &Path) -> Result<PolarMap, InputError> {
    Ok(PolarMap::from_samples(SampledMap::parse(&read_text(path)?)?))
}

fn analysis_grid(map: &PolarMap, grid: &GridArgs) -> PolarGrid {
    let r_max = map.r_max();
    let lo = (0.05 * r_max).max(map.r_min());
    PolarGrid::geometric(lo, 0.95 * r_max, grid.nr, grid.ntheta)
}

fn cmd_classify(args: &ClassifyArgs) -> Outcome {
    check_grid(&args.grid)?;
    let scheme: Scheme = args.scheme.parse()?;
    let map = load_sampled(&args.map)?;
    let verdict = analysis::classify_spiral(&map, &analysis_grid(&map, &args.grid), scheme, args.tol)?;
    emit(args.output.out.as_deref(), &to_json(&verdict)?)?;
    if !verdict.is_spiral {
        eprintln!(
            "not a spiral: R radiality {:.3e}, angle radiality {:.3e}, winding {}",
            verdict.diagnostics.radius_radiality, verdict.diagnostics.angle_radiality, verdict.diagnostics.winding
        );
    }
    Ok(verdict.is_spiral)
}

fn cmd_residuals(args: &ResidualArgs) -> Outcome {
    check_grid(&args.grid)?;
    let scheme: Scheme = args.scheme.parse()?;
    let map = load_sampled(&args.map)?;
    let profile = RadialProfile::parse(&read_text(&args.profile)?)?;
    let res = analysis::fgh_residuals(&map, &profile, &analysis_grid(&map, &args.grid), scheme)?;
    #[derive(Serialize)]
    struct Out<'a> {
        residuals: &'a analysis::FghResiduals,
        max: f64,
        threshold: f64,
        pass: bool,
    }
    let pass = res.max() <= args.threshold;
    let out = Out {
        residuals: &res,
        max: res.max(),
        threshold: args.threshold,
        pass,
    };
    emit(args.output.out.as_deref(), &to_json(&out)?)?;
    Ok(pass)
}

fn cmd_geometry(args: &GeometryArgs) -> Outcome {
    let cfg = GeometryConfig::load(&args.config)?;
    let map = cfg.map.build()?;
    let rotations = cfg.rotations.angles();
    let reports = cfg
        .shapes
        .iter()
        .map(|s| rotation_invariance_report(&map, s, &rotations, cfg.n, cfg.tol_rel))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                pass: bool,
                reports: &'a [isodeform::geometry::InvarianceReport],
            }
            to_json(&Out {
                pass,
                reports: &reports,
            })?
        }
        Format::Csv => {
            let mut s = String::from("shape,rotation,value,rel_spread,pass\n");
            for (i, r) in reports.iter().enumerate() {
                for (phi, v) in r.rotations.iter().zip(&r.values) {
                    s.push_str(&format!("{i},{phi},{v},{},{}\n", r.rel_spread, r.pass));
                }
            }
            s
        }
    };
    emit(args.output.out.as_deref(), &text)?;
    Ok(pass)
}

fn cmd_isotropy(args: &IsotropyArgs) -> Outcome {
    let cfg = ExperimentConfig::load(&args.config)?;
    let spec = cfg.field.spec()?;
    let map = cfg.map.build()?;
    let workers = args
        .workers
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = weak_isotropy_test(
        &spec,
        &map,
        &cfg.rect,
        &cfg.levels,
        &cfg.rotations,
        cfg.replicates,
        cfg.resolution,
        workers,
    )?;
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&report)?,
    };
    emit(args.output.out.as_deref(), &text)?;
    if let Some(dir) = &args.dump_masks {
        fs::create_dir_all(dir)?;
        for (k, &phi) in cfg.rotations.iter().enumerate() {
            let sample = sample_field(&spec, (k * cfg.replicates) as u64)?;
            for (l, &u) in cfg.levels.iter().enumerate() {
                let mask = deformed_excursion(&sample, &map, &cfg.rect, phi, u, cfg.resolution)?;
                let file = fs::File::create(dir.join(format!("mask_u{l}_rot{k}.pgm")))?;
                mask.write_pgm(io::BufWriter::new(file))?;
            }
        }
    }
    eprintln!(
        "{{\"transform-id\": {:?}, \"pass\": {}, \"max_abs_z\": {}}}",
        report.transform_id, report.pass, report.max_abs_z
    );
    Ok(report.pass)
}

fn cmd_euler(args: &EulerArgs) -> Outcome {
    let bytes = fs::read(&args.mask).map_err(|e| InputError(format!("{}: {e}", args.mask.display())))?;
    let grid = if bytes.starts_with(b"P5") {
        BinaryGrid::read_pgm(&bytes)?
    } else {
        let text = String::from_utf8(bytes).map_err(|_| InputError("mask is neither PGM nor text".into()))?;
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        BinaryGrid::from_rows(&rows)?
    };
    let chi = euler_characteristic(&grid);
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => format!(
            "{{\"euler\": {chi}, \"width\": {}, \"height\": {}, \"true_pixels\": {}}}\n",
            grid.width(),
            grid.height(),
            grid.count()
        ),
        Format::Csv => format!(
            "euler,width,height,true_pixels\n{chi},{},{},{}\n",
            grid.width(),
            grid.height(),
            grid.count()
        ),
    };
    emit(args.output.out.as_deref(), &text)?;
    Ok(true)
}

fn cmd_manual() -> Outcome {
    clap_mangen::Man::new(Cli::command()).render(&mut io::stdout())?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Residuals(a) => cmd_residuals(a),
        Command::Geometry(a) => cmd_geometry(a),
        Command::Isotropy(a) => cmd_isotropy(a),
        Command::Euler(a) => cmd_euler(a),
        Command::Manual => cmd_manual(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
