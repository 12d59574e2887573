//! Command-line front end: configuration ingestion, subcommands and
//! machine-readable reports.

mod config;

pub use config::{emit_config, parse_config, ConfigError, GridSpec, Outputs, QuadratureOverrides, RunConfig};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

use crate::boundary::{
    classify_approximable, extension_reference_params, probe_extension, BoundaryError, NuParams, ProbeOptions,
};
use crate::flux::{
    count_zero_modes, format_rational, parse_rational, total_flux, ExtensionKind, FieldConfig, FluxError,
    Rational, Solenoid, Spin,
};
use crate::numerics::{modes_for, verify_configuration, NumericsError, QuadratureSpec, VerifyOptions};
use crate::potential::PotentialEvaluator;
use crate::zero_modes::{evaluate_mode, ZeroMode};

#[derive(Debug, Parser)]
#[command(name = "pauli-zero-modes", version, about = "Zero modes of the 2D Pauli operator with Aharonov-Bohm solenoids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count zero modes for an extension.
    Count(CommonArgs),
    /// Emit a symbolic basis of the Maximal kernel, optionally sampled on a grid.
    Modes(ModesArgs),
    /// Run residual, L², Gram, gauge and sign-flip checks.
    Verify(CommonArgs),
    /// Measure the boundary parameters at a single solenoid and classify approximability.
    Classify(ClassifyArgs),
    /// Sample h, e^h and e^-h on a grid.
    Potential(CommonArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_extension)]
    pub extension: Option<ExtensionKind>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sampling grid as NX,NY,EXTENT.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Kernel-residual threshold (verify) or coefficient agreement tolerance (classify).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub radii_scale: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// File for the sampled grid table.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Solenoid intensity as p/q; taken from the configuration's single solenoid when absent.
    #[arg(long, value_parser = parse_rational)]
    pub alpha: Option<Rational>,
}

fn parse_extension(s: &str) -> Result<ExtensionKind, String> {
    s.parse()
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    /// Main document, written to `--out` or standard output.
    pub document: String,
    /// Secondary table and where it goes.
    pub table: Option<(PathBuf, String)>,
    /// False when a verification or classification check failed.
    pub success: bool,
}

fn load(args: &CommonArgs) -> Result<RunConfig, CliError> {
    match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            Ok(parse_config(&text)?)
        }
        None => Ok(RunConfig::from_field(FieldConfig::empty())),
    }
}

fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn complex_list(values: &[Complex64]) -> Value {
    Value::Array(values.iter().map(|c| json!([c.re, c.im])).collect())
}

fn na_or(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:e}"),
        None => "NA".into(),
    }
}

fn near_solenoid(z: Complex64, field: &FieldConfig, radius: f64) -> bool {
    field.positions().iter().any(|p| (z - p).norm() < radius)
}

/// `count`: zero-mode dimensions for one extension.
pub fn cmd_count(config: &RunConfig, kind: ExtensionKind) -> Result<CommandOutput, CliError> {
    let counts = count_zero_modes(&config.field, kind)?;
    let doc = json!({
        "phi0": format_rational(config.field.bump_flux()),
        "phi": format_rational(total_flux(&config.field)),
        "n": config.field.n(),
        "kind": kind,
        "spin_up": counts.spin_up,
        "spin_down": counts.spin_down,
        "total": counts.total(),
    });
    Ok(CommandOutput {
        document: pretty(&doc),
        table: None,
        success: true,
    })
}

fn mode_document(index: usize, mode: &ZeroMode) -> Result<Value, CliError> {
    Ok(json!({
        "index": index,
        "spin": mode.spin(),
        "pole_coeffs": complex_list(mode.pole_coeffs()),
        "poly_coeffs": complex_list(mode.poly_coeffs()),
        "gauge": mode.gauge(),
        "factored": mode.is_factored(),
        "tail_exponent": format_rational(mode.tail_exponent().map_err(NumericsError::from)?),
        "local_exponents": mode.local_exponents().iter().map(|e| format_rational(*e)).collect::<Vec<_>>(),
    }))
}

/// Long-format table: one row per grid point per mode.
pub fn modes_table(modes: &[ZeroMode], field: &FieldConfig, grid: &GridSpec) -> Result<String, CliError> {
    let evaluator = PotentialEvaluator::new(field);
    let mut out = String::from("mode,x,y,re_psi_up,im_psi_up,re_psi_down,im_psi_down\n");
    for (index, mode) in modes.iter().enumerate() {
        for z in grid.points() {
            let value = if near_solenoid(z, field, grid.exclusion.max(f64::MIN_POSITIVE)) {
                None
            } else {
                Some(evaluate_mode(mode, &evaluator, z).map_err(NumericsError::from)?)
            };
            let (up, down) = match (mode.spin(), value) {
                (_, None) => (None, None),
                (Spin::Up, Some(v)) => (Some(v), Some(Complex64::default())),
                (Spin::Down, Some(v)) => (Some(Complex64::default()), Some(v)),
            };
            let _ = writeln!(
                out,
                "{index},{:e},{:e},{},{},{},{}",
                z.re,
                z.im,
                na_or(up.map(|v| v.re)),
                na_or(up.map(|v| v.im)),
                na_or(down.map(|v| v.re)),
                na_or(down.map(|v| v.im)),
            );
        }
    }
    Ok(out)
}

/// `modes`: symbolic Maximal basis, plus a sampled table when a grid and destination are given.
pub fn cmd_modes(config: &RunConfig, table_path: Option<PathBuf>) -> Result<CommandOutput, CliError> {
    let field = &config.field;
    let modes = modes_for(field)?;
    let counts = count_zero_modes(field, ExtensionKind::Maximal)?;
    let docs = modes
        .iter()
        .enumerate()
        .map(|(i, m)| mode_document(i, m))
        .collect::<Result<Vec<_>, _>>()?;
    let doc = json!({
        "phi0": format_rational(field.bump_flux()),
        "phi": format_rational(total_flux(field)),
        "n": field.n(),
        "kind": ExtensionKind::Maximal,
        "spin_up": counts.spin_up,
        "spin_down": counts.spin_down,
        "modes": docs,
    });
    let table = match (config.grid, table_path.or_else(|| config.outputs.table.clone())) {
        (Some(grid), Some(path)) => Some((path, modes_table(&modes, field, &grid)?)),
        (None, Some(_)) => return Err(CliError::Usage("a table needs --grid NX,NY,EXTENT".into())),
        _ => None,
    };
    Ok(CommandOutput {
        document: pretty(&doc),
        table,
        success: true,
    })
}

fn quadrature_for(config: &RunConfig) -> Option<QuadratureSpec> {
    let q = &config.quadrature;
    if q.is_empty() {
        return None;
    }
    let evaluator = PotentialEvaluator::new(&config.field);
    let mut spec = QuadratureSpec::for_positions(evaluator.positions(), evaluator.extent());
    if let Some(eps) = q.inner_radius {
        spec.inner_radii = vec![eps; config.field.n()];
    }
    if let Some(r) = q.outer_radius {
        spec.outer_radius = r;
    }
    if let Some(p) = q.radial_panels {
        spec.radial_panels = p;
    }
    if let Some(p) = q.angular_panels {
        spec.angular_panels = p;
    }
    if let Some(p) = q.order {
        spec.order = p;
    }
    Some(spec)
}

/// `verify`: the full invariant suite; fails when any check fails.
pub fn cmd_verify(config: &RunConfig, kind: ExtensionKind, seed: u64, tol: Option<f64>) -> Result<CommandOutput, CliError> {
    let mut thresholds = config.thresholds.clone();
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
        thresholds.kernel_residual = t;
    }
    let options = VerifyOptions {
        thresholds,
        seed,
        extension: kind,
        quadrature: quadrature_for(config),
        ..VerifyOptions::default()
    };
    let report = verify_configuration(&config.field, &options)?;
    Ok(CommandOutput {
        document: pretty(&report),
        table: None,
        success: report.pass,
    })
}

#[derive(Serialize)]
struct SpinClassification {
    spin: Spin,
    measured: NuParams,
    reference: NuParams,
    approximable: bool,
    reference_approximable: bool,
    matches: bool,
}

/// `classify`: probe both spins at a single solenoid of intensity `alpha`.
pub fn cmd_classify(
    alpha: Rational,
    kind: ExtensionKind,
    tol: Option<f64>,
    radii_scale: Option<f64>,
) -> Result<CommandOutput, CliError> {
    let tol = tol.unwrap_or(1e-4);
    let mut options = ProbeOptions::default();
    if let Some(s) = radii_scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!("--radii-scale must be positive, got {s}")));
        }
        options.radii_scale = s;
    }
    // Validate the range before building a probe configuration.
    extension_reference_params(kind, Spin::Up, alpha)?;
    let field = FieldConfig::new(vec![], vec![Solenoid::new(Complex64::default(), alpha)?])?;
    let evaluator = PotentialEvaluator::new(&field);
    let mut spins = Vec::new();
    for spin in [Spin::Up, Spin::Down] {
        let reference = extension_reference_params(kind, spin, alpha)?;
        let measured = probe_extension(kind, spin, alpha, &evaluator, &options)?.nu;
        spins.push(SpinClassification {
            spin,
            measured,
            reference,
            approximable: classify_approximable(&measured),
            reference_approximable: classify_approximable(&reference),
            matches: measured.approx_eq(&reference, tol),
        });
    }
    let success = spins.iter().all(|s| s.matches);
    let doc = json!({
        "alpha": format_rational(alpha),
        "kind": kind,
        "spins": spins,
        "pass": success,
    });
    Ok(CommandOutput {
        document: pretty(&doc),
        table: None,
        success,
    })
}

/// `potential`: table of `h`, `e^h`, `e^{-h}` with singular points missing.
pub fn cmd_potential(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let grid = config
        .grid
        .ok_or_else(|| CliError::Usage("potential needs --grid NX,NY,EXTENT".into()))?;
    let evaluator = PotentialEvaluator::new(&config.field);
    let mut out = String::from("x,y,h,exp_h,exp_minus_h\n");
    for z in grid.points() {
        let h = if near_solenoid(z, &config.field, grid.exclusion) {
            None
        } else {
            evaluator.eval_h(z).ok()
        };
        let _ = writeln!(
            out,
            "{:e},{:e},{},{},{}",
            z.re,
            z.im,
            na_or(h),
            na_or(h.map(f64::exp)),
            na_or(h.map(|h| (-h).exp())),
        );
    }
    Ok(CommandOutput {
        document: out,
        table: None,
        success: true,
    })
}

fn with_grid(mut config: RunConfig, args: &CommonArgs) -> RunConfig {
    if let Some(g) = args.grid {
        config.grid = Some(GridSpec {
            exclusion: config.grid.map_or(g.exclusion, |c| c.exclusion),
            ..g
        });
    }
    config
}

fn out_path(config: &RunConfig, args: &CommonArgs) -> Option<PathBuf> {
    args.out.clone().or_else(|| config.outputs.report.clone())
}

/// Runs one parsed command line, returning the output and where the main document goes.
pub fn run(cli: &Cli) -> Result<(CommandOutput, Option<PathBuf>), CliError> {
    match &cli.command {
        Command::Count(args) => {
            let config = load(args)?;
            let kind = args.extension.or(config.extension).unwrap_or(ExtensionKind::Maximal);
            Ok((cmd_count(&config, kind)?, out_path(&config, args)))
        }
        Command::Modes(args) => {
            let config = with_grid(load(&args.common)?, &args.common);
            Ok((cmd_modes(&config, args.table.clone())?, out_path(&config, &args.common)))
        }
        Command::Verify(args) => {
            let config = load(args)?;
            let kind = args.extension.or(config.extension).unwrap_or(ExtensionKind::Maximal);
            Ok((cmd_verify(&config, kind, args.seed, args.tol)?, out_path(&config, args)))
        }
        Command::Classify(args) => {
            let common = &args.common;
            let kind = common.extension.unwrap_or(ExtensionKind::Maximal);
            let (alpha, out) = match args.alpha {
                Some(a) => (a, common.out.clone()),
                None => {
                    let config = load(common)?;
                    let kind_alpha = match config.field.solenoids() {
                        [s] => s.intensity(),
                        _ => {
                            return Err(CliError::Usage(
                                "classify needs --alpha or a configuration with exactly one solenoid".into(),
                            ))
                        }
                    };
                    (kind_alpha, out_path(&config, common))
                }
            };
            Ok((cmd_classify(alpha, kind, common.tol, common.radii_scale)?, out))
        }
        Command::Potential(args) => {
            let config = with_grid(load(args)?, args);
            Ok((cmd_potential(&config)?, args.out.clone().or_else(|| config.outputs.table.clone())))
        }
    }
}

/// Writes the outputs of [`run`].
pub fn write_outputs(output: &CommandOutput, out: Option<&PathBuf>) -> Result<(), CliError> {
    let write = |path: &PathBuf, text: &str| {
        std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })
    };
    match out {
        Some(path) => write(path, &output.document)?,
        None => print!("{}", output.document),
    }
    if let Some((path, text)) = &output.table {
        write(path, text)?;
    }
    Ok(())
}
