//! `bandjost`: discrete spectra of complex banded operators.
//!
//! Subcommands: `analyze` (semi-infinite operator JSON), `periodic`
//! (periodic Jacobi background, optionally perturbed), `generate` (test
//! families), `double` (doubly-infinite to semi-infinite JSON).
//!
//! Exit codes: 0 success, 1 numerical failure, 2 input error,
//! 3 unsupported configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bandjost_core::error::Error as CoreError;
use bandjost_core::generators;
use bandjost_core::json;
use bandjost_core::oracle;
use bandjost_core::periodic::{self, AsymptoticConfig};
use bandjost_core::pipeline::{analyze_operator, AnalysisConfig};
use bandjost_core::spectrum::{ContourConfig, EnclosureOutcome};
use bandjost_core::C64;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "bandjost", version, about = "Discrete spectra of complex banded operators")]
struct Cli {
    /// Worker threads for cell scans and oracle solves (default: all
    /// cores). Output does not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Serialize)]
struct AnalysisFlags {
    /// Jost evaluation tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Stand-off from the unit circle: search |z| <= 1 - edge-delta.
    #[arg(long = "edge-delta", default_value_t = 1e-2)]
    edge_delta: f64,
    /// Exclusion radius around z = ±1.
    #[arg(long = "exclusion-eps", default_value_t = 1e-3)]
    exclusion_eps: f64,
    /// Initial Taylor truncation order.
    #[arg(long, default_value_t = 64)]
    jmax: usize,
    /// Finite-section sizes for the oracle cross-check.
    #[arg(long, value_delimiter = ',')]
    oracle: Vec<usize>,
}

impl AnalysisFlags {
    fn to_config(&self) -> AnalysisConfig {
        AnalysisConfig {
            tol: self.tol,
            contour: ContourConfig {
                edge_delta: self.edge_delta,
                exclusion_eps: self.exclusion_eps,
                ..ContourConfig::default()
            },
            jmax: self.jmax,
            oracle_sizes: self.oracle.clone(),
            ..AnalysisConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a semi-infinite operator description.
    Analyze {
        /// Operator JSON file.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        flags: AnalysisFlags,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail (exit 3) when no enclosure verdict is available.
        #[arg(long = "require-enclosure")]
        require_enclosure: bool,
        /// Dump |γ| over a z-grid to this CSV file.
        #[arg(long = "gamma-csv")]
        gamma_csv: Option<PathBuf>,
        /// Grid resolution per axis for --gamma-csv.
        #[arg(long = "gamma-grid", default_value_t = 81)]
        gamma_grid: usize,
        /// Dump finite-section eigenvalues per N to this CSV file
        /// (requires --oracle).
        #[arg(long = "oracle-csv")]
        oracle_csv: Option<PathBuf>,
    },
    /// Arcs and discrete spectrum of (asymptotically) periodic Jacobi
    /// matrices.
    Periodic {
        /// Background JSON file (optionally with a perturbation block).
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        flags: AnalysisFlags,
        /// Arc sampling resolution.
        #[arg(long, default_value_t = 256)]
        arcs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct test-family operators.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
    /// Re-index a doubly-infinite operator into a semi-infinite one of
    /// twice the order.
    Double {
        /// Doubly-infinite operator JSON file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Random operator in the decay class q_n <= C1 exp(-C2 n^beta).
    Class {
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interleave p Jacobi matrices into a p-banded operator.
    Interleave {
        /// JSON file with { "jacobis": [ { "diag": [...], "off": [...] } ] }.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slowly decaying oscillatory Jacobi diagonal resonant at nu.
    SlowDecay {
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 0.9)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.45)]
        exponent: f64,
        #[arg(long, default_value_t = 400)]
        sites: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Execution knob only; reports never depend on it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bandjost: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::Input(_)
        | CoreError::InvalidOperator(_)
        | CoreError::InvalidArgument(_) => 2,
        CoreError::NotQuasiSymmetric { .. }
        | CoreError::QTooLarge { .. }
        | CoreError::TailUnavailable(_)
        | CoreError::DivergentMoment { .. } => 3,
        CoreError::KernelPole(_)
        | CoreError::RouteUnavailable { .. }
        | CoreError::NonConvergentMajorant { .. }
        | CoreError::HorizonTooSmall { .. }
        | CoreError::EigenNonConvergence { .. }
        | CoreError::Inconsistency(_) => 1,
    }
}

fn read_input(path: &Path) -> Result<String, CoreError> {
    std::fs::read_to_string(path)
        .map_err(|e| CoreError::Input(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CoreError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CoreError::Inconsistency(format!("writing {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_pretty<T: Serialize>(doc: &T) -> Result<String, CoreError> {
    serde_json::to_string_pretty(doc)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CoreError::Inconsistency(format!("serializing report: {e}")))
}

/// Full resolved configuration echoed into every report (threads excluded:
/// it cannot change any reported value).
#[derive(Serialize)]
struct ResolvedConfig {
    tol: f64,
    edge_delta: f64,
    exclusion_eps: f64,
    jmax: usize,
    oracle: Vec<usize>,
}

impl ResolvedConfig {
    fn from_flags(flags: &AnalysisFlags) -> Self {
        ResolvedConfig {
            tol: flags.tol,
            edge_delta: flags.edge_delta,
            exclusion_eps: flags.exclusion_eps,
            jmax: flags.jmax,
            oracle: flags.oracle.clone(),
        }
    }
}

#[derive(Serialize)]
struct Document<T: Serialize> {
    version: &'static str,
    command: &'static str,
    config: ResolvedConfig,
    #[serde(flatten)]
    body: T,
}

fn run(command: Command) -> Result<(), CoreError> {
    match command {
        Command::Analyze {
            input,
            flags,
            out,
            require_enclosure,
            gamma_csv,
            gamma_grid,
            oracle_csv,
        } => {
            let op = json::operator_from_json(&read_input(&input)?)?;
            let cfg = flags.to_config();
            let report = analyze_operator(&op, &cfg)?;
            if require_enclosure {
                if let EnclosureOutcome::Unavailable { q_sup, .. } = report.spectral.enclosure {
                    return Err(CoreError::QTooLarge { q: q_sup });
                }
            }
            if let Some(path) = gamma_csv {
                let csv = gamma_grid_csv(&op, &cfg, gamma_grid)?;
                std::fs::write(&path, csv).map_err(|e| {
                    CoreError::Inconsistency(format!("writing {}: {e}", path.display()))
                })?;
            }
            if let Some(path) = oracle_csv {
                if cfg.oracle_sizes.is_empty() {
                    return Err(CoreError::InvalidArgument(
                        "--oracle-csv needs --oracle sizes".into(),
                    ));
                }
                let csv = oracle::eigenvalues_csv(&op, &cfg.oracle_sizes)?;
                std::fs::write(&path, csv).map_err(|e| {
                    CoreError::Inconsistency(format!("writing {}: {e}", path.display()))
                })?;
            }
            let doc = Document {
                version: VERSION,
                command: "analyze",
                config: ResolvedConfig::from_flags(&flags),
                body: ReportBody { report },
            };
            write_output(out.as_deref(), &to_pretty(&doc)?)
        }
        Command::Periodic {
            input,
            flags,
            arcs,
            out,
        } => {
            let doc_in = json::periodic_from_json(&read_input(&input)?)?;
            let jacobi = doc_in.to_jacobi()?;
            let config = ResolvedConfig::from_flags(&flags);
            let text = if doc_in.has_perturbation() {
                let cfg = AsymptoticConfig {
                    analysis: flags.to_config(),
                    arc_samples: arcs.max(64),
                    ..AsymptoticConfig::default()
                };
                let report = periodic::analyze_asymptotic(&jacobi, &cfg)?;
                to_pretty(&Document {
                    version: VERSION,
                    command: "periodic",
                    config,
                    body: AsymptoticBody { report },
                })?
            } else {
                let bg = &jacobi.background;
                if !bg.is_quasi_symmetric() {
                    return Err(CoreError::NotQuasiSymmetric {
                        alpha: bg.alpha(),
                        delta: bg.delta(),
                    });
                }
                let poly = periodic::bc_polynomial(bg)?;
                let naiman = periodic::naiman_check(bg, &poly, -8..=8);
                let arcs = periodic::spectral_arcs(bg, arcs.max(64))?;
                to_pretty(&Document {
                    version: VERSION,
                    command: "periodic",
                    config,
                    body: BackgroundBody {
                        alpha: bg.alpha(),
                        delta: bg.delta(),
                        bc_polynomial: poly,
                        naiman_residual: naiman,
                        arcs,
                    },
                })?
            };
            write_output(out.as_deref(), &text)
        }
        Command::Generate { family } => {
            let (op, out) = match family {
                Family::Class {
                    p,
                    beta,
                    c1,
                    c2,
                    seed,
                    out,
                } => (generators::sample_class(p, beta, c1, c2, seed)?, out),
                Family::Interleave { input, out } => {
                    let list = json::jacobi_list_from_json(&read_input(&input)?)?;
                    (generators::interleave(&list.to_components())?, out)
                }
                Family::SlowDecay {
                    nu,
                    amplitude,
                    exponent,
                    sites,
                    seed,
                    out,
                } => {
                    let family =
                        generators::slow_decay_family(nu, amplitude, exponent, sites, seed)?;
                    (generators::interleave(std::slice::from_ref(&family))?, out)
                }
            };
            write_output(out.as_deref(), &json::operator_to_json(&op)?)
        }
        Command::Double { input, out } => {
            let bi = json::bi_operator_from_json(&read_input(&input)?)?;
            let image = bandjost_core::bi::double(&bi)?;
            write_output(out.as_deref(), &json::operator_to_json(&image)?)
        }
    }
}

#[derive(Serialize)]
struct ReportBody {
    report: bandjost_core::pipeline::AnalysisReport,
}

#[derive(Serialize)]
struct AsymptoticBody {
    report: periodic::AsymptoticReport,
}

#[derive(Serialize)]
struct BackgroundBody {
    #[serde(with = "bandjost_core::cserde::c64")]
    alpha: C64,
    #[serde(with = "bandjost_core::cserde::c64")]
    delta: C64,
    bc_polynomial: periodic::BcPolynomial,
    naiman_residual: f64,
    arcs: periodic::SpectralArcs,
}

/// `re,im,abs_gamma` over the search square, rows only where |z| stays in
/// the evaluable disk.
fn gamma_grid_csv(
    op: &bandjost_core::operator::BandedOperator,
    cfg: &AnalysisConfig,
    grid: usize,
) -> Result<String, CoreError> {
    use bandjost_core::coeffs::{normalize, NormalizeOptions};
    use bandjost_core::jost::{jost_taylor, TaylorOptions};
    use bandjost_core::spectrum::Evaluator;

    let grid = grid.max(2);
    let coeffs = normalize(op, NormalizeOptions::default())?;
    let table = jost_taylor(
        &coeffs,
        TaylorOptions {
            j_max: cfg.jmax,
            tol: cfg.tol,
            ..TaylorOptions::default()
        },
    )?;
    let ev = Evaluator::new(&coeffs, Some(&table));
    let r = 1.0 - cfg.contour.edge_delta;
    let mut out = String::from("re,im,abs_gamma\n");
    for iy in 0..grid {
        for ix in 0..grid {
            let x = -r + 2.0 * r * ix as f64 / (grid - 1) as f64;
            let y = -r + 2.0 * r * iy as f64 / (grid - 1) as f64;
            let z = C64::new(x, y);
            if z.norm() > r || z.norm() < 1e-6 {
                continue;
            }
            let g = ev.gamma(z)?;
            out.push_str(&format!("{x:.17e},{y:.17e},{:.17e}\n", g.norm()));
        }
    }
    Ok(out)
}
