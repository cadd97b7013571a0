//! End-to-end analysis: normalize → Jost evaluation → zero search →
//! enclosure → optional finite-section matching.

use serde::{Deserialize, Serialize};

use crate::bi::{double, BiBandedOperator};
use crate::coeffs::{normalize, NormalizeOptions};
use crate::error::{Error, Result};
use crate::jost::{jost_taylor, TaylorOptions};
use crate::operator::BandedOperator;
use crate::oracle::{match_spectra, MatchTable, DEFAULT_GAP_THRESHOLD};
use crate::spectrum::{enclosure, find_zeros, ContourConfig, EnclosureOutcome, Evaluator, SpectralReport};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Evaluation tolerance for the Jost series.
    pub tol: f64,
    pub contour: ContourConfig,
    /// Initial Taylor truncation order (extended automatically).
    pub jmax: usize,
    /// Finite-section sizes for the oracle cross-check (empty = skip).
    pub oracle_sizes: Vec<usize>,
    pub gap_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            tol: 1e-12,
            contour: ContourConfig::default(),
            jmax: 64,
            oracle_sizes: Vec::new(),
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }
}

/// Diagnostics attached to a report for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisDiagnostics {
    pub horizon: usize,
    pub taylor_order: Option<usize>,
    pub taylor_tail_bound: Option<f64>,
    pub q_sup: f64,
    pub q0: f64,
    /// Perturbation mass the tail certificate allows beyond the explicit
    /// entries: computed spectra carry this much model uncertainty.
    pub certificate_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub spectral: SpectralReport,
    pub match_table: Option<MatchTable>,
    pub diagnostics: AnalysisDiagnostics,
}

/// Run the full pipeline on a semi-infinite operator.
pub fn analyze_operator(op: &BandedOperator, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    let coeffs = normalize(op, NormalizeOptions::default())?;
    let taylor = match jost_taylor(
        &coeffs,
        TaylorOptions {
            j_max: cfg.jmax,
            tol: cfg.tol,
            ..TaylorOptions::default()
        },
    ) {
        Ok(t) => Some(t),
        // Without a first-moment certificate fall back to per-z iteration.
        Err(Error::TailUnavailable(_)) => None,
        Err(e) => return Err(e),
    };

    let ev = Evaluator {
        coeffs: &coeffs,
        taylor: taylor.as_ref(),
        tol: cfg.tol,
    };
    let mut contour = cfg.contour;
    contour.residual_tol = contour.residual_tol.min(cfg.tol.max(1e-13));
    let scan = find_zeros(&ev, &contour)?;

    let enclosure_outcome = match enclosure(op) {
        Ok(v) => EnclosureOutcome::Available(v),
        Err(Error::QTooLarge { q }) => EnclosureOutcome::Unavailable {
            q_sup: q,
            reason: "sup q_n >= 1: the efficient constant of the enclosure bounds \
                     does not exist"
                .into(),
        },
        Err(e) => return Err(e),
    };

    let match_table = if cfg.oracle_sizes.is_empty() {
        None
    } else {
        Some(match_spectra(
            &scan.eigenvalues,
            op,
            &cfg.oracle_sizes,
            cfg.gap_threshold,
        )?)
    };

    Ok(AnalysisReport {
        spectral: SpectralReport {
            eigenvalues: scan.eigenvalues,
            enclosure: enclosure_outcome,
            unresolved_cells: scan.unresolved,
        },
        match_table,
        diagnostics: AnalysisDiagnostics {
            horizon: coeffs.horizon(),
            taylor_order: taylor.as_ref().map(|t| t.j_max()),
            taylor_tail_bound: taylor.as_ref().and_then(|t| t.tail_bound()),
            q_sup: op.q_sup(),
            q0: op.q0_tail(1),
            certificate_slack: coeffs.certificate_slack(),
        },
    })
}

/// Doubly-infinite pipeline: analyze the doubling image (the spectrum is
/// invariant under the unitary equivalence, so the report carries over).
pub fn analyze_bi_operator(op: &BiBandedOperator, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    let doubled = double(op)?;
    analyze_operator(&doubled, cfg)
}
