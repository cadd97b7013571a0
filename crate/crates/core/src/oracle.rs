//! Brute-force verifier: dense eigenvalues of N x N finite sections,
//! matched against the Jost-determinant zeros.
//!
//! Finite sections approximate isolated eigenvalues well away from the
//! essential spectrum `[-2, 2]` but pollute near it, so matching is only
//! asserted outside a configurable gap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::complex_eigenvalues;
use crate::error::{Error, Result};
use crate::operator::BandedOperator;
use crate::spectrum::Eigenvalue;
use crate::{C64, CMat};

pub const DEFAULT_GAP_THRESHOLD: f64 = 0.05;
pub const MAX_SECTION: usize = 2000;

/// Leading principal `N x N` submatrix of the operator.
#[derive(Debug, Clone)]
pub struct FiniteSection {
    pub n: usize,
    pub matrix: CMat,
}

/// Exact top-left corner copy; requires `N >= 2p`.
pub fn truncate(op: &BandedOperator, n: usize) -> Result<FiniteSection> {
    if n < 2 * op.p() {
        return Err(Error::InvalidArgument(format!(
            "finite section must satisfy N >= 2p (N = {n}, p = {})",
            op.p()
        )));
    }
    let matrix = CMat::from_fn(n, n, |i, j| op.entry(i as i64 + 1, j as i64 + 1));
    Ok(FiniteSection { n, matrix })
}

/// All eigenvalues of the section, via balancing + Hessenberg + shifted QR.
pub fn dense_eigenvalues(section: &FiniteSection) -> Result<Vec<C64>> {
    if section.n > MAX_SECTION {
        return Err(Error::InvalidArgument(format!(
            "section size {} exceeds the configured maximum {MAX_SECTION}",
            section.n
        )));
    }
    complex_eigenvalues(&section.matrix, true)
}

/// Distance from a point to the essential spectrum `[-2, 2]`.
pub fn distance_to_band(lambda: C64) -> f64 {
    if lambda.re.abs() <= 2.0 {
        lambda.im.abs()
    } else {
        (lambda - C64::new(2.0_f64.copysign(lambda.re), 0.0)).norm()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchEntry {
    #[serde(with = "crate::cserde::c64")]
    pub lambda: C64,
    /// `(N, distance to the nearest section eigenvalue)` per section size.
    pub distances: Vec<(usize, f64)>,
    /// Distances non-increasing across the section sizes (up to a floor
    /// at the dense solver's accuracy).
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchTable {
    pub gap_threshold: f64,
    pub entries: Vec<MatchEntry>,
    /// Jost eigenvalues inside the gap strip, where finite sections
    /// pollute and no match is asserted.
    #[serde(with = "crate::cserde::c64_vec")]
    pub skipped_near_band: Vec<C64>,
    /// Finite-section eigenvalues of the largest section that match no
    /// Jost eigenvalue: near `[-2, 2]` these are spectral-pollution
    /// candidates (expected), away from it they are flagged.
    #[serde(with = "crate::cserde::c64_vec")]
    pub pollution_candidates: Vec<C64>,
    #[serde(with = "crate::cserde::c64_vec")]
    pub unexplained: Vec<C64>,
}

/// Match located eigenvalues against finite sections of increasing size.
pub fn match_spectra(
    eigenvalues: &[Eigenvalue],
    op: &BandedOperator,
    sizes: &[usize],
    gap_threshold: f64,
) -> Result<MatchTable> {
    if sizes.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two section sizes to assess convergence".into(),
        ));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    let spectra: Vec<(usize, Vec<C64>)> = sizes
        .par_iter()
        .map(|&n| Ok((n, dense_eigenvalues(&truncate(op, n)?)?)))
        .collect::<Result<_>>()?;

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for e in eigenvalues {
        if distance_to_band(e.lambda) <= gap_threshold {
            skipped.push(e.lambda);
            continue;
        }
        let distances: Vec<(usize, f64)> = spectra
            .iter()
            .map(|(n, eigs)| {
                let d = eigs
                    .iter()
                    .map(|s| (s - e.lambda).norm())
                    .fold(f64::INFINITY, f64::min);
                (*n, d)
            })
            .collect();
        // The dense solver is accurate to ~1e-12·‖m‖; below that floor,
        // "shrinks with N" degenerates into rounding noise.
        let floor = 1e-11 * (2.0 + op.q_sup());
        let converged = distances
            .windows(2)
            .all(|w| w[1].1 <= w[0].1.max(floor) + floor);
        entries.push(MatchEntry {
            lambda: e.lambda,
            distances,
            converged,
        });
    }

    let mut pollution = Vec::new();
    let mut unexplained = Vec::new();
    if let Some((_, largest)) = spectra.last() {
        for s in largest {
            let matched = eigenvalues.iter().any(|e| (e.lambda - s).norm() < 1e-3);
            if !matched {
                if distance_to_band(*s) <= gap_threshold {
                    pollution.push(*s);
                } else {
                    unexplained.push(*s);
                }
            }
        }
    }

    Ok(MatchTable {
        gap_threshold,
        entries,
        skipped_near_band: skipped,
        pollution_candidates: pollution,
        unexplained,
    })
}

/// CSV dump of section eigenvalues (`N,re,im` per line) for external
/// inspection.
pub fn eigenvalues_csv(op: &BandedOperator, sizes: &[usize]) -> Result<String> {
    let mut out = String::from("N,re,im\n");
    for &n in sizes {
        for e in dense_eigenvalues(&truncate(op, n)?)? {
            out.push_str(&format!("{n},{:.17e},{:.17e}\n", e.re, e.im));
        }
    }
    Ok(out)
}
