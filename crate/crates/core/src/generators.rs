//! Test-family construction: decay-class samples, the interleaving of `p`
//! Jacobi matrices into one `p`-banded operator, and the finite-section
//! accumulation diagnostic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{BandedOperator, Tail};
use crate::oracle::{dense_eigenvalues, truncate};
use crate::C64;

/// Pseudo-random operator whose perturbation sizes satisfy
/// `q_n <= c1 exp(-c2 n^beta)` at every explicit index, with the matching
/// exp-beta certificate attached. Deterministic for a fixed seed.
pub fn sample_class(p: usize, beta: f64, c1: f64, c2: f64, seed: u64) -> Result<BandedOperator> {
    if !(beta > 0.0 && beta < 1.0) || c1 < 0.0 || c2 <= 0.0 {
        return Err(Error::InvalidArgument(
            "class sampling needs beta in (0,1), c1 >= 0, c2 > 0".into(),
        ));
    }
    let tail = Tail::ExpBeta { c1, c2, beta };
    if c1 == 0.0 {
        return BandedOperator::new(p, Vec::new(), tail);
    }
    // Explicit rows until the bound falls below rounding.
    let n_explicit = (1..)
        .find(|&n| c1 * (-c2 * (n as f64).powf(beta)).exp() < 1e-16)
        .unwrap_or(600)
        .min(600);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for n in 1..=n_explicit {
        let budget = c1 * (-c2 * (n as f64).powf(beta)).exp();
        let used_fraction = 0.3 + 0.65 * rng.random::<f64>();
        let offsets: Vec<i64> = (-(p as i64)..=(p as i64))
            .filter(|r| n as i64 + r >= 1)
            .collect();
        let weights: Vec<f64> = offsets.iter().map(|_| rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            continue;
        }
        for (r, w) in offsets.iter().zip(&weights) {
            let mut magnitude = budget * used_fraction * w / total;
            if r.unsigned_abs() as usize == p {
                // keep the extreme diagonal safely away from zero
                magnitude = magnitude.min(0.9);
            }
            if magnitude < 1e-18 {
                continue;
            }
            let phase = std::f64::consts::TAU * rng.random::<f64>();
            let bump = C64::from_polar(magnitude, phase);
            let value = if r.unsigned_abs() as usize == p {
                C64::new(1.0, 0.0) + bump
            } else {
                bump
            };
            entries.push((n as i64, n as i64 + r, value));
        }
    }
    BandedOperator::from_entries(p, &entries, tail)
}

/// A semi-infinite complex Jacobi matrix: `diag[n]` is the diagonal entry
/// at site `n`, `off[n]` couples sites `n` and `n+1` (symmetrically).
/// Unlisted entries take the free values 0 and 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobiDescription {
    #[serde(with = "crate::cserde::c64_vec")]
    pub diag: Vec<C64>,
    #[serde(with = "crate::cserde::c64_vec")]
    pub off: Vec<C64>,
}

impl JacobiDescription {
    pub fn free() -> Self {
        JacobiDescription {
            diag: Vec::new(),
            off: Vec::new(),
        }
    }

    pub fn diag_at(&self, n: usize) -> C64 {
        self.diag.get(n).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn off_at(&self, n: usize) -> C64 {
        self.off.get(n).copied().unwrap_or(C64::new(1.0, 0.0))
    }
}

/// Interleave `p` Jacobi matrices into one `p`-banded operator: component
/// `i` lives on the invariant subspace spanned by `ê_i, ê_{p+i}, ...`, so
/// the spectrum is the union of the component spectra.
pub fn interleave(components: &[JacobiDescription]) -> Result<BandedOperator> {
    let p = components.len();
    if p == 0 {
        return Err(Error::InvalidArgument("need at least one Jacobi matrix".into()));
    }
    for (i, j) in components.iter().enumerate() {
        if j.off.iter().any(|v| *v == C64::new(0.0, 0.0)) {
            return Err(Error::InvalidOperator(format!(
                "component {i} has a zero off-diagonal entry"
            )));
        }
    }
    let mut entries = Vec::new();
    for (idx, jac) in components.iter().enumerate() {
        let i = idx as i64 + 1;
        for (n, v) in jac.diag.iter().enumerate() {
            if *v != C64::new(0.0, 0.0) {
                let row = p as i64 * n as i64 + i;
                entries.push((row, row, *v));
            }
        }
        for (n, v) in jac.off.iter().enumerate() {
            if *v != C64::new(1.0, 0.0) {
                let row = p as i64 * n as i64 + i;
                let col = p as i64 * (n as i64 + 1) + i;
                entries.push((row, col, *v));
                entries.push((col, row, *v));
            }
        }
    }
    BandedOperator::from_entries(p, &entries, Tail::Zero)
}

/// Real symmetric Jacobi matrix with a slowly decaying oscillatory diagonal
/// resonant at `ν ∈ (-2, 2)`: `b_n = amplitude · cos(2(n+1)θ + φ0) /
/// (n+1)^exponent` with `ν = 2 cos θ`. With `exponent < 1/2` the truncation
/// spectra pile up near `ν`; this is the diagnostic family, not a
/// reconstruction of any particular matrix from the literature.
pub fn slow_decay_family(
    nu: f64,
    amplitude: f64,
    exponent: f64,
    sites: usize,
    seed: u64,
) -> Result<JacobiDescription> {
    if !(-2.0..=2.0).contains(&nu) {
        return Err(Error::InvalidArgument("resonance point must lie in [-2, 2]".into()));
    }
    let theta = (nu / 2.0).acos();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi0 = std::f64::consts::TAU * rng.random::<f64>();
    let diag = (0..sites)
        .map(|n| {
            let x = (n + 1) as f64;
            C64::new(
                amplitude * (2.0 * x * theta + phi0).cos() / x.powf(exponent),
                0.0,
            )
        })
        .collect();
    Ok(JacobiDescription {
        diag,
        off: Vec::new(),
    })
}

/// Counts of finite-section eigenvalues near prescribed points: the
/// desk-scale accumulation signal is monotone growth of the counts in `N`
/// at fixed radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountTable {
    #[serde(with = "crate::cserde::c64_vec")]
    pub points: Vec<C64>,
    pub radii: Vec<f64>,
    pub sizes: Vec<usize>,
    /// `counts[point][radius][size]`.
    pub counts: Vec<Vec<Vec<usize>>>,
}

pub fn accumulation_diagnostic(
    op: &BandedOperator,
    points: &[C64],
    radii: &[f64],
    sizes: &[usize],
) -> Result<CountTable> {
    let spectra: Vec<Vec<C64>> = sizes
        .par_iter()
        .map(|&n| dense_eigenvalues(&truncate(op, n)?))
        .collect::<Result<_>>()?;
    let counts = points
        .iter()
        .map(|pt| {
            radii
                .iter()
                .map(|r| {
                    spectra
                        .iter()
                        .map(|eigs| eigs.iter().filter(|e| (*e - pt).norm() <= *r).count())
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(CountTable {
        points: points.to_vec(),
        radii: radii.to_vec(),
        sizes: sizes.to_vec(),
        counts,
    })
}
