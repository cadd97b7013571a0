//! Semi-infinite complex banded operators with decay certificates.
//!
//! An operator of order `p` is described by its `2p + 1` diagonals. Each
//! diagonal holds finitely many explicit entries; everything beyond is the
//! free value (1 on the extreme diagonals `|offset| = p`, 0 inside) plus a
//! tail perturbation bounded by the attached certificate. Indices are
//! 1-based; entries with `min(i, j) <= 0` are synthesized by the padding
//! rule `d_ij = 1` if `|i-j| = p`, else `0`, and are never stored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ui;

use crate::error::{Error, Result};
use crate::linalg::is_finite_c;
use crate::{C64, CMat};

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Certified bound on the perturbation sizes `q_n` beyond the explicit range.
///
/// Each variant provides upper bounds on `Σ_{k>=n} q_k` and `Σ_{k>=n} k q_k`
/// restricted to the non-explicit indices. Bounds are monotonically
/// non-increasing in `n`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum Tail {
    /// `q_k = 0` exactly beyond the explicit entries.
    Zero,
    /// `q_k <= c1 * exp(-c2 * k^beta)` with `0 < beta < 1`.
    ExpBeta { c1: f64, c2: f64, beta: f64 },
    /// Explicit non-increasing bounds on the tail sums `Σ_{k>=m} q_k`,
    /// where `q0[i]` bounds the tail starting at the i-th index past the
    /// explicit range (the last bound persists). Optionally the same for
    /// first moments `Σ_{k>=m} k q_k`; without it, order-1 quantities are
    /// not certified.
    Summable { q0: Vec<f64>, q1: Option<Vec<f64>> },
}

impl Tail {
    fn validate(&self) -> Result<()> {
        match self {
            Tail::Zero => Ok(()),
            Tail::ExpBeta { c1, c2, beta } => {
                if !(*c1 >= 0.0 && c1.is_finite()) || !(*c2 > 0.0 && c2.is_finite()) {
                    return Err(Error::InvalidOperator(format!(
                        "exp-beta tail needs c1 >= 0 and c2 > 0, got c1 = {c1}, c2 = {c2}"
                    )));
                }
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(Error::InvalidOperator(format!(
                        "exp-beta tail needs beta in (0, 1), got {beta}"
                    )));
                }
                Ok(())
            }
            Tail::Summable { q0, q1 } => {
                for seq in std::iter::once(q0).chain(q1.iter()) {
                    if seq.windows(2).any(|w| w[1] > w[0]) || seq.iter().any(|v| *v < 0.0) {
                        return Err(Error::InvalidOperator(
                            "summable tail bounds must be non-negative and non-increasing".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Tail::Zero)
            || matches!(self, Tail::ExpBeta { c1, .. } if *c1 == 0.0)
            || matches!(self, Tail::Summable { q0, q1: _ } if q0.iter().all(|v| *v == 0.0))
    }

    /// Upper bound on `Σ_{k >= start} q_k` over non-explicit indices
    /// `k > n_explicit` (absolute row indices).
    fn q0_beyond(&self, start: i64, n_explicit: i64) -> f64 {
        let start = start.max(n_explicit + 1).max(1);
        match self {
            Tail::Zero => 0.0,
            Tail::ExpBeta { c1, c2, beta } => c1 * exp_beta_tail(*c2, *beta, start, 0),
            Tail::Summable { q0, .. } => {
                if q0.is_empty() {
                    return 0.0;
                }
                let idx = (start - n_explicit - 1) as usize;
                q0[idx.min(q0.len() - 1)]
            }
        }
    }

    /// Upper bound on `Σ_{k >= start} k q_k` over non-explicit indices.
    fn q1_beyond(&self, start: i64, n_explicit: i64) -> Result<f64> {
        let start = start.max(n_explicit + 1).max(1);
        match self {
            Tail::Zero => Ok(0.0),
            Tail::ExpBeta { c1, c2, beta } => Ok(c1 * exp_beta_tail(*c2, *beta, start, 1)),
            Tail::Summable { q1: Some(q1), .. } => {
                if q1.is_empty() {
                    return Ok(0.0);
                }
                let idx = (start - n_explicit - 1) as usize;
                Ok(q1[idx.min(q1.len() - 1)])
            }
            Tail::Summable { q1: None, .. } => Err(Error::TailUnavailable(
                "Σ k q_k: certificate is summable-Q0-only".into(),
            )),
        }
    }

    /// Upper bound on a single `q_k` beyond the explicit range.
    fn term_beyond(&self, k: i64) -> f64 {
        match self {
            Tail::Zero => 0.0,
            Tail::ExpBeta { c1, c2, beta } => c1 * (-c2 * (k.max(1) as f64).powf(*beta)).exp(),
            // q_k is at most the tail sum starting at k.
            Tail::Summable { q0, .. } => q0.first().copied().unwrap_or(0.0),
        }
    }
}

/// Certified upper bound on `Σ_{k>=start} (k+1)^r exp(-c2 k^beta)` for
/// `r = 0, 1, ...` via partial summation plus an integral-comparison
/// remainder expressed through the upper incomplete gamma function.
fn exp_beta_tail(c2: f64, beta: f64, start: i64, r: u32) -> f64 {
    let start = start.max(1);
    // Integrand x^r e^{-c2 x^beta} must be decreasing before the integral
    // comparison applies; below the turning point we sum terms directly.
    let turning = if r == 0 {
        1.0
    } else {
        (r as f64 / (c2 * beta)).powf(1.0 / beta)
    };
    let mut k = start;
    let mut sum = 0.0f64;
    loop {
        let x = k as f64;
        let term = (x + 1.0).powi(r as i32) * (-c2 * x.powf(beta)).exp();
        if x > turning && (term < 1e-18 * sum.max(f64::MIN_POSITIVE) || term == 0.0) {
            break;
        }
        sum += term;
        k += 1;
        if k - start > 2_000_000 {
            break;
        }
    }
    // Remainder: Σ_{j >= k} (x+1)^r e^{-c2 x^beta} <= 2^r ∫_{k-1}^∞ x^r e^{-c2 x^beta} dx
    // (using x >= 1, so x+1 <= 2x), and the substitution u = c2 x^beta gives
    // ∫_K^∞ x^r e^{-c2 x^beta} dx = Γ((r+1)/beta, c2 K^beta) / (beta c2^{(r+1)/beta}).
    // The integral comparison needs the integrand decreasing; if the term
    // loop capped out before the turning point, one peak term covers the
    // sum-vs-integral defect of the unimodal integrand.
    let kk = (k - 1).max(1) as f64;
    let a = (r as f64 + 1.0) / beta;
    let mut remainder =
        2f64.powi(r as i32) * gamma_ui(a, c2 * kk.powf(beta)) / (beta * c2.powf(a));
    if kk < turning {
        let peak = (r as f64 * (turning + 1.0).ln() - c2 * turning.powf(beta)).exp();
        remainder += peak;
    }
    sum + remainder
}

/// One diagonal of a banded operator: explicit entries over a finite set of
/// rows, default value elsewhere (1 on the extreme diagonals, 0 inside).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalProvider {
    offset: i64,
    entries: BTreeMap<i64, C64>,
    default: C64,
}

impl DiagonalProvider {
    pub fn new(p: usize, offset: i64, entries: BTreeMap<i64, C64>) -> Result<Self> {
        if offset.unsigned_abs() as usize > p {
            return Err(Error::InvalidOperator(format!(
                "offset {offset} outside band of order {p}"
            )));
        }
        let extreme = offset.unsigned_abs() as usize == p;
        let default = if extreme { ONE } else { ZERO };
        for (&n, &v) in &entries {
            if n < 1 {
                return Err(Error::InvalidOperator(format!(
                    "explicit entry at non-positive row {n} (padding rows are synthesized)"
                )));
            }
            if !is_finite_c(v) {
                return Err(Error::InvalidOperator(format!(
                    "non-finite entry at ({n}, {})",
                    n + offset
                )));
            }
            if extreme && v == ZERO {
                return Err(Error::InvalidOperator(format!(
                    "zero entry on extreme diagonal at row {n}"
                )));
            }
        }
        Ok(DiagonalProvider {
            offset,
            entries,
            default,
        })
    }

    pub fn free(p: usize, offset: i64) -> Self {
        DiagonalProvider::new(p, offset, BTreeMap::new()).expect("free diagonal is valid")
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn entries(&self) -> &BTreeMap<i64, C64> {
        &self.entries
    }

    /// Value at row `n >= 1` (column `n + offset`).
    pub fn value(&self, n: i64) -> C64 {
        *self.entries.get(&n).unwrap_or(&self.default)
    }

    fn max_explicit_row(&self) -> i64 {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }
}

/// Semi-infinite banded operator of order `p`.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    p: usize,
    /// Providers indexed by `offset + p`, exactly one per offset in `[-p, p]`.
    diagonals: Vec<DiagonalProvider>,
    tail: Tail,
    n_explicit: i64,
}

impl BandedOperator {
    pub fn new(p: usize, diagonals: Vec<DiagonalProvider>, tail: Tail) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidOperator("order p must be positive".into()));
        }
        tail.validate()?;
        let mut slots: Vec<Option<DiagonalProvider>> = vec![None; 2 * p + 1];
        for d in diagonals {
            let idx = (d.offset + p as i64) as usize;
            if slots[idx].is_some() {
                return Err(Error::InvalidOperator(format!(
                    "duplicate provider for offset {}",
                    d.offset
                )));
            }
            slots[idx] = Some(d);
        }
        let diagonals: Vec<DiagonalProvider> = slots
            .into_iter()
            .enumerate()
            .map(|(idx, s)| s.unwrap_or_else(|| DiagonalProvider::free(p, idx as i64 - p as i64)))
            .collect();
        let n_explicit = diagonals.iter().map(|d| d.max_explicit_row()).max().unwrap_or(0);
        Ok(BandedOperator {
            p,
            diagonals,
            tail,
            n_explicit,
        })
    }

    /// The standard band operator `D0` of order `p`.
    pub fn free(p: usize) -> Self {
        BandedOperator::new(p, Vec::new(), Tail::Zero).expect("free operator is valid")
    }

    /// Build a zero-tail operator from a list of explicit entries `(i, j, v)`.
    pub fn from_entries(p: usize, entries: &[(i64, i64, C64)], tail: Tail) -> Result<Self> {
        let mut per_offset: BTreeMap<i64, BTreeMap<i64, C64>> = BTreeMap::new();
        for &(i, j, v) in entries {
            if (i - j).unsigned_abs() as usize > p {
                return Err(Error::InvalidOperator(format!(
                    "entry ({i}, {j}) outside band of order {p}"
                )));
            }
            per_offset.entry(j - i).or_default().insert(i, v);
        }
        let diagonals = per_offset
            .into_iter()
            .map(|(offset, entries)| DiagonalProvider::new(p, offset, entries))
            .collect::<Result<Vec<_>>>()?;
        BandedOperator::new(p, diagonals, tail)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn diagonals(&self) -> &[DiagonalProvider] {
        &self.diagonals
    }

    /// Largest row index carrying an explicit entry (0 when none).
    pub fn n_explicit(&self) -> i64 {
        self.n_explicit
    }

    /// Entry `d_ij` including the padding convention for `min(i,j) <= 0`.
    pub fn entry(&self, i: i64, j: i64) -> C64 {
        let p = self.p as i64;
        if (i - j).abs() > p {
            return ZERO;
        }
        if i.min(j) <= 0 {
            return if (i - j).abs() == p { ONE } else { ZERO };
        }
        self.diagonals[(j - i + p) as usize].value(i)
    }

    /// Perturbation size `q_n = |d_{n,n-p} - 1| + Σ_{|r|<p} |d_{n,n+r}| + |d_{n,n+p} - 1|`.
    ///
    /// `q_n = 0` for `n <= 0` by the padding convention.
    pub fn perturbation_size(&self, n: i64) -> f64 {
        if n <= 0 {
            return 0.0;
        }
        let p = self.p as i64;
        let mut q = 0.0;
        for r in -p..=p {
            let v = self.entry(n, n + r);
            if r.abs() == p {
                // Padding columns contribute |1 - 1| = 0.
                q += (v - ONE).norm();
            } else {
                q += v.norm();
            }
        }
        q
    }

    /// Block-level size `q̂_k = max_{1<=j<=p} q_{(k-1)p+j}`, with `q̂_0 = 0`.
    pub fn q_hat(&self, k: i64) -> f64 {
        if k <= 0 {
            return 0.0;
        }
        let p = self.p as i64;
        (1..=p)
            .map(|j| self.perturbation_size((k - 1) * p + j))
            .fold(0.0, f64::max)
    }

    /// Upper bound on `sup_n q_n`.
    pub fn q_sup(&self) -> f64 {
        let explicit = (1..=self.n_explicit)
            .map(|n| self.perturbation_size(n))
            .fold(0.0, f64::max);
        explicit.max(self.tail.term_beyond(self.n_explicit + 1))
    }

    /// Certified upper bound on `Σ_{k>=n} q_k`.
    pub fn q0_tail(&self, n: i64) -> f64 {
        let mut s = 0.0;
        for k in n.max(1)..=self.n_explicit {
            s += self.perturbation_size(k);
        }
        s + self.tail.q0_beyond(n, self.n_explicit)
    }

    /// Certified upper bound on `Σ_{k>=n} k q_k`.
    pub fn q1_tail(&self, n: i64) -> Result<f64> {
        let mut s = 0.0;
        for k in n.max(1)..=self.n_explicit {
            s += k as f64 * self.perturbation_size(k);
        }
        Ok(s + self.tail.q1_beyond(n, self.n_explicit)?)
    }

    /// Certified upper bounds on `(Σ_{k>=n} q_k, Σ_{k>=n} k q_k)`.
    ///
    /// Exact sums when the tail is zero; errors when the certificate is
    /// summable-Q0-only and the first moment is requested.
    pub fn tail_sums(&self, n: i64) -> Result<(f64, f64)> {
        Ok((self.q0_tail(n), self.q1_tail(n)?))
    }

    /// Certified upper bound on the moment `M_r = Σ_{k>=0} (k+1)^r q_k`.
    pub fn moments(&self, r: usize) -> Result<f64> {
        let mut s = 0.0;
        for k in 1..=self.n_explicit {
            s += ((k + 1) as f64).powi(r as i32) * self.perturbation_size(k);
        }
        let beyond = match &self.tail {
            Tail::Zero => 0.0,
            Tail::ExpBeta { c1, c2, beta } => {
                c1 * exp_beta_tail(*c2, *beta, self.n_explicit + 1, r as u32)
            }
            Tail::Summable { q0, q1 } => {
                let nonzero =
                    q0.first().copied().unwrap_or(0.0) > 0.0 || q1.iter().any(|s| !s.is_empty());
                match r {
                    0 => self.tail.q0_beyond(self.n_explicit + 1, self.n_explicit),
                    1 if q1.is_some() => {
                        // (k+1) q_k <= 2 k q_k for k >= 1
                        2.0 * self.tail.q1_beyond(self.n_explicit + 1, self.n_explicit)?
                    }
                    _ if !nonzero => 0.0,
                    _ => return Err(Error::DivergentMoment { order: r }),
                }
            }
        };
        Ok(s + beyond)
    }

    /// Block index beyond which all blocks are at their free values.
    pub fn block_support(&self) -> usize {
        (self.n_explicit.max(0) as usize).div_ceil(self.p)
    }

    /// Block coefficients `(A_k, B_k, C_k)` of the block-Jacobi representation.
    pub fn blocks(&self, k: i64) -> BlockCoefficients {
        assert!(k >= 1, "block index must be positive");
        let p = self.p as i64;
        let a = CMat::from_fn(self.p, self.p, |i, j| {
            self.entry((k - 1) * p + i as i64 + 1, (k - 2) * p + j as i64 + 1)
        });
        let b = CMat::from_fn(self.p, self.p, |i, j| {
            self.entry((k - 1) * p + i as i64 + 1, (k - 1) * p + j as i64 + 1)
        });
        let c = CMat::from_fn(self.p, self.p, |i, j| {
            self.entry((k - 1) * p + i as i64 + 1, k * p + j as i64 + 1)
        });
        BlockCoefficients { k, a, b, c }
    }

    /// Operator row-norm bound `‖D‖ <= 2 + sup q_n`.
    pub fn row_norm_bound(&self) -> f64 {
        2.0 + self.q_sup()
    }

    /// Map every entry to its complex conjugate (same tail certificate).
    pub fn conjugate(&self) -> BandedOperator {
        let diagonals = self
            .diagonals
            .iter()
            .map(|d| DiagonalProvider {
                offset: d.offset,
                entries: d.entries.iter().map(|(&n, v)| (n, v.conj())).collect(),
                default: d.default,
            })
            .collect();
        BandedOperator {
            p: self.p,
            diagonals,
            tail: self.tail.clone(),
            n_explicit: self.n_explicit,
        }
    }
}

/// The `p x p` blocks of the block-Jacobi form: `A_k` upper triangular,
/// `C_k` lower triangular, both invertible; `A_1 = C_0 = I`, `B_0 = 0`.
#[derive(Debug, Clone)]
pub struct BlockCoefficients {
    pub k: i64,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}
