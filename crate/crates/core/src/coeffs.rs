//! Normalization of the block recurrence.
//!
//! Multiplying the block three-term relation `A_k Ψ_{k-1} + B_k Ψ_k +
//! C_k Ψ_{k+1} = λ Ψ_k` from the left by the right-to-left products
//! `L_k = ... A_{k+2} A_{k+1}` removes the `A` coefficients:
//! `Φ_{k-1} + B̃_k Φ_k + C̃_k Φ_{k+1} = λ Φ_k` with `B̃_k = L_k B_k L_k^{-1}`
//! and `C̃_k = L_k C_k L_{k+1}^{-1}`. Everything downstream (kernels, Jost
//! iteration, Taylor recurrences) consumes these normalized coefficients.

use crate::error::{Error, Result};
use crate::linalg::{invert_upper_triangular, row_norm, row_norm_minus_identity};
use crate::operator::BandedOperator;
use crate::CMat;

#[derive(Debug, Clone, Copy)]
pub struct NormalizeOptions {
    /// Truncation horizon in block index; products beyond it are identity.
    /// `None` selects the smallest exact choice (explicit block support + 1)
    /// and carries whatever the certificate leaves beyond the explicit
    /// entries as recorded slack.
    pub horizon: Option<usize>,
    /// With an explicit horizon, the certified `Σ_{k>horizon} ‖I - A_k‖`
    /// must not exceed this.
    pub tol: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            horizon: None,
            tol: 1e-14,
        }
    }
}

/// Coefficient tables of the normalized recurrence, immutable after
/// construction; all sequence bounds are in the row norm.
#[derive(Debug, Clone)]
pub struct NormalizedCoefficients {
    op: BandedOperator,
    p: usize,
    horizon: usize,
    /// `L_0 .. L_horizon`; identity from the horizon on.
    l: Vec<CMat>,
    /// `B̃_1 .. B̃_horizon` (zero beyond).
    btilde: Vec<CMat>,
    /// `C̃_0 .. C̃_horizon` (identity beyond).
    ctilde: Vec<CMat>,
    /// `h_k = ‖B̃_k‖ + ‖I - C̃_{k-1}‖` for `k = 1 .. horizon+1`.
    h: Vec<f64>,
    /// `g_j = ‖B̃_j‖ + ‖I - C̃_j‖` for `j = 1 .. horizon`.
    g: Vec<f64>,
    /// Suffix sums of the computed parts.
    sig0_suffix: Vec<f64>,
    sig1_suffix: Vec<f64>,
    kappa_suffix: Vec<f64>,
    /// `2 exp{(2-q)/(1-q) Q0}` when `q = sup q_n < 1`.
    efficient: Option<f64>,
    q_sup: f64,
    /// Certified perturbation mass the certificate allows beyond the
    /// explicit entries (zero for zero tails).
    certificate_slack: f64,
    eye: CMat,
    zero: CMat,
}

/// Compute the normalized coefficient tables.
pub fn normalize(op: &BandedOperator, opts: NormalizeOptions) -> Result<NormalizedCoefficients> {
    let p = op.p();
    let support = op.block_support();
    let horizon = opts.horizon.unwrap_or(support + 1).max(support + 1);

    // Beyond the horizon every block is at its free value, so the neglected
    // Σ ‖I - A_k‖ is whatever the certificate allows past the explicit
    // entries. A user-pinned horizon must meet the tolerance; the automatic
    // choice cannot be improved (there is no data past the explicit
    // entries), so the slack is recorded and carried by the σ-tail bounds.
    let certificate_slack = if op.tail().is_zero() {
        0.0
    } else {
        op.q0_tail(op.n_explicit() + 1)
    };
    if opts.horizon.is_some() && certificate_slack > opts.tol {
        return Err(Error::HorizonTooSmall {
            horizon,
            tail: certificate_slack,
            tol: opts.tol,
        });
    }

    let eye = CMat::identity(p, p);
    let zero = CMat::zeros(p, p);

    // L_horizon = I, L_{k-1} = L_k A_k.
    let mut l = vec![eye.clone(); horizon + 1];
    for k in (1..=horizon).rev() {
        let blk = op.blocks(k as i64);
        l[k - 1] = &l[k] * &blk.a;
    }
    let mut l_inv = Vec::with_capacity(horizon + 1);
    for lk in &l {
        let inv = invert_upper_triangular(lk).ok_or_else(|| {
            Error::InvalidOperator("singular A_k product; corrupt input".into())
        })?;
        l_inv.push(inv);
    }

    let mut btilde = Vec::with_capacity(horizon);
    let mut ctilde = Vec::with_capacity(horizon + 1);
    // C̃_0 = L_0 C_0 L_1^{-1} with C_0 = I.
    ctilde.push(&l[0] * &l_inv[1.min(horizon)]);
    for k in 1..=horizon {
        let blk = op.blocks(k as i64);
        btilde.push(&l[k] * &blk.b * &l_inv[k]);
        let l_next_inv = if k + 1 <= horizon { &l_inv[k + 1] } else { &eye };
        ctilde.push(&l[k] * &blk.c * l_next_inv);
    }

    let mut h = Vec::with_capacity(horizon + 1);
    for k in 1..=horizon + 1 {
        let bn = if k <= horizon {
            row_norm(&btilde[k - 1])
        } else {
            0.0
        };
        h.push(bn + row_norm_minus_identity(&ctilde[k - 1]));
    }
    let mut g = Vec::with_capacity(horizon);
    for j in 1..=horizon {
        g.push(row_norm(&btilde[j - 1]) + row_norm_minus_identity(&ctilde[j]));
    }

    // sig0_suffix[n] = Σ_{k=n+1}^{horizon+1} h_k for n = 0..=horizon+1.
    let mut sig0_suffix = vec![0.0; horizon + 2];
    let mut sig1_suffix = vec![0.0; horizon + 2];
    for n in (0..=horizon).rev() {
        sig0_suffix[n] = sig0_suffix[n + 1] + h[n];
        sig1_suffix[n] = sig1_suffix[n + 1] + (n + 1) as f64 * h[n];
    }
    // kappa_suffix[n] = Σ_{j=n}^{horizon} g_j for n = 1..=horizon+1.
    let mut kappa_suffix = vec![0.0; horizon + 2];
    for n in (1..=horizon).rev() {
        kappa_suffix[n] = kappa_suffix[n + 1] + g[n - 1];
    }
    kappa_suffix[0] = kappa_suffix[1];

    let q_sup = op.q_sup();
    let efficient = if q_sup < 1.0 {
        Some(2.0 * ((2.0 - q_sup) / (1.0 - q_sup) * op.q0_tail(1)).exp())
    } else {
        None
    };

    Ok(NormalizedCoefficients {
        op: op.clone(),
        p,
        horizon,
        l,
        btilde,
        ctilde,
        h,
        g,
        sig0_suffix,
        sig1_suffix,
        kappa_suffix,
        efficient,
        q_sup,
        certificate_slack,
        eye,
        zero,
    })
}

impl NormalizedCoefficients {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn operator(&self) -> &BandedOperator {
        &self.op
    }

    pub fn identity(&self) -> &CMat {
        &self.eye
    }

    /// `L_k` (identity beyond the horizon).
    pub fn l(&self, k: usize) -> &CMat {
        if k <= self.horizon {
            &self.l[k]
        } else {
            &self.eye
        }
    }

    /// `B̃_k` for `k >= 0` (`B̃_0 = 0`, zero beyond the horizon).
    pub fn btilde(&self, k: usize) -> &CMat {
        if k >= 1 && k <= self.horizon {
            &self.btilde[k - 1]
        } else {
            &self.zero
        }
    }

    /// `C̃_k` for `k >= 0` (identity beyond the horizon).
    pub fn ctilde(&self, k: usize) -> &CMat {
        if k <= self.horizon {
            &self.ctilde[k]
        } else {
            &self.eye
        }
    }

    /// `h_k = ‖B̃_k‖ + ‖I - C̃_{k-1}‖` (zero beyond `horizon + 1`).
    pub fn h(&self, k: usize) -> f64 {
        if k >= 1 && k <= self.horizon + 1 {
            self.h[k - 1]
        } else {
            0.0
        }
    }

    /// `g_j = ‖B̃_j‖ + ‖I - C̃_j‖` (zero beyond the horizon).
    pub fn g(&self, j: usize) -> f64 {
        if j >= 1 && j <= self.horizon {
            self.g[j - 1]
        } else {
            0.0
        }
    }

    /// `2 exp{(2-q)/(1-q) Q0}`, the efficient constant (requires `q < 1`).
    pub fn efficient_constant(&self) -> Option<f64> {
        self.efficient
    }

    pub fn q_sup(&self) -> f64 {
        self.q_sup
    }

    /// Certified perturbation mass beyond the explicit entries; computed
    /// values treat those entries as free, so downstream results carry
    /// this much model uncertainty.
    pub fn certificate_slack(&self) -> f64 {
        self.certificate_slack
    }

    /// Computed part of `σ0(n) = Σ_{k>n} h_k`.
    pub fn sigma0_computed(&self, n: usize) -> f64 {
        self.sig0_suffix[n.min(self.horizon + 1)]
    }

    /// Computed part of `σ1(n) = Σ_{k>n} k h_k`.
    pub fn sigma1_computed(&self, n: usize) -> f64 {
        self.sig1_suffix[n.min(self.horizon + 1)]
    }

    /// Certified upper bound on `σ0(n)`, or `None` when the unknown tail
    /// cannot be bounded (`q >= 1` with a nonzero tail certificate).
    pub fn sigma0(&self, n: usize) -> Option<f64> {
        if self.op.tail().is_zero() {
            return Some(self.sigma0_computed(n));
        }
        // σ0(n) <= C Σ_{k>n} (q̂_{k-1} + q̂_k) <= 2C Σ_{k>=n} q̂_k
        //        <= 2C Σ_{j >= (n-1)p+1} q_j.
        let ceff = self.efficient?;
        let start = ((n as i64 - 1) * self.p as i64 + 1).max(1);
        Some(2.0 * ceff * self.op.q0_tail(start))
    }

    /// Certified upper bound on `σ1(n)`; requires a first-moment certificate.
    pub fn sigma1(&self, n: usize) -> Option<f64> {
        if self.op.tail().is_zero() {
            return Some(self.sigma1_computed(n));
        }
        let ceff = self.efficient?;
        let start = ((n as i64 - 1) * self.p as i64 + 1).max(1);
        Some(2.0 * ceff * self.op.q1_tail(start).ok()?)
    }

    /// Certified upper bound on `κ(n) = Σ_{j>=n} g_j`.
    ///
    /// For tailed operators this uses `g_j <= (C/2)(3-q)/(1-q) (q̂_j + q̂_{j+1})`,
    /// which follows from `I - C̃_j = L_j A_{j+1}^{-1} (I - A_{j+1} C_j) L_{j+1}^{-1}`
    /// together with `‖A^{-1}‖ <= (1-q)^{-1}` and `‖I - A_{j+1} C_j‖ <=
    /// (1 + q)(q̂_j + q̂_{j+1})`.
    pub fn kappa(&self, n: usize) -> Option<f64> {
        let computed = self.kappa_suffix[n.min(self.horizon + 1)];
        if self.op.tail().is_zero() {
            return Some(computed);
        }
        let ceff = self.efficient?;
        let q = self.q_sup;
        let kg = 0.5 * ceff * (3.0 - q) / (1.0 - q);
        let start = ((n as i64 - 1) * self.p as i64 + 1).max(1);
        Some(2.0 * kg * self.op.q0_tail(start))
    }

    /// `κ(n, m) = Π_{j=1}^{m-1} (1 + κ(n+j))`.
    pub fn kappa_interval(&self, n: usize, m: usize) -> Option<f64> {
        let mut prod = 1.0;
        for j in 1..m {
            prod *= 1.0 + self.kappa(n + j)?;
        }
        Some(prod)
    }
}
