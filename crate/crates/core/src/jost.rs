//! The matrix-valued Jost solution.
//!
//! `V_n(z)` is the unique solution of the discrete integral equation
//! `V_n = z^n I + Σ_{k>n} J(n,k,z) V_k` with kernel
//! `J(n,k,z) = -g(n,k,z) B̃_k + g(n,k-1,z) (I - C̃_{k-1})`, where `g` is the
//! Green kernel of the free second-order difference operator. Two independent
//! routes are implemented:
//!
//! * successive approximations on the rescaled equation
//!   `Ṽ_n = I + Σ_{k>n} J̃(n,k,z) Ṽ_k`, `Ṽ_n = z^{-n} V_n`, with the
//!   factorial majorants `(φ(z)σ0(n))^j/(j-1)!` (away from `±1`) and
//!   `σ1(n)^j/(j-1)!` (on the closed disk, first moment finite);
//! * backward recurrences for the Taylor coefficients `K(n,j)` of `Ṽ_n`,
//!   giving the Jost function `Δ(z) = I + Σ_j K(0,j) z^j` as a power series.
//!
//! Both attach certified a posteriori bounds where the data allow it.

use serde::{Deserialize, Serialize};

use crate::coeffs::NormalizedCoefficients;
use crate::error::{Error, Result};
use crate::linalg::row_norm;
use crate::{C64, CMat};

/// Exclusion radius around `z = ±1` inside which only the first-moment
/// route is attempted (`φ(z) = 2|z|/|z²-1|` blows up).
pub const EXCLUSION_EPS: f64 = 1e-3;

const SERIES_CAP: usize = 100_000;

/// Green kernel of the free operator:
/// `g(n,k,z) = (z^{k-n} - z^{n-k}) / (z - 1/z)` for `k > n`, zero otherwise.
pub fn green_kernel(n: i64, k: i64, z: C64) -> Result<C64> {
    let zero = C64::new(0.0, 0.0);
    if z == zero || z == C64::new(1.0, 0.0) || z == C64::new(-1.0, 0.0) {
        return Err(Error::KernelPole(z));
    }
    if k <= n {
        return Ok(zero);
    }
    let m = (k - n) as i32;
    Ok((z.powi(m) - z.powi(-m)) / (z - z.inv()))
}

/// `g̃(m, z) = z^m g(n, n+m, z) = z (1 + z² + ... + z^{2(m-1)})` for `m >= 1`,
/// zero for `m <= 0`; polynomial in `z`, regular at `±1`.
fn gtilde_table(max_m: usize, z: C64) -> Vec<C64> {
    let mut table = vec![C64::new(0.0, 0.0); max_m + 1];
    let z2 = z * z;
    let mut partial = C64::new(0.0, 0.0);
    let mut z2pow = C64::new(1.0, 0.0);
    for m in 1..=max_m {
        partial += z2pow;
        z2pow *= z2;
        table[m] = z * partial;
    }
    table
}

/// `φ(z) = 2|z| / |z² - 1|`, the kernel envelope away from `±1`.
pub fn phi(z: C64) -> f64 {
    2.0 * z.norm() / (z * z - C64::new(1.0, 0.0)).norm()
}

/// Unrescaled kernel `J(n,k,z)`; shares the Green kernel poles.
pub fn kernel_j(coeffs: &NormalizedCoefficients, n: i64, k: i64, z: C64) -> Result<CMat> {
    let g1 = green_kernel(n, k, z)?;
    let g2 = green_kernel(n, k - 1, z)?;
    let p = coeffs.p();
    let mut out = CMat::zeros(p, p);
    if k >= 1 {
        out -= coeffs.btilde(k as usize).scale_c(g1);
        let eye_minus_c = CMat::identity(p, p) - coeffs.ctilde((k - 1) as usize);
        out += eye_minus_c.scale_c(g2);
    }
    Ok(out)
}

/// Rescaled kernel `J̃(n,k,z) = z^{k-n} J(n,k,z)`, polynomial in `z` and
/// defined on the whole closed disk including `±1`.
pub fn kernel_jtilde(coeffs: &NormalizedCoefficients, n: i64, k: i64, z: C64) -> CMat {
    let p = coeffs.p();
    if k <= n || k < 1 {
        return CMat::zeros(p, p);
    }
    let m = (k - n) as usize;
    let gt = gtilde_table(m, z);
    let mut out = coeffs.btilde(k as usize).scale_c(-gt[m]);
    let eye_minus_c = CMat::identity(p, p) - coeffs.ctilde((k - 1) as usize);
    out += eye_minus_c.scale_c(z * gt[m - 1]);
    out
}

trait ScaleC {
    fn scale_c(&self, s: C64) -> CMat;
}

impl ScaleC for CMat {
    fn scale_c(&self, s: C64) -> CMat {
        self.map(|v| v * s)
    }
}

/// Which evaluation path produced a `JostEvaluation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Iteration,
    Taylor,
}

/// Jost solution values at one spectral point `z`.
#[derive(Debug, Clone)]
pub struct JostEvaluation {
    pub z: C64,
    /// `V_0 .. V_{n_max}`.
    pub v: Vec<CMat>,
    /// `Ṽ_n = z^{-n} V_n`.
    pub vtilde: Vec<CMat>,
    /// Certified bound on `‖Ṽ_0 - I‖` (the sharpest available of the
    /// deviation bounds); `None` when the tail cannot be certified.
    pub error_bound: Option<f64>,
    pub route: Route,
    /// Remainder of the truncated Neumann/Taylor series (certified when
    /// `certified` is set, otherwise a heuristic estimate).
    pub series_tail: f64,
    pub certified: bool,
}

/// Majorant-certified remainder of `Σ_{i>j} x^i/(i-1)!`, computed in logs to
/// survive large `x`.
fn majorant_remainder(x: f64, j: usize, ln_fact_j: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    ((j as f64 + 1.0) * x.ln() - ln_fact_j + x).exp()
}

/// Deviation bound `x e^x` with `x = φ(z) σ0(0)` or `σ1(0)`, whichever
/// certified route is applicable at this `z`.
fn deviation_bound(coeffs: &NormalizedCoefficients, z: C64, n: usize) -> Option<f64> {
    let away = (z - C64::new(1.0, 0.0)).norm().min((z + C64::new(1.0, 0.0)).norm()) > EXCLUSION_EPS;
    let route_i = if away {
        coeffs.sigma0(n).map(|s| {
            let x = phi(z) * s;
            x * x.exp()
        })
    } else {
        None
    };
    let route_ii = coeffs.sigma1(n).map(|s| s * s.exp());
    match (route_i, route_ii) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Solve the rescaled integral equation by successive approximations.
///
/// Returns `Ṽ_n` and `V_n = z^n Ṽ_n` for `n = 0..=n_max`, summing the
/// Neumann series until the factorial majorant certifies a remainder below
/// `tol` (spatial sums run over the coefficient support, which is exact for
/// zero-tail operators).
pub fn jost_iterate(
    coeffs: &NormalizedCoefficients,
    z: C64,
    n_max: usize,
    tol: f64,
) -> Result<JostEvaluation> {
    if z == C64::new(0.0, 0.0) {
        return Err(Error::RouteUnavailable {
            z,
            reason: "z = 0 is excluded (Ṽ ≡ I there; λ = z + 1/z has no finite value)".into(),
        });
    }
    if z.norm() > 1.0 + 1e-12 {
        return Err(Error::RouteUnavailable {
            z,
            reason: "evaluations are restricted to the closed unit disk".into(),
        });
    }
    let away = (z - C64::new(1.0, 0.0)).norm().min((z + C64::new(1.0, 0.0)).norm()) > EXCLUSION_EPS;

    // Certified majorant base x: φ(z)σ0(0) away from ±1, σ1(0) otherwise.
    let (majorant_x, certified) = if away {
        match coeffs.sigma0(0) {
            Some(s) => (phi(z) * s, true),
            None => (phi(z) * coeffs.sigma0_computed(0), false),
        }
    } else {
        match coeffs.sigma1(0) {
            Some(s) => (s, true),
            None => {
                return Err(Error::RouteUnavailable {
                    z,
                    reason: "inside the ±1 exclusion radius the first-moment route is required, \
                             and Σ k q_k is not certified"
                        .into(),
                })
            }
        }
    };

    let p = coeffs.p();
    let eye = CMat::identity(p, p);
    let hor = coeffs.horizon();

    // Kernel matrices J̃(n, k, z) for 0 <= n < k <= hor.
    let gt = gtilde_table(hor + 1, z);
    let eye_minus_c: Vec<CMat> = (0..hor).map(|k| &eye - coeffs.ctilde(k)).collect();
    let jt: Vec<Vec<CMat>> = (0..hor)
        .map(|n| {
            (n + 1..=hor)
                .map(|k| {
                    let m = k - n;
                    let mut out = coeffs.btilde(k).scale_c(-gt[m]);
                    out += eye_minus_c[k - 1].scale_c(z * gt[m - 1]);
                    out
                })
                .collect()
        })
        .collect();

    // F_{n,1} = G_n = Σ_k J̃(n,k,z).
    let mut f_prev: Vec<CMat> = (0..hor)
        .map(|n| {
            let mut acc = CMat::zeros(p, p);
            for mat in &jt[n] {
                acc += mat;
            }
            acc
        })
        .collect();
    let mut acc = f_prev.clone();

    let mut j = 1usize;
    let mut ln_fact = 0.0f64; // ln(j!)
    let series_tail = loop {
        ln_fact += (j as f64).ln();
        let rem = majorant_remainder(majorant_x, j, ln_fact);
        if rem.is_finite() && rem < tol {
            break rem;
        }
        let biggest = f_prev.iter().map(row_norm).fold(0.0, f64::max);
        if biggest == 0.0 {
            break 0.0; // series terminated exactly
        }
        if !certified && biggest < tol * 1e-3 {
            break biggest;
        }
        if j >= SERIES_CAP {
            return Err(Error::NonConvergentMajorant {
                majorant: majorant_x,
                tol,
            });
        }
        j += 1;
        let f_next: Vec<CMat> = (0..hor)
            .map(|n| {
                let mut s = CMat::zeros(p, p);
                for (idx, k) in (n + 1..=hor).enumerate() {
                    if k < hor {
                        s += &jt[n][idx] * &f_prev[k];
                    }
                }
                s
            })
            .collect();
        for (a, f) in acc.iter_mut().zip(&f_next) {
            *a += f;
        }
        f_prev = f_next;
    };

    let mut vtilde = Vec::with_capacity(n_max + 1);
    let mut v = Vec::with_capacity(n_max + 1);
    let mut zn = C64::new(1.0, 0.0);
    for n in 0..=n_max {
        let vt = if n < hor { &eye + &acc[n] } else { eye.clone() };
        v.push(vt.scale_c(zn));
        vtilde.push(vt);
        zn *= z;
    }

    Ok(JostEvaluation {
        z,
        v,
        vtilde,
        error_bound: deviation_bound(coeffs, z, 0),
        route: Route::Iteration,
        series_tail,
        certified,
    })
}

/// One application of the integral-equation map `F ↦ G + J̃ F` from an
/// arbitrary starting table; repeated application converges to the same
/// fixed point the Neumann series sums to (uniqueness).
#[cfg(test)]
pub(crate) fn contraction_sweeps(
    coeffs: &NormalizedCoefficients,
    z: C64,
    start: Vec<CMat>,
    sweeps: usize,
) -> Vec<CMat> {
    let hor = coeffs.horizon();
    let p = coeffs.p();
    assert_eq!(start.len(), hor);
    let mut f = start;
    for _ in 0..sweeps {
        let mut next = Vec::with_capacity(hor);
        for n in 0..hor {
            let mut s = CMat::zeros(p, p);
            for k in n + 1..=hor {
                let jt = kernel_jtilde(coeffs, n as i64, k as i64, z);
                if k < hor {
                    s += &jt * &f[k];
                }
                s += &jt; // J̃ (G_n term) + J̃ F_k, since Ṽ_k = I + F_k
            }
            next.push(s);
        }
        f = next;
    }
    f
}

/// Taylor coefficients of the rescaled Jost solution.
#[derive(Debug, Clone)]
pub struct TaylorTable {
    p: usize,
    /// `K(n, j)` stored as `k[j-1][n]` for `n = 0..n_rows`, `j = 1..=j_max`;
    /// zero outside.
    k: Vec<Vec<CMat>>,
    n_rows: usize,
    j_max: usize,
    /// `δ(j) = K(0, j)`, Taylor coefficients of `Δ(z) - I`.
    delta: Vec<CMat>,
    /// Certified bound on `Σ_{j>j_max} ‖δ(j)‖` on the closed disk
    /// (zero for zero-tail operators once `j_max` covers the exact degree).
    tail_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct TaylorOptions {
    /// Initial truncation order; extended automatically until the δ-tail
    /// bound certifies `tol`, up to `j_cap`.
    pub j_max: usize,
    pub j_cap: usize,
    pub tol: f64,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        TaylorOptions {
            j_max: 64,
            j_cap: 4096,
            tol: 1e-12,
        }
    }
}

/// Build the Taylor table by the backward coefficient recurrences.
///
/// Requires the first moment `Σ k q_k` (continuity on the closed disk); the
/// table is exact for zero-tail operators once the truncation order covers
/// the polynomial degree `2·horizon` of `Ṽ`.
pub fn jost_taylor(coeffs: &NormalizedCoefficients, opts: TaylorOptions) -> Result<TaylorTable> {
    let zero_tail = coeffs.operator().tail().is_zero();
    if !zero_tail {
        // hypothesis (Σ k q_k < ∞) must at least be certifiable
        coeffs.operator().q1_tail(1)?;
    }
    let hor = coeffs.horizon();
    let exact_degree = 2 * hor;
    let mut j_max = if zero_tail {
        opts.j_max.max(exact_degree)
    } else {
        opts.j_max
    };

    loop {
        let table = build_taylor(coeffs, j_max);
        let tail = delta_tail_bound(coeffs, j_max, zero_tail, exact_degree);
        match tail {
            Some(t) if t > opts.tol && j_max < opts.j_cap => {
                j_max = (j_max * 2).min(opts.j_cap);
                continue;
            }
            _ => {
                return Ok(TaylorTable {
                    p: coeffs.p(),
                    n_rows: hor,
                    j_max,
                    delta: table[0..j_max].iter().map(|col| col[0].clone()).collect(),
                    k: table,
                    tail_bound: tail,
                });
            }
        }
    }
}

fn build_taylor(coeffs: &NormalizedCoefficients, j_max: usize) -> Vec<Vec<CMat>> {
    let p = coeffs.p();
    let hor = coeffs.horizon();
    let eye = CMat::identity(p, p);
    let zero = CMat::zeros(p, p);
    // The normalized recurrence written for Ṽ_n = z^{-n} V_n reads
    //   Ṽ_n = (z² + 1 - B̃_{n+1} z) Ṽ_{n+1} - C̃_{n+1} z² Ṽ_{n+2},
    // so matching powers of z (K(·,0) = I, K(·,j<0) = 0, K(n,·) = 0 for
    // n >= horizon) and solving downward in n:
    //   K(n,1) = K(n+1,1) - B̃_{n+1}
    //   K(n,2) = K(n+1,2) + I - C̃_{n+1} - B̃_{n+1} K(n+1,1)
    //   K(n,j) = K(n+1,j) + K(n+1,j-2) - B̃_{n+1} K(n+1,j-1) - C̃_{n+1} K(n+2,j-2)
    let mut k: Vec<Vec<CMat>> = Vec::with_capacity(j_max);
    let col = |table: &Vec<Vec<CMat>>, j: usize, n: usize| -> CMat {
        debug_assert!(j >= 1 && j <= table.len());
        if n >= hor {
            zero.clone()
        } else {
            table[j - 1][n].clone()
        }
    };
    for j in 1..=j_max {
        let mut column = vec![zero.clone(); hor];
        for n in (0..hor).rev() {
            let same_col_above = if n + 1 >= hor {
                zero.clone()
            } else {
                column[n + 1].clone()
            };
            column[n] = match j {
                1 => same_col_above - coeffs.btilde(n + 1),
                2 => {
                    same_col_above + &eye
                        - coeffs.ctilde(n + 1)
                        - coeffs.btilde(n + 1) * col(&k, 1, n + 1)
                }
                _ => {
                    same_col_above + col(&k, j - 2, n + 1)
                        - coeffs.btilde(n + 1) * col(&k, j - 1, n + 1)
                        - coeffs.ctilde(n + 1) * col(&k, j - 2, n + 2)
                }
            };
        }
        k.push(column);
    }
    k
}

/// Certified `Σ_{j>J} ‖δ(j)‖` on the closed disk: from `‖K(0,j)‖ <=
/// κ(0,j) κ(⌊j/2⌋) <= Π_i (1 + κ(i)) · κ(⌊j/2⌋)` and
/// `Σ_{j>J} κ(⌊j/2⌋) <= 2 Σ_{m >= ⌊(J+1)/2⌋} κ(m)`.
fn delta_tail_bound(
    coeffs: &NormalizedCoefficients,
    j_max: usize,
    zero_tail: bool,
    exact_degree: usize,
) -> Option<f64> {
    if zero_tail && j_max >= exact_degree {
        return Some(0.0);
    }
    // Π (1 + κ(i)) <= exp(Σ_i κ(i)) with Σ_{i>=1} κ(i) = Σ_j j g_j.
    let hor = coeffs.horizon();
    let mut sum_j_g: f64 = (1..=hor).map(|j| j as f64 * coeffs.g(j)).sum();
    if !zero_tail {
        // tail of Σ j g_j via g_j <= K_g (q̂_j + q̂_{j+1})
        let ceff = coeffs.efficient_constant()?;
        let q = coeffs.q_sup();
        let kg = 0.5 * ceff * (3.0 - q) / (1.0 - q);
        let start = (hor as i64 * coeffs.p() as i64 + 1).max(1);
        sum_j_g += 2.0 * kg * coeffs.operator().q1_tail(start).ok()?;
    }
    let prod = sum_j_g.exp();
    // Σ_{m >= M} κ(m) = Σ_{j >= M} (j - M + 1) g_j <= Σ_{j >= M} j g_j.
    let m0 = (j_max + 1) / 2;
    let mut sum_kappa_tail: f64 = (m0.max(1)..=hor).map(|j| j as f64 * coeffs.g(j)).sum();
    if !zero_tail {
        let ceff = coeffs.efficient_constant()?;
        let q = coeffs.q_sup();
        let kg = 0.5 * ceff * (3.0 - q) / (1.0 - q);
        let start = ((m0 as i64 - 1) * coeffs.p() as i64 + 1).max(1);
        sum_kappa_tail += 2.0 * kg * coeffs.operator().q1_tail(start).ok()?;
    }
    Some(prod * 2.0 * sum_kappa_tail)
}

impl TaylorTable {
    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn tail_bound(&self) -> Option<f64> {
        self.tail_bound
    }

    /// `K(n, j)` (zero outside the stored ranges).
    pub fn coefficient(&self, n: usize, j: usize) -> CMat {
        if j >= 1 && j <= self.j_max && n < self.n_rows {
            self.k[j - 1][n].clone()
        } else {
            CMat::zeros(self.p, self.p)
        }
    }

    /// Taylor coefficients `δ(j)` of `Δ(z) - I`.
    pub fn delta_coefficients(&self) -> &[CMat] {
        &self.delta
    }

    /// `Ṽ_n(z)` by Horner evaluation of row `n`.
    pub fn vtilde_at(&self, n: usize, z: C64) -> CMat {
        let eye = CMat::identity(self.p, self.p);
        if n >= self.n_rows {
            return eye;
        }
        let mut acc = CMat::zeros(self.p, self.p);
        for j in (1..=self.j_max).rev() {
            acc += &self.k[j - 1][n];
            acc = acc.scale_c(z);
        }
        eye + acc
    }

    /// `Δ(z) = Ṽ_0(z)`.
    pub fn delta_at(&self, z: C64) -> CMat {
        self.vtilde_at(0, z)
    }

    /// `Δ'(z)` by differentiating the series.
    pub fn delta_prime_at(&self, z: C64) -> CMat {
        let mut acc = CMat::zeros(self.p, self.p);
        for j in (2..=self.j_max).rev() {
            acc += self.delta[j - 1].scale_c(C64::new(j as f64, 0.0));
            acc = acc.scale_c(z);
        }
        if self.j_max >= 1 {
            acc += &self.delta[0];
        }
        acc
    }

    /// Full evaluation (route `Taylor`) with the same bound attachments as
    /// the iteration route.
    pub fn evaluation(
        &self,
        coeffs: &NormalizedCoefficients,
        z: C64,
        n_max: usize,
    ) -> JostEvaluation {
        let mut vtilde = Vec::with_capacity(n_max + 1);
        let mut v = Vec::with_capacity(n_max + 1);
        let mut zn = C64::new(1.0, 0.0);
        for n in 0..=n_max {
            let vt = self.vtilde_at(n, z);
            v.push(vt.scale_c(zn));
            vtilde.push(vt);
            zn *= z;
        }
        let tail = self.tail_bound;
        JostEvaluation {
            z,
            v,
            vtilde,
            error_bound: deviation_bound(coeffs, z, 0),
            route: Route::Taylor,
            series_tail: tail.unwrap_or(f64::NAN),
            certified: tail.is_some(),
        }
    }
}

/// Explicit a posteriori bound on `‖V_n - z^n I‖` using the efficient
/// constant `2 exp{(2-q)/(1-q) Q0}`; requires `q = sup q_n < 1`.
pub fn jost_error_bound(coeffs: &NormalizedCoefficients, z: C64, n: usize) -> Result<f64> {
    let q = coeffs.q_sup();
    if q >= 1.0 {
        return Err(Error::QTooLarge { q });
    }
    let zn = z.norm().powi(n as i32);
    let away = (z - C64::new(1.0, 0.0)).norm().min((z + C64::new(1.0, 0.0)).norm()) > EXCLUSION_EPS;
    if away {
        let s = coeffs
            .sigma0(n)
            .ok_or_else(|| Error::TailUnavailable("σ0".into()))?;
        let x = phi(z) * s;
        Ok(zn * x * x.exp())
    } else {
        let s = coeffs
            .sigma1(n)
            .ok_or_else(|| Error::TailUnavailable("σ1 (first moment)".into()))?;
        Ok(zn * s * s.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{normalize, NormalizeOptions};
    use crate::linalg::row_norm_minus_identity;
    use crate::operator::{BandedOperator, Tail};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn coeffs_for(op: &BandedOperator) -> NormalizedCoefficients {
        normalize(op, NormalizeOptions::default()).unwrap()
    }

    #[test]
    fn green_kernel_basic_values() {
        let z = c(0.5, 0.0);
        assert_eq!(green_kernel(3, 2, z).unwrap(), c(0.0, 0.0));
        assert!((green_kernel(5, 6, z).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((green_kernel(0, 2, z).unwrap() - c(2.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn green_kernel_reports_poles() {
        for z in [c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)] {
            assert!(matches!(green_kernel(0, 1, z), Err(Error::KernelPole(_))));
        }
    }

    #[test]
    fn green_kernel_recurrences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let lambda = |z: C64| z + z.inv();
        for _ in 0..2000 {
            let r = 0.6 + 0.3 * rng.random::<f64>();
            let th = std::f64::consts::TAU * rng.random::<f64>();
            let z = C64::from_polar(r, th);
            let n = rng.random_range(0..30i64);
            let k = (n + rng.random_range(-5..9i64)).max(0);
            let g = |a: i64, b: i64| green_kernel(a, b, z).unwrap();
            let kron = if n == k { c(1.0, 0.0) } else { c(0.0, 0.0) };
            let r1 = g(n, k + 1) + g(n, k - 1) - lambda(z) * g(n, k) - kron;
            assert!(r1.norm() < 1e-12, "(2.9) residual {} at n={n} k={k}", r1.norm());
            if n >= 1 {
                let r2 = g(n - 1, k) + g(n + 1, k) - lambda(z) * g(n, k) - kron;
                assert!(r2.norm() < 1e-12, "(2.10) residual {}", r2.norm());
            }
        }
    }

    #[test]
    fn kernel_vanishes_on_diagonal_and_for_free_operator() {
        let op = BandedOperator::free(2);
        let coeffs = coeffs_for(&op);
        let z = c(0.3, 0.2);
        for n in 0..4i64 {
            assert_eq!(row_norm(&kernel_jtilde(&coeffs, n, n, z)), 0.0);
            for k in n + 1..6 {
                assert_eq!(row_norm(&kernel_jtilde(&coeffs, n, k, z)), 0.0);
                assert_eq!(row_norm(&kernel_j(&coeffs, n, k, z).unwrap()), 0.0);
            }
        }
    }

    #[test]
    fn kernel_single_site_closed_form() {
        let v = c(0.8, -0.2);
        let op = BandedOperator::from_entries(1, &[(1, 1, v)], Tail::Zero).unwrap();
        let coeffs = coeffs_for(&op);
        for z in [c(0.5, 0.0), c(0.2, 0.6), c(1.0, 0.0)] {
            let jt = kernel_jtilde(&coeffs, 0, 1, z);
            assert!((jt[(0, 0)] + v * z).norm() < 1e-14, "J̃(0,1,z) = -v z");
        }
    }

    #[test]
    fn kernel_bound_2_15() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let op = BandedOperator::from_entries(
            2,
            &[
                (1, 1, c(0.3, 0.1)),
                (2, 3, c(-0.2, 0.2)),
                (3, 5, c(1.2, 0.1)),
                (4, 2, c(0.9, -0.3)),
            ],
            Tail::Zero,
        )
        .unwrap();
        let coeffs = coeffs_for(&op);
        for _ in 0..200 {
            let r = rng.random::<f64>();
            let th = std::f64::consts::TAU * rng.random::<f64>();
            let z = C64::from_polar(r, th);
            let n = rng.random_range(0..4i64);
            let k = n + rng.random_range(1..5i64);
            let envelope = (k - n) as f64;
            let envelope = envelope.min(2.0 / (z * z - c(1.0, 0.0)).norm());
            let bound = z.norm() * envelope * coeffs.h(k as usize) + 1e-14;
            let jt = row_norm(&kernel_jtilde(&coeffs, n, k, z));
            assert!(jt <= bound, "‖J̃‖ = {jt} > {bound} at n={n}, k={k}, z={z}");
        }
    }

    #[test]
    fn free_operator_jost_is_identity() {
        for p in [1usize, 2, 3] {
            let coeffs = coeffs_for(&BandedOperator::free(p));
            let ev = jost_iterate(&coeffs, c(0.4, 0.3), 4, 1e-12).unwrap();
            for vt in &ev.vtilde {
                assert_eq!(row_norm_minus_identity(vt), 0.0);
            }
            assert_eq!(ev.error_bound, Some(0.0));
            assert_eq!(ev.series_tail, 0.0);
        }
    }

    #[test]
    fn single_site_jost_closed_form() {
        let v = c(0.8, 0.0);
        let op = BandedOperator::from_entries(1, &[(1, 1, v)], Tail::Zero).unwrap();
        let coeffs = coeffs_for(&op);
        let z = c(0.5, 0.0);
        let ev = jost_iterate(&coeffs, z, 3, 1e-12).unwrap();
        assert!((ev.vtilde[0][(0, 0)] - (c(1.0, 0.0) - v * z)).norm() < 1e-14);
        for n in 1..=3 {
            assert!((ev.vtilde[n][(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    fn random_operator(p: usize, scale: f64, rows: i64, seed: u64) -> BandedOperator {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for i in 1..=rows {
            for r in -(p as i64)..=(p as i64) {
                if i + r >= 1 && rng.random::<f64>() < 0.7 {
                    let v = if r.unsigned_abs() as usize == p {
                        c(
                            1.0 + scale * (rng.random::<f64>() - 0.5),
                            scale * (rng.random::<f64>() - 0.5),
                        )
                    } else {
                        c(
                            scale * (rng.random::<f64>() - 0.5),
                            scale * (rng.random::<f64>() - 0.5),
                        )
                    };
                    entries.push((i, i + r, v));
                }
            }
        }
        BandedOperator::from_entries(p, &entries, Tail::Zero).unwrap()
    }

    /// Any computed evaluation satisfies the three-term recurrence
    /// `V_{k-1} + B̃_k V_k + C̃_k V_{k+1} = λ V_k`.
    #[test]
    fn jost_satisfies_three_term_recurrence() {
        for seed in 0..4u64 {
            let op = random_operator(2, 0.5, 8, seed);
            let coeffs = coeffs_for(&op);
            for z in [c(0.5, 0.1), c(-0.3, 0.4), c(0.1, -0.7)] {
                let ev = jost_iterate(&coeffs, z, coeffs.horizon() + 2, 1e-13).unwrap();
                let lambda = z + z.inv();
                let floor = 1e-12 * (1.0 + ev.v.iter().map(row_norm).fold(0.0, f64::max));
                let allowed = 10.0 * ev.error_bound.unwrap_or(0.0) + floor;
                for k in 1..ev.v.len() - 1 {
                    let res = &ev.v[k - 1] + coeffs.btilde(k) * &ev.v[k]
                        + coeffs.ctilde(k) * &ev.v[k + 1]
                        - ev.v[k].scale_c(lambda);
                    assert!(
                        row_norm(&res) <= allowed,
                        "seed {seed} z={z} k={k}: residual {} > {allowed}",
                        row_norm(&res)
                    );
                }
            }
        }
    }

    /// `‖Ṽ_n - I‖ <= φσ0(n) e^{φσ0(n)}` and `<= σ1(n) e^{σ1(n)}`.
    #[test]
    fn deviation_majorants_hold() {
        for seed in 20..26u64 {
            let op = random_operator(2, 0.4, 8, seed);
            let coeffs = coeffs_for(&op);
            for z in [c(0.3, 0.0), c(0.0, 0.3), c(-0.5, 0.2), c(0.6, 0.55)] {
                let ev = jost_iterate(&coeffs, z, coeffs.horizon() + 1, 1e-13).unwrap();
                for (n, vt) in ev.vtilde.iter().enumerate() {
                    let dev = row_norm_minus_identity(vt);
                    let x0 = phi(z) * coeffs.sigma0(n).unwrap();
                    let x1 = coeffs.sigma1(n).unwrap();
                    let slack = 1e-12 + ev.series_tail;
                    assert!(dev <= x0 * x0.exp() + slack, "(2.24x) fails at n={n}");
                    assert!(dev <= x1 * x1.exp() + slack, "(2.26a) fails at n={n}");
                }
            }
        }
    }

    /// Perturbing the starting table of the contraction converges to the
    /// same fixed point (uniqueness).
    #[test]
    fn uniqueness_under_perturbed_start() {
        let op = random_operator(1, 0.6, 6, 9);
        let coeffs = coeffs_for(&op);
        let z = c(0.4, 0.35);
        let ev = jost_iterate(&coeffs, z, 2, 1e-14).unwrap();
        let hor = coeffs.horizon();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let start: Vec<CMat> = (0..hor)
            .map(|_| {
                CMat::from_fn(1, 1, |_, _| c(rng.random::<f64>(), rng.random::<f64>()))
            })
            .collect();
        let fixed = contraction_sweeps(&coeffs, z, start, hor + 2);
        assert!((c(1.0, 0.0) + fixed[0][(0, 0)] - ev.vtilde[0][(0, 0)]).norm() < 1e-12);
    }

    #[test]
    fn taylor_table_free_and_single_site() {
        let coeffs = coeffs_for(&BandedOperator::free(2));
        let table = jost_taylor(&coeffs, TaylorOptions::default()).unwrap();
        for j in 1..=table.j_max() {
            for n in 0..4 {
                assert_eq!(row_norm(&table.coefficient(n, j)), 0.0);
            }
        }
        let v = c(0.7, 0.1);
        let op = BandedOperator::from_entries(1, &[(1, 1, v)], Tail::Zero).unwrap();
        let coeffs = coeffs_for(&op);
        let table = jost_taylor(&coeffs, TaylorOptions::default()).unwrap();
        assert!((table.coefficient(0, 1)[(0, 0)] + v).norm() < 1e-15, "K(0,1) = -v");
        for j in 2..=table.j_max() {
            assert_eq!(row_norm(&table.coefficient(0, j)), 0.0);
        }
        let z = c(0.4, 0.0);
        assert!((table.delta_at(z)[(0, 0)] - (c(1.0, 0.0) - v * z)).norm() < 1e-15);
        assert!((table.delta_prime_at(z)[(0, 0)] + v).norm() < 1e-15);
    }

    /// Two-path agreement between iteration and Taylor evaluation.
    #[test]
    fn taylor_agrees_with_iteration() {
        for seed in 30..34u64 {
            let op = random_operator(2, 0.5, 7, seed);
            let coeffs = coeffs_for(&op);
            let table = jost_taylor(&coeffs, TaylorOptions::default()).unwrap();
            assert_eq!(table.tail_bound(), Some(0.0), "zero-tail table is exact");
            for z in [c(0.4, 0.0), c(-0.2, 0.3), c(0.05, -0.6)] {
                let it = jost_iterate(&coeffs, z, 3, 1e-13).unwrap();
                for n in 0..=3 {
                    let diff = &table.vtilde_at(n, z) - &it.vtilde[n];
                    assert!(row_norm(&diff) < 1e-10, "routes disagree at n={n}, z={z}");
                }
            }
        }
    }

    /// `‖K(n,j)‖ <= κ(n,j) κ(n + ⌊j/2⌋)`.
    #[test]
    fn taylor_coefficient_bound_2_32() {
        for seed in 40..44u64 {
            let op = random_operator(2, 0.4, 6, seed);
            let coeffs = coeffs_for(&op);
            let table = jost_taylor(&coeffs, TaylorOptions::default()).unwrap();
            for n in 0..coeffs.horizon() {
                for j in 1..=table.j_max().min(24) {
                    let bound = coeffs.kappa_interval(n, j).unwrap()
                        * coeffs.kappa(n + j / 2).unwrap();
                    let got = row_norm(&table.coefficient(n, j));
                    assert!(
                        got <= bound + 1e-13,
                        "seed {seed} (n,j)=({n},{j}): ‖K‖={got} > {bound}"
                    );
                }
            }
        }
    }

    /// Inside the ±1 exclusion the first-moment route evaluates on the
    /// closed disk, including |z| = 1 itself.
    #[test]
    fn route_ii_near_unit_circle() {
        let v = c(0.6, 0.2);
        let op = BandedOperator::from_entries(1, &[(1, 1, v)], Tail::Zero).unwrap();
        let coeffs = coeffs_for(&op);
        for z in [c(1.0, 0.0), c(-1.0, 0.0), c(0.99995, 0.0), c(-0.9997, 2e-4)] {
            let ev = jost_iterate(&coeffs, z, 1, 1e-13).unwrap();
            assert!(ev.certified);
            assert!((ev.vtilde[0][(0, 0)] - (c(1.0, 0.0) - v * z)).norm() < 1e-13);
            // (2.20)-flavor bound applies on the closed disk
            let b = jost_error_bound(&coeffs, z, 0).unwrap();
            assert!(b.is_finite() && b > 0.0);
        }
        // |z| > 1 is out of scope
        assert!(jost_iterate(&coeffs, c(1.2, 0.0), 0, 1e-12).is_err());
        assert!(jost_iterate(&coeffs, c(0.0, 0.0), 0, 1e-12).is_err());
    }

    #[test]
    fn error_bound_examples() {
        let coeffs = coeffs_for(&BandedOperator::free(1));
        assert_eq!(jost_error_bound(&coeffs, c(0.5, 0.0), 0).unwrap(), 0.0);

        let op =
            BandedOperator::from_entries(1, &[(1, 1, c(0.5, 0.0))], Tail::Zero).unwrap();
        let coeffs = coeffs_for(&op);
        let z = c(0.5, 0.0);
        let got = jost_error_bound(&coeffs, z, 0).unwrap();
        // exact σ0(0) = h_1 = 0.5; bound = φσ0 e^{φσ0} with φ = 2/|z - 1/z|
        let x: f64 = (2.0 * 0.5) / 1.5;
        assert!((got - x * x.exp()).abs() < 1e-13);
        // never above the Q0-only version σ0(0) <= 4 e^{1.5} Q0
        let s_q = 4.0 * (1.5f64).exp() * 0.5;
        let xq = phi(z) * s_q;
        assert!(got <= xq * xq.exp());
        // monotone non-increasing in n
        let mut prev = f64::INFINITY;
        for n in 0..5 {
            let b = jost_error_bound(&coeffs, z, n).unwrap();
            assert!(b <= prev + 1e-15);
            prev = b;
        }

        let big = BandedOperator::from_entries(1, &[(1, 1, c(2.0, 0.0))], Tail::Zero).unwrap();
        let coeffs = coeffs_for(&big);
        assert!(matches!(
            jost_error_bound(&coeffs, z, 0),
            Err(Error::QTooLarge { .. })
        ));
    }

    proptest! {
        /// `g̃(m, z) = z^m g(n, n+m, z)` wherever both are defined.
        #[test]
        fn gtilde_matches_green(m in 1usize..12, re in -0.9f64..0.9, im in -0.9f64..0.9) {
            let z = c(re, im);
            prop_assume!(z.norm() > 0.05);
            prop_assume!((z - c(1.0, 0.0)).norm() > 0.05 && (z + c(1.0, 0.0)).norm() > 0.05);
            let gt = gtilde_table(m, z);
            let g = green_kernel(0, m as i64, z).unwrap();
            prop_assert!((gt[m] - z.powi(m as i32) * g).norm() < 1e-10 * (1.0 + g.norm()));
        }
    }
}
