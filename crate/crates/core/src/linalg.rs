//! Small dense helpers on complex matrices.
//!
//! All norm computations in the crate use the row norm
//! `‖T‖ = max_k Σ_j |t_{kj}|`, the norm in which the block-size bounds
//! `max(‖A_k - I‖, ‖B_k‖, ‖C_k - I‖) <= q̂_k` are stated.

use crate::{C64, CMat};

/// Row norm (maximum absolute row sum).
pub fn row_norm(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for i in 0..m.nrows() {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            s += m[(i, j)].norm();
        }
        best = best.max(s);
    }
    best
}

/// `‖m - I‖` in the row norm.
pub fn row_norm_minus_identity(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for i in 0..m.nrows() {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            let v = if i == j {
                m[(i, j)] - C64::new(1.0, 0.0)
            } else {
                m[(i, j)]
            };
            s += v.norm();
        }
        best = best.max(s);
    }
    best
}

/// Determinant by LU with partial pivoting.
pub fn det_lu(m: &CMat) -> C64 {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut a = m.clone();
    let mut det = C64::new(1.0, 0.0);
    for k in 0..n {
        let mut piv = k;
        let mut best = a[(k, k)].norm();
        for i in k + 1..n {
            let v = a[(i, k)].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != k {
            a.swap_rows(piv, k);
            det = -det;
        }
        det *= a[(k, k)];
        let inv = C64::new(1.0, 0.0) / a[(k, k)];
        for i in k + 1..n {
            let f = a[(i, k)] * inv;
            if f != C64::new(0.0, 0.0) {
                for j in k + 1..n {
                    let s = a[(k, j)];
                    a[(i, j)] -= f * s;
                }
            }
        }
    }
    det
}

/// Adjugate matrix (transpose of cofactors), stable at singular points.
///
/// `d/dz det M(z) = tr(adj(M) M'(z))`, which is what Newton refinement of
/// `γ = det Δ` needs right at a zero of the determinant.
pub fn adjugate(m: &CMat) -> CMat {
    let n = m.nrows();
    if n == 1 {
        return CMat::identity(1, 1);
    }
    let mut adj = CMat::zeros(n, n);
    let mut minor = CMat::zeros(n - 1, n - 1);
    for i in 0..n {
        for j in 0..n {
            for (mi, si) in (0..n).filter(|&r| r != i).enumerate() {
                for (mj, sj) in (0..n).filter(|&c| c != j).enumerate() {
                    minor[(mi, mj)] = m[(si, sj)];
                }
            }
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // adj[j][i]: transpose of the cofactor matrix
            adj[(j, i)] = det_lu(&minor) * C64::new(sign, 0.0);
        }
    }
    adj
}

/// Inverse of an upper triangular matrix by back substitution.
pub fn invert_upper_triangular(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    let mut inv = CMat::zeros(n, n);
    for col in 0..n {
        for row in (0..=col).rev() {
            let mut s = if row == col {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            for k in row + 1..=col {
                s -= m[(row, k)] * inv[(k, col)];
            }
            if m[(row, row)] == C64::new(0.0, 0.0) {
                return None;
            }
            inv[(row, col)] = s / m[(row, row)];
        }
    }
    Some(inv)
}

/// Inverse of a lower triangular matrix by forward substitution.
pub fn invert_lower_triangular(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    let mut inv = CMat::zeros(n, n);
    for col in 0..n {
        for row in col..n {
            let mut s = if row == col {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            for k in col..row {
                s -= m[(row, k)] * inv[(k, col)];
            }
            if m[(row, row)] == C64::new(0.0, 0.0) {
                return None;
            }
            inv[(row, col)] = s / m[(row, row)];
        }
    }
    Some(inv)
}

pub fn is_finite_c(v: C64) -> bool {
    v.re.is_finite() && v.im.is_finite()
}
