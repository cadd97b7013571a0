//! Dense eigenvalues of general complex matrices.
//!
//! Parlett-Reinsch balancing, Householder reduction to upper Hessenberg
//! form, then explicit single-shift QR with the Wilkinson shift (complex
//! arithmetic throughout, so no double-shift machinery is needed).

use crate::error::{Error, Result};
use crate::{C64, CMat};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// All eigenvalues of a square complex matrix, sorted by `(Re, Im)`.
pub fn complex_eigenvalues(a: &CMat, balance: bool) -> Result<Vec<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigenvalues need a square matrix");
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    if balance {
        balance_in_place(&mut h);
    }
    hessenberg_in_place(&mut h);
    let mut eigs = qr_hessenberg(&mut h)?;
    eigs.sort_by(|x, y| {
        (x.re, x.im)
            .partial_cmp(&(y.re, y.im))
            .expect("finite eigenvalues")
    });
    Ok(eigs)
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable (EISPACK `balanc` without the exchange phase).
fn balance_in_place(a: &mut CMat) {
    let n = a.nrows();
    let radix = 2.0f64;
    let mut done = false;
    let mut iterations = 0;
    while !done && iterations < 100 {
        done = true;
        iterations += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            let mut c_scaled = c;
            let mut r_scaled = r;
            while c_scaled < r_scaled / radix {
                f *= radix;
                c_scaled *= radix;
                r_scaled /= radix;
            }
            while c_scaled >= r_scaled * radix {
                f /= radix;
                c_scaled /= radix;
                r_scaled *= radix;
            }
            if (c_scaled + r_scaled) < 0.95 * s && f != 1.0 {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    let v = a[(i, j)] * g;
                    a[(i, j)] = v;
                }
                for j in 0..n {
                    let v = a[(j, i)] * f;
                    a[(j, i)] = v;
                }
            }
        }
    }
}

/// Householder similarity reduction to upper Hessenberg form.
fn hessenberg_in_place(a: &mut CMat) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        // Householder vector from column k below the subdiagonal.
        let mut norm_sq = 0.0;
        for i in k + 1..n {
            norm_sq += a[(i, k)].norm_sqr();
        }
        let alpha = a[(k + 1, k)];
        let col_norm = norm_sq.sqrt();
        if col_norm == 0.0 {
            continue;
        }
        // v = x + sign(x_0) ‖x‖ e_1, with complex sign alpha/|alpha|
        let sign = if alpha == C64::new(0.0, 0.0) {
            C64::new(1.0, 0.0)
        } else {
            alpha / alpha.norm()
        };
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] += sign * col_norm;
        let v_norm_sq: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if v_norm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / v_norm_sq;

        // A <- P A with P = I - beta v v^H (rows k+1..n)
        for j in k..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in k + 1..n {
                dot += v[i - k - 1].conj() * a[(i, j)];
            }
            dot *= beta;
            for i in k + 1..n {
                let update = v[i - k - 1] * dot;
                a[(i, j)] -= update;
            }
        }
        // A <- A P (cols k+1..n)
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for j in k + 1..n {
                dot += a[(i, j)] * v[j - k - 1];
            }
            dot *= beta;
            for j in k + 1..n {
                let update = dot * v[j - k - 1].conj();
                a[(i, j)] -= update;
            }
        }
        // Clean the annihilated part of the column.
        a[(k + 1, k)] = -sign * col_norm;
        for i in k + 2..n {
            a[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

/// Complex Givens rotation `G [a; b] = [r; 0]` with real cosine.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Eigenvalue of the trailing 2x2 block closest to its bottom-right entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let mu1 = tr_half + disc;
    let mu2 = tr_half - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn qr_hessenberg(h: &mut CMat) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut eigs = vec![C64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut sweeps_at_this_size = 0usize;
    loop {
        // Deflate converged subdiagonal entries.
        let mut m = hi;
        while m > 0 {
            let small = f64::EPSILON * (h[(m - 1, m - 1)].norm() + h[(m, m)].norm()).max(1e-300);
            if h[(m, m - 1)].norm() <= small {
                h[(m, m - 1)] = C64::new(0.0, 0.0);
                break;
            }
            m -= 1;
        }
        let lo = m;
        if lo == hi {
            eigs[hi] = h[(hi, hi)];
            if hi == 0 {
                return Ok(eigs);
            }
            hi -= 1;
            sweeps_at_this_size = 0;
            continue;
        }
        if lo + 1 == hi {
            // Closed form for the 2x2 block.
            let (a, b, c, d) = (h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            let tr_half = (a + d) * 0.5;
            let disc = (tr_half * tr_half - (a * d - b * c)).sqrt();
            eigs[lo] = tr_half + disc;
            eigs[hi] = tr_half - disc;
            if lo == 0 {
                return Ok(eigs);
            }
            hi = lo - 1;
            sweeps_at_this_size = 0;
            continue;
        }

        sweeps_at_this_size += 1;
        if sweeps_at_this_size > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::EigenNonConvergence {
                size: n,
                converged: n - 1 - hi,
            });
        }
        let mu = if sweeps_at_this_size % 12 == 0 {
            // Exceptional shift to break symmetry stalls.
            let s = h[(hi, hi - 1)].norm() + h[(hi - 1, hi - 2)].norm();
            h[(hi, hi)] + C64::new(0.75 * s, 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        // Implicit single-shift sweep: create the bulge from the first
        // column of H - mu I and chase it down the active window.
        let mut x = h[(lo, lo)] - mu;
        let mut y = h[(lo + 1, lo)];
        for i in lo..hi {
            let (c, s) = givens(x, y);
            let sc = s.conj();
            // rows i, i+1
            let j0 = if i > lo { i - 1 } else { lo };
            for j in j0..n {
                let hij = h[(i, j)];
                let hi1j = h[(i + 1, j)];
                h[(i, j)] = hij * c + hi1j * s;
                h[(i + 1, j)] = -hij * sc + hi1j * c;
            }
            // cols i, i+1
            let last = (i + 2).min(hi);
            for r in 0..=last {
                let hri = h[(r, i)];
                let hri1 = h[(r, i + 1)];
                h[(r, i)] = hri * c + hri1 * sc;
                h[(r, i + 1)] = -hri * s + hri1 * c;
            }
            if i + 2 <= hi {
                x = h[(i + 1, i)];
                y = h[(i + 2, i)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_spectrum_close(got: &[C64], want: &mut Vec<C64>, tol: f64) {
        assert_eq!(got.len(), want.len());
        want.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).norm() < tol, "eigenvalue {g} vs expected {w}");
        }
    }

    #[test]
    fn two_by_two_symmetric() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let eigs = complex_eigenvalues(&m, true).unwrap();
        let mut want = vec![c(1.0 - 2f64.sqrt(), 0.0), c(1.0 + 2f64.sqrt(), 0.0)];
        assert_spectrum_close(&eigs, &mut want, 1e-12);
    }

    #[test]
    fn diagonal_complex() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(0.0, 1.0)]));
        let eigs = complex_eigenvalues(&m, true).unwrap();
        let mut want = vec![c(3.0, 0.0), c(0.0, 1.0)];
        assert_spectrum_close(&eigs, &mut want, 1e-14);
    }

    #[test]
    fn free_jacobi_truncation_has_cosine_spectrum() {
        let n = 24;
        let m = CMat::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let eigs = complex_eigenvalues(&m, true).unwrap();
        let mut want: Vec<C64> = (1..=n)
            .map(|k| c(2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos(), 0.0))
            .collect();
        assert_spectrum_close(&eigs, &mut want, 1e-10);
    }

    #[test]
    fn defective_jordan_block() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let eigs = complex_eigenvalues(&m, true).unwrap();
        for e in eigs {
            assert!((e - c(1.0, 0.0)).norm() < 1e-7, "defective pair splits like sqrt(eps)");
        }
    }

    #[test]
    fn gershgorin_containment_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..5 {
            let n = 12;
            let m = CMat::from_fn(n, n, |_, _| {
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let eigs = complex_eigenvalues(&m, true).unwrap();
            for e in &eigs {
                let inside = (0..n).any(|i| {
                    let radius: f64 = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| m[(i, j)].norm())
                        .sum();
                    (e - m[(i, i)]).norm() <= radius + 1e-9
                });
                assert!(inside, "trial {trial}: eigenvalue {e} outside all Gershgorin disks");
            }
        }
    }

    #[test]
    fn similarity_invariance_under_diagonal_scaling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 10;
        let m = CMat::from_fn(n, n, |i, j| {
            if i.abs_diff(j) <= 2 {
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            } else {
                c(0.0, 0.0)
            }
        });
        let scales: Vec<f64> = (0..n).map(|i| 0.5 + (i % 4) as f64).collect();
        let scaled = CMat::from_fn(n, n, |i, j| m[(i, j)] * (scales[i] / scales[j]));
        let a = complex_eigenvalues(&m, true).unwrap();
        let b = complex_eigenvalues(&scaled, true).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn real_symmetric_spectra_are_real() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let n = 20;
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(rng.random::<f64>() - 0.5, 0.0);
            if i + 1 < n {
                let v = c(0.2 + rng.random::<f64>(), 0.0);
                m[(i, i + 1)] = v;
                m[(i + 1, i)] = v;
            }
        }
        let eigs = complex_eigenvalues(&m, true).unwrap();
        for e in eigs {
            assert!(e.im.abs() < 1e-10, "real symmetric matrix has real spectrum");
        }
    }
}
