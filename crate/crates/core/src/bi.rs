//! Doubly-infinite banded operators and the doubling transform.
//!
//! The unitary re-indexing `U e_k = ê_{-2k}` for `k < 0`, `U e_k = ê_{2k+1}`
//! for `k >= 0` turns a doubly-infinite matrix of order `p` into a
//! semi-infinite one of order `2p` with the same spectrum, so the whole
//! Jost pipeline applies to the image.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::is_finite_c;
use crate::operator::{BandedOperator, DiagonalProvider, Tail};
use crate::C64;

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Doubly-infinite banded operator of order `p`: entries default to the
/// free values (1 on `|i-j| = p`, 0 inside), explicit entries override,
/// and the tail certificate bounds `q_n` in `|n|` on both sides.
#[derive(Debug, Clone)]
pub struct BiBandedOperator {
    p: usize,
    /// Explicit entries keyed by `(row, col)` over ℤ.
    entries: BTreeMap<(i64, i64), C64>,
    tail: Tail,
}

impl BiBandedOperator {
    pub fn new(p: usize, entries: &[(i64, i64, C64)], tail: Tail) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidOperator("order p must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for &(i, j, v) in entries {
            if (i - j).unsigned_abs() as usize > p {
                return Err(Error::InvalidOperator(format!(
                    "entry ({i}, {j}) outside band of order {p}"
                )));
            }
            if !is_finite_c(v) {
                return Err(Error::InvalidOperator(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
            if (i - j).unsigned_abs() as usize == p && v == ZERO {
                return Err(Error::InvalidOperator(format!(
                    "zero entry on extreme diagonal at ({i}, {j})"
                )));
            }
            map.insert((i, j), v);
        }
        Ok(BiBandedOperator {
            p,
            entries: map,
            tail,
        })
    }

    pub fn free(p: usize) -> Self {
        BiBandedOperator::new(p, &[], Tail::Zero).expect("free operator is valid")
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn entry(&self, i: i64, j: i64) -> C64 {
        if (i - j).unsigned_abs() as usize > self.p {
            return ZERO;
        }
        if let Some(v) = self.entries.get(&(i, j)) {
            return *v;
        }
        if (i - j).unsigned_abs() as usize == self.p {
            ONE
        } else {
            ZERO
        }
    }

    pub fn explicit_entries(&self) -> &BTreeMap<(i64, i64), C64> {
        &self.entries
    }

    /// Two-sided perturbation size `q_n`.
    pub fn perturbation_size(&self, n: i64) -> f64 {
        let p = self.p as i64;
        let mut q = 0.0;
        for r in -p..=p {
            let v = self.entry(n, n + r);
            if r.abs() == p {
                q += (v - ONE).norm();
            } else {
                q += v.norm();
            }
        }
        q
    }

    /// Largest `|row|` carrying an explicit entry.
    pub fn support_radius(&self) -> i64 {
        self.entries
            .keys()
            .map(|&(i, _)| i.abs())
            .max()
            .unwrap_or(0)
    }
}

/// The index bijection ℤ → ℕ of the doubling transform.
pub fn u_map(k: i64) -> i64 {
    if k < 0 {
        -2 * k
    } else {
        2 * k + 1
    }
}

/// Inverse of `u_map` (defined for m >= 1).
pub fn u_inverse(m: i64) -> i64 {
    debug_assert!(m >= 1);
    if m % 2 == 0 {
        -m / 2
    } else {
        (m - 1) / 2
    }
}

/// Semi-infinite image `Û = U D U^{-1}` of order `2p`, entry-for-entry
/// `Û_{u(i), u(j)} = d_{ij}`.
pub fn double(op: &BiBandedOperator) -> Result<BandedOperator> {
    let p = op.p() as i64;
    let image_p = 2 * op.p();
    let mut per_offset: BTreeMap<i64, BTreeMap<i64, C64>> = BTreeMap::new();
    let mut push = |i: i64, j: i64, v: C64| {
        let (m, mj) = (u_map(i), u_map(j));
        let offset = mj - m;
        debug_assert!(offset.unsigned_abs() as usize <= image_p);
        let image_default = if offset.unsigned_abs() as usize == image_p {
            ONE
        } else {
            ZERO
        };
        if v != image_default {
            per_offset.entry(offset).or_default().insert(m, v);
        }
    };

    // Explicit entries map through the bijection.
    for (&(i, j), &v) in op.explicit_entries() {
        push(i, j, v);
    }
    // Sign-boundary pairs: free values of the source land on non-extreme
    // image diagonals there, so they must be stored explicitly.
    for i in -p..0 {
        for j in 0..=(i + p) {
            if !op.explicit_entries().contains_key(&(i, j)) {
                push(i, j, op.entry(i, j));
            }
            if !op.explicit_entries().contains_key(&(j, i)) {
                push(j, i, op.entry(j, i));
            }
        }
    }

    // Two-sided certificate on |n| becomes one-sided through |k| >= (m-1)/2.
    let tail = match op.tail() {
        Tail::Zero => Tail::Zero,
        Tail::ExpBeta { c1, c2, beta } => {
            let c2_image = c2 / 2f64.powf(*beta);
            Tail::ExpBeta {
                c1: c1 * c2_image.exp(),
                c2: c2_image,
                beta: *beta,
            }
        }
        Tail::Summable { .. } => {
            return Err(Error::TailUnavailable(
                "doubling needs a zero or exp-beta certificate".into(),
            ))
        }
    };

    let diagonals = per_offset
        .into_iter()
        .map(|(offset, entries)| DiagonalProvider::new(image_p, offset, entries))
        .collect::<Result<Vec<_>>>()?;
    BandedOperator::new(image_p, diagonals, tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bijection_covers_positive_integers() {
        let mut seen = std::collections::BTreeSet::new();
        for k in -50..50i64 {
            let m = u_map(k);
            assert!(m >= 1);
            assert!(seen.insert(m));
            assert_eq!(u_inverse(m), k);
        }
        assert_eq!(seen.len(), 100);
        assert_eq!(u_map(0), 1);
        assert_eq!(u_map(-1), 2);
        assert_eq!(u_map(1), 3);
    }

    #[test]
    fn entry_bijection_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut entries = Vec::new();
        for i in -6..=6i64 {
            for r in -2..=2i64 {
                if rng.random::<f64>() < 0.6 {
                    let v = if r.abs() == 2 {
                        c(1.0 + rng.random::<f64>(), rng.random::<f64>() - 0.5)
                    } else {
                        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                    };
                    entries.push((i, i + r, v));
                }
            }
        }
        let op = BiBandedOperator::new(2, &entries, Tail::Zero).unwrap();
        let image = double(&op).unwrap();
        for i in -30..=30i64 {
            for j in -30..=30i64 {
                if (i - j).abs() <= 2 {
                    assert_eq!(
                        image.entry(u_map(i), u_map(j)),
                        op.entry(i, j),
                        "mismatch at ({i}, {j})"
                    );
                }
            }
        }
    }

    #[test]
    fn doubled_free_jacobi_matches_block_display() {
        // For p = 1 the image blocks are Â_k = diag(a_k, c_{-k}),
        // B̂_0 = [[b_0, a_0], [c_0, b_{-1}]], Ĉ_k = diag(c_k, a_{-k}).
        let op = BiBandedOperator::free(1);
        let image = double(&op).unwrap();
        assert_eq!(image.p(), 2);
        let b0 = image.blocks(1).b;
        assert_eq!(b0[(0, 0)], ZERO);
        assert_eq!(b0[(0, 1)], ONE, "a_0 lands at (1,2)");
        assert_eq!(b0[(1, 0)], ONE, "c_0 lands at (2,1)");
        assert_eq!(b0[(1, 1)], ZERO);
        for k in 2..5 {
            let blocks = image.blocks(k);
            assert_eq!(crate::linalg::row_norm(&blocks.b), 0.0);
            assert_eq!(crate::linalg::row_norm_minus_identity(&blocks.a), 0.0);
            assert_eq!(crate::linalg::row_norm_minus_identity(&blocks.c), 0.0);
        }
    }

    #[test]
    fn off_diagonal_entry_lands_at_1_3() {
        let op = BiBandedOperator::new(1, &[(0, 1, c(0.5, 0.5))], Tail::Zero).unwrap();
        let image = double(&op).unwrap();
        assert_eq!(image.entry(1, 3), c(0.5, 0.5));
    }

    #[test]
    fn site_zero_lands_at_1_1() {
        let op = BiBandedOperator::new(1, &[(0, 0, c(3.0, 0.0))], Tail::Zero).unwrap();
        let image = double(&op).unwrap();
        assert_eq!(image.entry(1, 1), c(3.0, 0.0));
    }

    /// Away from the sign boundary the image q-sequence is a re-indexing
    /// of the source one, so the block sizes are dominated by the
    /// contributing two-sided values.
    #[test]
    fn class_preservation_on_blocks_past_the_corner() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut entries = Vec::new();
        for i in -8..=8i64 {
            if rng.random::<f64>() < 0.7 {
                entries.push((i, i, c(rng.random::<f64>(), rng.random::<f64>())));
            }
        }
        let op = BiBandedOperator::new(1, &entries, Tail::Zero).unwrap();
        let image = double(&op).unwrap();
        let image_p = image.p() as i64;
        for k in 2..12i64 {
            let contributors: Vec<i64> = ((k - 1) * image_p + 1..=k * image_p)
                .map(u_inverse)
                .collect();
            let max_q = contributors
                .iter()
                .map(|&s| op.perturbation_size(s))
                .fold(0.0, f64::max);
            assert!(
                image.q_hat(k) <= max_q + 1e-14,
                "block {k}: q̂ = {} > max contributing q = {max_q}",
                image.q_hat(k)
            );
        }
    }

    #[test]
    fn exp_beta_certificate_maps_through() {
        let op = BiBandedOperator::new(
            1,
            &[(0, 0, c(1.0, 0.0))],
            Tail::ExpBeta {
                c1: 0.5,
                c2: 1.0,
                beta: 0.5,
            },
        )
        .unwrap();
        let image = double(&op).unwrap();
        match image.tail() {
            Tail::ExpBeta { c1, c2, beta } => {
                assert_eq!(*beta, 0.5);
                // bound at image row m must dominate source bound at |k| = floor(m/2)
                for m in 3..40i64 {
                    let k = u_inverse(m).abs();
                    let source = 0.5 * (-(k as f64).sqrt()).exp();
                    let image_bound = c1 * (-c2 * (m as f64).powf(*beta)).exp();
                    assert!(
                        image_bound >= source - 1e-15,
                        "m={m}: image {image_bound} < source {source}"
                    );
                }
            }
            t => panic!("expected exp-beta, got {t:?}"),
        }
    }
}
