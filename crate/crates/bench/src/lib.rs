//! Shared fixtures for the benchmarks.

use bandjost_core::operator::{BandedOperator, Tail};
use bandjost_core::C64;

/// Three isolated eigenvalues, p = 1, zero tail.
pub fn three_site_operator() -> BandedOperator {
    let c = |re: f64, im: f64| C64::new(re, im);
    BandedOperator::from_entries(
        1,
        &[
            (1, 1, c(1.9, 0.4)),
            (2, 2, c(-1.7, 0.2)),
            (4, 4, c(0.3, 1.8)),
            (2, 3, c(1.3, 0.0)),
        ],
        Tail::Zero,
    )
    .expect("valid fixture")
}

/// Exp-beta class sample with a few hundred explicit rows.
pub fn class_operator() -> BandedOperator {
    bandjost_core::generators::sample_class(2, 0.5, 0.8, 1.0, 42).expect("valid sample")
}
