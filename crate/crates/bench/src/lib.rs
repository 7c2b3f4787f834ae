//! Fixtures shared by the criterion benches.

use thomson_core::geometry::random_configuration;
use thomson_core::stochastic::SgdOptions;
use thomson_core::Configuration;

pub const SIZES: [usize; 4] = [10, 40, 100, 200];

/// Seeded random start for `n` points on the 2-sphere.
pub fn start(n: usize) -> Configuration {
    random_configuration(n, 3, n as u64).expect("valid size")
}

/// Short SGD run: tuned step sizes, fixed iteration budget, sparse tracing.
pub fn sgd_options(n: usize, iters: usize) -> SgdOptions {
    let mut o = SgdOptions::tuned(n);
    o.iters = iters;
    o.trace_every = iters;
    o
}
