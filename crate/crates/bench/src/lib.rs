//! Criterion benchmarks for the solver and the bandwidth selectors; see
//! `benches/`.
