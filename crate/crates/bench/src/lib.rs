//! Criterion benchmarks for the minimisers; see `benches/`.
