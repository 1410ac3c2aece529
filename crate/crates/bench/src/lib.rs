//! Criterion benchmarks for the `polytree` crate live in `benches/`.
