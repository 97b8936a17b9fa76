//! Criterion benchmarks for the coljoin engine live under `benches/`.
