//! Benchmarks for the synthesis pipeline; see `benches/`.
