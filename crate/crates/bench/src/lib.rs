//! Criterion benchmarks for the boosting library; see `benches/`.
