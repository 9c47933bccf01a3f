//! Criterion benchmarks for the placement solver; see `benches/`.
