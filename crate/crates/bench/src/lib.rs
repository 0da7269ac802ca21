//! Criterion benchmarks for qassign; see `benches/`.
