//! Criterion benchmarks for qshadow; see `benches/`.
