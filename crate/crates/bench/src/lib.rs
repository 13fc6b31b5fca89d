//! Criterion benchmarks for the hot paths of `cbpost`; see `benches/`.
