//! Criterion benchmarks for `gark`; see `benches/`.
