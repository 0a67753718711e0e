//! Criterion benchmarks for `girs-core`; see `benches/`.
