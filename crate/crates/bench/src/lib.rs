//! Criterion benchmarks for `tris-core`; see `benches/`.
