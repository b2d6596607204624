//! Criterion benchmarks for `graspmap-core`; see `benches/`.
