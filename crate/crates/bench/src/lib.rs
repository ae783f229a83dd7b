//! Criterion benchmarks for `robba`; see `benches/pipelines.rs`.
