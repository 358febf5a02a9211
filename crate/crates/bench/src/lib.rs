//! Criterion benchmarks for the quenchspec kernels live in `benches/kernels.rs`.
