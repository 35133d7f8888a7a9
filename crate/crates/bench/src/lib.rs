//! Criterion benchmarks for the sketching kernels live in `benches/`.
