//! Criterion benchmarks for the exact permanent, coefficient extraction and
//! column statistics kernels. Run with `cargo bench -p permanent-bench`.
