//! Criterion benchmarks of the sampling, fractional-calculus and replication
//! kernels. Run with `cargo bench -p pathrep-bench`.
