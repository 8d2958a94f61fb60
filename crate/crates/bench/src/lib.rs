//! Criterion benchmarks of the quadrature, the spherical solvers and the
//! verifier. Run with `cargo bench -p hardy-bench`.
