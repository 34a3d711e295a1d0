//! Benchmarks for the solvers; see `benches/solvers.rs`.
