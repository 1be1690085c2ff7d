//! Benchmark-only crate; see the `benches/` directory. The library target
//! exists so the package builds on its own.
