//! Benchmarks only; see `benches/`. Nothing is exported.
