//! Benchmark-only crate; see `benches/cocycles.rs`.
