//! Benchmark-only crate; see `benches/gate.rs`.
