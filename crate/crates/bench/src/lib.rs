//! Benchmark-only crate; the measurements live in `benches/matching.rs`.
//! Run them with `cargo bench -p scenecep-bench`.
