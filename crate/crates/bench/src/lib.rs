//! Criterion benchmarks for the offloading strategies live in `benches/`.
//! Run them with `cargo bench -p wdg-offload-bench`.
