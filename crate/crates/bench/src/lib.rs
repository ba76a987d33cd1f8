//! Benchmarks live under `benches/`; run them with `cargo bench -p lia2c-bench`.
