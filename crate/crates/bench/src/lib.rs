//! Criterion benchmarks for the `marl-lab` hot paths; see `benches/`.
