//! Criterion benchmarks for the walk, detectors and classifiers; see `benches/`.
