//! Criterion benchmarks for fluxguide; see `benches/`.
