//! Wall-clock comparison of the data-parallel sweep against a plain
//! sequential loop over the same triples, plus the end-to-end streamed
//! scan at two worker counts. Run with `cargo bench`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::prelude::*;

use iwasawa2::scan::{enumerate_triples, scan_with, Family, ScanConfig};
use iwasawa2::tower::build_tower_report;

/// Primes below this bound give 150 triples, a few hundred milliseconds of
/// sequential work. Large enough that thread startup noise does not drown
/// the signal.
const BOUND: i64 = 60;

fn report_sweep(c: &mut Criterion) {
    let triples = enumerate_triples(Family::All, BOUND).expect("enumeration");
    let mut group = c.benchmark_group("report_sweep");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", triples.len()), |b| {
        b.iter(|| {
            let bad: usize = triples
                .iter()
                .map(|t| build_tower_report(t).expect("report").violations.len())
                .sum();
            black_box(bad)
        })
    });
    group.bench_function(BenchmarkId::new("parallel", triples.len()), |b| {
        b.iter(|| {
            let bad: usize = triples
                .par_iter()
                .map(|t| build_tower_report(t).expect("report").violations.len())
                .sum();
            black_box(bad)
        })
    });
    group.finish();
}

fn streamed_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("streamed_scan");
    group.sample_size(10);
    for (label, jobs) in [("one_worker", Some(1)), ("default_pool", None)] {
        group.bench_function(label, |b| {
            b.iter(|| {
                let cfg = ScanConfig {
                    family: Family::All,
                    bound: BOUND,
                    symbol: None,
                    jobs,
                    cache: None,
                };
                let mut seen = 0usize;
                scan_with(&cfg, |v| {
                    seen += 1;
                    black_box(v);
                    Ok(())
                })
                .expect("scan");
                black_box(seen)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, report_sweep, streamed_scan);
criterion_main!(benches);
