use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use georag_core::index::{IndexEntry, SpatialIndex};
use georag_core::{Coord, Geometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn points(n: usize) -> Vec<IndexEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..n)
        .map(|i| {
            let g = Geometry::point(rng.gen_range(-74.1..-73.8), rng.gen_range(40.6..40.9)).unwrap();
            IndexEntry::new(format!("p{i}"), g)
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("index");
    for n in [1_000, 10_000, 100_000] {
        let entries = points(n);
        group.bench_with_input(BenchmarkId::new("build", n), &entries, |b, e| {
            b.iter(|| SpatialIndex::build(black_box(e.clone())).unwrap())
        });
        let index = SpatialIndex::build(entries).unwrap();
        let center = Geometry::Point(Coord::new(-73.95, 40.75).unwrap());
        group.bench_with_input(BenchmarkId::new("within_1km", n), &index, |b, idx| {
            b.iter(|| idx.hits_within_distance(black_box(&center), 1.0, None).unwrap().len())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
