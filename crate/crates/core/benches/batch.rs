use criterion::{criterion_group, criterion_main, Criterion};
use olsat::batch::{matrix, par_map, run_job, Job, Method};

fn jobs() -> Vec<Job> {
    matrix(&[5, 8], &[Method::Hybrid], &[0, 1, 2, 3], &Job::new(0, Method::Hybrid, 0))
}

fn batch(c: &mut Criterion) {
    let jobs = jobs();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut g = c.benchmark_group("hybrid_batch");
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| jobs.iter().map(|j| run_job(j).unwrap().status).collect::<Vec<_>>())
    });
    g.bench_function(format!("par_map_{threads}"), |b| {
        b.iter(|| par_map(&jobs, threads, |j| run_job(j).unwrap().status).unwrap())
    });
    g.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
