use criterion::{black_box, criterion_group, criterion_main, Criterion};
use trajrec_core::hda::{self, MlpArchitecture, TrainConfig};
use trajrec_core::lmc::{self, LmcConfig};
use trajrec_core::numerics;
use trajrec_core::rank::{self, RankFlavor};
use trajrec_core::trajectory;
use trajrec_core::vicsek::{self, ScheduleKind, SimConfig};
use trajrec_core::TrajectorySet;

fn spiral() -> TrajectorySet {
    let cfg = SimConfig::default();
    let schedule = vicsek::build_rotation_schedule(ScheduleKind::Spiral, cfg.n, cfg.steps).unwrap();
    vicsek::simulate(&cfg, &schedule).unwrap()
}

fn bench_svd(c: &mut Criterion) {
    let x = spiral();
    c.bench_function("svd 40x200", |b| b.iter(|| numerics::svd(black_box(x.coords())).unwrap()));
}

fn bench_lmc(c: &mut Criterion) {
    let x = spiral();
    let (frag, mask) = trajectory::fragment(&x, 50.0, 1).unwrap();
    let cfg = LmcConfig { max_iters: 50, ..LmcConfig::default() };
    c.bench_function("lmc 50 iterations", |b| b.iter(|| lmc::complete(black_box(&frag), &mask, &cfg).unwrap()));
}

fn bench_hda_epoch(c: &mut Criterion) {
    let x = spiral();
    let (frag, mask) = trajectory::fragment(&x, 50.0, 1).unwrap();
    let (norm, _) = trajectory::normalize(&frag, &mask).unwrap();
    let arch = MlpArchitecture::default_for(x.agent_count());
    let cfg = TrainConfig { max_epochs: 1, ..TrainConfig::default() };
    c.bench_function("hda one epoch", |b| b.iter(|| hda::train(black_box(&norm), &mask, &arch, &cfg).unwrap()));
}

fn bench_geodesic(c: &mut Criterion) {
    let x = spiral();
    let graph = rank::knn_graph(&x, 10).unwrap();
    c.bench_function("floyd-warshall 200 nodes", |b| b.iter(|| rank::floyd_warshall(black_box(&graph))));
    c.bench_function("nonlinear rank report", |b| {
        b.iter(|| rank::rank_report(black_box(&x), RankFlavor::Nonlinear, 10, 5.0).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_svd, bench_lmc, bench_hda_epoch, bench_geodesic
}
criterion_main!(kernels);
