use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

use delineate_core::autodiff::{boundary_loss, dice_loss, f1_instance_loss, Graph, Tensor};
use delineate_core::network::{Model, NetworkConfig};
use delineate_core::rng::seeded_rng;

fn pair(l: usize) -> (Tensor, Tensor) {
    let mut rng = seeded_rng(1);
    let shape = [8, 3, l];
    let n = 24 * l;
    let p = Tensor::new(shape, (0..n).map(|_| rng.random_range(0.01..0.99)).collect()).unwrap();
    let g = Tensor::new(shape, (0..n).map(|i| f64::from(u8::from((i / 37) % 3 == 0))).collect()).unwrap();
    (p, g)
}

fn losses(c: &mut Criterion) {
    let mut group = c.benchmark_group("loss_forward_backward");
    for l in [512usize, 2048] {
        let (p, t) = pair(l);
        group.bench_with_input(BenchmarkId::new("combined", l), &l, |b, _| {
            b.iter(|| {
                let mut g = Graph::new();
                let pi = g.param(p.clone());
                let ti = g.constant(t.clone());
                let d = dice_loss(&mut g, pi, ti, 1.0).unwrap();
                let bd = boundary_loss(&mut g, pi, ti, 3, 1.0).unwrap();
                let f = f1_instance_loss(&mut g, pi, ti, 1.0).unwrap();
                let s = g.add(d, bd).unwrap();
                let s = g.add(s, f).unwrap();
                g.backward(s).unwrap();
                g.grad(pi)
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("network");
    group.sample_size(10);
    for (name, cfg) in [
        ("unet", NetworkConfig::default()),
        ("wnet_eca", NetworkConfig { use_wnet: true, use_eca: true, ..NetworkConfig::default() }),
    ] {
        let model = Model::with_seed(&cfg, 1).unwrap();
        let x: Vec<f64> = (0..2048).map(|i| (i as f64 * 0.05).sin()).collect();
        group.bench_function(BenchmarkId::new("predict_2048", name), |b| b.iter(|| model.predict_probabilities(&x).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, losses);
criterion_main!(benches);
