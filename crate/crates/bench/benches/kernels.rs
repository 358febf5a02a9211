use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quenchspec::bath::{Cutoff, NoiseModel, SpectralModel};
use quenchspec::control::{build_nv_plan, filter_freq, PulseSequence, QuenchSchedule, QubitState};
use quenchspec::dynamics::{dephasing, qps_general, qps_static};
use quenchspec::estimation::{reconstruct_spectral_function, Measurement, ReconstructionOptions, ReconstructionPlan};
use quenchspec::exactbath::{build_boson, exact_coherence, quench_decompose, DecomposeOptions};
use quenchspec::quad::QuadOptions;

fn filters(c: &mut Criterion) {
    let seq = PulseSequence::cpmg(16, 100.0).unwrap();
    c.bench_function("filter_freq cpmg16", |b| b.iter(|| filter_freq(&seq, black_box(0.37))));
}

fn quadrature(c: &mut Criterion) {
    let opts = QuadOptions::default();
    let model = SpectralModel::ohmic(0.1, 1.0, Cutoff::Gaussian);
    let noise = NoiseModel::thermal(model, 0.05).unwrap();
    let mut g = c.benchmark_group("hahn");
    for t in [10.0, 1e3, 1e5] {
        let seq = PulseSequence::hahn(t).unwrap();
        g.bench_with_input(BenchmarkId::new("qps_static", t), &seq, |b, s| {
            b.iter(|| qps_static(s, &model, 0.5, &opts).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("dephasing", t), &seq, |b, s| {
            b.iter(|| dephasing(s, &noise, &opts).unwrap())
        });
    }
    g.finish();

    let seq = PulseSequence::hahn(50.0).unwrap();
    let sched = QuenchSchedule::step(50.0, QubitState::Down);
    let mut slow = c.benchmark_group("general");
    slow.sample_size(10);
    slow.bench_function("qps_general step t=50", |b| {
        b.iter(|| qps_general(&seq, &sched, &model, &opts).unwrap())
    });
    let plan = build_nv_plan(16, 4.0).unwrap();
    let rp = ReconstructionPlan::new(plan, vec![1]).unwrap();
    slow.bench_function("qps_general nv M=16", |b| b.iter(|| rp.forward(&model, &opts).unwrap()));
    slow.finish();
}

fn linear_algebra(c: &mut Criterion) {
    let bath = build_boson(1.0, 0.05, 0.2, 30).unwrap();
    let seq = PulseSequence::cpmg(4, 20.0).unwrap();
    c.bench_function("exact_coherence boson n=30 cpmg4", |b| {
        b.iter(|| exact_coherence(&bath, &seq, None).unwrap())
    });
    let h = (bath.hamiltonian("up").unwrap() + bath.hamiltonian("down").unwrap()) * quenchspec::Complex64::new(0.5, 0.0);
    c.bench_function("quench_decompose n=30", |b| {
        b.iter(|| quench_decompose(&bath.rho, &h, &DecomposeOptions::default()).unwrap())
    });

    let model = SpectralModel::ohmic(0.1, 1.0, Cutoff::Gaussian);
    let meas: Vec<Measurement> = (1..=8)
        .map(|k| {
            let plan = build_nv_plan(64, PI / ((2 * k - 1) as f64 * 0.125)).unwrap();
            let rp = ReconstructionPlan::odd_harmonics_up_to(plan, 1.875).unwrap();
            let phi_q = rp.predict(&model);
            Measurement { plan: rp, phi_q }
        })
        .collect();
    c.bench_function("reconstruct 8 plans", |b| {
        b.iter(|| reconstruct_spectral_function(&meas, &ReconstructionOptions::default()).unwrap())
    });
}

criterion_group!(benches, filters, quadrature, linear_algebra);
criterion_main!(benches);
