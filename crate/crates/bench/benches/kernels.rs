use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use fibersim::algebra::MatrixStarAlgebra;
use fibersim::channels::{is_completely_positive, KrausChannel};
use fibersim::correlation::{discord, negativity, ree_estimate, DiscordOptions, Functional, ReeOptions};
use fibersim::matcore::{eig_hermitian, expm_i};
use fibersim::polymer::{anneal, Schedule};
use fibersim::semiclassical::closure_test;
use fibersim::{gates, random};
use fibersim_bench::*;

fn linear_algebra(c: &mut Criterion) {
    let mut g = c.benchmark_group("matcore");
    for d in [4usize, 16, 64] {
        let h = random_hamiltonian(1, d);
        g.bench_with_input(BenchmarkId::new("eig_hermitian", d), &h, |b, h| b.iter(|| eig_hermitian(black_box(h))));
        g.bench_with_input(BenchmarkId::new("expm_i", d), &h, |b, h| b.iter(|| expm_i(black_box(h), 0.1)));
    }
    g.finish();
}

fn correlations(c: &mut Criterion) {
    let rho = bell();
    let cut = two_qubit_cut();
    let mut g = c.benchmark_group("correlation");
    g.bench_function("negativity_bell", |b| b.iter(|| negativity(black_box(&rho), &cut)));
    g.bench_function("discord_bell", |b| b.iter(|| discord(black_box(&rho), &cut, DiscordOptions::default())));
    g.sample_size(10);
    g.bench_function("ree_bell", |b| b.iter(|| ree_estimate(black_box(&rho), &cut, ReeOptions::default())));
    g.finish();
}

fn algebras_and_channels(c: &mut Criterion) {
    let gens = vec![gates::x(), gates::z()];
    c.bench_function("double_commutant_m2", |b| {
        b.iter(|| MatrixStarAlgebra::generate(black_box(&gens), 2).map(|a| a.double_commutant()))
    });
    let ch = KrausChannel::depolarizing(0.3).expect("valid");
    c.bench_function("choi_cp_check_qubit", |b| b.iter(|| is_completely_positive(black_box(&ch))));
}

fn semiclassical(c: &mut Criterion) {
    let set = local_unitaries(2, 6);
    let seeds = mixed_states(3, 2, 10)
        .into_iter()
        .map(|r| fibersim::DensityOperator::from_trusted(fibersim::matcore::tensor(r.matrix(), r.matrix())))
        .collect::<Vec<_>>();
    let cut = two_qubit_cut();
    c.bench_function("closure_test_1000_words", |b| {
        b.iter(|| {
            let mut rng = random::rng(4);
            closure_test(&Functional::Negativity, &cut, &set, &seeds, 1000, 6, 1e-8, &mut rng)
        })
    });
}

fn polymer(c: &mut Criterion) {
    let mut g = c.benchmark_group("anneal");
    g.sample_size(10);
    for n in [4usize, 6] {
        let spec = chain(n);
        g.bench_with_input(BenchmarkId::new("100_steps", n), &spec, |b, s| {
            b.iter(|| anneal(black_box(s), &Schedule::Linear, 5.0, 100))
        });
    }
    g.finish();
}

criterion_group!(benches, linear_algebra, correlations, algebras_and_channels, semiclassical, polymer);
criterion_main!(benches);
