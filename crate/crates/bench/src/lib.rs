//! Fixed inputs shared by the benchmarks.

use fibersim::matcore::{tensor, HermitianOp};
use fibersim::polymer::PolymerSpec;
use fibersim::{gates, random, Bipartition, DensityOperator, GateSet, NamedGate};

pub fn bell() -> DensityOperator {
    DensityOperator::pure(&gates::bell_phi_plus()).expect("unit ket")
}

pub fn two_qubit_cut() -> Bipartition {
    Bipartition::qubits()
}

pub fn mixed_states(seed: u64, d: usize, n: usize) -> Vec<DensityOperator> {
    let mut rng = random::rng(seed);
    (0..n).map(|_| DensityOperator::from_trusted(random::hs_mixed(&mut rng, d))).collect()
}

pub fn random_hamiltonian(seed: u64, d: usize) -> HermitianOp {
    let mut rng = random::rng(seed);
    HermitianOp::new(random::hermitian(&mut rng, d, 1.0)).expect("Hermitian")
}

pub fn local_unitaries(seed: u64, n: usize) -> GateSet {
    let mut rng = random::rng(seed);
    let gates = (0..n)
        .map(|k| {
            let u = tensor(&random::haar_unitary(&mut rng, 2), &random::haar_unitary(&mut rng, 2));
            NamedGate::new(format!("L{k}"), u)
        })
        .collect();
    GateSet::new(gates).expect("same dimension")
}

pub fn chain(n: usize) -> PolymerSpec {
    PolymerSpec::alternating_qubits(n, 1.0, 0.5, -0.5).expect("valid chain")
}
