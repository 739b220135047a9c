//! Semi-classical operators `𝒜^f`, the classical states `D₀(f)` and
//! property tests built on them.
//!
//! Membership in `𝒜^f` quantifies over all states, so verdicts say how they
//! were reached: a structural certificate (local unitaries for a functional
//! invariant under them), agreement on a finite probe set, or a concrete
//! counterexample.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use crate::algebra::{
    default_fiducial, injectivity, universality_probe_targets, GateSet, NamedGate,
    UniversalityReport, INJECTIVE_TOL,
};
use crate::correlation::{reorder_to_native, reorder_to_split, Bipartition, Functional};
use crate::error::{Error, Result};
use crate::gates;
use crate::matcore::{identity, max_norm, real, unitarity_defect, CMatrix, CVector, MatrixRecord};
use crate::random;
use crate::states::DensityOperator;

/// Default tolerance for `f(ρ) ≈ 0` and for `f` increases.
pub const D0_TOL: f64 = 1e-8;

/// `ρ ∈ D₀(f)`, i.e. `f(ρ) ≤ tol`.
pub fn in_d0(rho: &DensityOperator, f: &Functional, cut: &Bipartition, tol: f64) -> Result<bool> {
    Ok(f.evaluate(rho, cut)? <= tol)
}

/// Labeled probe states for membership tests.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    pub labels: Vec<String>,
    pub states: Vec<DensityOperator>,
}

fn uniform(d: usize) -> CVector {
    CVector::from_element(d, real(1.0 / (d as f64).sqrt()))
}

impl ProbeSet {
    /// Products of basis and uniform-superposition kets, then maximally
    /// entangled kets when the two sides have equal dimension.
    pub fn extremal(cut: &Bipartition) -> Self {
        let (da, db) = (cut.dim_a(), cut.dim_complement());
        let side = |d: usize| -> Vec<(String, CVector)> {
            let mut v: Vec<(String, CVector)> = (0..d).map(|k| (k.to_string(), gates::basis_ket(d, k))).collect();
            v.push(("+".into(), uniform(d)));
            v
        };
        let mut labels = Vec::new();
        let mut states = Vec::new();
        for (la, ka) in side(da) {
            for (lb, kb) in side(db) {
                let ket = ka.kronecker(&kb);
                labels.push(format!("|{la}⟩⊗|{lb}⟩"));
                states.push(DensityOperator::from_trusted(reorder_to_native(&(&ket * ket.adjoint()), cut)));
            }
        }
        if da == db {
            // Σ_k ω^{jk}|k k⟩ for each phase index j.
            for j in 0..da {
                let mut ket = CVector::zeros(da * db);
                for k in 0..da {
                    let ph = 2.0 * std::f64::consts::PI * (j * k) as f64 / da as f64;
                    ket[k * db + k] = num_complex::Complex64::from_polar(1.0 / (da as f64).sqrt(), ph);
                }
                labels.push(format!("maximally-entangled-{j}"));
                states.push(DensityOperator::from_trusted(reorder_to_native(&(&ket * ket.adjoint()), cut)));
            }
        }
        Self { labels, states }
    }

    /// Extremal states plus Hilbert–Schmidt mixed and Haar pure samples.
    pub fn standard(cut: &Bipartition, n_mixed: usize, n_pure: usize, seed: u64) -> Self {
        let mut set = Self::extremal(cut);
        let d = cut.shape().dim();
        let mut rng = random::rng(seed);
        for k in 0..n_mixed {
            set.labels.push(format!("mixed-{k}"));
            set.states.push(DensityOperator::from_trusted(random::hs_mixed(&mut rng, d)));
        }
        for k in 0..n_pure {
            set.labels.push(format!("pure-{k}"));
            set.states.push(DensityOperator::from_trusted(random::haar_pure(&mut rng, d)));
        }
        set
    }

    /// 200 mixed and 50 pure samples after the extremal states.
    pub fn default_for(cut: &Bipartition, seed: u64) -> Self {
        Self::standard(cut, 200, 50, seed)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Membership {
    CertifiedMember { certificate: String },
    ProbeMember { probes: usize, vanished: usize },
    NonMember { witness_label: String, witness: MatrixRecord, increase: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalVerdict {
    pub operator: String,
    pub functional: String,
    #[serde(flatten)]
    pub membership: Membership,
    /// Largest `f(after) − f(before)` seen on probes (0 when certified).
    pub max_increase: f64,
}

impl SemiclassicalVerdict {
    pub fn is_member(&self) -> bool {
        !matches!(self.membership, Membership::NonMember { .. })
    }
}

/// Matrix on `A ⊗ A^c` rearranged so that `a = x ⊗ y` iff the result has rank one.
fn realign(a: &CMatrix, cut: &Bipartition) -> CMatrix {
    let (da, db) = (cut.dim_a(), cut.dim_complement());
    let split = reorder_to_split(a, cut);
    let mut r = CMatrix::zeros(da * da, db * db);
    for ia in 0..da {
        for ja in 0..da {
            for ib in 0..db {
                for jb in 0..db {
                    r[(ia * da + ja, ib * db + jb)] = split[(ia * db + ib, ja * db + jb)];
                }
            }
        }
    }
    r
}

/// Whether `a` is a unitary of the form `u ⊗ v` across the cut.
pub fn is_local_unitary(a: &CMatrix, cut: &Bipartition) -> bool {
    if a.nrows() != cut.shape().dim() || unitarity_defect(a) > 1e-10 {
        return false;
    }
    let sv = realign(a, cut).singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v.get(1).copied().unwrap_or(0.0) <= 1e-10 * v[0].max(1.0)
}

fn delta(a: &CMatrix, rho: &DensityOperator, f: &Functional, cut: &Bipartition) -> Result<Option<(f64, DensityOperator)>> {
    let m = a * rho.matrix() * a.adjoint();
    let t = m.trace().re;
    if t <= crate::states::TRACE_TOL {
        return Ok(None);
    }
    let image = DensityOperator::from_trusted(m / real(t));
    let d = f.evaluate(&image, cut)? - f.evaluate(rho, cut)?;
    Ok(Some((d, image)))
}

/// Classifies `a` against `𝒜^f = {a : f(i_a(ρ)/Tr) ≤ f(ρ) for all ρ}`.
pub fn in_af(
    name: &str,
    a: &CMatrix,
    f: &Functional,
    cut: &Bipartition,
    probes: &ProbeSet,
    tol: f64,
) -> Result<SemiclassicalVerdict> {
    if a.nrows() != cut.shape().dim() || a.ncols() != cut.shape().dim() {
        return Err(Error::DimensionMismatch {
            expected: cut.shape().dim(),
            actual: a.nrows(),
        });
    }
    let base = |membership, max_increase| SemiclassicalVerdict {
        operator: name.to_string(),
        functional: f.name().to_string(),
        membership,
        max_increase,
    };
    if f.local_unitary_invariant() && is_local_unitary(a, cut) {
        return Ok(base(
            Membership::CertifiedMember {
                certificate: "local unitary; functional invariant under local unitaries".into(),
            },
            0.0,
        ));
    }
    let mut vanished = 0;
    let mut max_increase = f64::NEG_INFINITY;
    for (label, rho) in probes.labels.iter().zip(&probes.states) {
        match delta(a, rho, f, cut)? {
            None => vanished += 1,
            Some((d, _)) => {
                max_increase = max_increase.max(d);
                if d > tol {
                    return Ok(base(
                        Membership::NonMember {
                            witness_label: label.clone(),
                            witness: MatrixRecord::from(rho.matrix()),
                            increase: d,
                        },
                        max_increase,
                    ));
                }
            }
        }
    }
    Ok(base(
        Membership::ProbeMember {
            probes: probes.len() - vanished,
            vanished,
        },
        max_increase.max(0.0),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureViolation {
    pub seed_index: usize,
    pub word: Vec<String>,
    pub value: f64,
    pub state: MatrixRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub words_tested: usize,
    pub vanished: usize,
    pub violations: Vec<ClosureViolation>,
}

impl ClosureReport {
    pub fn closed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Applies random gate words to seed states and checks that every normalized
/// image stays in `D₀(f)`. A violation falsifies the gates' membership, not
/// the closure statement itself.
#[allow(clippy::too_many_arguments)]
pub fn closure_test<R: Rng + ?Sized>(
    f: &Functional,
    cut: &Bipartition,
    gates: &GateSet,
    seeds: &[DensityOperator],
    n_words: usize,
    max_len: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ClosureReport> {
    let mut report = ClosureReport {
        words_tested: 0,
        vanished: 0,
        violations: vec![],
    };
    if gates.is_empty() || seeds.is_empty() {
        return Ok(report);
    }
    for _ in 0..n_words {
        let seed_index = rng.random_range(0..seeds.len());
        let len = rng.random_range(1..=max_len.max(1));
        let mut m = seeds[seed_index].matrix().clone();
        let mut word = Vec::with_capacity(len);
        let mut gone = false;
        for _ in 0..len {
            let g: &NamedGate = gates.gates().choose(rng).expect("nonempty");
            word.push(g.name.clone());
            m = &g.matrix * m * g.matrix.adjoint();
            let t = m.trace().re;
            if t <= crate::states::TRACE_TOL {
                gone = true;
                break;
            }
            m /= real(t);
        }
        report.words_tested += 1;
        if gone {
            report.vanished += 1;
            continue;
        }
        let state = DensityOperator::from_trusted(m);
        let value = f.evaluate(&state, cut)?;
        if value > tol {
            report.violations.push(ClosureViolation {
                seed_index,
                word,
                value,
                state: MatrixRecord::from(state.matrix()),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupMode {
    /// `{a : f(i_a(ρ)) = f(ρ)}`.
    EqualitySet,
    /// `{a : f(i_a(ρ)) < f(ρ)}`.
    StrictSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictEntry {
    pub name: String,
    /// Most negative `Δf` over the probes, with the probe label.
    pub min_delta: f64,
    pub witness_label: Option<String>,
    /// `Δf` of the inverse on the witness image; `> tol` shows the inverse leaves the set.
    pub inverse_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStructureReport {
    pub mode: GroupMode,
    pub identity_present: bool,
    pub non_invertible: Vec<String>,
    /// Elements whose own `|Δf|` exceeds the tolerance (equality mode).
    pub non_members: Vec<String>,
    pub closure_failures: Vec<(String, String)>,
    pub inverse_failures: Vec<String>,
    pub strict: Vec<StrictEntry>,
    pub is_group: bool,
}

fn max_abs_delta(a: &CMatrix, f: &Functional, cut: &Bipartition, probes: &ProbeSet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for rho in &probes.states {
        if let Some((d, _)) = delta(a, rho, f, cut)? {
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

fn preserves(a: &CMatrix, f: &Functional, cut: &Bipartition, probes: &ProbeSet, tol: f64) -> Result<bool> {
    if f.local_unitary_invariant() && is_local_unitary(a, cut) {
        return Ok(true);
    }
    Ok(max_abs_delta(a, f, cut, probes)? <= tol)
}

/// Tests the group axioms on the equality set, or in strict mode that each
/// strictly decreasing element has an inverse that increases `f`.
pub fn group_structure_test(
    set: &GateSet,
    f: &Functional,
    cut: &Bipartition,
    mode: GroupMode,
    probes: &ProbeSet,
    tol: f64,
) -> Result<GroupStructureReport> {
    let d = cut.shape().dim();
    let mut report = GroupStructureReport {
        mode,
        identity_present: set
            .gates()
            .iter()
            .any(|g| g.matrix.nrows() == d && max_norm(&(&g.matrix - identity(d))) <= 1e-12),
        non_invertible: vec![],
        non_members: vec![],
        closure_failures: vec![],
        inverse_failures: vec![],
        strict: vec![],
        is_group: false,
    };
    let mut inverses = Vec::new();
    for g in set.gates() {
        if injectivity(&g.matrix).0 <= INJECTIVE_TOL {
            report.non_invertible.push(g.name.clone());
            inverses.push(None);
        } else {
            inverses.push(g.matrix.clone().try_inverse());
        }
    }
    match mode {
        GroupMode::EqualitySet => {
            for (g, inv) in set.gates().iter().zip(&inverses) {
                let Some(inv) = inv else { continue };
                if !preserves(&g.matrix, f, cut, probes, tol)? {
                    report.non_members.push(g.name.clone());
                }
                if !preserves(inv, f, cut, probes, tol)? {
                    report.inverse_failures.push(g.name.clone());
                }
            }
            for (a, ia) in set.gates().iter().zip(&inverses) {
                for (b, ib) in set.gates().iter().zip(&inverses) {
                    if ia.is_none() || ib.is_none() {
                        continue;
                    }
                    if !preserves(&(&a.matrix * &b.matrix), f, cut, probes, tol)? {
                        report.closure_failures.push((a.name.clone(), b.name.clone()));
                    }
                }
            }
            report.is_group = report.identity_present
                && report.non_invertible.is_empty()
                && report.non_members.is_empty()
                && report.closure_failures.is_empty()
                && report.inverse_failures.is_empty();
        }
        GroupMode::StrictSet => {
            for (g, inv) in set.gates().iter().zip(&inverses) {
                let Some(inv) = inv else { continue };
                let mut entry = StrictEntry {
                    name: g.name.clone(),
                    min_delta: f64::INFINITY,
                    witness_label: None,
                    inverse_delta: None,
                };
                let mut best_image = None;
                for (label, rho) in probes.labels.iter().zip(&probes.states) {
                    if let Some((dlt, image)) = delta(&g.matrix, rho, f, cut)? {
                        if dlt < entry.min_delta {
                            entry.min_delta = dlt;
                            if dlt < -tol {
                                entry.witness_label = Some(label.clone());
                                best_image = Some(image);
                            }
                        }
                    }
                }
                if let Some(image) = best_image {
                    entry.inverse_delta = delta(inv, &image, f, cut)?.map(|x| x.0);
                }
                report.strict.push(entry);
            }
            // The strict set is never a group: it lacks the identity, and any
            // strictly decreasing element has an inverse that increases f.
            report.is_group = false;
        }
    }
    Ok(report)
}

/// Reachability inside `D₀(f)`: random product pure targets, product fiducial.
pub fn classical_universality_probe<R: Rng + ?Sized>(
    gates: &GateSet,
    f: &Functional,
    cut: &Bipartition,
    n_targets: usize,
    depth: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<UniversalityReport> {
    let (da, db) = (cut.dim_a(), cut.dim_complement());
    let to_native = |v: &CVector| -> CVector {
        // Product kets are permuted the same way as their projectors.
        let table = cut.shape().split_table(cut.a());
        let mut out = CVector::zeros(v.len());
        for (a, row) in table.iter().enumerate() {
            for (b, &i) in row.iter().enumerate() {
                out[i] = v[a * db + b];
            }
        }
        out
    };
    let mut targets = Vec::with_capacity(n_targets);
    while targets.len() < n_targets {
        let t = to_native(&random::haar_ket(rng, da).kronecker(&random::haar_ket(rng, db)));
        if in_d0(&DensityOperator::pure(&t)?, f, cut, D0_TOL)? {
            targets.push(t);
        }
    }
    let fiducial = to_native(&default_fiducial(da).kronecker(&default_fiducial(db)));
    universality_probe_targets(gates, &fiducial, &targets, depth, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::tensor;

    fn cut() -> Bipartition {
        Bipartition::qubits()
    }

    fn probes() -> ProbeSet {
        ProbeSet::standard(&cut(), 60, 20, 1)
    }

    #[test]
    fn d0_examples() {
        let c = cut();
        let prod = DensityOperator::pure(&gates::ket0().kronecker(&gates::ket_plus())).unwrap();
        assert!(in_d0(&prod, &Functional::Negativity, &c, D0_TOL).unwrap());
        let bell = DensityOperator::pure(&gates::bell_phi_plus()).unwrap();
        assert!(!in_d0(&bell, &Functional::Negativity, &c, D0_TOL).unwrap());
        let cc = DensityOperator::new(gates::diag(&[0.5, 0.0, 0.0, 0.5])).unwrap();
        let disc: Functional = "discord".parse().unwrap();
        assert!(in_d0(&cc, &disc, &c, 1e-6).unwrap());
    }

    #[test]
    fn af_examples() {
        let c = cut();
        let mut rng = random::rng(2);
        let uv = tensor(&random::haar_unitary(&mut rng, 2), &random::haar_unitary(&mut rng, 2));
        let v = in_af("uv", &uv, &Functional::Negativity, &c, &probes(), D0_TOL).unwrap();
        assert!(matches!(v.membership, Membership::CertifiedMember { .. }));

        let v = in_af("CNOT", &gates::cnot(), &Functional::Negativity, &c, &probes(), D0_TOL).unwrap();
        match &v.membership {
            Membership::NonMember { witness_label, increase, witness } => {
                assert_eq!(witness_label, "|+⟩⊗|0⟩");
                assert!((increase - 0.5).abs() < 1e-12);
                // Re-verify the witness independently.
                let rho = DensityOperator::new(witness.to_matrix().unwrap()).unwrap();
                let before = crate::correlation::negativity(&rho, &c).unwrap();
                let img = gates::cnot() * rho.matrix() * gates::cnot().adjoint();
                let after = crate::correlation::negativity(&DensityOperator::new(img).unwrap(), &c).unwrap();
                assert!(after - before > D0_TOL);
            }
            other => panic!("{other:?}"),
        }

        let v = in_af("I", &identity(4), &Functional::Negativity, &c, &probes(), D0_TOL).unwrap();
        assert!(matches!(v.membership, Membership::CertifiedMember { .. }));
    }

    #[test]
    fn swap_is_only_a_probe_member() {
        // SWAP is not u ⊗ v, yet the PT spectra across the cut agree before and after.
        let c = cut();
        let v = in_af("SWAP", &gates::swap(2), &Functional::Negativity, &c, &probes(), D0_TOL).unwrap();
        assert!(matches!(v.membership, Membership::ProbeMember { vanished: 0, .. }));
        assert!(v.max_increase <= 1e-12);
    }

    #[test]
    fn local_unitary_detection() {
        let c = cut();
        assert!(is_local_unitary(&tensor(&gates::hadamard(), &gates::t_gate()), &c));
        assert!(!is_local_unitary(&gates::cnot(), &c));
        assert!(!is_local_unitary(&gates::swap(2), &c));
        assert!(!is_local_unitary(&tensor(&gates::diag(&[1.0, 0.5]), &identity(2)), &c));
    }

    fn local_set(rng: &mut random::SimRng, n: usize) -> GateSet {
        let gates = (0..n)
            .map(|k| {
                NamedGate::new(
                    format!("L{k}"),
                    tensor(&random::haar_unitary(rng, 2), &random::haar_unitary(rng, 2)),
                )
            })
            .collect();
        GateSet::new(gates).unwrap()
    }

    #[test]
    fn closure_examples() {
        let c = cut();
        let mut rng = random::rng(3);
        let set = local_set(&mut rng, 4);
        let seeds: Vec<DensityOperator> = (0..5)
            .map(|_| DensityOperator::new(tensor(&random::hs_mixed(&mut rng, 2), &random::hs_mixed(&mut rng, 2))).unwrap())
            .collect();
        let r = closure_test(&Functional::Negativity, &c, &set, &seeds, 1000, 6, D0_TOL, &mut rng).unwrap();
        assert!(r.closed());
        assert_eq!(r.words_tested, 1000);

        let r = closure_test(&Functional::Negativity, &c, &GateSet::empty(), &seeds, 1000, 6, D0_TOL, &mut rng)
            .unwrap();
        assert!(r.closed());

        let bad = set.extended(&[NamedGate::new("CNOT", gates::cnot())]).unwrap();
        let plus0 = DensityOperator::pure(&gates::ket_plus().kronecker(&gates::ket0())).unwrap();
        let r = closure_test(&Functional::Negativity, &c, &bad, &[plus0], 500, 3, D0_TOL, &mut rng).unwrap();
        assert!(!r.closed());
        assert!(r.violations[0].word.iter().any(|w| w == "CNOT"));
    }

    #[test]
    fn equality_set_group() {
        let c = cut();
        let mut rng = random::rng(4);
        let mut gates_list = vec![NamedGate::new("I", identity(4))];
        for (n, p) in [("X", gates::x()), ("Y", gates::y()), ("Z", gates::z())] {
            gates_list.push(NamedGate::new(format!("{n}⊗I"), tensor(&p, &identity(2))));
            gates_list.push(NamedGate::new(format!("I⊗{n}"), tensor(&identity(2), &p)));
        }
        let set = GateSet::new(gates_list).unwrap();
        let r = group_structure_test(&set, &Functional::Negativity, &c, GroupMode::EqualitySet, &probes(), D0_TOL)
            .unwrap();
        assert!(r.is_group, "{r:?}");
        let _ = local_set(&mut rng, 1);

        let id = GateSet::new(vec![NamedGate::new("I", identity(4))]).unwrap();
        let r = group_structure_test(&id, &Functional::Negativity, &c, GroupMode::EqualitySet, &probes(), D0_TOL)
            .unwrap();
        assert!(r.is_group);
    }

    #[test]
    fn strict_set_inverse_leaves() {
        let c = cut();
        let a = tensor(&gates::diag(&[1.0, 0.5]), &identity(2));
        let a = &a / real(crate::matcore::operator_norm(&a));
        let set = GateSet::new(vec![NamedGate::new("filter", a)]).unwrap();
        let r = group_structure_test(&set, &Functional::Negativity, &c, GroupMode::StrictSet, &probes(), D0_TOL)
            .unwrap();
        assert!(!r.is_group);
        let e = &r.strict[0];
        assert!(e.min_delta < -D0_TOL);
        let inv = e.inverse_delta.unwrap();
        assert!(inv > D0_TOL);
        assert!((inv + e.min_delta).abs() < 1e-12);
    }

    #[test]
    fn classical_probe_runs() {
        let c = cut();
        let mut rng = random::rng(5);
        let set = GateSet::new(vec![
            NamedGate::new("H⊗I", tensor(&gates::hadamard(), &identity(2))),
            NamedGate::new("I⊗H", tensor(&identity(2), &gates::hadamard())),
        ])
        .unwrap();
        let r = classical_universality_probe(&set, &Functional::Negativity, &c, 20, 4, 0.05, &mut rng).unwrap();
        assert_eq!(r.targets, 20);
        assert_eq!(r.exactness, "statistical");
    }
}
