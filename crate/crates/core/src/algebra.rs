//! Matrix *-algebras: generation, commutants, the injective set ǍA, regular
//! elements, quantum orbits and reachability probes.
//!
//! ## ǍA in finite dimension
//!
//! `a ∈ ǍA` asks that `a ρ a*` keep a strictly positive trace for every PSD
//! `ρ ≠ 0`. Since `Tr(a ρ a*) = Tr(a*a ρ)`, this holds for all such `ρ` exactly
//! when `a*a` is positive definite, i.e. `ker a = {0}`: if `a v = 0` then
//! `ρ = v v*` is annihilated, and if `a*a ≻ 0` then `Tr(a*a ρ) ≥ λ_min Tr ρ > 0`.
//! [`in_check_a`] decides membership through the smallest eigenvalue of `a*a`
//! and returns a kernel vector as witness otherwise.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    eig_unchecked, embed_operator, frobenius_norm, hs_inner, identity, max_norm, real,
    unitarity_defect, CMatrix, CVector, MatrixRecord, TensorShape,
};
use crate::random;
use crate::states::{conj_act, trace_distance, DensityOperator, UnnormalizedState, TRACE_TOL};

/// Hilbert–Schmidt residual tolerance for span membership.
pub const SPAN_TOL: f64 = 1e-9;
/// Tolerance on the numerical inverse lying in the span.
pub const INVERSE_TOL: f64 = 1e-8;
/// `a*a` must have its smallest eigenvalue above this to count as injective.
pub const INJECTIVE_TOL: f64 = TRACE_TOL;

/// Default breadth-first depth for fibers.
pub const DEFAULT_ORBIT_DEPTH: usize = 8;
/// Default trace-distance deduplication tolerance for orbits.
pub const DEFAULT_ORBIT_TOL: f64 = 1e-9;

const NULL_TOL: f64 = 1e-8;

/// Identity-containing, *-closed span of `d × d` matrices with a
/// Hilbert–Schmidt orthonormal basis.
#[derive(Debug, Clone)]
pub struct MatrixStarAlgebra {
    dim: usize,
    basis: Vec<CMatrix>,
}

/// Gram–Schmidt step (two passes). Appends the normalized residual of `m`
/// when it exceeds `tol·max(1, ‖m‖)`; returns whether the span grew.
fn extend_orthonormal(basis: &mut Vec<CMatrix>, m: &CMatrix, tol: f64) -> bool {
    let scale = frobenius_norm(m).max(1.0);
    let mut r = m.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let coef = hs_inner(b, &r);
            r -= b * coef;
        }
    }
    let n = frobenius_norm(&r);
    if n > tol * scale {
        basis.push(r / real(n));
        true
    } else {
        false
    }
}

fn project_residual(basis: &[CMatrix], a: &CMatrix) -> f64 {
    let mut r = a.clone();
    for b in basis {
        let coef = hs_inner(b, &r);
        r -= b * coef;
    }
    frobenius_norm(&r)
}

impl MatrixStarAlgebra {
    pub fn scalars(d: usize) -> Self {
        Self {
            dim: d,
            basis: vec![identity(d) / real((d as f64).sqrt())],
        }
    }

    /// Full matrix algebra `M_d`, basis of matrix units.
    pub fn full(d: usize) -> Self {
        let mut basis = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(i, j)] = real(1.0);
                basis.push(e);
            }
        }
        Self { dim: d, basis }
    }

    pub fn diagonal(d: usize) -> Self {
        let basis = (0..d)
            .map(|i| {
                let mut e = CMatrix::zeros(d, d);
                e[(i, i)] = real(1.0);
                e
            })
            .collect();
        Self { dim: d, basis }
    }

    /// Span of `elements`, rejected unless it contains the identity and is
    /// closed under adjoint and product.
    pub fn from_span(d: usize, elements: &[CMatrix]) -> Result<Self> {
        let mut basis = Vec::new();
        for e in elements {
            check_dims(e, d)?;
            extend_orthonormal(&mut basis, e, SPAN_TOL);
        }
        let alg = Self { dim: d, basis };
        let r = alg.residual(&identity(d));
        if r > SPAN_TOL {
            return Err(Error::NotStarAlgebra(format!(
                "identity not in span (residual {r:.3e})"
            )));
        }
        for b in &alg.basis {
            let r = alg.residual(&b.adjoint());
            if r > SPAN_TOL {
                return Err(Error::NotStarAlgebra(format!(
                    "span not closed under adjoint (residual {r:.3e})"
                )));
            }
        }
        for b in &alg.basis {
            for c in &alg.basis {
                let r = alg.residual(&(b * c));
                if r > SPAN_TOL {
                    return Err(Error::NotStarAlgebra(format!(
                        "span not closed under products (residual {r:.3e})"
                    )));
                }
            }
        }
        Ok(alg)
    }

    /// Smallest *-closed, identity-containing span holding the generators:
    /// products and adjoints are added until the dimension stops growing.
    pub fn generate(generators: &[CMatrix], d: usize) -> Result<Self> {
        let mut basis = Vec::new();
        extend_orthonormal(&mut basis, &identity(d), SPAN_TOL);
        for g in generators {
            check_dims(g, d)?;
            extend_orthonormal(&mut basis, g, SPAN_TOL);
            extend_orthonormal(&mut basis, &g.adjoint(), SPAN_TOL);
        }
        let mut frontier_start = 0;
        loop {
            let before = basis.len();
            let snapshot = basis.clone();
            for (i, a) in snapshot.iter().enumerate() {
                for (j, b) in snapshot.iter().enumerate() {
                    if i < frontier_start && j < frontier_start {
                        continue;
                    }
                    if basis.len() == d * d {
                        break;
                    }
                    extend_orthonormal(&mut basis, &(a * b), SPAN_TOL);
                    extend_orthonormal(&mut basis, &(a * b).adjoint(), SPAN_TOL);
                }
            }
            if basis.len() == before {
                break;
            }
            frontier_start = before;
            basis = reorthonormalize(&basis);
        }
        Ok(Self { dim: d, basis })
    }

    /// `A ⊗ B`, spanned by products of basis elements.
    pub fn tensor(&self, other: &MatrixStarAlgebra) -> Self {
        let mut basis = Vec::with_capacity(self.basis.len() * other.basis.len());
        for a in &self.basis {
            for b in &other.basis {
                basis.push(a.kronecker(b));
            }
        }
        Self {
            dim: self.dim * other.dim,
            basis,
        }
    }

    /// `A ↦ A ⊗ I`: places the algebra on `factors` of `shape`.
    pub fn embed(&self, shape: &TensorShape, factors: &[usize]) -> Result<Self> {
        let rest: usize = shape.dim() / self.dim.max(1);
        let norm = real((rest as f64).sqrt());
        let basis = self
            .basis
            .iter()
            .map(|b| embed_operator(b, shape, factors).map(|m| m / norm))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: shape.dim(),
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the span.
    pub fn span_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Hilbert–Schmidt norm of `a` minus its projection onto the span.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return f64::INFINITY;
        }
        project_residual(&self.basis, a)
    }

    pub fn contains(&self, a: &CMatrix) -> bool {
        self.residual(a) <= SPAN_TOL * frobenius_norm(a).max(1.0)
    }

    /// Largest residual of `other`'s basis in this span.
    pub fn containment_residual(&self, other: &MatrixStarAlgebra) -> f64 {
        other
            .basis
            .iter()
            .map(|b| self.residual(b))
            .fold(0.0, f64::max)
    }

    pub fn contains_algebra(&self, other: &MatrixStarAlgebra) -> bool {
        self.containment_residual(other) <= SPAN_TOL
    }

    pub fn same_span(&self, other: &MatrixStarAlgebra, tol: f64) -> bool {
        self.dim == other.dim
            && self.span_dim() == other.span_dim()
            && self.containment_residual(other) <= tol
            && other.containment_residual(self) <= tol
    }

    /// Matrices commuting with every basis element: the null space of
    /// `Σ_B L_B* L_B` with `L_B = B ⊗ I − I ⊗ Bᵀ` acting on row-major `vec(X)`.
    pub fn commutant(&self) -> MatrixStarAlgebra {
        let d = self.dim;
        let id = identity(d);
        let mut gram = CMatrix::zeros(d * d, d * d);
        for b in &self.basis {
            let l = b.kronecker(&id) - id.kronecker(&b.transpose());
            gram += l.adjoint() * l;
        }
        let eig = eig_unchecked(&gram);
        let scale = eig.max().abs().max(1.0);
        let mut basis = Vec::new();
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam > NULL_TOL * scale {
                break;
            }
            let col = eig.vectors.column(k);
            let m = CMatrix::from_row_iterator(d, d, col.iter().copied());
            extend_orthonormal(&mut basis, &m, SPAN_TOL);
        }
        MatrixStarAlgebra { dim: d, basis }
    }

    pub fn double_commutant(&self) -> MatrixStarAlgebra {
        self.commutant().commutant()
    }

    /// `(A′)′ = A` within the span tolerance.
    pub fn is_von_neumann(&self) -> bool {
        self.double_commutant().same_span(self, SPAN_TOL)
    }
}

fn reorthonormalize(basis: &[CMatrix]) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(basis.len());
    for b in basis {
        extend_orthonormal(&mut out, b, SPAN_TOL);
    }
    out
}

fn check_dims(m: &CMatrix, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "expected a {d}x{d} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Result of an ǍA membership test.
#[derive(Debug, Clone)]
pub struct CheckAVerdict {
    pub member: bool,
    /// Smallest eigenvalue of `a*a`.
    pub min_eigenvalue: f64,
    /// Unit kernel vector `v` with `a v ≈ 0`; `v v*` is annihilated.
    pub witness: Option<CVector>,
    pub probes: Option<ProbeTally>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeTally {
    pub tested: usize,
    pub vanished: usize,
}

impl CheckAVerdict {
    /// A member must never annihilate a probe; non-members need not be caught by probes.
    pub fn probes_consistent(&self) -> bool {
        match self.probes {
            Some(t) => !(self.member && t.vanished > 0),
            None => true,
        }
    }
}

/// Smallest eigenvalue of `a*a` and its eigenvector.
pub fn injectivity(a: &CMatrix) -> (f64, CVector) {
    let eig = eig_unchecked(&(a.adjoint() * a));
    (eig.min(), eig.vectors.column(0).into_owned())
}

/// Decides `a ∈ ǍA` (see the module docs), optionally cross-checking probe states.
pub fn in_check_a(
    a: &CMatrix,
    algebra: &MatrixStarAlgebra,
    probes: Option<&[UnnormalizedState]>,
) -> Result<CheckAVerdict> {
    let residual = algebra.residual(a);
    if residual > SPAN_TOL * frobenius_norm(a).max(1.0) {
        return Err(Error::NotInAlgebra { residual });
    }
    let (min_eigenvalue, v) = injectivity(a);
    let member = min_eigenvalue > INJECTIVE_TOL;
    let witness = (!member).then_some(v);
    let probes = match probes {
        Some(list) => {
            let mut vanished = 0;
            for s in list {
                if conj_act(a, s)?.is_vanished() {
                    vanished += 1;
                }
            }
            Some(ProbeTally {
                tested: list.len(),
                vanished,
            })
        }
        None => None,
    };
    Ok(CheckAVerdict {
        member,
        min_eigenvalue,
        witness,
        probes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedGate {
    pub name: String,
    pub matrix: CMatrix,
}

impl NamedGate {
    pub fn new(name: impl Into<String>, matrix: CMatrix) -> Self {
        Self {
            name: name.into(),
            matrix,
        }
    }

    pub fn is_unitary(&self) -> bool {
        unitarity_defect(&self.matrix) <= 1e-10
    }
}

/// Finite named family of operators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateSet {
    gates: Vec<NamedGate>,
}

impl GateSet {
    pub fn new(gates: Vec<NamedGate>) -> Result<Self> {
        if let Some(first) = gates.first() {
            let d = first.matrix.nrows();
            for g in &gates {
                check_dims(&g.matrix, d)?;
            }
        }
        Ok(Self { gates })
    }

    pub fn empty() -> Self {
        Self { gates: vec![] }
    }

    pub fn gates(&self) -> &[NamedGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.gates.first().map(|g| g.matrix.nrows())
    }

    pub fn unitarity(&self) -> Vec<bool> {
        self.gates.iter().map(NamedGate::is_unitary).collect()
    }

    /// Appends gates, returning the enlarged set.
    pub fn extended(&self, more: &[NamedGate]) -> Result<Self> {
        let mut gates = self.gates.clone();
        gates.extend_from_slice(more);
        Self::new(gates)
    }

    pub fn to_records(&self) -> Vec<GateRecord> {
        self.gates
            .iter()
            .map(|g| GateRecord {
                name: g.name.clone(),
                matrix: MatrixRecord::from(&g.matrix),
            })
            .collect()
    }

    pub fn from_records(records: &[GateRecord]) -> Result<Self> {
        let gates = records
            .iter()
            .map(|r| Ok(NamedGate::new(r.name.clone(), r.matrix.to_matrix()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(gates)
    }
}

/// Gate file entry: a matrix record plus its name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub name: String,
    #[serde(flatten)]
    pub matrix: MatrixRecord,
}

/// Report on whether a gate set sits inside ǍA ∩ ℛ and how it closes.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GroupReport {
    pub identity_in_set: bool,
    pub identity_in_algebra: bool,
    pub outside_algebra: Vec<String>,
    pub non_invertible: Vec<String>,
    /// Products `a·b` that leave span ∩ invertibles.
    pub closure_failures: Vec<(String, String)>,
    /// Elements whose numerical inverse is not in the span.
    pub inverse_failures: Vec<String>,
    /// Size of the generated group, counted up to global phase.
    pub generated_order: usize,
    pub closure_truncated: bool,
    /// Words producing elements outside the supplied set (up to phase).
    pub extension: Vec<String>,
    pub notes: Vec<String>,
}

impl GroupReport {
    pub fn passes(&self) -> bool {
        self.identity_in_algebra
            && self.outside_algebra.is_empty()
            && self.non_invertible.is_empty()
            && self.closure_failures.is_empty()
            && self.inverse_failures.is_empty()
    }
}

fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let ip = hs_inner(a, b);
    if ip.norm() <= tol {
        return frobenius_norm(a) <= tol && frobenius_norm(b) <= tol;
    }
    let phase = ip / ip.norm();
    max_norm(&(b - a * phase)) <= tol
}

const GROUP_LIMIT: usize = 512;

/// Checks the group axioms of ǍA ∩ ℛ on a gate set and enumerates the group it
/// generates modulo global phase.
pub fn regular_subgroup_check(set: &GateSet, algebra: &MatrixStarAlgebra) -> GroupReport {
    let d = algebra.dim();
    let mut report = GroupReport {
        identity_in_algebra: algebra.contains(&identity(d)),
        ..Default::default()
    };
    report
        .notes
        .push("inverse membership is tested numerically against the span".into());
    let is_regular = |m: &CMatrix| algebra.contains(m) && injectivity(m).0 > INJECTIVE_TOL;

    for g in set.gates() {
        if !algebra.contains(&g.matrix) {
            report.outside_algebra.push(g.name.clone());
            continue;
        }
        if injectivity(&g.matrix).0 <= INJECTIVE_TOL {
            report.non_invertible.push(g.name.clone());
            continue;
        }
        match g.matrix.clone().try_inverse() {
            Some(inv) if algebra.residual(&inv) <= INVERSE_TOL * frobenius_norm(&inv).max(1.0) => {}
            _ => report.inverse_failures.push(g.name.clone()),
        }
        if max_norm(&(&g.matrix - identity(d))) <= 1e-12 {
            report.identity_in_set = true;
        }
    }
    for a in set.gates() {
        for b in set.gates() {
            if !is_regular(&a.matrix) || !is_regular(&b.matrix) {
                continue;
            }
            if !is_regular(&(&a.matrix * &b.matrix)) {
                report.closure_failures.push((a.name.clone(), b.name.clone()));
            }
        }
    }

    // Projective closure by breadth-first products.
    let mut elements: Vec<(String, CMatrix)> = Vec::new();
    let seen = |elements: &[(String, CMatrix)], m: &CMatrix| {
        elements.iter().any(|(_, e)| equal_up_to_phase(e, m, 1e-9))
    };
    let regular: Vec<&NamedGate> = set.gates().iter().filter(|g| is_regular(&g.matrix)).collect();
    for g in &regular {
        if !seen(&elements, &g.matrix) {
            elements.push((g.name.clone(), g.matrix.clone()));
        }
    }
    let supplied = elements.len();
    let mut queue: VecDeque<usize> = (0..elements.len()).collect();
    while let Some(i) = queue.pop_front() {
        for g in &regular {
            let prod = &elements[i].1 * &g.matrix;
            if seen(&elements, &prod) {
                continue;
            }
            if elements.len() >= GROUP_LIMIT {
                report.closure_truncated = true;
                break;
            }
            let word = format!("{}*{}", elements[i].0, g.name);
            elements.push((word, prod));
            queue.push_back(elements.len() - 1);
        }
        if report.closure_truncated {
            break;
        }
    }
    report.generated_order = elements.len();
    report.extension = elements[supplied..].iter().map(|(w, _)| w.clone()).collect();
    if !report.extension.is_empty() {
        report.notes.push(format!(
            "closure adds {} element(s) beyond the supplied set",
            report.extension.len()
        ));
    }
    report
}

fn check_gates_injective(gates: &GateSet) -> Result<()> {
    for g in gates.gates() {
        let (min, _) = injectivity(&g.matrix);
        if min <= INJECTIVE_TOL {
            return Err(Error::GateOutsideCheckA {
                name: g.name.clone(),
                min_eigenvalue: min,
            });
        }
    }
    Ok(())
}

/// Breadth-first quantum orbit of `rho0` under normalized conjugation, up to
/// `max_depth` gate applications, deduplicated by trace distance `tol`.
/// The identity word is included, so `rho0` is always the first element.
pub fn orbit(
    rho0: &DensityOperator,
    gates: &GateSet,
    max_depth: usize,
    tol: f64,
) -> Result<Vec<DensityOperator>> {
    if let Some(d) = gates.dim() {
        if d != rho0.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho0.dim(),
                actual: d,
            });
        }
    }
    check_gates_injective(gates)?;
    let mut states = vec![rho0.clone()];
    let mut frontier = vec![0usize];
    for _ in 0..max_depth {
        let mut next = Vec::new();
        for &i in &frontier {
            for g in gates.gates() {
                let m = &g.matrix * states[i].matrix() * g.matrix.adjoint();
                let t = m.trace().re;
                let img = DensityOperator::from_trusted(m / real(t));
                if states
                    .iter()
                    .all(|s| trace_distance(s.matrix(), img.matrix()) > tol)
                {
                    states.push(img);
                    next.push(states.len() - 1);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(states)
}

/// Reachability probe under a unitary gate set.
#[derive(Debug, Clone, Serialize)]
pub struct UniversalityReport {
    pub targets: usize,
    pub reachable: usize,
    pub fraction: f64,
    pub orbit_size: usize,
    pub depth: usize,
    pub epsilon: f64,
    pub exactness: &'static str,
}

fn pure_distance(a: &CVector, b: &CVector) -> f64 {
    let ov = a.dotc(b).norm_sqr();
    (1.0 - ov).max(0.0).sqrt()
}

/// Pure-state orbit of `ket`, deduplicated at trace distance 1e-6
/// (the square root in the pure-state distance amplifies rounding).
pub fn ket_orbit(ket: &CVector, gates: &GateSet, depth: usize) -> Vec<CVector> {
    const DEDUP: f64 = 1e-6;
    const BUCKET: f64 = 1e-4;
    let key = |v: &CVector| (v[0].norm_sqr() / BUCKET).floor() as i64;
    let mut states = vec![ket.clone()];
    let mut buckets: HashMap<i64, Vec<usize>> = HashMap::new();
    buckets.entry(key(ket)).or_default().push(0);
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &i in &frontier {
            for g in gates.gates() {
                let img = &g.matrix * &states[i];
                let k = key(&img);
                let dup = (k - 1..=k + 1).any(|kk| {
                    buckets
                        .get(&kk)
                        .is_some_and(|ids| ids.iter().any(|&j| pure_distance(&states[j], &img) <= DEDUP))
                });
                if !dup {
                    states.push(img);
                    let id = states.len() - 1;
                    buckets.entry(k).or_default().push(id);
                    next.push(id);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    states
}

/// Fixed fiducial `∝ Σ_k (k+1)^{-1/2} e^{iφk} |k⟩` with `φ` the golden angle.
/// It is not an eigenvector of the usual gates, so no depth is spent on
/// words that fix it.
pub fn default_fiducial(d: usize) -> CVector {
    let phi = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let v = CVector::from_iterator(
        d,
        (0..d).map(|k| num_complex::Complex64::from_polar(1.0 / ((k + 1) as f64).sqrt(), phi * k as f64)),
    );
    let n = v.norm();
    v / real(n)
}

/// Fraction of `targets` within trace distance `epsilon` of the depth-limited
/// orbit of `fiducial`.
pub fn universality_probe_targets(
    gates: &GateSet,
    fiducial: &CVector,
    targets: &[CVector],
    depth: usize,
    epsilon: f64,
) -> Result<UniversalityReport> {
    let d = fiducial.len();
    for g in gates.gates() {
        check_dims(&g.matrix, d)?;
        if !g.is_unitary() {
            return Err(Error::Invalid(format!("gate `{}` is not unitary", g.name)));
        }
    }
    let orbit = ket_orbit(fiducial, gates, depth);
    let reachable = targets
        .iter()
        .filter(|t| orbit.iter().any(|s| pure_distance(s, t) <= epsilon))
        .count();
    Ok(UniversalityReport {
        targets: targets.len(),
        reachable,
        fraction: if targets.is_empty() {
            0.0
        } else {
            reachable as f64 / targets.len() as f64
        },
        orbit_size: orbit.len(),
        depth,
        epsilon,
        exactness: "statistical",
    })
}

/// As [`universality_probe_targets`] from [`default_fiducial`] with
/// `n_targets` Haar-random pure targets.
pub fn universality_probe<R: Rng + ?Sized>(
    gates: &GateSet,
    d: usize,
    n_targets: usize,
    depth: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<UniversalityReport> {
    let targets: Vec<CVector> = (0..n_targets).map(|_| random::haar_ket(rng, d)).collect();
    universality_probe_targets(gates, &default_fiducial(d), &targets, depth, epsilon)
}
