//! Quantum fibrations over finite topologies.
//!
//! Every point carries one tensor factor; an open set `U` acts on the product
//! of its points' factors in point order. An algebra on `V ⊆ U` is compared
//! with the one on `U` through `A ↦ A ⊗ I`, and states restrict from `U` to
//! `V` by partial trace (default) or by projecting the dropped factors onto
//! fixed vectors.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::algebra::{
    in_check_a, orbit, GateRecord, GateSet, MatrixStarAlgebra, DEFAULT_ORBIT_DEPTH,
    DEFAULT_ORBIT_TOL, SPAN_TOL,
};
use crate::channels::{is_completely_positive, KrausChannel};
use crate::error::{Error, Result};
use crate::matcore::{
    commutator, eig_unchecked, embed_operator, expm_i, hs_inner, max_norm,
    operator_norm, partial_trace, real, CMatrix, CVector, HermitianOp, MatrixRecord, TensorShape,
};
use crate::random;
use crate::states::{DensityOperator, StateRecord, TRACE_TOL};
use crate::topology::{FiniteTopology, OpenSet, PointLabel, TopologyFile};

/// Residual allowed in the presheaf-law check.
pub const PRESHEAF_TOL: f64 = 1e-12;

/// How a state on `U` is restricted to `V ⊆ U`.
#[derive(Debug, Clone, PartialEq)]
pub enum Restriction {
    PartialTrace,
    /// Projects each dropped point's factor onto its vector and renormalizes.
    Projection { vectors: Vec<CVector> },
}

/// Declared data before validation.
#[derive(Debug, Clone)]
pub struct FibrationSpec {
    pub topology: FiniteTopology,
    pub local_dims: Vec<usize>,
    pub algebras: Vec<(OpenSet, MatrixStarAlgebra)>,
    pub states: Vec<(OpenSet, DensityOperator)>,
    pub gates: Vec<(OpenSet, GateSet)>,
    pub restriction: Restriction,
}

impl FibrationSpec {
    pub fn new(topology: FiniteTopology, local_dims: Vec<usize>) -> Self {
        Self {
            topology,
            local_dims,
            algebras: vec![],
            states: vec![],
            gates: vec![],
            restriction: Restriction::PartialTrace,
        }
    }

    pub fn with_algebra(mut self, open: OpenSet, alg: MatrixStarAlgebra) -> Self {
        self.algebras.push((open, alg));
        self
    }

    pub fn with_state(mut self, open: OpenSet, rho: DensityOperator) -> Self {
        self.states.push((open, rho));
        self
    }

    pub fn with_gates(mut self, open: OpenSet, gates: GateSet) -> Self {
        self.gates.push((open, gates));
        self
    }

    pub fn with_restriction(mut self, r: Restriction) -> Self {
        self.restriction = r;
        self
    }

    /// Discrete topology on points `1..=n`, one qubit each, full matrix
    /// algebras on every nonempty open and `|0…0⟩` everywhere.
    pub fn qubit_chain(n: usize) -> Self {
        let points = (1..=n).map(|i| i.to_string()).collect();
        let topology = FiniteTopology::discrete(points);
        let mut spec = Self::new(topology.clone(), vec![2; n]);
        for &u in topology.opens() {
            if u.is_empty() {
                continue;
            }
            let d = 1usize << u.len();
            spec.algebras.push((u, MatrixStarAlgebra::full(d)));
            let mut ket = CVector::zeros(d);
            ket[0] = real(1.0);
            spec.states.push((u, DensityOperator::pure(&ket).expect("unit ket")));
        }
        spec
    }
}

/// What assembly verified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssemblyReport {
    pub points: usize,
    pub opens: usize,
    pub declared_algebras: usize,
    pub inherited_algebras: Vec<String>,
    pub isotony_pairs: usize,
    pub max_isotony_residual: f64,
    pub presheaf_chains: usize,
    pub max_presheaf_residual: f64,
    pub gates_checked: usize,
    pub covariance: &'static str,
}

/// Fiber over an open set.
#[derive(Debug, Clone, PartialEq)]
pub enum Fiber {
    Empty,
    Orbit(Vec<DensityOperator>),
}

impl Fiber {
    pub fn len(&self) -> usize {
        match self {
            Fiber::Empty => 0,
            Fiber::Orbit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn states(&self) -> &[DensityOperator] {
        match self {
            Fiber::Empty => &[],
            Fiber::Orbit(v) => v,
        }
    }
}

/// Validated fibration; fibers are computed on demand and cached.
#[derive(Debug)]
pub struct QuantumFibration {
    topology: FiniteTopology,
    local_dims: Vec<usize>,
    algebras: BTreeMap<OpenSet, MatrixStarAlgebra>,
    states: BTreeMap<OpenSet, DensityOperator>,
    gates: BTreeMap<OpenSet, GateSet>,
    restriction: Restriction,
    report: AssemblyReport,
    fibers: Mutex<BTreeMap<OpenSet, Arc<Fiber>>>,
}

/// Positions of `inner`'s points among `outer`'s points.
fn positions(outer: OpenSet, inner: OpenSet) -> Vec<usize> {
    let outer_idx = outer.indices();
    inner
        .indices()
        .iter()
        .map(|i| outer_idx.iter().position(|j| j == i).expect("nested"))
        .collect()
}

fn shape_of(local_dims: &[usize], u: OpenSet) -> Result<TensorShape> {
    TensorShape::new(u.indices().iter().map(|&i| local_dims[i]).collect())
}

/// Elements of `M(U)` whose embedding lies in `outer`.
fn inherit(outer: &MatrixStarAlgebra, outer_shape: &TensorShape, factors: &[usize]) -> Result<MatrixStarAlgebra> {
    let du: usize = factors.iter().map(|&f| outer_shape.dims()[f]).product();
    let full = MatrixStarAlgebra::full(du);
    let rest = (outer_shape.dim() / du) as f64;
    let embedded: Vec<CMatrix> = full
        .basis()
        .iter()
        .map(|e| embed_operator(e, outer_shape, factors).map(|m| m / real(rest.sqrt())))
        .collect::<Result<_>>()?;
    let n1 = embedded.len();
    let c = CMatrix::from_fn(n1, outer.span_dim(), |i, k| hs_inner(&embedded[i], &outer.basis()[k]));
    let g = &c * c.adjoint();
    let eig = eig_unchecked(&g);
    let mut elements = Vec::new();
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam < 1.0 - 1e-9 {
            continue;
        }
        let col = eig.vectors.column(k);
        let mut m = CMatrix::zeros(du, du);
        for (i, e) in full.basis().iter().enumerate() {
            m += e * col[i].conj();
        }
        elements.push(m);
    }
    MatrixStarAlgebra::from_span(du, &elements)
}

impl QuantumFibration {
    /// Validates the declared data: dimensions, gate membership in ǍA,
    /// isotony along every inclusion, and the presheaf law along every chain.
    pub fn assemble(spec: FibrationSpec) -> Result<Self> {
        let FibrationSpec {
            topology,
            local_dims,
            algebras: declared,
            states: declared_states,
            gates: declared_gates,
            restriction,
        } = spec;
        let n = topology.points().len();
        if local_dims.len() != n || local_dims.contains(&0) {
            return Err(Error::Invalid(format!(
                "need one positive local dimension per point ({n} points, got {:?})",
                local_dims
            )));
        }
        if let Restriction::Projection { vectors } = &restriction {
            if vectors.len() != n {
                return Err(Error::Invalid("projection needs one vector per point".into()));
            }
            for (i, v) in vectors.iter().enumerate() {
                if v.len() != local_dims[i] || (v.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::Invalid(format!(
                        "projection vector for point {} must be a unit vector of length {}",
                        topology.points()[i],
                        local_dims[i]
                    )));
                }
            }
        }
        let label = |u: OpenSet| topology.display(u);
        let check_open = |u: OpenSet| -> Result<()> {
            if u.is_empty() || !topology.is_open(u) {
                return Err(Error::Invalid(format!("{} is not a nonempty open set", label(u))));
            }
            Ok(())
        };

        let mut algebras = BTreeMap::new();
        for (u, a) in declared {
            check_open(u)?;
            let d = shape_of(&local_dims, u)?.dim();
            if a.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: a.dim() });
            }
            algebras.insert(u, a);
        }
        let declared_count = algebras.len();
        let mut inherited = Vec::new();
        for &u in topology.opens() {
            if u.is_empty() || algebras.contains_key(&u) {
                continue;
            }
            let outer = topology
                .opens()
                .iter()
                .copied()
                .filter(|w| u.is_subset_of(*w) && *w != u && algebras.contains_key(w))
                .min_by_key(|w| (w.len(), w.0));
            if let Some(w) = outer {
                let shape_w = shape_of(&local_dims, w)?;
                let a = inherit(&algebras[&w], &shape_w, &positions(w, u))?;
                inherited.push(u);
                algebras.insert(u, a);
            }
        }

        let mut states = BTreeMap::new();
        for (u, rho) in declared_states {
            check_open(u)?;
            let d = shape_of(&local_dims, u)?.dim();
            if rho.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: rho.dim() });
            }
            states.insert(u, rho);
        }

        let mut gates = BTreeMap::new();
        let mut gates_checked = 0;
        for (u, set) in declared_gates {
            check_open(u)?;
            let alg = algebras.get(&u).ok_or_else(|| {
                Error::Invalid(format!("gates declared on {} which has no algebra", label(u)))
            })?;
            for g in set.gates() {
                let v = in_check_a(&g.matrix, alg, None)?;
                if !v.member {
                    return Err(Error::GateOutsideCheckA {
                        name: format!("{} on {}", g.name, label(u)),
                        min_eigenvalue: v.min_eigenvalue,
                    });
                }
                gates_checked += 1;
            }
            gates.insert(u, set);
        }

        let mut fib = Self {
            topology,
            local_dims,
            algebras,
            states,
            gates,
            restriction,
            report: AssemblyReport {
                points: n,
                opens: 0,
                declared_algebras: declared_count,
                inherited_algebras: vec![],
                isotony_pairs: 0,
                max_isotony_residual: 0.0,
                presheaf_chains: 0,
                max_presheaf_residual: 0.0,
                gates_checked,
                covariance: "not checked",
            },
            fibers: Mutex::new(BTreeMap::new()),
        };
        fib.report.opens = fib.topology.opens().len();
        fib.report.inherited_algebras = inherited.iter().map(|&u| fib.topology.display(u)).collect();

        // Isotony on every comparable pair.
        let with_alg: Vec<OpenSet> = fib.algebras.keys().copied().collect();
        for &u in &with_alg {
            for &v in &with_alg {
                if v == u || !v.is_subset_of(u) {
                    continue;
                }
                let r = fib.isotony_residual(v, u)?;
                fib.report.isotony_pairs += 1;
                fib.report.max_isotony_residual = fib.report.max_isotony_residual.max(r);
                if r > SPAN_TOL {
                    return Err(Error::IsotonyViolation {
                        outer: fib.topology.display(u),
                        inner: fib.topology.display(v),
                        residual: r,
                    });
                }
            }
        }

        // Presheaf law on every chain W ⊆ V ⊆ U of nonempty opens.
        let opens: Vec<OpenSet> = fib.topology.opens().iter().copied().filter(|u| !u.is_empty()).collect();
        for &u in &opens {
            let probes = fib.presheaf_probes(u)?;
            for &v in &opens {
                if !v.is_subset_of(u) {
                    continue;
                }
                for &w in &opens {
                    if !w.is_subset_of(v) {
                        continue;
                    }
                    for rho in &probes {
                        let two = fib.restrict(&fib.restrict(rho, u, v)?, v, w)?;
                        let one = fib.restrict(rho, u, w)?;
                        let r = max_norm(&(two.matrix() - one.matrix()));
                        fib.report.max_presheaf_residual = fib.report.max_presheaf_residual.max(r);
                        if r > PRESHEAF_TOL {
                            return Err(Error::RestrictionNotDensity {
                                outer: fib.topology.display(u),
                                inner: fib.topology.display(w),
                                reason: format!("presheaf law fails through {} (residual {r:.3e})", fib.topology.display(v)),
                            });
                        }
                    }
                    fib.report.presheaf_chains += 1;
                }
            }
        }
        Ok(fib)
    }

    /// Declared state on `u` (if any) plus one fixed pseudo-random mixed state.
    fn presheaf_probes(&self, u: OpenSet) -> Result<Vec<DensityOperator>> {
        let d = self.shape(u)?.dim();
        let mut rng = random::rng(u.0);
        let mut out = vec![DensityOperator::from_trusted(random::hs_mixed(&mut rng, d))];
        if let Some(s) = self.states.get(&u) {
            out.push(s.clone());
        }
        Ok(out)
    }

    /// Residual of `alg(inner) ⊗ I` in `alg(outer)`.
    pub fn isotony_residual(&self, inner: OpenSet, outer: OpenSet) -> Result<f64> {
        let (a_in, a_out) = match (self.algebras.get(&inner), self.algebras.get(&outer)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Invalid("both opens need algebras".into())),
        };
        if !inner.is_subset_of(outer) {
            return Err(self.not_nested(outer, inner));
        }
        let emb = a_in.embed(&self.shape(outer)?, &positions(outer, inner))?;
        Ok(a_out.containment_residual(&emb))
    }

    fn not_nested(&self, outer: OpenSet, inner: OpenSet) -> Error {
        Error::NotNested {
            outer: self.topology.display(outer),
            inner: self.topology.display(inner),
        }
    }

    pub fn topology(&self) -> &FiniteTopology {
        &self.topology
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn report(&self) -> &AssemblyReport {
        &self.report
    }

    pub fn restriction(&self) -> &Restriction {
        &self.restriction
    }

    pub fn shape(&self, u: OpenSet) -> Result<TensorShape> {
        shape_of(&self.local_dims, u)
    }

    pub fn algebra(&self, u: OpenSet) -> Option<&MatrixStarAlgebra> {
        self.algebras.get(&u)
    }

    pub fn state(&self, u: OpenSet) -> Option<&DensityOperator> {
        self.states.get(&u)
    }

    pub fn gates(&self, u: OpenSet) -> Option<&GateSet> {
        self.gates.get(&u)
    }

    /// Algebra of the smallest open neighbourhood of a point.
    pub fn point_algebra(&self, label: &str) -> Result<Option<&MatrixStarAlgebra>> {
        let u = self.topology.minimal_neighborhood(label)?;
        Ok(self.algebras.get(&u))
    }

    /// Restricts a state on `u` to `v ⊆ u`.
    pub fn restrict(&self, rho: &DensityOperator, u: OpenSet, v: OpenSet) -> Result<DensityOperator> {
        if !v.is_subset_of(u) || v.is_empty() {
            return Err(self.not_nested(u, v));
        }
        let shape = self.shape(u)?;
        if rho.dim() != shape.dim() {
            return Err(Error::DimensionMismatch { expected: shape.dim(), actual: rho.dim() });
        }
        if u == v {
            return Ok(rho.clone());
        }
        let keep = positions(u, v);
        match &self.restriction {
            Restriction::PartialTrace => Ok(DensityOperator::from_trusted(partial_trace(rho.matrix(), &shape, &keep)?)),
            Restriction::Projection { vectors } => {
                let dropped = u.difference(v).indices();
                let mut psi = CVector::from_element(1, real(1.0));
                for &p in &dropped {
                    psi = psi.kronecker(&vectors[p]);
                }
                let table = shape.split_table(&keep);
                let dk = table.len();
                let mut out = CMatrix::zeros(dk, dk);
                for (a, ra) in table.iter().enumerate() {
                    for (a2, ra2) in table.iter().enumerate() {
                        let mut z = num_complex::Complex64::new(0.0, 0.0);
                        for (b, &i) in ra.iter().enumerate() {
                            for (b2, &j) in ra2.iter().enumerate() {
                                z += psi[b].conj() * rho.matrix()[(i, j)] * psi[b2];
                            }
                        }
                        out[(a, a2)] = z;
                    }
                }
                let t = out.trace().re;
                if t <= TRACE_TOL {
                    return Err(Error::RestrictionNotDensity {
                        outer: self.topology.display(u),
                        inner: self.topology.display(v),
                        reason: format!("projection leaves trace {t:.3e}"),
                    });
                }
                Ok(DensityOperator::from_trusted(out / real(t)))
            }
        }
    }

    /// Orbit of the declared state under the declared gates, with default depth and tolerance.
    pub fn fiber(&self, u: OpenSet) -> Result<Arc<Fiber>> {
        if let Some(f) = self.fibers.lock().expect("fiber cache").get(&u) {
            return Ok(Arc::clone(f));
        }
        let f = Arc::new(self.fiber_with(u, DEFAULT_ORBIT_DEPTH, DEFAULT_ORBIT_TOL)?);
        let mut cache = self.fibers.lock().expect("fiber cache");
        Ok(Arc::clone(cache.entry(u).or_insert(f)))
    }

    pub fn fiber_with(&self, u: OpenSet, depth: usize, tol: f64) -> Result<Fiber> {
        let Some(rho) = self.states.get(&u) else {
            return Ok(Fiber::Empty);
        };
        let empty = GateSet::empty();
        let gates = self.gates.get(&u).unwrap_or(&empty);
        Ok(Fiber::Orbit(orbit(rho, gates, depth, tol)?))
    }

    /// Trotterized evolution of the declared state on `u`.
    pub fn trotter_evolve(&self, u: OpenSet, pieces: &[HermitianOp], t: f64, n_steps: usize) -> Result<TrotterResult> {
        let rho = self
            .states
            .get(&u)
            .ok_or_else(|| Error::Invalid(format!("no state declared on {}", self.topology.display(u))))?;
        trotter_evolve_state(rho, pieces, t, n_steps)
    }
}

/// Declared causal disjointness between opens.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalNet {
    pairs: BTreeSet<(OpenSet, OpenSet)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalViolation {
    pub first: String,
    pub second: String,
    /// Indices of the basis elements whose commutator is largest.
    pub basis_pair: (usize, usize),
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalityReport {
    pub pairs_checked: usize,
    pub violations: Vec<CausalViolation>,
    pub worst: Option<CausalViolation>,
}

impl CausalityReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

impl CausalNet {
    /// The relation is stored symmetrically; both opens need algebras.
    pub fn new(fib: &QuantumFibration, pairs: &[(OpenSet, OpenSet)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(a, b) in pairs {
            if a == b {
                return Err(Error::Invalid(format!(
                    "{} cannot be causally disjoint from itself",
                    fib.topology.display(a)
                )));
            }
            for u in [a, b] {
                if fib.algebra(u).is_none() {
                    return Err(Error::Invalid(format!("{} has no algebra", fib.topology.display(u))));
                }
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { pairs: set })
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(OpenSet, OpenSet)> {
        self.pairs.iter()
    }

    /// Commutators of the Hilbert–Schmidt orthonormal bases, both embedded on
    /// the union of the two opens.
    pub fn causality_check(&self, fib: &QuantumFibration, tol: f64) -> Result<CausalityReport> {
        let mut report = CausalityReport {
            pairs_checked: 0,
            violations: vec![],
            worst: None,
        };
        for &(a, b) in &self.pairs {
            let w = a.union(b);
            let shape = fib.shape(w)?;
            let ea = fib.algebras[&a].embed(&shape, &positions(w, a))?;
            let eb = fib.algebras[&b].embed(&shape, &positions(w, b))?;
            let mut worst = (0.0, (0, 0));
            for (i, x) in ea.basis().iter().enumerate() {
                for (j, y) in eb.basis().iter().enumerate() {
                    let r = max_norm(&commutator(x, y));
                    if r > worst.0 {
                        worst = (r, (i, j));
                    }
                }
            }
            report.pairs_checked += 1;
            let v = CausalViolation {
                first: fib.topology.display(a),
                second: fib.topology.display(b),
                basis_pair: worst.1,
                residual: worst.0,
            };
            if report.worst.as_ref().is_none_or(|x| v.residual > x.residual) {
                report.worst = Some(v.clone());
            }
            if worst.0 > tol {
                report.violations.push(v);
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEdge {
    pub from: OpenSet,
    pub to: OpenSet,
    pub channel: KrausChannel,
}

/// Channels from fibers of one fibration to fibers of another (or the same).
#[derive(Debug)]
pub struct QuantumNetwork<'a> {
    source: &'a QuantumFibration,
    target: &'a QuantumFibration,
    edges: Vec<NetworkEdge>,
}

impl<'a> QuantumNetwork<'a> {
    pub fn new(source: &'a QuantumFibration, target: &'a QuantumFibration) -> Self {
        Self { source, target, edges: vec![] }
    }

    pub fn edges(&self) -> &[NetworkEdge] {
        &self.edges
    }

    /// Registers `channel` from `u` (source) to `v` (target) after checking
    /// dimensions and the Choi matrix. Returns the edge index.
    pub fn connect(&mut self, u: OpenSet, v: OpenSet, channel: KrausChannel) -> Result<usize> {
        for (fib, o) in [(self.source, u), (self.target, v)] {
            if o.is_empty() || !fib.topology.is_open(o) {
                return Err(Error::Invalid(format!("{} is not a nonempty open set", fib.topology.display(o))));
            }
        }
        let din = self.source.shape(u)?.dim();
        let dout = self.target.shape(v)?.dim();
        if channel.input_dim() != din {
            return Err(Error::DimensionMismatch { expected: din, actual: channel.input_dim() });
        }
        if channel.output_dim() != dout {
            return Err(Error::DimensionMismatch { expected: dout, actual: channel.output_dim() });
        }
        let cp = is_completely_positive(&channel);
        if !cp.completely_positive {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: cp.min_eigenvalue });
        }
        self.edges.push(NetworkEdge { from: u, to: v, channel });
        Ok(self.edges.len() - 1)
    }

    pub fn transmit(&self, edge: usize, rho: &DensityOperator) -> Result<DensityOperator> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| Error::Invalid(format!("no edge {edge}")))?;
        e.channel.apply(rho)
    }
}

#[derive(Debug, Clone)]
pub struct TrotterResult {
    pub state: DensityOperator,
    pub unitary: CMatrix,
    /// `Σ_{j<k} t² ‖[H_j, H_k]‖ / (2n)`.
    pub bound: f64,
    pub steps: usize,
}

/// `(e^{−iH_m t/n} ⋯ e^{−iH_1 t/n})^n`.
pub fn trotter_unitary(pieces: &[HermitianOp], t: f64, n_steps: usize) -> Result<CMatrix> {
    if n_steps == 0 {
        return Err(Error::Invalid("at least one Trotter step is required".into()));
    }
    let d = pieces
        .first()
        .ok_or_else(|| Error::Invalid("no Hamiltonian pieces".into()))?
        .dim();
    let dt = t / n_steps as f64;
    let mut step = crate::matcore::identity(d);
    for h in pieces {
        if h.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: h.dim() });
        }
        step = expm_i(h, dt) * step;
    }
    let mut u = crate::matcore::identity(d);
    for _ in 0..n_steps {
        u = &step * u;
    }
    Ok(u)
}

/// First-order product-formula error bound.
pub fn trotter_bound(pieces: &[HermitianOp], t: f64, n_steps: usize) -> f64 {
    let mut s = 0.0;
    for (j, a) in pieces.iter().enumerate() {
        for b in &pieces[j + 1..] {
            s += operator_norm(&commutator(a.matrix(), b.matrix()));
        }
    }
    t * t * s / (2.0 * n_steps.max(1) as f64)
}

pub fn trotter_evolve_state(rho: &DensityOperator, pieces: &[HermitianOp], t: f64, n_steps: usize) -> Result<TrotterResult> {
    let unitary = trotter_unitary(pieces, t, n_steps)?;
    if unitary.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: unitary.nrows() });
    }
    let state = DensityOperator::from_trusted(&unitary * rho.matrix() * unitary.adjoint());
    Ok(TrotterResult {
        state,
        bound: trotter_bound(pieces, t, n_steps),
        unitary,
        steps: n_steps,
    })
}

/// `topology.json` of a bundle; `local_dims` defaults to qubits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleTopology {
    #[serde(flatten)]
    pub topology: TopologyFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_dims: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgebraSource {
    Full,
    Generated { generators: Vec<MatrixRecord> },
    Span { elements: Vec<MatrixRecord> },
}

/// One file in `algebras/`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub open: Vec<PointLabel>,
    #[serde(flatten)]
    pub algebra: AlgebraSource,
}

/// One file in `states/`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub open: Vec<PointLabel>,
    #[serde(flatten)]
    pub state: StateRecord,
}

/// One file in `gates/`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatesFile {
    pub open: Vec<PointLabel>,
    pub gates: Vec<GateRecord>,
}

/// `restrictions.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RestrictionFile {
    PartialTrace,
    /// Per-point unit vectors as `[[re, im], ...]`.
    Projection { vectors: BTreeMap<String, Vec<[f64; 2]>> },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Invalid(format!("{}: {e}", path.display()))
    })
}

fn json_files(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if !dir.exists() {
        return Ok(vec![]);
    }
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn labels_to_open(t: &FiniteTopology, open: &[PointLabel]) -> Result<OpenSet> {
    let labels: Vec<String> = open.iter().map(|p| p.to_string()).collect();
    Ok(t.open_from_labels(&labels)?)
}

/// Reads a bundle directory: `topology.json`, `algebras/`, `states/`,
/// `gates/` and an optional `restrictions.json`.
pub fn load_bundle(dir: &Path) -> Result<FibrationSpec> {
    let top: BundleTopology = read_json(&dir.join("topology.json"))?;
    let topology = top.topology.validate()?;
    let n = topology.points().len();
    let local_dims = top.local_dims.unwrap_or_else(|| vec![2; n]);
    let mut spec = FibrationSpec::new(topology.clone(), local_dims.clone());
    for path in json_files(&dir.join("algebras"))? {
        let f: AlgebraFile = read_json(&path)?;
        let u = labels_to_open(&topology, &f.open)?;
        let d = shape_of(&local_dims, u)?.dim();
        let mats = |v: &[MatrixRecord]| v.iter().map(MatrixRecord::to_matrix).collect::<Result<Vec<_>>>();
        let alg = match &f.algebra {
            AlgebraSource::Full => MatrixStarAlgebra::full(d),
            AlgebraSource::Generated { generators } => MatrixStarAlgebra::generate(&mats(generators)?, d)?,
            AlgebraSource::Span { elements } => MatrixStarAlgebra::from_span(d, &mats(elements)?)?,
        };
        spec.algebras.push((u, alg));
    }
    for path in json_files(&dir.join("states"))? {
        let f: StateFile = read_json(&path)?;
        let u = labels_to_open(&topology, &f.open)?;
        spec.states.push((u, f.state.to_density()?));
    }
    for path in json_files(&dir.join("gates"))? {
        let f: GatesFile = read_json(&path)?;
        let u = labels_to_open(&topology, &f.open)?;
        spec.gates.push((u, GateSet::from_records(&f.gates)?));
    }
    let rpath = dir.join("restrictions.json");
    if rpath.exists() {
        spec.restriction = match read_json::<RestrictionFile>(&rpath)? {
            RestrictionFile::PartialTrace => Restriction::PartialTrace,
            RestrictionFile::Projection { vectors } => {
                let mut vs = Vec::with_capacity(n);
                for p in topology.points() {
                    let raw = vectors
                        .get(p)
                        .ok_or_else(|| Error::Invalid(format!("no projection vector for point {p}")))?;
                    vs.push(CVector::from_iterator(raw.len(), raw.iter().map(|&[re, im]| crate::matcore::c64(re, im))));
                }
                Restriction::Projection { vectors: vs }
            }
        };
    }
    Ok(spec)
}

fn open_labels(t: &FiniteTopology, u: OpenSet) -> Vec<PointLabel> {
    t.labels(u).into_iter().map(PointLabel::Text).collect()
}

fn file_stem(t: &FiniteTopology, u: OpenSet) -> String {
    format!("open_{}", t.labels(u).join("_"))
}

/// Writes a spec as a bundle directory. Algebras are stored as spans of their bases.
pub fn write_bundle(dir: &Path, spec: &FibrationSpec) -> Result<()> {
    let t = &spec.topology;
    for sub in ["algebras", "states", "gates"] {
        std::fs::create_dir_all(dir.join(sub))?;
    }
    let rec = t.to_record();
    let top = BundleTopology {
        topology: TopologyFile {
            points: rec.points.into_iter().map(PointLabel::Text).collect(),
            opens: rec.opens.into_iter().map(|o| o.into_iter().map(PointLabel::Text).collect()).collect(),
        },
        local_dims: Some(spec.local_dims.clone()),
    };
    std::fs::write(dir.join("topology.json"), serde_json::to_string_pretty(&top)?)?;
    for (u, a) in &spec.algebras {
        let full = a.span_dim() == a.dim() * a.dim();
        let f = AlgebraFile {
            open: open_labels(t, *u),
            algebra: if full {
                AlgebraSource::Full
            } else {
                AlgebraSource::Span { elements: a.basis().iter().map(MatrixRecord::from).collect() }
            },
        };
        std::fs::write(dir.join("algebras").join(format!("{}.json", file_stem(t, *u))), serde_json::to_string_pretty(&f)?)?;
    }
    for (u, rho) in &spec.states {
        let f = StateFile { open: open_labels(t, *u), state: StateRecord::density(rho) };
        std::fs::write(dir.join("states").join(format!("{}.json", file_stem(t, *u))), serde_json::to_string_pretty(&f)?)?;
    }
    for (u, g) in &spec.gates {
        let f = GatesFile { open: open_labels(t, *u), gates: g.to_records() };
        std::fs::write(dir.join("gates").join(format!("{}.json", file_stem(t, *u))), serde_json::to_string_pretty(&f)?)?;
    }
    let r = match &spec.restriction {
        Restriction::PartialTrace => RestrictionFile::PartialTrace,
        Restriction::Projection { vectors } => RestrictionFile::Projection {
            vectors: t
                .points()
                .iter()
                .zip(vectors)
                .map(|(p, v)| (p.clone(), v.iter().map(|z| [z.re, z.im]).collect()))
                .collect(),
        },
    };
    std::fs::write(dir.join("restrictions.json"), serde_json::to_string_pretty(&r)?)?;
    Ok(())
}
