//! Two-unit polymer chains: link sets, Hamiltonians, annealing and general
//! time-dependent evolution with monitor series.
//!
//! Sites are numbered `1..=N` in the public API (link sets, labels) and
//! stored 0-based internally. Site 1 is the most significant tensor factor.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::entropy_of;
use crate::error::{Error, Result};
use crate::gates;
use crate::matcore::{
    eig_hermitian, embed_operator, hermiticity_defect, real, unitarity_defect,
    CMatrix, CVector, HermitianOp, MatrixRecord, TensorShape, HERMITIAN_TOL,
};
use crate::states::DensityOperator;

/// Largest allowed total Hilbert-space dimension.
pub const MAX_DIM: usize = 1024;
/// Largest allowed deviation of ‖ψ‖² from 1 across a run.
pub const DRIFT_TOL: f64 = 1e-9;
/// Largest allowed ‖UU*−I‖_max per step.
pub const STEP_UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    A,
    B,
}

impl Unit {
    pub fn parse_sequence(s: &str) -> Result<Vec<Unit>> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'A' | 'a' => Ok(Unit::A),
                'B' | 'b' => Ok(Unit::B),
                other => Err(Error::Invalid(format!("unit `{other}` is neither A nor B"))),
            })
            .collect()
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::A => "A",
            Unit::B => "B",
        })
    }
}

/// Link type between site `i` and its successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    AA,
    AB,
    BA,
    BB,
}

impl LinkKind {
    pub fn between(c: Unit, d: Unit) -> Self {
        match (c, d) {
            (Unit::A, Unit::A) => LinkKind::AA,
            (Unit::A, Unit::B) => LinkKind::AB,
            (Unit::B, Unit::A) => LinkKind::BA,
            (Unit::B, Unit::B) => LinkKind::BB,
        }
    }
}

/// Local Hamiltonian and interaction operator of one unit type.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitOps {
    pub local: CMatrix,
    pub interaction: CMatrix,
}

impl UnitOps {
    pub fn new(local: CMatrix, interaction: CMatrix) -> Result<Self> {
        if !local.is_square() || local.shape() != interaction.shape() || local.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "local {:?} and interaction {:?} must be square with equal size",
                local.shape(),
                interaction.shape()
            )));
        }
        let defect = hermiticity_defect(&local);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: defect });
        }
        Ok(Self { local, interaction })
    }

    pub fn qubit(local: CMatrix, interaction: CMatrix) -> Self {
        Self::new(local, interaction).expect("valid qubit operators")
    }

    pub fn dim(&self) -> usize {
        self.local.nrows()
    }
}

/// A two-unit chain with per-site couplings and fields.
///
/// `j_aa[i]` etc. hold the coupling used when the link at site `i` has that
/// type; entries for other link types are ignored. `j_*` and `h_*` have one
/// entry per site.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymerSpec {
    pub units: Vec<Unit>,
    pub a: UnitOps,
    pub b: UnitOps,
    pub j_aa: Vec<f64>,
    pub j_ab: Vec<f64>,
    pub j_ba: Vec<f64>,
    pub j_bb: Vec<f64>,
    pub h_a: Vec<f64>,
    pub h_b: Vec<f64>,
    pub ring: bool,
}

impl PolymerSpec {
    /// Uniform couplings and fields on an open chain.
    pub fn uniform(units: Vec<Unit>, a: UnitOps, b: UnitOps, j: [f64; 4], h: [f64; 2]) -> Result<Self> {
        let n = units.len();
        let spec = Self {
            units,
            a,
            b,
            j_aa: vec![j[0]; n],
            j_ab: vec![j[1]; n],
            j_ba: vec![j[2]; n],
            j_bb: vec![j[3]; n],
            h_a: vec![h[0]; n],
            h_b: vec![h[1]; n],
            ring: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Alternating `ABAB…` qubit chain with `Z` interactions and `Z` fields.
    pub fn alternating_qubits(n: usize, j: f64, h_a: f64, h_b: f64) -> Result<Self> {
        let units = (0..n).map(|i| if i % 2 == 0 { Unit::A } else { Unit::B }).collect();
        let ops = UnitOps::qubit(gates::z(), gates::z());
        Self::uniform(units, ops.clone(), ops, [j; 4], [h_a, h_b])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.units.len();
        if n == 0 {
            return Err(Error::Invalid("polymer needs at least one site".into()));
        }
        for (name, v) in [
            ("j_aa", &self.j_aa),
            ("j_ab", &self.j_ab),
            ("j_ba", &self.j_ba),
            ("j_bb", &self.j_bb),
            ("h_a", &self.h_a),
            ("h_b", &self.h_b),
        ] {
            if v.len() != n {
                return Err(Error::ShapeMismatch(format!("{name} has {} entries for {n} sites", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("{name} has a non-finite entry")));
            }
        }
        UnitOps::new(self.a.local.clone(), self.a.interaction.clone())?;
        UnitOps::new(self.b.local.clone(), self.b.interaction.clone())?;
        let mut dim = 1usize;
        for u in &self.units {
            dim = dim.saturating_mul(self.ops(*u).dim());
        }
        if dim > MAX_DIM {
            return Err(Error::Invalid(format!("total dimension {dim} exceeds {MAX_DIM}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn ops(&self, u: Unit) -> &UnitOps {
        match u {
            Unit::A => &self.a,
            Unit::B => &self.b,
        }
    }

    pub fn shape(&self) -> TensorShape {
        TensorShape::new(self.units.iter().map(|&u| self.ops(u).dim()).collect()).expect("validated")
    }

    pub fn is_qubit_chain(&self) -> bool {
        self.units.iter().all(|&u| self.ops(u).dim() == 2)
    }

    /// Successor of a 0-based site, if linked.
    fn successor(&self, i: usize) -> Option<usize> {
        let n = self.len();
        if i + 1 < n {
            Some(i + 1)
        } else if self.ring && n > 2 {
            Some(0)
        } else {
            None
        }
    }

    /// Links as `(site, successor, kind)`, 0-based.
    pub fn links(&self) -> Vec<(usize, usize, LinkKind)> {
        (0..self.len())
            .filter_map(|i| self.successor(i).map(|j| (i, j, LinkKind::between(self.units[i], self.units[j]))))
            .collect()
    }

    /// Coupling of the link at 0-based site `i`, or 0 when unlinked.
    pub fn coupling(&self, i: usize) -> f64 {
        match self.successor(i) {
            None => 0.0,
            Some(j) => match LinkKind::between(self.units[i], self.units[j]) {
                LinkKind::AA => self.j_aa[i],
                LinkKind::AB => self.j_ab[i],
                LinkKind::BA => self.j_ba[i],
                LinkKind::BB => self.j_bb[i],
            },
        }
    }

    /// Field at 0-based site `i`.
    pub fn field(&self, i: usize) -> f64 {
        match self.units[i] {
            Unit::A => self.h_a[i],
            Unit::B => self.h_b[i],
        }
    }
}

/// Label and link sets, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkSets {
    pub label_a: Vec<usize>,
    pub label_b: Vec<usize>,
    pub link_aa: Vec<usize>,
    pub link_ab: Vec<usize>,
    pub link_bb: Vec<usize>,
    pub link_ba: Vec<usize>,
}

pub fn link_sets(spec: &PolymerSpec) -> LinkSets {
    let mut s = LinkSets {
        label_a: vec![],
        label_b: vec![],
        link_aa: vec![],
        link_ab: vec![],
        link_bb: vec![],
        link_ba: vec![],
    };
    for (i, &u) in spec.units.iter().enumerate() {
        match u {
            Unit::A => s.label_a.push(i + 1),
            Unit::B => s.label_b.push(i + 1),
        }
    }
    for (i, _, kind) in spec.links() {
        match kind {
            LinkKind::AA => s.link_aa.push(i + 1),
            LinkKind::AB => s.link_ab.push(i + 1),
            LinkKind::BB => s.link_bb.push(i + 1),
            LinkKind::BA => s.link_ba.push(i + 1),
        }
    }
    s
}

fn place(shape: &TensorShape, op: &CMatrix, site: usize) -> CMatrix {
    embed_operator(op, shape, &[site]).expect("site operator matches local dimension")
}

/// `J(H̃ᶜᵢH̃ᴰⱼ + h.c.)` on the full chain.
fn link_term(spec: &PolymerSpec, shape: &TensorShape, i: usize, j: usize, coupling: f64) -> CMatrix {
    let left = place(shape, &spec.ops(spec.units[i]).interaction, i);
    let right = place(shape, &spec.ops(spec.units[j]).interaction, j);
    let prod = left * right;
    (&prod + prod.adjoint()) * real(coupling)
}

fn hermitian(m: CMatrix) -> HermitianOp {
    let sym = (&m + m.adjoint()) * real(0.5);
    HermitianOp::new(sym).expect("symmetrized")
}

/// Hamiltonian with explicit per-site couplings and fields.
fn assemble(spec: &PolymerSpec, couplings: &[f64], fields: &[f64]) -> HermitianOp {
    let shape = spec.shape();
    let mut h = CMatrix::zeros(shape.dim(), shape.dim());
    for (i, j, _) in spec.links() {
        if couplings[i] != 0.0 {
            h += link_term(spec, &shape, i, j, couplings[i]);
        }
    }
    for (i, &f) in fields.iter().enumerate() {
        if f != 0.0 {
            h += place(&shape, &spec.ops(spec.units[i]).local, i) * real(f);
        }
    }
    hermitian(h)
}

/// Link terms with their Hermitian conjugates plus the field terms.
pub fn build_h_polymer(spec: &PolymerSpec) -> Result<HermitianOp> {
    spec.validate()?;
    let couplings: Vec<f64> = (0..spec.len()).map(|i| spec.coupling(i)).collect();
    let fields: Vec<f64> = (0..spec.len()).map(|i| spec.field(i)).collect();
    Ok(assemble(spec, &couplings, &fields))
}

/// `−Σ Xᵢ` on `n` qubits.
pub fn build_h_mixer(n: usize) -> Result<HermitianOp> {
    if n == 0 {
        return Err(Error::Invalid("mixer needs at least one site".into()));
    }
    let shape = TensorShape::qubits(n);
    let mut h = CMatrix::zeros(shape.dim(), shape.dim());
    for i in 0..n {
        h -= embed_operator(&gates::x(), &shape, &[i])?;
    }
    Ok(hermitian(h))
}

/// `Σ Hᵢ` with each site's own local Hamiltonian.
pub fn build_h_noninteracting(spec: &PolymerSpec) -> Result<HermitianOp> {
    spec.validate()?;
    Ok(assemble(spec, &vec![0.0; spec.len()], &vec![1.0; spec.len()]))
}

/// Monotone map `f: [0,1] → [0,1]` with `f(0)=0` and `f(1)=1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Schedule {
    Linear,
    Smoothstep,
    /// Piecewise-linear through `(s, f)` points.
    Table { points: Vec<[f64; 2]> },
}

impl Schedule {
    pub fn table(points: Vec<[f64; 2]>) -> Result<Self> {
        let s = Schedule::Table { points };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let Schedule::Table { points } = self else {
            return Ok(());
        };
        if points.len() < 2 {
            return Err(Error::Invalid("schedule table needs at least two points".into()));
        }
        let first = points[0];
        let last = points[points.len() - 1];
        if first != [0.0, 0.0] || last != [1.0, 1.0] {
            return Err(Error::Invalid("schedule table must start at (0, 0) and end at (1, 1)".into()));
        }
        for w in points.windows(2) {
            if w[1][0].partial_cmp(&w[0][0]) != Some(Ordering::Greater) {
                return Err(Error::Invalid(format!("schedule abscissae not increasing at s = {}", w[1][0])));
            }
            if w[1][1] < w[0][1] {
                return Err(Error::Invalid(format!("schedule decreases at s = {}", w[1][0])));
            }
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("schedule table has a non-finite entry".into()));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            Schedule::Linear => s,
            Schedule::Smoothstep => s * s * (3.0 - 2.0 * s),
            Schedule::Table { points } => {
                let k = points.partition_point(|p| p[0] <= s);
                if k >= points.len() {
                    return points[points.len() - 1][1];
                }
                let [s0, f0] = points[k - 1];
                let [s1, f1] = points[k];
                f0 + (f1 - f0) * (s - s0) / (s1 - s0)
            }
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Schedule::Linear),
            "smoothstep" => Ok(Schedule::Smoothstep),
            other => Err(Error::Invalid(format!("unknown schedule `{other}`"))),
        }
    }
}

/// Piecewise-constant parameter: the value of the last breakpoint at or
/// before `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTable {
    pub steps: Vec<[f64; 2]>,
}

impl StepTable {
    pub fn constant(v: f64) -> Self {
        Self { steps: vec![[0.0, v]] }
    }

    /// `from` until `at`, then `to`.
    pub fn ramp(from: f64, to: f64, at: f64) -> Self {
        Self {
            steps: vec![[0.0, from], [at, to]],
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.steps.first().map(|p| p[0]) != Some(0.0) {
            return Err(Error::Invalid(format!("{name}: step table must start at s = 0")));
        }
        if self.steps.windows(2).any(|w| w[1][0].partial_cmp(&w[0][0]) != Some(Ordering::Greater)) {
            return Err(Error::Invalid(format!("{name}: step abscissae not increasing")));
        }
        if self.steps.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("{name}: non-finite entry")));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        let k = self.steps.partition_point(|p| p[0] <= s);
        self.steps[k.max(1) - 1][1]
    }
}

/// Per-site coupling and field tables for general evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralSchedule {
    pub couplings: Vec<StepTable>,
    pub fields: Vec<StepTable>,
}

impl GeneralSchedule {
    /// Fields held at their target values; every coupling switches from 0 to
    /// its target at `at`.
    pub fn switch_on(spec: &PolymerSpec, at: f64) -> Self {
        Self {
            couplings: (0..spec.len()).map(|i| StepTable::ramp(0.0, spec.coupling(i), at)).collect(),
            fields: (0..spec.len()).map(|i| StepTable::constant(spec.field(i))).collect(),
        }
    }
}

/// Time grid, kets and monitors of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub shape: TensorShape,
    pub times: Vec<f64>,
    pub kets: Vec<CVector>,
    pub energy: Vec<f64>,
    /// `entropy[k][c]`: entropy of sites `1..=c+1` at step `k`.
    pub entropy: Vec<Vec<f64>>,
    /// `purity[k][i]`: purity of the marginal at site `i+1`.
    pub purity: Vec<Vec<f64>>,
    pub max_trace_drift: f64,
    pub max_unitarity_defect: f64,
}

fn marginal_of_ket(psi: &CVector, shape: &TensorShape, keep: &[usize]) -> CMatrix {
    let rho = psi * psi.adjoint();
    crate::matcore::partial_trace(&rho, shape, keep).expect("valid factors")
}

/// Entropy of the first `c` sites via the Schmidt matrix.
fn cut_entropy(psi: &CVector, shape: &TensorShape, c: usize) -> f64 {
    let dl: usize = shape.dims()[..c].iter().product();
    let dr = shape.dim() / dl;
    let m = CMatrix::from_fn(dl, dr, |a, b| psi[a * dr + b]);
    let red = if dl <= dr { &m * m.adjoint() } else { m.adjoint() * &m };
    entropy_of(&red)
}

impl Trajectory {
    fn new(shape: TensorShape) -> Self {
        Self {
            shape,
            times: vec![],
            kets: vec![],
            energy: vec![],
            entropy: vec![],
            purity: vec![],
            max_trace_drift: 0.0,
            max_unitarity_defect: 0.0,
        }
    }

    fn record(&mut self, t: f64, psi: CVector, h: &HermitianOp) {
        let n = self.shape.len();
        let norm2 = psi.norm_squared();
        self.max_trace_drift = self.max_trace_drift.max((norm2 - 1.0).abs());
        self.energy.push(h.matrix().expectation_ket(&psi));
        self.entropy.push((1..n).map(|c| cut_entropy(&psi, &self.shape, c)).collect());
        self.purity.push(
            (0..n)
                .map(|i| {
                    let m = marginal_of_ket(&psi, &self.shape, &[i]);
                    (&m * &m).trace().re
                })
                .collect(),
        );
        self.times.push(t);
        self.kets.push(psi);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_ket(&self) -> &CVector {
        self.kets.last().expect("trajectory has the initial state")
    }

    pub fn state(&self, k: usize) -> Result<DensityOperator> {
        let psi = self
            .kets
            .get(k)
            .ok_or_else(|| Error::Invalid(format!("step {k} out of range ({} recorded)", self.len())))?;
        DensityOperator::pure(psi)
    }

    /// Marginal at step `k` on a block of the cover (0-based sites).
    pub fn local_state(&self, k: usize, cover: &SiteCover, block: &[usize]) -> Result<DensityOperator> {
        if cover.n != self.shape.len() {
            return Err(Error::DimensionMismatch {
                expected: self.shape.len(),
                actual: cover.n,
            });
        }
        let mut sorted = block.to_vec();
        sorted.sort_unstable();
        if !cover.blocks.contains(&sorted) {
            let labels: Vec<String> = sorted.iter().map(|i| (i + 1).to_string()).collect();
            return Err(Error::NotInCover(format!("{{{}}}", labels.join(","))));
        }
        let psi = self
            .kets
            .get(k)
            .ok_or_else(|| Error::Invalid(format!("step {k} out of range ({} recorded)", self.len())))?;
        DensityOperator::new(marginal_of_ket(psi, &self.shape, &sorted))
    }

    /// `|⟨g|ψ(T)⟩|²`.
    pub fn fidelity_with(&self, ground: &CVector) -> f64 {
        ground.dotc(self.final_ket()).norm_sqr()
    }

    pub fn csv_header(&self) -> Vec<String> {
        let n = self.shape.len();
        let mut h = vec!["t".to_string(), "energy".to_string()];
        h.extend((1..n).map(|c| format!("ee_cut_{c}")));
        h.extend((1..=n).map(|i| format!("purity_{i}")));
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.len())
            .map(|k| {
                let mut row = vec![self.times[k].to_string(), self.energy[k].to_string()];
                row.extend(self.entropy[k].iter().map(|x| x.to_string()));
                row.extend(self.purity[k].iter().map(|x| x.to_string()));
                row
            })
            .collect()
    }
}

trait KetExpectation {
    fn expectation_ket(&self, psi: &CVector) -> f64;
}

impl KetExpectation for CMatrix {
    fn expectation_ket(&self, psi: &CVector) -> f64 {
        let n2 = psi.norm_squared();
        psi.dotc(&(self * psi)).re / n2
    }
}

/// Pairwise-disjoint blocks of sites covering the chain (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteCover {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SiteCover {
    pub fn singletons(n: usize) -> Self {
        Self {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut sorted_blocks = Vec::with_capacity(blocks.len());
        for mut b in blocks {
            if b.is_empty() {
                return Err(Error::Invalid("cover block is empty".into()));
            }
            b.sort_unstable();
            for &i in &b {
                if i >= n || seen[i] {
                    return Err(Error::Invalid(format!("site {} is out of range or covered twice", i + 1)));
                }
                seen[i] = true;
            }
            sorted_blocks.push(b);
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invalid("cover misses a site".into()));
        }
        Ok(Self { n, blocks: sorted_blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

/// Piecewise-constant propagation `ψ ← exp(−iH(t_k)Δt) ψ`.
fn propagate<F>(shape: TensorShape, psi0: CVector, total_time: f64, n_steps: usize, mut hamiltonian: F) -> Result<Trajectory>
where
    F: FnMut(f64) -> HermitianOp,
{
    if !total_time.is_finite() || total_time < 0.0 {
        return Err(Error::Invalid(format!("total time {total_time} must be finite and non-negative")));
    }
    let mut traj = Trajectory::new(shape);
    let h0 = hamiltonian(0.0);
    traj.record(0.0, psi0.clone(), &h0);
    if total_time == 0.0 || n_steps == 0 {
        return Ok(traj);
    }
    let dt = total_time / n_steps as f64;
    let mut psi = psi0;
    let mut h = h0;
    for k in 0..n_steps {
        // The step propagator is V e^{-iΛdt} V*, unitary exactly when V is.
        let eig = eig_hermitian(&h);
        traj.max_unitarity_defect = traj.max_unitarity_defect.max(unitarity_defect(&eig.vectors));
        psi = eig.evolve_ket(dt, &psi);
        let s_next = (k + 1) as f64 / n_steps as f64;
        h = hamiltonian(s_next);
        traj.record((k + 1) as f64 * dt, psi.clone(), &h);
    }
    Ok(traj)
}

fn plus_state(n: usize) -> CVector {
    let d = 1usize << n;
    CVector::from_element(d, real((d as f64).sqrt().recip()))
}

/// Quantum annealing from `⊗|+⟩` under `f(s)H_polymer + (1−f(s))H₀` with
/// `H₀ = −ΣXᵢ`. The energy monitor at step `k` is `⟨H(t_k)⟩`.
pub fn anneal(spec: &PolymerSpec, schedule: &Schedule, total_time: f64, n_steps: usize) -> Result<Trajectory> {
    spec.validate()?;
    schedule.validate()?;
    if !spec.is_qubit_chain() {
        return Err(Error::Unsupported("annealing needs qubit sites".into()));
    }
    let hp = build_h_polymer(spec)?.into_matrix();
    let hm = build_h_mixer(spec.len())?.into_matrix();
    propagate(spec.shape(), plus_state(spec.len()), total_time, n_steps, |s| {
        let f = schedule.eval(s);
        hermitian(&hp * real(f) + &hm * real(1.0 - f))
    })
}

/// Ground state of `H_polymer` with its spectral gap.
pub fn ground_state(spec: &PolymerSpec) -> Result<(CVector, f64, f64)> {
    let eig = eig_hermitian(&build_h_polymer(spec)?);
    let gap = if eig.values.len() > 1 {
        eig.values[1] - eig.values[0]
    } else {
        0.0
    };
    Ok((eig.vectors.column(0).into_owned(), eig.values[0], gap))
}

/// Weight of `ψ` on the ground space of `H_polymer`, with that space's
/// dimension. Levels within `tol` of the minimum count as ground.
pub fn ground_space_fidelity(spec: &PolymerSpec, psi: &CVector, tol: f64) -> Result<(f64, usize)> {
    let eig = eig_hermitian(&build_h_polymer(spec)?);
    let e0 = eig.values[0];
    let mut weight = 0.0;
    let mut degeneracy = 0;
    for (k, &e) in eig.values.iter().enumerate() {
        if e - e0 > tol {
            break;
        }
        weight += eig.vectors.column(k).dotc(psi).norm_sqr();
        degeneracy += 1;
    }
    Ok((weight / psi.norm_squared(), degeneracy))
}

/// Lowest eigenvector of `h`, sign-fixed so the first nonzero entry is real positive.
fn lowest_ket(h: &CMatrix) -> CVector {
    let eig = eig_hermitian(&hermitian(h.clone()));
    let mut v: CVector = eig.vectors.column(0).into_owned();
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        v *= z.conj() / real(z.norm());
    }
    v
}

/// Evolution under `Σ Jᵢ(s)(H̃ᶜᵢH̃ᴰᵢ₊₁ + h.c.) + Σ hᵢ(s)Hᶜᵢ` from the product of
/// local ground states. Requires `Jᵢ(0) = 0`, `hᵢ(0)` equal to the site's field,
/// and the tables at `s = 1` equal to the target couplings and fields.
pub fn evolve_general(spec: &PolymerSpec, sched: &GeneralSchedule, total_time: f64, n_steps: usize) -> Result<Trajectory> {
    spec.validate()?;
    let n = spec.len();
    if sched.couplings.len() != n || sched.fields.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "need {n} coupling and field tables, got {} and {}",
            sched.couplings.len(),
            sched.fields.len()
        )));
    }
    for (i, t) in sched.couplings.iter().enumerate() {
        t.validate(&format!("J_{}", i + 1))?;
    }
    for (i, t) in sched.fields.iter().enumerate() {
        t.validate(&format!("h_{}", i + 1))?;
    }
    for i in 0..n {
        let j0 = sched.couplings[i].eval(0.0);
        if j0 != 0.0 {
            return Err(Error::BoundaryCondition(format!("J_{}(0) = {j0}, expected 0", i + 1)));
        }
        let h0 = sched.fields[i].eval(0.0);
        if h0 != spec.field(i) {
            return Err(Error::BoundaryCondition(format!(
                "h_{}(0) = {h0}, expected the {} field {}",
                i + 1,
                spec.units[i],
                spec.field(i)
            )));
        }
        let j1 = sched.couplings[i].eval(1.0);
        if j1 != spec.coupling(i) {
            return Err(Error::BoundaryCondition(format!(
                "J_{}(1) = {j1}, target coupling is {}",
                i + 1,
                spec.coupling(i)
            )));
        }
        let h1 = sched.fields[i].eval(1.0);
        if h1 != spec.field(i) {
            return Err(Error::BoundaryCondition(format!(
                "h_{}(1) = {h1}, target field is {}",
                i + 1,
                spec.field(i)
            )));
        }
    }
    let mut psi0 = CVector::from_element(1, real(1.0));
    for i in 0..n {
        let local = &spec.ops(spec.units[i]).local;
        let h = spec.field(i);
        let ket = if h != 0.0 { lowest_ket(&(local * real(h))) } else { lowest_ket(local) };
        psi0 = crate::matcore::ket_tensor(&psi0, &ket);
    }
    propagate(spec.shape(), psi0, total_time, n_steps, |s| {
        let j: Vec<f64> = sched.couplings.iter().map(|t| t.eval(s)).collect();
        let h: Vec<f64> = sched.fields.iter().map(|t| t.eval(s)).collect();
        assemble(spec, &j, &h)
    })
}

/// Operator given by name (`I`, `X`, `Y`, `Z`) or as an explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Named(String),
    Matrix(MatrixRecord),
}

impl OperatorSpec {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        match self {
            OperatorSpec::Named(n) => match n.as_str() {
                "I" => Ok(gates::i2()),
                "X" => Ok(gates::x()),
                "Y" => Ok(gates::y()),
                "Z" => Ok(gates::z()),
                other => Err(Error::Invalid(format!("unknown operator `{other}`"))),
            },
            OperatorSpec::Matrix(m) => m.to_matrix(),
        }
    }
}

/// A scalar applied to every site or one value per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteParam {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl Default for SiteParam {
    fn default() -> Self {
        SiteParam::Uniform(0.0)
    }
}

impl SiteParam {
    fn expand(&self, n: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            SiteParam::Uniform(x) => Ok(vec![*x; n]),
            SiteParam::PerSite(v) if v.len() == n => Ok(v.clone()),
            SiteParam::PerSite(v) => Err(Error::ShapeMismatch(format!("{name} has {} entries for {n} sites", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitsSection {
    pub sequence: String,
    #[serde(default)]
    pub ring: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitOpsSection {
    pub local: OperatorSpec,
    pub interaction: OperatorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOpsSection {
    pub a: UnitOpsSection,
    pub b: UnitOpsSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CouplingsSection {
    #[serde(default)]
    pub aa: SiteParam,
    #[serde(default)]
    pub ab: SiteParam,
    #[serde(default)]
    pub ba: SiteParam,
    #[serde(default)]
    pub bb: SiteParam,
    #[serde(default)]
    pub h_a: SiteParam,
    #[serde(default)]
    pub h_b: SiteParam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub total_time: f64,
    pub steps: usize,
}

/// Tables for general evolution; missing tables default to switching every
/// coupling on at `switch_at` with fields held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralSection {
    #[serde(default)]
    pub switch_at: Option<f64>,
    #[serde(default)]
    pub couplings: Option<Vec<StepTable>>,
    #[serde(default)]
    pub fields: Option<Vec<StepTable>>,
}

/// Polymer run configuration (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerConfig {
    pub units: UnitsSection,
    pub local_ops: LocalOpsSection,
    #[serde(default)]
    pub couplings: CouplingsSection,
    #[serde(default = "default_schedule")]
    pub schedule: Schedule,
    pub run: RunSection,
    #[serde(default)]
    pub general: Option<GeneralSection>,
}

fn default_schedule() -> Schedule {
    Schedule::Linear
}

impl PolymerConfig {
    pub fn spec(&self) -> Result<PolymerSpec> {
        let units = Unit::parse_sequence(&self.units.sequence)?;
        let n = units.len();
        let a = UnitOps::new(self.local_ops.a.local.to_matrix()?, self.local_ops.a.interaction.to_matrix()?)?;
        let b = UnitOps::new(self.local_ops.b.local.to_matrix()?, self.local_ops.b.interaction.to_matrix()?)?;
        let c = &self.couplings;
        let spec = PolymerSpec {
            units,
            a,
            b,
            j_aa: c.aa.expand(n, "aa")?,
            j_ab: c.ab.expand(n, "ab")?,
            j_ba: c.ba.expand(n, "ba")?,
            j_bb: c.bb.expand(n, "bb")?,
            h_a: c.h_a.expand(n, "h_a")?,
            h_b: c.h_b.expand(n, "h_b")?,
            ring: self.units.ring,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn general_schedule(&self, spec: &PolymerSpec) -> GeneralSchedule {
        let g = self.general.as_ref();
        let at = g.and_then(|g| g.switch_at).unwrap_or(0.5);
        let default = GeneralSchedule::switch_on(spec, at);
        GeneralSchedule {
            couplings: g.and_then(|g| g.couplings.clone()).unwrap_or(default.couplings),
            fields: g.and_then(|g| g.fields.clone()).unwrap_or(default.fields),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{i2, x, z};
    use crate::matcore::{identity, max_norm, tensor, tensor_all};

    fn spec_of(seq: &str) -> PolymerSpec {
        let ops = UnitOps::qubit(z(), z());
        PolymerSpec::uniform(Unit::parse_sequence(seq).unwrap(), ops.clone(), ops, [1.0; 4], [0.0; 2]).unwrap()
    }

    #[test]
    fn link_sets_abab() {
        let s = link_sets(&spec_of("ABAB"));
        assert_eq!(s.label_a, vec![1, 3]);
        assert_eq!(s.label_b, vec![2, 4]);
        assert_eq!(s.link_ab, vec![1, 3]);
        assert_eq!(s.link_ba, vec![2]);
        assert!(s.link_aa.is_empty() && s.link_bb.is_empty());
    }

    #[test]
    fn link_sets_aabb() {
        let s = link_sets(&spec_of("AABB"));
        assert_eq!(s.link_aa, vec![1]);
        assert_eq!(s.link_ab, vec![2]);
        assert_eq!(s.link_bb, vec![3]);
        assert!(s.link_ba.is_empty());
    }

    #[test]
    fn link_sets_all_a() {
        let s = link_sets(&spec_of("AAA"));
        assert_eq!(s.link_aa, vec![1, 2]);
        assert!(s.link_ab.is_empty() && s.link_ba.is_empty() && s.link_bb.is_empty());
    }

    #[test]
    fn link_sets_biconditionals() {
        let spec = spec_of("ABBAABAB");
        let s = link_sets(&spec);
        let n = spec.len();
        let is = |v: &Vec<usize>, i: usize| v.contains(&i);
        for i in 1..=n {
            let a = |k: usize| k <= n && spec.units[k - 1] == Unit::A;
            let b = |k: usize| k <= n && spec.units[k - 1] == Unit::B;
            assert_eq!(is(&s.link_aa, i), a(i) && a(i + 1));
            assert_eq!(is(&s.link_ab, i), a(i) && b(i + 1));
            assert_eq!(is(&s.link_bb, i), b(i) && b(i + 1));
            assert_eq!(is(&s.link_ba, i), b(i) && a(i + 1));
        }
        assert!(!is(&s.link_aa, n) && !is(&s.link_ab, n) && !is(&s.link_ba, n) && !is(&s.link_bb, n));
    }

    #[test]
    fn ring_links_last_site() {
        let mut spec = spec_of("ABA");
        spec.ring = true;
        assert_eq!(link_sets(&spec).link_aa, vec![3]);
    }

    #[test]
    fn hc_doubles_hermitian_product() {
        let h = build_h_polymer(&spec_of("AA")).unwrap();
        let expected = tensor(&z(), &z()) * real(2.0);
        assert!(max_norm(&(h.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn fields_only() {
        let ops = UnitOps::qubit(z(), z());
        let spec = PolymerSpec::uniform(vec![Unit::A, Unit::A], ops.clone(), ops, [0.0; 4], [1.0, 0.0]).unwrap();
        let h = build_h_polymer(&spec).unwrap();
        let expected = tensor(&z(), &i2()) + tensor(&i2(), &z());
        assert!(max_norm(&(h.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn single_site_has_no_links() {
        let ops = UnitOps::qubit(z(), x());
        let spec = PolymerSpec::uniform(vec![Unit::A], ops.clone(), ops, [5.0; 4], [0.5, 0.0]).unwrap();
        let h = build_h_polymer(&spec).unwrap();
        assert!(max_norm(&(h.matrix() - z() * real(0.5))) < 1e-14);
    }

    #[test]
    fn mixer() {
        let h1 = build_h_mixer(1).unwrap();
        assert!(max_norm(&(h1.matrix() + x())) < 1e-15);
        let e = eig_hermitian(&build_h_mixer(2).unwrap());
        assert!((e.min() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn noninteracting_placement() {
        let spec = PolymerSpec::uniform(
            Unit::parse_sequence("ABA").unwrap(),
            UnitOps::qubit(z(), z()),
            UnitOps::qubit(x(), x()),
            [1.0; 4],
            [0.0; 2],
        )
        .unwrap();
        let h = build_h_noninteracting(&spec).unwrap();
        let expected = tensor_all([&z(), &i2(), &i2()]) + tensor_all([&i2(), &x(), &i2()]) + tensor_all([&i2(), &i2(), &z()]);
        assert!(max_norm(&(h.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn rejects_large_and_non_hermitian() {
        let ops = UnitOps::qubit(z(), z());
        assert!(PolymerSpec::uniform(vec![Unit::A; 11], ops.clone(), ops.clone(), [1.0; 4], [0.0; 2]).is_err());
        let bad = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        assert!(UnitOps::new(bad, z()).is_err());
    }

    #[test]
    fn schedules() {
        for s in [Schedule::Linear, Schedule::Smoothstep] {
            assert_eq!(s.eval(0.0), 0.0);
            assert_eq!(s.eval(1.0), 1.0);
        }
        let t = Schedule::table(vec![[0.0, 0.0], [0.5, 0.2], [1.0, 1.0]]).unwrap();
        assert!((t.eval(0.25) - 0.1).abs() < 1e-15);
        assert!((t.eval(0.75) - 0.6).abs() < 1e-15);
        assert!(Schedule::table(vec![[0.0, 0.0], [0.5, 0.7], [0.7, 0.6], [1.0, 1.0]]).is_err());
        assert!(Schedule::table(vec![[0.0, 0.1], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn zero_time_keeps_initial_state() {
        let spec = PolymerSpec::alternating_qubits(3, 1.0, 0.5, -0.5).unwrap();
        let tr = anneal(&spec, &Schedule::Linear, 0.0, 100).unwrap();
        assert_eq!(tr.len(), 1);
        assert!((tr.energy[0] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_schedule_is_stationary() {
        let spec = PolymerSpec::alternating_qubits(3, 1.0, 0.5, -0.5).unwrap();
        let frozen = Schedule::Table {
            points: vec![[0.0, 0.0], [0.999, 0.0], [1.0, 1.0]],
        };
        let tr = anneal(&spec, &frozen, 5.0, 50).unwrap();
        let psi0 = &tr.kets[0];
        for k in 0..tr.len() - 1 {
            assert!((tr.kets[k].dotc(psi0).norm() - 1.0).abs() < 1e-9);
            assert!((tr.energy[k] - tr.energy[0]).abs() < 1e-9);
            for (a, b) in tr.entropy[k].iter().zip(&tr.entropy[0]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn annealing_reaches_ground_state() {
        let spec = PolymerSpec::alternating_qubits(6, 1.0, 0.5, -0.5).unwrap();
        let (g, _, gap) = ground_state(&spec).unwrap();
        assert!(gap > 1.0);
        let tr = anneal(&spec, &Schedule::Linear, 50.0, 2000).unwrap();
        assert!(tr.fidelity_with(&g) >= 0.95, "fidelity {}", tr.fidelity_with(&g));
        assert!(tr.max_trace_drift <= DRIFT_TOL);
        assert!(tr.max_unitarity_defect <= STEP_UNITARITY_TOL);
    }

    #[test]
    fn ground_space_fidelity_counts_degeneracy() {
        let ops = UnitOps::qubit(z(), z());
        let spec = PolymerSpec::uniform(vec![Unit::A, Unit::A], ops.clone(), ops, [-1.0; 4], [0.0; 2]).unwrap();
        let psi = CVector::from_column_slice(&[real(0.6), real(0.0), real(0.0), real(0.8)]);
        let (w, deg) = ground_space_fidelity(&spec, &psi, 1e-9).unwrap();
        assert_eq!(deg, 2);
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_is_real_and_phase_invariant() {
        let spec = PolymerSpec::alternating_qubits(3, 1.0, 0.3, -0.2).unwrap();
        let tr = anneal(&spec, &Schedule::Smoothstep, 2.0, 20).unwrap();
        let h = build_h_polymer(&spec).unwrap();
        let psi = tr.final_ket();
        let raw = psi.dotc(&(h.matrix() * psi));
        assert!(raw.im.abs() < 1e-10);
        let rotated = psi * crate::matcore::c64(0.6, 0.8);
        assert!((h.matrix().expectation_ket(&rotated) - raw.re).abs() < 1e-12);
    }

    #[test]
    fn general_rejects_bad_boundaries() {
        let spec = PolymerSpec::alternating_qubits(2, 1.0, 0.5, -0.5).unwrap();
        let mut sched = GeneralSchedule::switch_on(&spec, 0.5);
        sched.couplings[0] = StepTable::constant(1.0);
        assert!(matches!(evolve_general(&spec, &sched, 1.0, 10), Err(Error::BoundaryCondition(_))));
        let mut sched = GeneralSchedule::switch_on(&spec, 0.5);
        sched.fields[1] = StepTable::ramp(0.0, -0.5, 0.2);
        assert!(matches!(evolve_general(&spec, &sched, 1.0, 10), Err(Error::BoundaryCondition(_))));
        let mut sched = GeneralSchedule::switch_on(&spec, 0.5);
        sched.couplings[0] = StepTable::ramp(0.0, 2.0, 0.5);
        assert!(matches!(evolve_general(&spec, &sched, 1.0, 10), Err(Error::BoundaryCondition(_))));
    }

    #[test]
    fn product_evolution_keeps_local_purity() {
        let ops = UnitOps::qubit(x(), z());
        let spec = PolymerSpec::uniform(Unit::parse_sequence("ABA").unwrap(), ops.clone(), UnitOps::qubit(z(), z()), [0.0; 4], [0.7, 0.4]).unwrap();
        let sched = GeneralSchedule::switch_on(&spec, 0.5);
        let tr = evolve_general(&spec, &sched, 3.0, 30).unwrap();
        let cover = SiteCover::singletons(3);
        for k in 0..tr.len() {
            for i in 0..3 {
                assert!((tr.local_state(k, &cover, &[i]).unwrap().purity() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn local_state_requires_cover_block() {
        let spec = PolymerSpec::alternating_qubits(3, 1.0, 0.5, -0.5).unwrap();
        let tr = anneal(&spec, &Schedule::Linear, 0.0, 0).unwrap();
        let cover = SiteCover::singletons(3);
        assert!(matches!(tr.local_state(0, &cover, &[0, 1]), Err(Error::NotInCover(_))));
        let plus = tr.local_state(0, &cover, &[0]).unwrap();
        let expected = crate::gates::projector(&crate::gates::ket_plus());
        assert!(max_norm(&(plus.matrix() - expected)) < 1e-12);
        let pairs = SiteCover::new(3, vec![vec![1, 0], vec![2]]).unwrap();
        assert_eq!(tr.local_state(0, &pairs, &[0, 1]).unwrap().dim(), 4);
        assert!(SiteCover::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
    }

    #[test]
    fn quench_builds_bell_pair() {
        // XX coupling switched on at s = 0 on |11⟩: exp(−i 2J t XX)|11⟩.
        let ops = UnitOps::qubit(z(), x());
        let spec = PolymerSpec::uniform(vec![Unit::A, Unit::A], ops.clone(), ops, [1.0, 0.0, 0.0, 0.0], [0.0; 2]).unwrap();
        let sched = GeneralSchedule {
            couplings: vec![StepTable::ramp(0.0, 1.0, 1e-9), StepTable::constant(0.0)],
            fields: vec![StepTable::constant(0.0); 2],
        };
        // Step k uses H(t_k), so the coupling is off during the first step.
        let n = 100;
        let t_total = std::f64::consts::PI / 8.0 * n as f64 / (n - 1) as f64;
        let tr = evolve_general(&spec, &sched, t_total, n).unwrap();
        let psi0 = &tr.kets[0];
        let theta = std::f64::consts::PI / 4.0;
        let oracle = (CMatrix::identity(4, 4) * real(theta.cos()) - tensor(&x(), &x()) * crate::matcore::c64(0.0, theta.sin())) * psi0;
        assert!((oracle.dotc(tr.final_ket()).norm() - 1.0).abs() < 1e-10);
        let local = tr.local_state(n, &SiteCover::singletons(2), &[0]).unwrap();
        assert!(max_norm(&(local.matrix() - identity(2) * real(0.5))) < 1e-10);
    }

    #[test]
    fn ramp_creates_entanglement_from_zero() {
        let ops_a = UnitOps::qubit(z(), x());
        let ops_b = UnitOps::qubit(x(), z());
        let spec = PolymerSpec::uniform(Unit::parse_sequence("ABAB").unwrap(), ops_a, ops_b, [1.0; 4], [0.5, 0.5]).unwrap();
        let sched = GeneralSchedule::switch_on(&spec, 0.25);
        let tr = evolve_general(&spec, &sched, 4.0, 80).unwrap();
        let mid = 1;
        assert!(tr.entropy[0][mid] < 1e-9);
        let onset = tr.times.iter().position(|&t| t > 1.0 + 1e-12).unwrap();
        assert!(tr.entropy[..onset].iter().all(|e| e[mid] < 1e-9));
        assert!(tr.entropy[onset + 5][mid] > 1e-3);
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{
            "units": {"sequence": "ABAB"},
            "local_ops": {"a": {"local": "Z", "interaction": "Z"}, "b": {"local": "Z", "interaction": "Z"}},
            "couplings": {"ab": 1.0, "ba": [1.0, 1.0, 1.0, 1.0], "h_a": 0.5, "h_b": -0.5},
            "schedule": {"kind": "linear"},
            "run": {"total_time": 1.0, "steps": 10}
        }"#;
        let cfg: PolymerConfig = serde_json::from_str(json).unwrap();
        let spec = cfg.spec().unwrap();
        assert_eq!(spec, PolymerSpec::alternating_qubits(4, 1.0, 0.5, -0.5).map(|mut s| {
            s.j_aa = vec![0.0; 4];
            s.j_bb = vec![0.0; 4];
            s
        }).unwrap());
        let back: PolymerConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
