//! Density operators, unnormalized states and the conjugation action `a ρ a*`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    eigenvalues_unchecked, ensure_square, identity, max_norm, real, trace_norm_hermitian, CMatrix,
    CVector, HermitianOp, MatrixRecord,
};

/// Tolerance on the smallest eigenvalue.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance on the trace (unit trace for density operators, positivity cut-off otherwise).
pub const TRACE_TOL: f64 = 1e-10;
/// Completeness tolerance for Kraus families.
pub const COMPLETENESS_TOL: f64 = 1e-8;

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOp,
    psd_tol: f64,
    trace_tol: f64,
}

impl DensityOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, PSD_TOL, TRACE_TOL)
    }

    pub fn with_tolerances(m: CMatrix, psd_tol: f64, trace_tol: f64) -> Result<Self> {
        let op = HermitianOp::new(m)?;
        let trace = op.matrix().trace().re;
        if (trace - 1.0).abs() > trace_tol {
            return Err(Error::TraceNotUnit { trace });
        }
        check_psd(op.matrix(), psd_tol)?;
        Ok(Self {
            op,
            psd_tol,
            trace_tol,
        })
    }

    /// Wraps a matrix that is a state by construction (e.g. `U ρ U*`).
    /// The Hermitian part is kept; no eigenvalue check is made.
    pub fn from_trusted(m: CMatrix) -> Self {
        Self {
            op: HermitianOp::from_hermitian_part(m),
            psd_tol: PSD_TOL,
            trace_tol: TRACE_TOL,
        }
    }

    /// `|ψ⟩⟨ψ|` for a ket, normalized first.
    pub fn pure(ket: &CVector) -> Result<Self> {
        let n = ket.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::Invalid("ket has zero or non-finite norm".into()));
        }
        let v = ket / real(n);
        Ok(Self::from_trusted(&v * v.adjoint()))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_trusted(identity(d) / real(d as f64))
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.op.into_matrix()
    }

    pub fn hermitian(&self) -> &HermitianOp {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn psd_tolerance(&self) -> f64 {
        self.psd_tol
    }

    pub fn trace_tolerance(&self) -> f64 {
        self.trace_tol
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        purity(self.matrix())
    }

    pub fn is_pure(&self) -> bool {
        self.purity() >= 1.0 - 1e-9
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_unchecked(self.matrix())
    }

    pub fn trace_distance(&self, other: &DensityOperator) -> f64 {
        trace_distance(self.matrix(), other.matrix())
    }

    /// Real part of `Tr(ρ H)`.
    pub fn expectation(&self, h: &CMatrix) -> f64 {
        (self.matrix() * h).trace().re
    }
}

fn check_psd(m: &CMatrix, tol: f64) -> Result<()> {
    let min = eigenvalues_unchecked(m).first().copied().unwrap_or(0.0);
    if min < -tol {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// `Tr(ρ²)` for a Hermitian matrix.
pub fn purity(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `½ ‖a − b‖₁` for Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm_hermitian(&(a - b))
}

/// Hermitian PSD operator with strictly positive trace.
#[derive(Debug, Clone, PartialEq)]
pub struct UnnormalizedState {
    op: HermitianOp,
    psd_tol: f64,
    trace_tol: f64,
}

impl UnnormalizedState {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, PSD_TOL, TRACE_TOL)
    }

    pub fn with_tolerances(m: CMatrix, psd_tol: f64, trace_tol: f64) -> Result<Self> {
        let op = HermitianOp::new(m)?;
        let trace = op.matrix().trace().re;
        if trace <= trace_tol {
            return Err(Error::TraceNonPositive { trace });
        }
        check_psd(op.matrix(), psd_tol)?;
        Ok(Self {
            op,
            psd_tol,
            trace_tol,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.op.matrix().trace().re
    }

    /// `σ / Tr σ`.
    pub fn normalize(&self) -> DensityOperator {
        let t = self.trace();
        DensityOperator {
            op: HermitianOp::from_hermitian_part(self.matrix() / real(t)),
            psd_tol: self.psd_tol,
            trace_tol: self.trace_tol,
        }
    }
}

impl From<DensityOperator> for UnnormalizedState {
    fn from(rho: DensityOperator) -> Self {
        Self {
            op: rho.op,
            psd_tol: rho.psd_tol,
            trace_tol: rho.trace_tol,
        }
    }
}

/// Normalizes a raw matrix, failing with `TraceNonPositive` when its trace is too small.
pub fn normalize(m: CMatrix) -> Result<DensityOperator> {
    Ok(UnnormalizedState::new(m)?.normalize())
}

/// Result of `i_a(σ) = a σ a*`: either a state in D̃ or the absorbing `Vanished`.
#[derive(Debug, Clone, PartialEq)]
pub enum Conjugated {
    State(UnnormalizedState),
    Vanished,
}

impl Conjugated {
    pub fn is_vanished(&self) -> bool {
        matches!(self, Conjugated::Vanished)
    }

    pub fn state(&self) -> Option<&UnnormalizedState> {
        match self {
            Conjugated::State(s) => Some(s),
            Conjugated::Vanished => None,
        }
    }

    /// Applies a further conjugation; `Vanished` stays `Vanished`.
    pub fn then(self, a: &CMatrix) -> Result<Conjugated> {
        match self {
            Conjugated::State(s) => conj_act(a, &s),
            Conjugated::Vanished => Ok(Conjugated::Vanished),
        }
    }
}

/// `i_a(σ) = a σ a*`. The image is Hermitian PSD by construction; it is
/// `Vanished` when its trace drops to the trace tolerance or below.
pub fn conj_act(a: &CMatrix, sigma: &UnnormalizedState) -> Result<Conjugated> {
    if a.ncols() != sigma.dim() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            actual: a.ncols(),
        });
    }
    let image = a * sigma.matrix() * a.adjoint();
    let op = HermitianOp::from_hermitian_part(image);
    if op.matrix().trace().re <= sigma.trace_tol {
        return Ok(Conjugated::Vanished);
    }
    Ok(Conjugated::State(UnnormalizedState {
        op,
        psd_tol: sigma.psd_tol,
        trace_tol: sigma.trace_tol,
    }))
}

/// Post-measurement branch.
#[derive(Debug, Clone, PartialEq)]
pub enum PostState {
    State(DensityOperator),
    Vanished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub label: usize,
    pub probability: f64,
    pub post: PostState,
}

/// `‖Σ E*E − I‖_max` over a grouped Kraus family.
pub fn completeness_residual(kraus: &[Vec<CMatrix>], d: usize) -> Result<f64> {
    let mut sum = CMatrix::zeros(d, d);
    for e in kraus.iter().flatten() {
        if e.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: e.ncols(),
            });
        }
        sum += e.adjoint() * e;
    }
    Ok(max_norm(&(sum - identity(d))))
}

/// Measures `ρ` with the grouped Kraus family `{E^k_j}`: outcome `k` occurs with
/// probability `Tr(Σ_j E^k_j ρ E^k_j*)` and leaves the normalized post-state.
pub fn measure(rho: &DensityOperator, kraus: &[Vec<CMatrix>]) -> Result<Vec<Outcome>> {
    let d = rho.dim();
    let residual = completeness_residual(kraus, d)?;
    if residual > COMPLETENESS_TOL {
        return Err(Error::CompletenessViolated { residual });
    }
    kraus
        .iter()
        .enumerate()
        .map(|(label, group)| {
            let mut branch = CMatrix::zeros(d, d);
            for e in group {
                if e.nrows() != e.ncols() {
                    ensure_square(e)?;
                }
                branch += e * rho.matrix() * e.adjoint();
            }
            let p = branch.trace().re;
            let post = if p <= rho.trace_tol {
                PostState::Vanished
            } else {
                PostState::State(DensityOperator {
                    op: HermitianOp::from_hermitian_part(branch / real(p)),
                    psd_tol: rho.psd_tol,
                    trace_tol: rho.trace_tol,
                })
            };
            Ok(Outcome {
                label,
                probability: p.max(0.0),
                post,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Density,
    Unnormalized,
}

/// State file: a matrix record plus `"kind"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub kind: StateKind,
    #[serde(flatten)]
    pub matrix: MatrixRecord,
}

impl StateRecord {
    pub fn density(rho: &DensityOperator) -> Self {
        Self {
            kind: StateKind::Density,
            matrix: MatrixRecord::from(rho.matrix()),
        }
    }

    /// Loads the record as a density operator (unnormalized records are normalized).
    pub fn to_density(&self) -> Result<DensityOperator> {
        let m = self.matrix.to_matrix()?;
        match self.kind {
            StateKind::Density => DensityOperator::new(m),
            StateKind::Unnormalized => normalize(m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::matcore::c64;
    use crate::random;

    fn ket_state(v: CVector) -> DensityOperator {
        DensityOperator::pure(&v).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let s = normalize(gates::projector(&gates::ket0()) * real(2.0)).unwrap();
        assert!(max_norm(&(s.matrix() - gates::projector(&gates::ket0()))) < 1e-15);
        let s = normalize(identity(2)).unwrap();
        assert!(max_norm(&(s.matrix() - identity(2) * real(0.5))) < 1e-15);
        assert!(matches!(
            normalize(CMatrix::zeros(2, 2)),
            Err(Error::TraceNonPositive { .. })
        ));
    }

    #[test]
    fn normalize_is_idempotent_on_density_operators() {
        let rho = DensityOperator::new(random::hs_mixed(&mut random::rng(3), 3)).unwrap();
        let again = UnnormalizedState::from(rho.clone()).normalize();
        assert!(max_norm(&(again.matrix() - rho.matrix())) < 1e-15);
    }

    #[test]
    fn conj_act_examples() {
        let s0 = UnnormalizedState::from(ket_state(gates::ket0()));
        let out = conj_act(&identity(2), &s0).unwrap();
        assert_eq!(out.state().unwrap().matrix(), s0.matrix());

        let out = conj_act(&gates::x(), &s0).unwrap();
        let one = gates::projector(&gates::ket1());
        assert!(max_norm(&(out.state().unwrap().matrix() - one)) < 1e-15);

        let s1 = UnnormalizedState::from(ket_state(gates::ket1()));
        let p0 = gates::projector(&gates::ket0());
        let out = conj_act(&p0, &s1).unwrap();
        assert!(out.is_vanished());
        assert!(out.then(&gates::x()).unwrap().is_vanished());
    }

    #[test]
    fn conj_act_rejects_dimension_mismatch() {
        let s0 = UnnormalizedState::from(ket_state(gates::ket0()));
        assert!(conj_act(&identity(3), &s0).is_err());
    }

    #[test]
    fn conj_act_is_additive_and_composes() {
        let mut r = random::rng(11);
        let a = random::ginibre(&mut r, 3, 3);
        let b = random::ginibre(&mut r, 3, 3);
        let rho = random::hs_mixed(&mut r, 3);
        let sigma = random::hs_mixed(&mut r, 3);
        let ia = |m: &CMatrix| &a * m * a.adjoint();
        let sum = ia(&(&rho + &sigma));
        assert!(max_norm(&(sum - ia(&rho) - ia(&sigma))) < 1e-12);

        let s = UnnormalizedState::new(rho.clone()).unwrap();
        let ab = conj_act(&(&a * &b), &s).unwrap();
        let a_of_b = conj_act(&b, &s).unwrap().then(&a).unwrap();
        let diff = ab.state().unwrap().matrix() - a_of_b.state().unwrap().matrix();
        assert!(max_norm(&diff) < 1e-12);
    }

    #[test]
    fn measurement_examples() {
        let proj = vec![
            vec![gates::projector(&gates::ket0())],
            vec![gates::projector(&gates::ket1())],
        ];
        let out = measure(&ket_state(gates::ket0()), &proj).unwrap();
        assert!((out[0].probability - 1.0).abs() < 1e-15 && out[1].probability.abs() < 1e-15);
        assert_eq!(out[1].post, PostState::Vanished);
        match &out[0].post {
            PostState::State(s) => {
                assert!(max_norm(&(s.matrix() - gates::projector(&gates::ket0()))) < 1e-15)
            }
            PostState::Vanished => panic!("branch 0 vanished"),
        }

        let out = measure(&ket_state(gates::ket_plus()), &proj).unwrap();
        assert!((out[0].probability - 0.5).abs() < 1e-15);
        assert!((out[1].probability - 0.5).abs() < 1e-15);

        let bad = vec![vec![identity(2) * real(2f64.sqrt())]];
        assert!(matches!(
            measure(&ket_state(gates::ket0()), &bad),
            Err(Error::CompletenessViolated { .. })
        ));
    }

    #[test]
    fn purity_examples() {
        assert!((ket_state(gates::ket0()).purity() - 1.0).abs() < 1e-15);
        assert!((DensityOperator::maximally_mixed(2).purity() - 0.5).abs() < 1e-15);
        assert!((DensityOperator::maximally_mixed(4).purity() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn density_validation_errors() {
        assert!(matches!(
            DensityOperator::new(identity(2)),
            Err(Error::TraceNotUnit { .. })
        ));
        assert!(matches!(
            DensityOperator::new(gates::diag(&[1.5, -0.5])),
            Err(Error::NotPositive { .. })
        ));
        let m = CMatrix::from_row_slice(2, 2, &[real(0.5), c64(0.0, 0.1), c64(0.0, 0.1), real(0.5)]);
        assert!(matches!(DensityOperator::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn state_record_round_trip() {
        let rho = ket_state(gates::ket_plus());
        let json = serde_json::to_string(&StateRecord::density(&rho)).unwrap();
        assert!(json.contains("\"kind\":\"density\""));
        let back: StateRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_density().unwrap().matrix(), rho.matrix());
    }
}
