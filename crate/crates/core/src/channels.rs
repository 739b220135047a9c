//! Kraus channels, POVMs, Choi matrices and the tensor-embedding isometries
//! `K_i φ = φ ⊗ ψ_i` with their block decompositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    eigenvalues_unchecked, hermiticity_defect, identity, max_norm, real, CMatrix, CVector,
    MatrixRecord, TensorShape,
};
use crate::states::{DensityOperator, COMPLETENESS_TOL, PSD_TOL};

/// Smallest Choi eigenvalue tolerated for complete positivity.
pub const CP_TOL: f64 = 1e-9;

/// Linear map on matrices, `M_{d_in} → M_{d_out}`.
pub trait LinearMap {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply_matrix(&self, m: &CMatrix) -> CMatrix;
}

/// Completely positive, trace-preserving map `ρ ↦ Σ_j E_j ρ E_j*`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    input_dim: usize,
    output_dim: usize,
    kraus: Vec<CMatrix>,
    groups: Option<Vec<Vec<usize>>>,
    residual: f64,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        Self::build(kraus, None)
    }

    /// Kraus family with outcome groups; every index must appear in exactly one group.
    pub fn with_groups(kraus: Vec<CMatrix>, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; kraus.len()];
        for &i in groups.iter().flatten() {
            match seen.get_mut(i) {
                Some(s) if !*s => *s = true,
                Some(_) => return Err(Error::Invalid(format!("Kraus index {i} is in two groups"))),
                None => return Err(Error::Invalid(format!("Kraus index {i} out of range"))),
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("Kraus index {i} is in no group")));
        }
        Self::build(kraus, Some(groups))
    }

    fn build(kraus: Vec<CMatrix>, groups: Option<Vec<Vec<usize>>>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Invalid("a channel needs at least one Kraus operator".into()))?;
        let (output_dim, input_dim) = (first.nrows(), first.ncols());
        let mut sum = CMatrix::zeros(input_dim, input_dim);
        for e in &kraus {
            if e.nrows() != output_dim || e.ncols() != input_dim {
                return Err(Error::ShapeMismatch(format!(
                    "Kraus operators must all be {output_dim}x{input_dim}, got {}x{}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            crate::matcore::ensure_finite(e)?;
            sum += e.adjoint() * e;
        }
        let residual = max_norm(&(sum - identity(input_dim)));
        if residual > COMPLETENESS_TOL {
            return Err(Error::CompletenessViolated { residual });
        }
        Ok(Self {
            input_dim,
            output_dim,
            kraus,
            groups,
            residual,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(identity(d)).expect("identity is unitary")
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// `{√(1−p) I, √p X}`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        Self::new(vec![
            identity(2) * real((1.0 - p).sqrt()),
            crate::gates::x() * real(p.sqrt()),
        ])
    }

    /// Full dephasing in the computational basis, one outcome per projector.
    pub fn dephasing(d: usize) -> Self {
        let ks = (0..d)
            .map(|k| crate::gates::projector(&crate::gates::basis_ket(d, k)))
            .collect();
        Self::new(ks).expect("projectors are complete")
    }

    /// `{|0⟩⟨0| + √(1−γ)|1⟩⟨1|, √γ |0⟩⟨1|}`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        let mut e0 = CMatrix::zeros(2, 2);
        e0[(0, 0)] = real(1.0);
        e0[(1, 1)] = real((1.0 - gamma).sqrt());
        let mut e1 = CMatrix::zeros(2, 2);
        e1[(0, 1)] = real(gamma.sqrt());
        Self::new(vec![e0, e1])
    }

    /// Qubit depolarizing channel `ρ ↦ (1−p)ρ + p I/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        let q = p / 4.0;
        Self::new(vec![
            identity(2) * real((1.0 - 3.0 * q).sqrt()),
            crate::gates::x() * real(q.sqrt()),
            crate::gates::y() * real(q.sqrt()),
            crate::gates::z() * real(q.sqrt()),
        ])
    }

    /// Partial trace keeping `keep` (ascending): Kraus operators `⟨b|` over
    /// the basis `b` of the traced factors.
    pub fn partial_trace(shape: &TensorShape, keep: &[usize]) -> Result<Self> {
        shape.check_subset(keep)?;
        let table = shape.split_table(keep);
        let (dk, dr) = (table.len(), table.first().map_or(1, Vec::len));
        let kraus = (0..dr)
            .map(|b| {
                let mut e = CMatrix::zeros(dk, shape.dim());
                for (a, row) in table.iter().enumerate() {
                    e[(a, row[b])] = real(1.0);
                }
                e
            })
            .collect();
        Self::new(kraus)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn completeness_residual(&self) -> f64 {
        self.residual
    }

    pub fn groups(&self) -> Option<&[Vec<usize>]> {
        self.groups.as_deref()
    }

    /// Kraus operators grouped by outcome; ungrouped channels give one outcome per operator.
    pub fn grouped(&self) -> Vec<Vec<CMatrix>> {
        match &self.groups {
            Some(groups) => groups
                .iter()
                .map(|g| g.iter().map(|&i| self.kraus[i].clone()).collect())
                .collect(),
            None => self.kraus.iter().map(|e| vec![e.clone()]).collect(),
        }
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: rho.dim(),
            });
        }
        Ok(DensityOperator::from_trusted(self.apply_matrix(rho.matrix())))
    }

    /// `C₁ ⊗ C₂` with Kraus operators `E_i ⊗ F_j`.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for e in &self.kraus {
            for f in &other.kraus {
                kraus.push(e.kronecker(f));
            }
        }
        Self::new(kraus).expect("product of complete families is complete")
    }

    /// `then ∘ self`.
    pub fn compose(&self, then: &KrausChannel) -> Result<KrausChannel> {
        if then.input_dim != self.output_dim {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim,
                actual: then.input_dim,
            });
        }
        let mut kraus = Vec::new();
        for f in &then.kraus {
            for e in &self.kraus {
                kraus.push(f * e);
            }
        }
        Self::new(kraus)
    }

    pub fn to_record(&self) -> ChannelRecord {
        ChannelRecord {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            kraus: self.kraus.iter().map(MatrixRecord::from).collect(),
            outcome_groups: self.groups.clone(),
        }
    }
}

impl LinearMap for KrausChannel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.output_dim, self.output_dim);
        for e in &self.kraus {
            out += e * m * e.adjoint();
        }
        out
    }
}

/// Channel file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub input_dim: usize,
    pub output_dim: usize,
    pub kraus: Vec<MatrixRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_groups: Option<Vec<Vec<usize>>>,
}

impl ChannelRecord {
    pub fn to_channel(&self) -> Result<KrausChannel> {
        let kraus = self
            .kraus
            .iter()
            .map(MatrixRecord::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        for k in &kraus {
            if k.nrows() != self.output_dim || k.ncols() != self.input_dim {
                return Err(Error::ShapeMismatch(format!(
                    "declared {}x{} channel has a {}x{} Kraus operator",
                    self.output_dim,
                    self.input_dim,
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        match &self.outcome_groups {
            Some(g) => KrausChannel::with_groups(kraus, g.clone()),
            None => KrausChannel::new(kraus),
        }
    }
}

/// A linear map given by its images of the matrix units `|i⟩⟨j|`.
/// Carries maps that are not channels, such as the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMap {
    input_dim: usize,
    output_dim: usize,
    images: Vec<CMatrix>,
}

impl MatrixMap {
    pub fn from_fn<F: Fn(&CMatrix) -> CMatrix>(input_dim: usize, output_dim: usize, f: F) -> Result<Self> {
        let mut images = Vec::with_capacity(input_dim * input_dim);
        for i in 0..input_dim {
            for j in 0..input_dim {
                let mut e = CMatrix::zeros(input_dim, input_dim);
                e[(i, j)] = real(1.0);
                let img = f(&e);
                if img.nrows() != output_dim || img.ncols() != output_dim {
                    return Err(Error::ShapeMismatch(format!(
                        "image is {}x{}, expected {output_dim}x{output_dim}",
                        img.nrows(),
                        img.ncols()
                    )));
                }
                images.push(img);
            }
        }
        Ok(Self {
            input_dim,
            output_dim,
            images,
        })
    }

    pub fn transpose(d: usize) -> Self {
        Self::from_fn(d, d, |m| m.transpose()).expect("square images")
    }
}

impl LinearMap for MatrixMap {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let d = self.input_dim;
        let mut out = CMatrix::zeros(self.output_dim, self.output_dim);
        for i in 0..d {
            for j in 0..d {
                out += &self.images[i * d + j] * m[(i, j)];
            }
        }
        out
    }
}

/// Choi matrix `Σ_ij |i⟩⟨j| ⊗ C(|i⟩⟨j|) = (I ⊗ C)(|Ω⟩⟨Ω|)`, input factor first.
pub fn choi<M: LinearMap + ?Sized>(map: &M) -> CMatrix {
    let (din, dout) = (map.input_dim(), map.output_dim());
    let mut out = CMatrix::zeros(din * dout, din * dout);
    for i in 0..din {
        for j in 0..din {
            let mut e = CMatrix::zeros(din, din);
            e[(i, j)] = real(1.0);
            let img = map.apply_matrix(&e);
            out.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&img);
        }
    }
    out
}

/// Complete-positivity verdict from the Choi spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpVerdict {
    pub completely_positive: bool,
    pub hermitian: bool,
    pub min_eigenvalue: f64,
}

/// CP iff the Choi matrix is PSD within [`CP_TOL`]; an ancilla of the input
/// dimension suffices in finite dimension.
pub fn is_completely_positive<M: LinearMap + ?Sized>(map: &M) -> CpVerdict {
    let c = choi(map);
    let hermitian = hermiticity_defect(&c) <= 1e-10;
    let h = (&c + c.adjoint()) * real(0.5);
    let min_eigenvalue = eigenvalues_unchecked(&h)[0];
    CpVerdict {
        completely_positive: hermitian && min_eigenvalue >= -CP_TOL,
        hermitian,
        min_eigenvalue,
    }
}

/// Outcome-labeled effects `{M_m}` with `M_m ≥ 0` and `Σ M_m = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    labels: Vec<String>,
    effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(labels: Vec<String>, effects: Vec<CMatrix>) -> Result<Self> {
        if labels.len() != effects.len() {
            return Err(Error::Invalid(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        let d = effects
            .first()
            .ok_or_else(|| Error::Invalid("a POVM needs at least one effect".into()))?
            .nrows();
        let mut sum = CMatrix::zeros(d, d);
        for m in &effects {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::ShapeMismatch("effects must share one square shape".into()));
            }
            let defect = hermiticity_defect(m);
            if defect > PSD_TOL {
                return Err(Error::NotHermitian { deviation: defect });
            }
            let min = eigenvalues_unchecked(&((m + m.adjoint()) * real(0.5)))[0];
            if min < -PSD_TOL {
                return Err(Error::NotPositive { min_eigenvalue: min });
            }
            sum += m;
        }
        let residual = max_norm(&(sum - identity(d)));
        if residual > COMPLETENESS_TOL {
            return Err(Error::CompletenessViolated { residual });
        }
        Ok(Self { labels, effects })
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    /// `Tr(M_m ρ)` per outcome.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rho.dim(),
            });
        }
        Ok(self
            .effects
            .iter()
            .map(|m| (m * rho.matrix()).trace().re)
            .collect())
    }
}

/// `M_m = Σ_j (E^m_j)* E^m_j` over the channel's outcome groups.
pub fn povm_from_kraus(channel: &KrausChannel) -> Result<Povm> {
    let d = channel.input_dim();
    let grouped = channel.grouped();
    let effects: Vec<CMatrix> = grouped
        .iter()
        .map(|g| {
            g.iter()
                .fold(CMatrix::zeros(d, d), |acc, e| acc + e.adjoint() * e)
        })
        .collect();
    let labels = (0..effects.len()).map(|k| k.to_string()).collect();
    Povm::new(labels, effects)
}

/// `K φ = φ ⊗ ψ` with `ψ` inserted at one factor of `shape`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedIsometry {
    shape: TensorShape,
    factor: usize,
    psi: CVector,
    matrix: CMatrix,
}

impl EmbedIsometry {
    pub fn new(shape: TensorShape, factor: usize, psi: CVector) -> Result<Self> {
        shape.check_subset(&[factor])?;
        let df = shape.dims()[factor];
        if psi.len() != df {
            return Err(Error::DimensionMismatch {
                expected: df,
                actual: psi.len(),
            });
        }
        if (psi.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!(
                "embedding vector must be a unit vector (norm {})",
                psi.norm()
            )));
        }
        let table = shape.split_table(&[factor]);
        let dom = shape.dim() / df;
        let mut matrix = CMatrix::zeros(shape.dim(), dom);
        for (a, row) in table.iter().enumerate() {
            for (b, &flat) in row.iter().enumerate() {
                matrix[(flat, b)] = psi[a];
            }
        }
        Ok(Self {
            shape,
            factor,
            psi,
            matrix,
        })
    }

    /// Embedding along the computational basis vector `|i⟩` of the last factor.
    pub fn basis(shape: TensorShape, i: usize) -> Result<Self> {
        let last = shape
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::ShapeMismatch("empty shape".into()))?;
        let d = shape.dims()[last];
        if i >= d {
            return Err(Error::ShapeMismatch(format!("basis index {i} >= {d}")));
        }
        Self::new(shape, last, crate::gates::basis_ket(d, i))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn psi(&self) -> &CVector {
        &self.psi
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn embed_ket(&self, phi: &CVector) -> Result<CVector> {
        if phi.len() != self.domain_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim(),
                actual: phi.len(),
            });
        }
        Ok(&self.matrix * phi)
    }

    /// `K a K*`.
    pub fn embed_operator(&self, a: &CMatrix) -> Result<CMatrix> {
        let d = self.domain_dim();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: a.nrows(),
            });
        }
        Ok(&self.matrix * a * self.matrix.adjoint())
    }
}

fn split_last(shape: &TensorShape) -> Result<usize> {
    shape
        .dims()
        .last()
        .copied()
        .ok_or_else(|| Error::ShapeMismatch("empty shape".into()))
}

/// `a_ij = K_i* a K_j` with `K_i` the basis embeddings of the last factor.
pub fn block(a: &CMatrix, shape: &TensorShape, i: usize, j: usize) -> Result<CMatrix> {
    if a.nrows() != shape.dim() || a.ncols() != shape.dim() {
        return Err(Error::ShapeMismatch(format!(
            "matrix is {}x{} but shape has dimension {}",
            a.nrows(),
            a.ncols(),
            shape.dim()
        )));
    }
    let ki = EmbedIsometry::basis(shape.clone(), i)?;
    let kj = EmbedIsometry::basis(shape.clone(), j)?;
    Ok(ki.matrix().adjoint() * a * kj.matrix())
}

/// All blocks `a_ij`, indexed `[i][j]`.
pub fn blocks(a: &CMatrix, shape: &TensorShape) -> Result<Vec<Vec<CMatrix>>> {
    let n = split_last(shape)?;
    (0..n)
        .map(|i| (0..n).map(|j| block(a, shape, i, j)).collect())
        .collect()
}

/// `Σ_ij K_i a_ij K_j*`.
pub fn reassemble(blocks: &[Vec<CMatrix>], shape: &TensorShape) -> Result<CMatrix> {
    let n = split_last(shape)?;
    if blocks.len() != n || blocks.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch(format!("expected {n}x{n} blocks")));
    }
    let ks = (0..n)
        .map(|i| EmbedIsometry::basis(shape.clone(), i))
        .collect::<Result<Vec<_>>>()?;
    let d = shape.dim();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..n {
        for j in 0..n {
            out += ks[i].matrix() * &blocks[i][j] * ks[j].matrix().adjoint();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::matcore::tensor;
    use crate::random;

    #[test]
    fn apply_examples() {
        let rho = DensityOperator::pure(&gates::ket_plus()).unwrap();
        let out = KrausChannel::identity(2).apply(&rho).unwrap();
        assert!(max_norm(&(out.matrix() - rho.matrix())) < 1e-15);

        let flip = KrausChannel::new(vec![gates::x()]).unwrap();
        let out = flip.apply(&DensityOperator::pure(&gates::ket0()).unwrap()).unwrap();
        assert!(max_norm(&(out.matrix() - gates::projector(&gates::ket1()))) < 1e-15);

        let out = KrausChannel::dephasing(2).apply(&rho).unwrap();
        assert!(max_norm(&(out.matrix() - identity(2) * real(0.5))) < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            KrausChannel::new(vec![gates::diag(&[1.0, 0.5])]),
            Err(Error::CompletenessViolated { .. })
        ));
        let c = KrausChannel::identity(2);
        assert!(matches!(
            c.apply(&DensityOperator::maximally_mixed(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(KrausChannel::with_groups(vec![gates::x()], vec![vec![0], vec![0]]).is_err());
    }

    #[test]
    fn povm_examples() {
        let p = povm_from_kraus(&KrausChannel::dephasing(2)).unwrap();
        assert!(max_norm(&(&p.effects()[0] - gates::diag(&[1.0, 0.0]))) < 1e-15);
        assert!(max_norm(&(&p.effects()[1] - gates::diag(&[0.0, 1.0]))) < 1e-15);

        let single = KrausChannel::with_groups(
            KrausChannel::dephasing(2).kraus().to_vec(),
            vec![vec![0, 1]],
        )
        .unwrap();
        let p = povm_from_kraus(&single).unwrap();
        assert_eq!(p.effects().len(), 1);
        assert!(max_norm(&(&p.effects()[0] - identity(2))) < 1e-15);

        let p = povm_from_kraus(&KrausChannel::amplitude_damping(0.5).unwrap()).unwrap();
        assert!(max_norm(&(&p.effects()[0] - gates::diag(&[1.0, 0.5]))) < 1e-15);
        assert!(max_norm(&(&p.effects()[1] - gates::diag(&[0.0, 0.5]))) < 1e-15);
    }

    #[test]
    fn povm_probabilities_match_measure() {
        let mut rng = random::rng(3);
        let c = KrausChannel::amplitude_damping(0.3).unwrap();
        let p = povm_from_kraus(&c).unwrap();
        for _ in 0..20 {
            let rho = DensityOperator::from_trusted(random::hs_mixed(&mut rng, 2));
            let probs = p.probabilities(&rho).unwrap();
            let outs = crate::states::measure(&rho, &c.grouped()).unwrap();
            for (pr, o) in probs.iter().zip(&outs) {
                assert!((pr - o.probability).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn povm_rejects_negative_effect() {
        let bad = vec![gates::diag(&[1.5, 0.0]), gates::diag(&[-0.5, 1.0])];
        assert!(matches!(
            Povm::new(vec!["a".into(), "b".into()], bad),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn choi_examples() {
        let c = choi(&KrausChannel::identity(2));
        let omega = gates::omega(2);
        assert!(max_norm(&(&c - &omega * omega.adjoint())) < 1e-15);
        let eig = eigenvalues_unchecked(&c);
        assert_eq!(eig.iter().filter(|&&l| l.abs() > 1e-9).count(), 1);

        let t = MatrixMap::transpose(2);
        let ct = choi(&t);
        assert!(max_norm(&(&ct - gates::swap(2))) < 1e-15);
        let v = is_completely_positive(&t);
        assert!(!v.completely_positive);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-12);

        let deph = KrausChannel::dephasing(2);
        let cd = choi(&deph);
        assert!(max_norm(&(&cd - gates::diag(&[1.0, 0.0, 0.0, 1.0]))) < 1e-15);
        assert!(is_completely_positive(&deph).completely_positive);
    }

    #[test]
    fn product_channels_stay_cp() {
        let mut rng = random::rng(11);
        for d1 in 1..=3 {
            for d2 in 1..=3 {
                let u1 = random::haar_unitary(&mut rng, d1);
                let u2 = random::haar_unitary(&mut rng, d2);
                let c1 = KrausChannel::unitary(u1).unwrap().compose(&KrausChannel::dephasing(d1)).unwrap();
                let c2 = KrausChannel::unitary(u2).unwrap();
                let v = is_completely_positive(&c1.tensor(&c2));
                assert!(v.completely_positive, "{v:?}");
            }
        }
    }

    #[test]
    fn record_round_trip() {
        let c = KrausChannel::with_groups(
            KrausChannel::amplitude_damping(0.2).unwrap().kraus().to_vec(),
            vec![vec![1], vec![0]],
        )
        .unwrap();
        let json = serde_json::to_string(&c.to_record()).unwrap();
        let back: ChannelRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_channel().unwrap(), c);
    }

    #[test]
    fn partial_trace_channel_matches_partial_trace() {
        let mut rng = random::rng(8);
        let shape = TensorShape::new(vec![2, 3, 2]).unwrap();
        let rho = DensityOperator::from_trusted(random::hs_mixed(&mut rng, 12));
        for keep in [vec![0], vec![1], vec![0, 2], vec![1, 2]] {
            let c = KrausChannel::partial_trace(&shape, &keep).unwrap();
            let out = c.apply(&rho).unwrap();
            let expect = crate::matcore::partial_trace(rho.matrix(), &shape, &keep).unwrap();
            assert!(max_norm(&(out.matrix() - expect)) < 1e-14);
        }
    }

    #[test]
    fn embed_examples() {
        let k = EmbedIsometry::new(TensorShape::qubits(2), 1, gates::ket0()).unwrap();
        let v = k.embed_ket(&gates::ket0()).unwrap();
        assert!((v - gates::basis_ket(4, 0)).norm() < 1e-15);
        let kk = k.matrix().adjoint() * k.matrix();
        assert!(max_norm(&(kk - identity(2))) < 1e-15);

        // Inserting on factor 0 puts ψ in front.
        let k0 = EmbedIsometry::new(TensorShape::qubits(2), 0, gates::ket1()).unwrap();
        let v = k0.embed_ket(&gates::ket_plus()).unwrap();
        let expect = crate::matcore::ket_tensor(&gates::ket1(), &gates::ket_plus());
        assert!((v - expect).norm() < 1e-15);

        let shape = TensorShape::qubits(2);
        for i in 0..2 {
            for j in 0..2 {
                let b = block(&identity(4), &shape, i, j).unwrap();
                let expect = if i == j { identity(2) } else { CMatrix::zeros(2, 2) };
                assert!(max_norm(&(b - expect)) < 1e-15);
            }
        }
    }

    #[test]
    fn resolution_and_reassembly() {
        let mut rng = random::rng(5);
        let shape = TensorShape::new(vec![2, 3]).unwrap();
        let mut res = CMatrix::zeros(6, 6);
        for i in 0..3 {
            let k = EmbedIsometry::basis(shape.clone(), i).unwrap();
            res += k.matrix() * k.matrix().adjoint();
        }
        assert!(max_norm(&(res - identity(6))) < 1e-15);
        let a = random::ginibre(&mut rng, 6, 6);
        let back = reassemble(&blocks(&a, &shape).unwrap(), &shape).unwrap();
        assert!(max_norm(&(back - &a)) < 1e-12);
        // Blocks of a ⊗ b are b_ij · a.
        let x = random::ginibre(&mut rng, 2, 2);
        let y = random::ginibre(&mut rng, 3, 3);
        let b = block(&tensor(&x, &y), &shape, 1, 2).unwrap();
        assert!(max_norm(&(b - &x * y[(1, 2)])) < 1e-12);
    }
}
