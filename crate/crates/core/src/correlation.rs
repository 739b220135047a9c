//! Correlation functionals on bipartite states: entropies, negativity, the
//! PPT test, a relative-entropy-of-entanglement upper bound, mutual
//! information and discord. Logarithms are natural.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    eig_unchecked, eigenvalues_unchecked, embed_operator, partial_trace, partial_transpose, real,
    CMatrix, CVector, TensorShape,
};
use crate::random;
use crate::states::DensityOperator;

/// Eigenvalues at or below this count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Partial-transpose eigenvalues below `-PT_TOL` signal entanglement.
pub const PT_TOL: f64 = 1e-10;
/// Floor applied to optimized functionals.
pub const NEGATIVE_FLOOR: f64 = -1e-9;

/// Cut of a tensor-product space into `A` and its complement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    shape: TensorShape,
    a: Vec<usize>,
    complement: Vec<usize>,
}

impl Bipartition {
    pub fn new(shape: TensorShape, mut a: Vec<usize>) -> Result<Self> {
        a.sort_unstable();
        a.dedup();
        if a.is_empty() || a.len() >= shape.len() {
            return Err(Error::Invalid(format!(
                "cut {a:?} must be a nonempty proper subset of {} factors",
                shape.len()
            )));
        }
        shape.check_subset(&a)?;
        let complement = shape.complement(&a);
        Ok(Self {
            shape,
            a,
            complement,
        })
    }

    /// Two qubits cut between them.
    pub fn qubits() -> Self {
        Self::new(TensorShape::qubits(2), vec![0]).expect("valid cut")
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    pub fn dim_a(&self) -> usize {
        self.a.iter().map(|&f| self.shape.dims()[f]).product()
    }

    pub fn dim_complement(&self) -> usize {
        self.complement.iter().map(|&f| self.shape.dims()[f]).product()
    }

    fn check(&self, rho: &DensityOperator) -> Result<()> {
        if rho.dim() != self.shape.dim() {
            return Err(Error::ShapeMismatch(format!(
                "state has dimension {} but the cut is over {:?}",
                rho.dim(),
                self.shape.dims()
            )));
        }
        Ok(())
    }

    pub fn marginal_a(&self, rho: &DensityOperator) -> Result<CMatrix> {
        self.check(rho)?;
        partial_trace(rho.matrix(), &self.shape, &self.a)
    }

    pub fn marginal_complement(&self, rho: &DensityOperator) -> Result<CMatrix> {
        self.check(rho)?;
        partial_trace(rho.matrix(), &self.shape, &self.complement)
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `−Σ λ log λ` of a Hermitian matrix, with `0 log 0 = 0`.
pub fn entropy_of(m: &CMatrix) -> f64 {
    let s: f64 = -eigenvalues_unchecked(m).into_iter().map(xlogx).sum::<f64>();
    s.max(0.0)
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of(rho.matrix())
}

/// Relative entropy value; infinite when the support condition fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum RelativeEntropy {
    Finite(f64),
    Infinite,
}

impl RelativeEntropy {
    pub fn value(&self) -> f64 {
        match self {
            RelativeEntropy::Finite(v) => *v,
            RelativeEntropy::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RelativeEntropy::Infinite)
    }
}

/// `S(ρ‖σ) = Tr ρ log ρ − Tr ρ log σ` via both spectral decompositions.
pub fn relative_entropy_of(rho: &CMatrix, sigma: &CMatrix) -> RelativeEntropy {
    let er = eig_unchecked(rho);
    let es = eig_unchecked(sigma);
    let overlaps = er.vectors.adjoint() * &es.vectors;
    let mut cross = 0.0;
    for (i, &lam) in er.values.iter().enumerate() {
        if lam <= SUPPORT_TOL {
            continue;
        }
        for (j, &mu) in es.values.iter().enumerate() {
            let w = lam * overlaps[(i, j)].norm_sqr();
            if mu <= SUPPORT_TOL {
                if w > SUPPORT_TOL {
                    return RelativeEntropy::Infinite;
                }
                continue;
            }
            cross += w * mu.ln();
        }
    }
    let self_term: f64 = er.values.iter().copied().map(xlogx).sum();
    RelativeEntropy::Finite(self_term - cross)
}

pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<RelativeEntropy> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    Ok(relative_entropy_of(rho.matrix(), sigma.matrix()))
}

/// Spectrum of `ρ^{T_A}`, ascending.
pub fn pt_spectrum(rho: &DensityOperator, cut: &Bipartition) -> Result<Vec<f64>> {
    cut.check(rho)?;
    let pt = partial_transpose(rho.matrix(), &cut.shape, &cut.a)?;
    Ok(eigenvalues_unchecked(&pt))
}

fn negativity_from(spectrum: &[f64]) -> f64 {
    spectrum.iter().filter(|&&l| l < -PT_TOL).map(|l| -l).sum()
}

/// `N = (‖ρ^{T_A}‖₁ − 1)/2`, the sum of the negative PT eigenvalues. Eigenvalues
/// in `[−PT_TOL, 0)` count as zero so that `N = 0` matches the PPT verdict.
pub fn negativity(rho: &DensityOperator, cut: &Bipartition) -> Result<f64> {
    Ok(negativity_from(&pt_spectrum(rho, cut)?))
}

/// `log ‖ρ^{T_A}‖₁ = log(1 + 2N)`.
pub fn log_negativity(rho: &DensityOperator, cut: &Bipartition) -> Result<f64> {
    Ok((1.0 + 2.0 * negativity(rho, cut)?).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PptVerdict {
    Separable,
    Entangled,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PptReport {
    pub verdict: PptVerdict,
    pub min_pt_eigenvalue: f64,
}

/// PPT test; conclusive for separability only on 2×2 and 2×3 cuts.
pub fn is_separable_ppt(rho: &DensityOperator, cut: &Bipartition) -> Result<PptReport> {
    let spectrum = pt_spectrum(rho, cut)?;
    let min = spectrum[0];
    let small = matches!(
        (cut.dim_a(), cut.dim_complement()),
        (2, 2) | (2, 3) | (3, 2) | (1, _) | (_, 1)
    );
    let verdict = if negativity_from(&spectrum) > 0.0 {
        PptVerdict::Entangled
    } else if small {
        PptVerdict::Separable
    } else {
        PptVerdict::Inconclusive
    };
    Ok(PptReport {
        verdict,
        min_pt_eigenvalue: min,
    })
}

/// `I = S(ρ_A) + S(ρ_{A^c}) − S(ρ)`.
pub fn mutual_information(rho: &DensityOperator, cut: &Bipartition) -> Result<f64> {
    let sa = entropy_of(&cut.marginal_a(rho)?);
    let sb = entropy_of(&cut.marginal_complement(rho)?);
    Ok(sa + sb - von_neumann_entropy(rho))
}

/// Grid and refinement settings for the discord optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscordOptions {
    pub theta_points: usize,
    pub phi_points: usize,
    pub refine_steps: usize,
}

impl Default for DiscordOptions {
    fn default() -> Self {
        Self {
            theta_points: 17,
            phi_points: 32,
            refine_steps: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscordReport {
    pub value: f64,
    pub mutual_information: f64,
    pub classical_correlation: f64,
    /// Bloch angles `(θ, φ)` of the best projective measurement.
    pub measurement: (f64, f64),
    /// Always `"complement"`: the projective measurement acts on `A^c`.
    pub measured: &'static str,
}

fn bloch_projectors(theta: f64, phi: f64) -> [CMatrix; 2] {
    let n = CVector::from_vec(vec![
        real((theta / 2.0).cos()),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]);
    let p = &n * n.adjoint();
    let q = crate::matcore::identity(2) - &p;
    [p, q]
}

/// Discord `𝒟_A = I − J_A` with `J_A = S(ρ_A) − min Σ_k p_k S(ρ_{A|k})`, the
/// minimum taken over rank-1 projective measurements on the complement qubit.
pub fn discord(rho: &DensityOperator, cut: &Bipartition, opts: DiscordOptions) -> Result<DiscordReport> {
    cut.check(rho)?;
    if cut.dim_complement() != 2 {
        return Err(Error::Unsupported(format!(
            "discord measures a single qubit; the complement has dimension {}",
            cut.dim_complement()
        )));
    }
    let mi = mutual_information(rho, cut)?;
    let sa = entropy_of(&cut.marginal_a(rho)?);
    let conditional = |theta: f64, phi: f64| -> f64 {
        bloch_projectors(theta, phi)
            .iter()
            .map(|p| {
                let big = embed_operator(p, &cut.shape, &cut.complement).expect("shape checked");
                let branch = &big * rho.matrix() * &big;
                let reduced = partial_trace(&branch, &cut.shape, &cut.a).expect("shape checked");
                let pk = reduced.trace().re;
                if pk <= SUPPORT_TOL {
                    0.0
                } else {
                    pk * entropy_of(&(reduced / real(pk)))
                }
            })
            .sum()
    };

    let nt = opts.theta_points.max(2);
    let np = opts.phi_points.max(1);
    let dt = std::f64::consts::PI / (nt - 1) as f64;
    let dp = 2.0 * std::f64::consts::PI / np as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..nt {
        for j in 0..np {
            let (t, p) = (i as f64 * dt, j as f64 * dp);
            let v = conditional(t, p);
            if v < best.0 {
                best = (v, t, p);
            }
        }
    }
    let (mut step_t, mut step_p) = (dt, dp);
    for _ in 0..opts.refine_steps {
        let mut improved = false;
        for (ddt, ddp) in [(step_t, 0.0), (-step_t, 0.0), (0.0, step_p), (0.0, -step_p)] {
            let (t, p) = (best.1 + ddt, best.2 + ddp);
            let v = conditional(t, p);
            if v < best.0 {
                best = (v, t, p);
                improved = true;
            }
        }
        if !improved {
            step_t *= 0.5;
            step_p *= 0.5;
        }
        if step_t < 1e-10 {
            break;
        }
    }
    let j = sa - best.0;
    Ok(DiscordReport {
        value: (mi - j).max(NEGATIVE_FLOOR),
        mutual_information: mi,
        classical_correlation: j,
        measurement: (best.1, best.2),
        measured: "complement",
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReeOptions {
    pub ensemble_size: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ReeOptions {
    fn default() -> Self {
        Self {
            ensemble_size: 8,
            iterations: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReeEstimate {
    /// `S(ρ‖σ)` for the best separable `σ` found; an upper bound on the infimum.
    pub bound: f64,
    pub sigma: CMatrix,
    pub sweeps: usize,
    pub exactness: &'static str,
}

/// Separable mixture `w₀ ρ_A⊗ρ_B + Σ_k w_k |α_k⟩⟨α_k| ⊗ |β_k⟩⟨β_k|` with
/// softmax weights; kets stored unnormalized as interleaved (re, im).
struct SeparableFamily<'a> {
    cut: &'a Bipartition,
    marginal_product: CMatrix,
    n: usize,
}

impl SeparableFamily<'_> {
    fn ket_len(&self) -> usize {
        2 * (self.cut.dim_a() + self.cut.dim_complement())
    }

    fn params_len(&self) -> usize {
        (self.n + 1) + self.n * self.ket_len()
    }

    fn ket(raw: &[f64]) -> CVector {
        let v = CVector::from_iterator(raw.len() / 2, raw.chunks(2).map(|c| Complex64::new(c[0], c[1])));
        let n = v.norm().max(1e-300);
        v / real(n)
    }

    fn sigma(&self, params: &[f64]) -> CMatrix {
        let wmax = params[..=self.n].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = params[..=self.n].iter().map(|x| (x - wmax).exp()).collect();
        let total: f64 = w.iter().sum();
        let da = self.cut.dim_a();
        let mut local = &self.marginal_product * real(w[0] / total);
        for k in 0..self.n {
            let off = self.n + 1 + k * self.ket_len();
            let a = Self::ket(&params[off..off + 2 * da]);
            let b = Self::ket(&params[off + 2 * da..off + self.ket_len()]);
            let ab = a.kronecker(&b);
            local += &ab * ab.adjoint() * real(w[k + 1] / total);
        }
        // The family lives in A ⊗ A^c order; map back to the native factor order.
        reorder_to_native(&local, self.cut)
    }
}

/// Permutes a matrix on `A ⊗ A^c` (A factors first) to the native factor order.
pub(crate) fn reorder_to_native(m: &CMatrix, cut: &Bipartition) -> CMatrix {
    let table = cut.shape.split_table(&cut.a);
    let db = cut.dim_complement();
    let d = cut.shape.dim();
    let mut out = CMatrix::zeros(d, d);
    for (a, row_a) in table.iter().enumerate() {
        for (b, &i) in row_a.iter().enumerate() {
            for (a2, row_a2) in table.iter().enumerate() {
                for (b2, &j) in row_a2.iter().enumerate() {
                    out[(i, j)] = m[(a * db + b, a2 * db + b2)];
                }
            }
        }
    }
    out
}

/// Inverse of [`reorder_to_native`].
pub(crate) fn reorder_to_split(m: &CMatrix, cut: &Bipartition) -> CMatrix {
    let table = cut.shape.split_table(&cut.a);
    let db = cut.dim_complement();
    let d = cut.shape.dim();
    let mut out = CMatrix::zeros(d, d);
    for (a, row_a) in table.iter().enumerate() {
        for (b, &i) in row_a.iter().enumerate() {
            for (a2, row_a2) in table.iter().enumerate() {
                for (b2, &j) in row_a2.iter().enumerate() {
                    out[(a * db + b, a2 * db + b2)] = m[(i, j)];
                }
            }
        }
    }
    out
}

/// Leading Schmidt product of a ket on `A ⊗ A^c`, as raw interleaved parameters.
fn schmidt_seed(v: &CVector, da: usize, db: usize) -> Vec<f64> {
    let m = CMatrix::from_row_iterator(da, db, v.iter().copied());
    let svd = m.svd(true, true);
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|x| x.0)
        .unwrap_or(0);
    let u = svd.u.expect("requested").column(k).into_owned();
    let vt = svd.v_t.expect("requested").row(k).transpose();
    u.iter()
        .chain(vt.iter())
        .flat_map(|z| [z.re, z.im])
        .collect()
}

/// Upper bound on the relative entropy of entanglement by coordinate descent
/// over a finite family of separable mixtures. Deterministic given the seed.
pub fn ree_estimate(rho: &DensityOperator, cut: &Bipartition, opts: ReeOptions) -> Result<ReeEstimate> {
    cut.check(rho)?;
    let (da, db) = (cut.dim_a(), cut.dim_complement());
    let split_rho = reorder_to_split(rho.matrix(), cut);
    let ra = partial_trace(rho.matrix(), &cut.shape, &cut.a)?;
    let rb = partial_trace(rho.matrix(), &cut.shape, &cut.complement)?;
    let n = opts.ensemble_size.max(1);
    let family = SeparableFamily {
        cut,
        marginal_product: ra.kronecker(&rb),
        n,
    };
    let mut rng = random::rng(opts.seed);
    let mut params = vec![0.0; family.params_len()];
    // Seed kets from the Schmidt terms of the leading eigenvectors, the rest at random.
    let eig = eig_unchecked(&split_rho);
    let order: Vec<usize> = (0..eig.values.len()).rev().collect();
    for k in 0..n {
        let off = n + 1 + k * family.ket_len();
        let raw = match order.get(k) {
            Some(&idx) if eig.values[idx] > SUPPORT_TOL => {
                params[k + 1] = (eig.values[idx] * (da * db) as f64).ln();
                schmidt_seed(&eig.vectors.column(idx).into_owned(), da, db)
            }
            _ => {
                params[k + 1] = -4.0;
                (0..family.ket_len()).map(|_| rng.random::<f64>() - 0.5).collect()
            }
        };
        params[off..off + family.ket_len()].copy_from_slice(&raw);
    }
    let objective = |p: &[f64]| relative_entropy_of(rho.matrix(), &family.sigma(p)).value();
    let mut best = objective(&params);
    let mut step = 0.5;
    let mut sweeps = 0;
    for _ in 0..opts.iterations {
        sweeps += 1;
        let mut improved = false;
        for i in 0..params.len() {
            for dir in [1.0, -1.0] {
                let old = params[i];
                params[i] = old + dir * step;
                let v = objective(&params);
                if v < best {
                    best = v;
                    improved = true;
                    break;
                }
                params[i] = old;
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-8 {
                break;
            }
        }
    }
    Ok(ReeEstimate {
        bound: best.max(0.0),
        sigma: family.sigma(&params),
        sweeps,
        exactness: "upper-bound",
    })
}

/// Whether a value is exact or the result of an optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    ClosedForm,
    OptimizedUpperBound,
}

/// Nonnegative bipartite functionals `f` selectable by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Negativity,
    LogNegativity,
    MutualInformation,
    Discord(DiscordOptions),
    Ree(ReeOptions),
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::Negativity => "negativity",
            Functional::LogNegativity => "log-negativity",
            Functional::MutualInformation => "mutual-information",
            Functional::Discord(_) => "discord",
            Functional::Ree(_) => "ree",
        }
    }

    pub fn exactness(&self) -> Exactness {
        match self {
            Functional::Discord(_) | Functional::Ree(_) => Exactness::OptimizedUpperBound,
            _ => Exactness::ClosedForm,
        }
    }

    /// All built-in functionals are unchanged by local unitaries `u ⊗ v`.
    pub fn local_unitary_invariant(&self) -> bool {
        true
    }

    pub fn evaluate(&self, rho: &DensityOperator, cut: &Bipartition) -> Result<f64> {
        match self {
            Functional::Negativity => negativity(rho, cut),
            Functional::LogNegativity => log_negativity(rho, cut),
            Functional::MutualInformation => mutual_information(rho, cut),
            Functional::Discord(o) => Ok(discord(rho, cut, *o)?.value),
            Functional::Ree(o) => Ok(ree_estimate(rho, cut, *o)?.bound),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "negativity" => Functional::Negativity,
            "log-negativity" => Functional::LogNegativity,
            "mutual-information" | "mi" => Functional::MutualInformation,
            "discord" => Functional::Discord(DiscordOptions::default()),
            "ree" => Functional::Ree(ReeOptions::default()),
            other => return Err(Error::Invalid(format!("unknown functional `{other}`"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::matcore::{identity, tensor};
    use std::f64::consts::LN_2;

    fn dm(m: CMatrix) -> DensityOperator {
        DensityOperator::new(m).unwrap()
    }

    fn bell() -> DensityOperator {
        DensityOperator::pure(&gates::bell_phi_plus()).unwrap()
    }

    fn classical() -> DensityOperator {
        dm(gates::diag(&[0.5, 0.0, 0.0, 0.5]))
    }

    fn product(rng: &mut crate::random::SimRng) -> DensityOperator {
        dm(tensor(&random::hs_mixed(rng, 2), &random::hs_mixed(rng, 2)))
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&bell()).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(2)) - LN_2).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(4)) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let mut rng = random::rng(1);
        let r = dm(random::hs_mixed(&mut rng, 3));
        assert!(relative_entropy(&r, &r).unwrap().value().abs() < 1e-10);
        let p0 = DensityOperator::pure(&gates::ket0()).unwrap();
        let v = relative_entropy(&p0, &DensityOperator::maximally_mixed(2)).unwrap();
        assert!((v.value() - LN_2).abs() < 1e-12);
        let p1 = DensityOperator::pure(&gates::ket1()).unwrap();
        assert!(relative_entropy(&p0, &p1).unwrap().is_infinite());
    }

    #[test]
    fn negativity_examples() {
        let cut = Bipartition::qubits();
        let mut rng = random::rng(2);
        assert_eq!(negativity(&product(&mut rng), &cut).unwrap(), 0.0);
        assert!((negativity(&bell(), &cut).unwrap() - 0.5).abs() < 1e-12);
        assert!((log_negativity(&bell(), &cut).unwrap() - LN_2).abs() < 1e-12);
        let w = dm(gates::werner(1.0 / 3.0));
        assert!(negativity(&w, &cut).unwrap().abs() < 1e-9);
        // Just above the boundary the PT eigenvalue is (1 − 3p)/4.
        let w = dm(gates::werner(0.5));
        assert!((negativity(&w, &cut).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn ppt_examples() {
        let cut = Bipartition::qubits();
        assert_eq!(is_separable_ppt(&bell(), &cut).unwrap().verdict, PptVerdict::Entangled);
        let mut rng = random::rng(3);
        assert_eq!(
            is_separable_ppt(&product(&mut rng), &cut).unwrap().verdict,
            PptVerdict::Separable
        );
        let cut33 = Bipartition::new(TensorShape::new(vec![3, 3]).unwrap(), vec![0]).unwrap();
        assert_eq!(
            is_separable_ppt(&DensityOperator::maximally_mixed(9), &cut33).unwrap().verdict,
            PptVerdict::Inconclusive
        );
    }

    #[test]
    fn mutual_information_examples() {
        let cut = Bipartition::qubits();
        let mut rng = random::rng(4);
        assert!(mutual_information(&product(&mut rng), &cut).unwrap().abs() < 1e-10);
        assert!((mutual_information(&bell(), &cut).unwrap() - 2.0 * LN_2).abs() < 1e-12);
        assert!((mutual_information(&classical(), &cut).unwrap() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn discord_examples() {
        let cut = Bipartition::qubits();
        let o = DiscordOptions::default();
        let mut rng = random::rng(5);
        assert!(discord(&product(&mut rng), &cut, o).unwrap().value.abs() < 1e-9);
        assert!(discord(&classical(), &cut, o).unwrap().value.abs() < 1e-6);
        assert!((discord(&bell(), &cut, o).unwrap().value - LN_2).abs() < 1e-3);
    }

    #[test]
    fn discord_requires_qubit_complement() {
        let cut = Bipartition::new(TensorShape::new(vec![2, 3]).unwrap(), vec![0]).unwrap();
        assert!(matches!(
            discord(&DensityOperator::maximally_mixed(6), &cut, DiscordOptions::default()),
            Err(Error::Unsupported(_))
        ));
        // Measuring the qubit side of a 3×2 cut is supported.
        let cut = Bipartition::new(TensorShape::new(vec![3, 2]).unwrap(), vec![0]).unwrap();
        let v = discord(&DensityOperator::maximally_mixed(6), &cut, DiscordOptions::default()).unwrap();
        assert!(v.value.abs() < 1e-9);
    }

    /// Oracle: isotropic states `F|Φ⁺⟩⟨Φ⁺| + (1−F)(I−|Φ⁺⟩⟨Φ⁺|)/3` are separable for
    /// `F ≤ ½`, and `S(Φ⁺‖σ_F) = −log F`, so the best on a grid is `log 2`.
    #[test]
    fn ree_bell_against_isotropic_grid() {
        let phi = gates::projector(&gates::bell_phi_plus());
        let grid_best = (1..=50)
            .map(|k| {
                let f = 0.5 * k as f64 / 50.0;
                let sigma = &phi * real(f) + (identity(4) - &phi) * real((1.0 - f) / 3.0);
                relative_entropy_of(&phi, &sigma).value()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((grid_best - LN_2).abs() < 1e-12);
        let est = ree_estimate(&bell(), &Bipartition::qubits(), ReeOptions::default()).unwrap();
        assert!((est.bound - grid_best).abs() < 5e-3, "{}", est.bound);
        let sigma = dm(est.sigma.clone());
        assert_ne!(
            is_separable_ppt(&sigma, &Bipartition::qubits()).unwrap().verdict,
            PptVerdict::Entangled
        );
    }

    #[test]
    fn ree_separable_examples() {
        let cut = Bipartition::qubits();
        let o = ReeOptions::default();
        assert!(ree_estimate(&DensityOperator::maximally_mixed(4), &cut, o).unwrap().bound <= 1e-3);
        assert!(ree_estimate(&classical(), &cut, o).unwrap().bound <= 1e-3);
        let mut rng = random::rng(6);
        assert!(ree_estimate(&product(&mut rng), &cut, o).unwrap().bound <= 1e-3);
    }

    #[test]
    fn ree_is_deterministic() {
        let cut = Bipartition::qubits();
        let w = dm(gates::werner(0.7));
        let o = ReeOptions { seed: 9, ..Default::default() };
        let a = ree_estimate(&w, &cut, o).unwrap();
        let b = ree_estimate(&w, &cut, o).unwrap();
        assert_eq!(a.bound.to_bits(), b.bound.to_bits());
    }

    #[test]
    fn reorder_round_trip_on_three_factors() {
        let mut rng = random::rng(7);
        let shape = TensorShape::new(vec![2, 3, 2]).unwrap();
        let cut = Bipartition::new(shape, vec![1]).unwrap();
        let m = random::ginibre(&mut rng, 12, 12);
        let back = reorder_to_native(&reorder_to_split(&m, &cut), &cut);
        assert_eq!(back, m);
    }

    #[test]
    fn functional_names_parse() {
        for name in ["negativity", "log-negativity", "mutual-information", "discord", "ree"] {
            assert_eq!(name.parse::<Functional>().unwrap().name(), name);
        }
        assert!("nope".parse::<Functional>().is_err());
    }
}
