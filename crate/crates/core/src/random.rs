//! Seeded samplers for states, unitaries and matrices.

use nalgebra::linalg::QR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{c64, real, CMatrix, CVector};

pub type SimRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for job `index` under a base seed.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(gaussian(rng), gaussian(rng)))
}

pub fn haar_ket<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| c64(gaussian(rng), gaussian(rng)));
    let n = v.norm();
    v / real(n)
}

pub fn haar_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let v = haar_ket(rng, d);
    &v * v.adjoint()
}

/// Hilbert–Schmidt random mixed state `G G* / Tr(G G*)`.
pub fn hs_mixed<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}

/// Haar unitary via QR of a Ginibre matrix with the phase correction on R's diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let z = r[(k, k)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { real(1.0) };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix `(G + G*)/2` scaled by `scale`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> CMatrix {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()) * real(0.5 * scale)
}

/// Random matrix of exact rank `rank` (`rank ≤ d`).
pub fn ranked<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> CMatrix {
    ginibre(rng, d, rank) * ginibre(rng, rank, d)
}
