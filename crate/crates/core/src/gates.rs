//! Standard kets, Pauli matrices and common gates.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::matcore::{c64, identity, real, tensor, CMatrix, CVector};

pub fn i2() -> CMatrix {
    identity(2)
}

pub fn x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)])
}

pub fn y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(0.0), c64(0.0, -1.0), c64(0.0, 1.0), real(0.0)])
}

pub fn z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real(-1.0)])
}

pub fn hadamard() -> CMatrix {
    let s = real(FRAC_1_SQRT_2);
    CMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

/// `diag(1, e^{iπ/4})`.
pub fn t_gate() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            real(1.0),
            real(0.0),
            real(0.0),
            Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
        ],
    )
}

/// CNOT with qubit 0 as control.
pub fn cnot() -> CMatrix {
    let p0 = projector(&basis_ket(2, 0));
    let p1 = projector(&basis_ket(2, 1));
    tensor(&p0, &i2()) + tensor(&p1, &x())
}

pub fn swap(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = real(1.0);
        }
    }
    m
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| real(v)),
    ))
}

/// Single-qubit rotation `exp(−iθ n·σ/2)`.
pub fn rotation(axis: [f64; 3], theta: f64) -> CMatrix {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [nx, ny, nz] = axis.map(|a| a / norm);
    let gen = x() * real(nx) + y() * real(ny) + z() * real(nz);
    i2() * real((theta / 2.0).cos()) - gen * c64(0.0, (theta / 2.0).sin())
}

pub fn basis_ket(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = real(1.0);
    v
}

pub fn ket0() -> CVector {
    basis_ket(2, 0)
}

pub fn ket1() -> CVector {
    basis_ket(2, 1)
}

pub fn ket_plus() -> CVector {
    CVector::from_vec(vec![real(FRAC_1_SQRT_2), real(FRAC_1_SQRT_2)])
}

pub fn ket_minus() -> CVector {
    CVector::from_vec(vec![real(FRAC_1_SQRT_2), real(-FRAC_1_SQRT_2)])
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell_phi_plus() -> CVector {
    let mut v = CVector::zeros(4);
    v[0] = real(FRAC_1_SQRT_2);
    v[3] = real(FRAC_1_SQRT_2);
    v
}

/// Unnormalized maximally entangled vector `Σ_i |i⟩|i⟩`.
pub fn omega(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = real(1.0);
    }
    v
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Werner state `p |Φ⁺⟩⟨Φ⁺| + (1 − p) I/4`.
pub fn werner(p: f64) -> CMatrix {
    projector(&bell_phi_plus()) * real(p) + identity(4) * real((1.0 - p) / 4.0)
}
