//! Spin-1 observables `J(θ, φ)` in spherical coordinates.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unitary_from_generator, ComplexMatrix};

/// Measurement direction: polar angle from the z-axis, azimuth from the
/// x-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// Rejects `theta` outside `[0, π]`; reduces `phi` into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::NonFinite("direction angle".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidPolarAngle(theta));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { theta, phi })
    }

    pub const Z: Direction = Direction {
        theta: 0.0,
        phi: 0.0,
    };

    /// Direction of a nonzero Cartesian vector.
    pub fn from_cartesian(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::ZeroVector);
        }
        let theta = (z / r).clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        Self::new(theta, phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinObservable {
    pub direction: Direction,
    pub matrix: ComplexMatrix,
}

impl SpinObservable {
    /// Equality of observables is by matrix, since antipodal angle pairs
    /// describe the same axis.
    pub fn distance(&self, other: &Self) -> f64 {
        self.matrix.distance(&other.matrix)
    }
}

pub fn spin_observable(d: Direction) -> SpinObservable {
    SpinObservable {
        direction: d,
        matrix: spin_matrix(d.theta, d.phi),
    }
}

/// `J(d)·J(d)`.
pub fn spin_squared(d: Direction) -> ComplexMatrix {
    let j = spin_matrix(d.theta, d.phi);
    &j * &j
}

/// `exp(−i·angle·J(axis))`.
pub fn rotation_operator(axis: Direction, angle: f64) -> Result<ComplexMatrix> {
    unitary_from_generator(&spin_matrix(axis.theta, axis.phi), angle)
}

fn spin_matrix(theta: f64, phi: f64) -> ComplexMatrix {
    let (st, ct) = theta.sin_cos();
    let off = st * FRAC_1_SQRT_2;
    let lower = Complex64::from_polar(off, phi);
    let upper = Complex64::from_polar(off, -phi);
    let zero = Complex64::new(0.0, 0.0);
    ComplexMatrix::from_rows(&[
        [Complex64::new(ct, 0.0), upper, zero],
        [lower, zero, upper],
        [zero, lower, Complex64::new(-ct, 0.0)],
    ])
    .expect("3x3 literal")
}
