//! Maximal Kochen-Specker operators built from squared spin-1 observables,
//! and the measurement contexts they define.
//!
//! For labels `(f, s, t)` and azimuths `(a₁, a₂)` the operator is
//!
//! ```text
//! ½[(f+s−t)·J²(π/2, a₁) + (f−s+t)·J²(π/2, a₂) + (s+t−f)·J²(0, 0)]
//! ```
//!
//! whose spectrum is exactly `{f, s, t}`. The two instances drawn in the
//! interlinked-context diagram use azimuths `(0, π/2)` ([`C_RED`]) and
//! `(π/4, 3π/4)` ([`C_PRIME_BLUE`]).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, projector, ComplexMatrix, StateVector};
use crate::spin::{spin_squared, Direction};
use crate::tolerance::Tolerances;

/// Azimuth pair of the red context.
pub const C_RED: (f64, f64) = (0.0, FRAC_PI_2);
/// Azimuth pair of the blue context.
pub const C_PRIME_BLUE: (f64, f64) = (FRAC_PI_4, 3.0 * FRAC_PI_4);

/// Three pairwise distinct eigenvalue labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSLabels {
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

impl KSLabels {
    pub fn new(first: f64, second: f64, third: f64) -> Result<Self> {
        Self::with_gap(first, second, third, Tolerances::DEFAULT.label_gap)
    }

    pub fn with_gap(first: f64, second: f64, third: f64, min_gap: f64) -> Result<Self> {
        let labels = Self {
            first,
            second,
            third,
        };
        if labels.as_array().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("label".into()));
        }
        let gap = labels.min_gap();
        if gap < min_gap {
            return Err(Error::LabelGap {
                gap,
                required: min_gap,
            });
        }
        Ok(labels)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.first, self.second, self.third]
    }

    pub fn min_gap(&self) -> f64 {
        let [a, b, c] = self.as_array();
        (a - b).abs().min((b - c).abs()).min((a - c).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSOperator {
    pub labels: KSLabels,
    /// `None` for operators wrapped from an arbitrary Hermitian matrix.
    pub azimuth_pair: Option<(f64, f64)>,
    pub matrix: ComplexMatrix,
}

impl KSOperator {
    /// Wraps a nondegenerate Hermitian 3x3 matrix; the labels are its
    /// eigenvalues in ascending order.
    pub fn from_hermitian(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != 3 || matrix.cols() != 3 {
            return Err(Error::Dimension("Kochen-Specker operators are 3x3".into()));
        }
        let eig = hermitian_eigen(&matrix)?;
        let [a, b, c] = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        let labels = KSLabels::new(a, b, c)?;
        Ok(Self {
            labels,
            azimuth_pair: None,
            matrix,
        })
    }

    /// The three squared-spin building blocks, in formula order.
    pub fn building_blocks(&self) -> Option<[ComplexMatrix; 3]> {
        self.azimuth_pair.map(building_blocks)
    }
}

/// Rank-one projectors of three orthonormal rays, each tagged with the
/// outcome value it stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub rays: Vec<StateVector>,
    pub labels: Vec<f64>,
}

impl Context {
    /// Checks orthonormality and label distinctness.
    pub fn new(rays: Vec<StateVector>, labels: Vec<f64>) -> Result<Self> {
        if rays.len() != 3 || labels.len() != 3 {
            return Err(Error::Dimension("a context has exactly three rays".into()));
        }
        if rays.iter().any(|r| r.dim() != 3) {
            return Err(Error::Dimension("context rays live in dimension 3".into()));
        }
        let tol = 1e-10;
        for (i, a) in rays.iter().enumerate() {
            let deviation = a.norm_deviation();
            if deviation > tol {
                return Err(Error::NotNormalized { deviation });
            }
            for b in &rays[i + 1..] {
                let overlap = a.inner(b).norm();
                if overlap > tol {
                    return Err(Error::Dimension(format!(
                        "context rays not orthogonal (overlap {overlap:e})"
                    )));
                }
            }
        }
        KSLabels::new(labels[0], labels[1], labels[2])?;
        Ok(Self { rays, labels })
    }

    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        self.rays
            .iter()
            .map(|r| projector(r).expect("context rays are normalized"))
            .collect()
    }

    /// Index of the ray matching `ray` by projector distance.
    pub fn position_of(&self, ray: &StateVector, tol: f64) -> Option<usize> {
        let target = projector(ray).ok()?;
        self.projectors()
            .iter()
            .position(|p| p.distance(&target) < tol)
    }
}

pub fn ks_operator(labels: KSLabels, azimuth_pair: (f64, f64)) -> Result<KSOperator> {
    if !azimuth_pair.0.is_finite() || !azimuth_pair.1.is_finite() {
        return Err(Error::NonFinite("azimuth".into()));
    }
    // Re-check so hand-built label records cannot bypass the gap rule.
    let labels = KSLabels::new(labels.first, labels.second, labels.third)?;
    let [f, s, t] = labels.as_array();
    let [b1, b2, b3] = building_blocks(azimuth_pair);
    let sum = &(&b1.scale_real(f + s - t) + &b2.scale_real(f - s + t)) + &b3.scale_real(s + t - f);
    Ok(KSOperator {
        labels,
        azimuth_pair: Some(azimuth_pair),
        matrix: sum.scale_real(0.5),
    })
}

/// Eigenrays of the operator, ordered to follow its labels: `rays[k]` is the
/// ray whose outcome is the `k`-th label.
pub fn context_of(op: &KSOperator) -> Result<Context> {
    let eig = hermitian_eigen(&op.matrix)?;
    let gap = eig.min_gap();
    if gap < Tolerances::DEFAULT.degeneracy_gap {
        return Err(Error::DegenerateSpectrum { gap });
    }
    let labels = op.labels.as_array();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| labels[a].total_cmp(&labels[b]));
    // order[k] is the label index holding the k-th smallest value, which
    // pairs with the k-th ascending eigenvalue.
    let mut rays = vec![StateVector::basis(3, 0); 3];
    for (rank, &label_idx) in order.iter().enumerate() {
        rays[label_idx] = eig.eigenvectors[rank].clone();
    }
    Context::new(rays, labels.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutationReport {
    /// `(i, j, ‖[Bᵢ, Bⱼ]‖_F)` for each pair of building blocks.
    pub commutators: Vec<(usize, usize, f64)>,
    /// `‖B − Σₖ ⟨vₖ|B|vₖ⟩ Pₖ‖_F` per block: zero iff the block is
    /// diagonal in the operator's eigenbasis.
    pub function_residuals: Vec<f64>,
    pub passed: bool,
}

/// Checks that the operator's building blocks commute pairwise and are
/// each functions of the operator itself. Wrapped operators have no
/// building blocks and pass trivially.
pub fn commuting_within_context(op: &KSOperator) -> Result<CommutationReport> {
    let tol = Tolerances::DEFAULT.commutator;
    let Some(blocks) = op.building_blocks() else {
        return Ok(CommutationReport {
            commutators: vec![],
            function_residuals: vec![],
            passed: true,
        });
    };
    let mut commutators = Vec::new();
    for i in 0..3 {
        for j in (i + 1)..3 {
            commutators.push((i, j, commutator_norm(&blocks[i], &blocks[j])));
        }
    }
    let context = context_of(op)?;
    let projectors = context.projectors();
    let function_residuals: Vec<f64> = blocks
        .iter()
        .map(|b| {
            let mut diag = ComplexMatrix::zeros(3, 3);
            for (ray, p) in context.rays.iter().zip(&projectors) {
                diag = &diag + &p.scale(b.expectation(ray));
            }
            b.distance(&diag)
        })
        .collect();
    let passed =
        commutators.iter().all(|&(_, _, n)| n < tol) && function_residuals.iter().all(|&r| r < tol);
    Ok(CommutationReport {
        commutators,
        function_residuals,
        passed,
    })
}

pub fn commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.commutator(b).frobenius_norm()
}

fn building_blocks((a1, a2): (f64, f64)) -> [ComplexMatrix; 3] {
    let equator = |phi| Direction::new(FRAC_PI_2, phi).expect("finite azimuth");
    [
        spin_squared(equator(a1)),
        spin_squared(equator(a2)),
        spin_squared(Direction::Z),
    ]
}
