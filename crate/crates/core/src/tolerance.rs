//! Numerical thresholds used across the crate, kept in one record so that
//! every check can be traced back to a single configurable value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Jacobi stops once the off-diagonal Frobenius norm falls below this.
    pub eigen_offdiag: f64,
    pub eigen_max_sweeps: usize,
    /// Eigenvalues closer than this are treated as one eigenspace.
    pub degeneracy_gap: f64,
    /// First eigenvector component above this magnitude fixes the phase.
    pub phase_threshold: f64,
    pub hermitian: f64,
    /// Allowed norm deviation for inputs to projector construction.
    pub normalization: f64,
    pub state_norm: f64,
    /// Pairwise orthogonality residual allowed inside a diagram context.
    pub orthogonality: f64,
    /// Projector distance under which two rays are the same ray.
    pub ray_match: f64,
    pub label_gap: f64,
    pub commutator: f64,
    /// Forbidden-cell probability threshold for the contextuality verdict.
    pub forbidden: f64,
    pub imaginary_residual: f64,
    pub negative_clip: f64,
    pub eq3: f64,
    pub rotation_overlap: f64,
    pub opposite_mass: f64,
    /// Required overlap deficit for the non-rotation unitary witness.
    pub witness_margin: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        eigen_offdiag: 1e-13,
        eigen_max_sweeps: 100,
        degeneracy_gap: 1e-9,
        phase_threshold: 1e-8,
        hermitian: 1e-10,
        normalization: 1e-9,
        state_norm: 1e-12,
        orthogonality: 1e-9,
        ray_match: 1e-8,
        label_gap: 1e-6,
        commutator: 1e-10,
        forbidden: 1e-10,
        imaginary_residual: 1e-12,
        negative_clip: 1e-14,
        eq3: 1e-10,
        rotation_overlap: 1e-9,
        opposite_mass: 1e-10,
        witness_margin: 1e-3,
    };

    pub const KEYS: &'static [&'static str] = &[
        "eigen_offdiag",
        "eigen_max_sweeps",
        "degeneracy_gap",
        "phase_threshold",
        "hermitian",
        "normalization",
        "state_norm",
        "orthogonality",
        "ray_match",
        "label_gap",
        "commutator",
        "forbidden",
        "imaginary_residual",
        "negative_clip",
        "eq3",
        "rotation_overlap",
        "opposite_mass",
        "witness_margin",
    ];

    /// Overrides one threshold by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Config(format!(
                "tolerance `{key}` must be a finite nonnegative number, got {value}"
            )));
        }
        let slot = match key {
            "eigen_max_sweeps" => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(
                        "eigen_max_sweeps must be a positive integer".into(),
                    ));
                }
                self.eigen_max_sweeps = value as usize;
                return Ok(());
            }
            "eigen_offdiag" => &mut self.eigen_offdiag,
            "degeneracy_gap" => &mut self.degeneracy_gap,
            "phase_threshold" => &mut self.phase_threshold,
            "hermitian" => &mut self.hermitian,
            "normalization" => &mut self.normalization,
            "state_norm" => &mut self.state_norm,
            "orthogonality" => &mut self.orthogonality,
            "ray_match" => &mut self.ray_match,
            "label_gap" => &mut self.label_gap,
            "commutator" => &mut self.commutator,
            "forbidden" => &mut self.forbidden,
            "imaginary_residual" => &mut self.imaginary_residual,
            "negative_clip" => &mut self.negative_clip,
            "eq3" => &mut self.eq3,
            "rotation_overlap" => &mut self.rotation_overlap,
            "opposite_mass" => &mut self.opposite_mass,
            "witness_margin" => &mut self.witness_margin,
            other => return Err(Error::UnknownTolerance(other.to_string())),
        };
        *slot = value;
        Ok(())
    }

    /// Parses a `key=value` override as given on the command line.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{spec}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid number in `{spec}`")))?;
        self.set(key.trim(), value)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_by_key() {
        let mut t = Tolerances::default();
        t.apply_override("forbidden=1e-6").unwrap();
        assert_eq!(t.forbidden, 1e-6);
        t.apply_override("eigen_max_sweeps=7").unwrap();
        assert_eq!(t.eigen_max_sweeps, 7);
    }

    #[test]
    fn every_key_is_settable() {
        for key in Tolerances::KEYS {
            let mut t = Tolerances::default();
            t.set(key, 3.0).unwrap();
        }
    }

    #[test]
    fn rejects_bad_overrides() {
        let mut t = Tolerances::default();
        assert!(matches!(
            t.apply_override("nope=1"),
            Err(Error::UnknownTolerance(_))
        ));
        assert!(t.apply_override("forbidden").is_err());
        assert!(t.apply_override("forbidden=abc").is_err());
        assert!(t.apply_override("forbidden=-1").is_err());
    }
}
