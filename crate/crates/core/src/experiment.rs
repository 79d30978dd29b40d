//! The two-particle experiment: spin-one singlet, exact joint Born-rule
//! distributions for a pair of contexts, the trace-form expectation value,
//! and a seeded coincidence sampler.
//!
//! Side 1 measures the red context `C`, side 2 the blue context `C′`
//! unless the caller asks for the swapped assignment. Row and column `k`
//! of every table correspond to the `k`-th label of the respective
//! operator, so cell `(0, 0)` is the shared-ray coincidence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ks::{context_of, ks_operator, Context, KSLabels, KSOperator, C_PRIME_BLUE, C_RED};
use crate::linalg::{hermitian_eigen, kron, ComplexMatrix, StateVector};
use crate::spin::{rotation_operator, spin_observable, Direction};
use crate::tolerance::Tolerances;

/// Name recorded in every tally.
pub const RNG_ALGORITHM: &str =
    "ChaCha8Rng::seed_from_u64 (rand_chacha 0.3), u = (next_u64 >> 11) * 2^-53";

/// Confidence used for the zero-count upper bound on forbidden cells.
pub const ZERO_COUNT_CONFIDENCE: f64 = 0.999;

/// Forbidden coincidences: α with ε or ζ, β or γ with δ.
pub const FORBIDDEN_CELLS: [(usize, usize); 4] = [(0, 1), (0, 2), (1, 0), (2, 0)];
pub const SHARED_CELL: (usize, usize) = (0, 0);
pub const CROSS_CELLS: [(usize, usize); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];

const SIDE1_NAMES: [&str; 3] = ["alpha", "beta", "gamma"];
const SIDE2_NAMES: [&str; 3] = ["delta", "epsilon", "zeta"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletState {
    vector: StateVector,
}

impl SingletState {
    pub fn vector(&self) -> &StateVector {
        &self.vector
    }
}

/// `(1/√3)(0, 0, 1, 0, −1, 0, 1, 0, 0)` in the `(+, 0, −)⊗(+, 0, −)` basis.
pub fn singlet_state() -> SingletState {
    let a = 1.0 / 3.0_f64.sqrt();
    SingletState {
        vector: StateVector::from_real(&[0.0, 0.0, a, 0.0, -a, 0.0, a, 0.0, 0.0]),
    }
}

/// `(1/√3)(−|00⟩ + |−+⟩ + |+−⟩)` assembled with Kronecker products.
pub fn singlet_from_kets() -> StateVector {
    let plus = StateVector::basis(3, 0);
    let zero = StateVector::basis(3, 1);
    let minus = StateVector::basis(3, 2);
    let a = 1.0 / 3.0_f64.sqrt();
    let terms = [
        (-a, zero.kron(&zero)),
        (a, minus.kron(&plus)),
        (a, plus.kron(&minus)),
    ];
    let amps = (0..9)
        .map(|k| {
            terms
                .iter()
                .map(|(w, v)| v.amplitudes()[k] * *w)
                .sum::<Complex64>()
        })
        .collect();
    StateVector::new(amps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub side1_labels: [f64; 3],
    pub side2_labels: [f64; 3],
    /// `probabilities[i][j]` = P(side 1 gives label i, side 2 gives label j).
    pub probabilities: [[f64; 3]; 3],
}

impl JointDistribution {
    /// Validates a hand-built table: tiny negatives are clipped to zero,
    /// larger ones rejected, and the total must be 1 within 1e−10.
    pub fn new(
        side1_labels: [f64; 3],
        side2_labels: [f64; 3],
        probabilities: [[f64; 3]; 3],
    ) -> Result<Self> {
        let probabilities = clip_negatives(probabilities, Tolerances::DEFAULT.negative_clip)?;
        let total: f64 = probabilities.iter().flatten().sum();
        if !total.is_finite() || (total - 1.0).abs() >= 1e-10 {
            return Err(Error::Config(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            side1_labels,
            side2_labels,
            probabilities,
        })
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().flatten().sum()
    }

    pub fn side1_marginal(&self) -> [f64; 3] {
        self.probabilities.map(|row| row.iter().sum())
    }

    pub fn side2_marginal(&self) -> [f64; 3] {
        std::array::from_fn(|j| self.probabilities.iter().map(|row| row[j]).sum())
    }

    /// `Σᵢⱼ P(i, j)·label₁(i)·label₂(j)`.
    pub fn correlation(&self) -> f64 {
        let mut acc = 0.0;
        for (i, row) in self.probabilities.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                acc += p * self.side1_labels[i] * self.side2_labels[j];
            }
        }
        acc
    }

    /// Exchanges the two sides.
    pub fn transposed(&self) -> Self {
        Self {
            side1_labels: self.side2_labels,
            side2_labels: self.side1_labels,
            probabilities: std::array::from_fn(|i| {
                std::array::from_fn(|j| self.probabilities[j][i])
            }),
        }
    }
}

/// `P(i, j) = ⟨s|(Pᵢ ⊗ Qⱼ)|s⟩`.
pub fn joint_distribution(
    c1: &Context,
    c2: &Context,
    s: &SingletState,
) -> Result<JointDistribution> {
    let tol = Tolerances::DEFAULT;
    let p1 = c1.projectors();
    let p2 = c2.projectors();
    let mut probabilities = [[0.0; 3]; 3];
    for (i, pi) in p1.iter().enumerate() {
        for (j, qj) in p2.iter().enumerate() {
            let value = kron(pi, qj).expectation(&s.vector);
            if value.im.abs() > tol.imaginary_residual {
                return Err(Error::ImaginaryResidual(value.im.abs()));
            }
            probabilities[i][j] = value.re;
        }
    }
    let probabilities = clip_negatives(probabilities, tol.negative_clip)?;
    let labels = |c: &Context| [c.labels[0], c.labels[1], c.labels[2]];
    Ok(JointDistribution {
        side1_labels: labels(c1),
        side2_labels: labels(c2),
        probabilities,
    })
}

/// The contexts of `C(labels1)` and `C′(labels2)`.
pub fn interlinked_contexts(labels1: KSLabels, labels2: KSLabels) -> Result<(Context, Context)> {
    let red = context_of(&ks_operator(labels1, C_RED)?)?;
    let blue = context_of(&ks_operator(labels2, C_PRIME_BLUE)?)?;
    Ok((red, blue))
}

/// Exact table for the interlinked contexts. With `swap`, side 1 measures
/// `C′` and side 2 measures `C`.
pub fn interlinked_distribution(
    labels1: KSLabels,
    labels2: KSLabels,
    swap: bool,
) -> Result<JointDistribution> {
    let (red, blue) = interlinked_contexts(labels1, labels2)?;
    let s = singlet_state();
    if swap {
        joint_distribution(&blue, &red, &s)
    } else {
        joint_distribution(&red, &blue, &s)
    }
}

/// `Tr{|s⟩⟨s| · (op1 ⊗ op2)}`.
pub fn expectation_trace(op1: &KSOperator, op2: &KSOperator, s: &SingletState) -> Result<f64> {
    let column = ComplexMatrix::column(&s.vector);
    let rho = &column * &column.adjoint();
    let value = (&rho * &kron(&op1.matrix, &op2.matrix)).trace();
    if value.im.abs() > Tolerances::DEFAULT.imaginary_residual {
        return Err(Error::ImaginaryResidual(value.im.abs()));
    }
    Ok(value.re)
}

/// `(1/6)[2αδ + (β + γ)(ε + ζ)]`.
pub fn expectation_closed_form(l1: KSLabels, l2: KSLabels) -> f64 {
    (2.0 * l1.first * l2.first + (l1.second + l1.third) * (l2.second + l2.third)) / 6.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: String,
    pub side1: usize,
    pub side2: usize,
    pub side1_label: f64,
    pub side2_label: f64,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "non-contextual prediction confirmed")]
    Confirmed,
    #[serde(rename = "non-contextual prediction violated")]
    Violated,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Confirmed => "non-contextual prediction confirmed",
            Verdict::Violated => "non-contextual prediction violated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualityReport {
    pub forbidden: Vec<CellReport>,
    pub shared: CellReport,
    pub allowed_cross: Vec<CellReport>,
    pub max_forbidden: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// Upper confidence bound on each forbidden probability when no
    /// forbidden coincidence was observed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forbidden_upper_bound: Option<f64>,
    pub verdict: Verdict,
}

impl ContextualityReport {
    pub fn confirmed(&self) -> bool {
        self.verdict == Verdict::Confirmed
    }
}

/// Forbidden-cell mass of an exact distribution whose rows follow `C` and
/// columns follow `C′`.
pub fn contextuality_report(d: &JointDistribution) -> ContextualityReport {
    contextuality_report_with(d, &Tolerances::DEFAULT)
}

pub fn contextuality_report_with(d: &JointDistribution, tol: &Tolerances) -> ContextualityReport {
    let cell = |(i, j): (usize, usize)| CellReport {
        cell: format!("{}-{}", SIDE1_NAMES[i], SIDE2_NAMES[j]),
        side1: i,
        side2: j,
        side1_label: d.side1_labels[i],
        side2_label: d.side2_labels[j],
        probability: d.probabilities[i][j],
        count: None,
    };
    let forbidden: Vec<CellReport> = FORBIDDEN_CELLS.iter().copied().map(cell).collect();
    let max_forbidden = forbidden.iter().map(|c| c.probability).fold(0.0, f64::max);
    let verdict = if forbidden.iter().all(|c| c.probability < tol.forbidden) {
        Verdict::Confirmed
    } else {
        Verdict::Violated
    };
    ContextualityReport {
        forbidden,
        shared: cell(SHARED_CELL),
        allowed_cross: CROSS_CELLS.iter().copied().map(cell).collect(),
        max_forbidden,
        threshold: tol.forbidden,
        shots: None,
        forbidden_upper_bound: None,
        verdict,
    }
}

/// Empirical counterpart: confirmed iff no forbidden coincidence was
/// counted. With zero counts in `n` shots the one-sided upper bound on a
/// forbidden probability at 99.9% confidence is `−ln(0.001)/n`.
pub fn contextuality_report_from_tally(t: &CoincidenceTally) -> ContextualityReport {
    let freq = t.frequencies();
    let cell = |(i, j): (usize, usize)| CellReport {
        cell: format!("{}-{}", SIDE1_NAMES[i], SIDE2_NAMES[j]),
        side1: i,
        side2: j,
        side1_label: t.side1_labels[i],
        side2_label: t.side2_labels[j],
        probability: freq[i][j],
        count: Some(t.counts[i][j]),
    };
    let forbidden: Vec<CellReport> = FORBIDDEN_CELLS.iter().copied().map(cell).collect();
    let zero = forbidden.iter().all(|c| c.count == Some(0));
    ContextualityReport {
        max_forbidden: forbidden.iter().map(|c| c.probability).fold(0.0, f64::max),
        forbidden,
        shared: cell(SHARED_CELL),
        allowed_cross: CROSS_CELLS.iter().copied().map(cell).collect(),
        threshold: 0.0,
        shots: Some(t.shots),
        forbidden_upper_bound: zero.then(|| -(1.0 - ZERO_COUNT_CONFIDENCE).ln() / t.shots as f64),
        verdict: if zero {
            Verdict::Confirmed
        } else {
            Verdict::Violated
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// `P(j | side 1 gave its first label)`.
    pub side2_given_shared: [f64; 3],
    /// `P(i | side 2 gave its first label)`.
    pub side1_given_shared: [f64; 3],
    pub passed: bool,
}

/// Checks that an outcome on the shared ray fixes the partner's outcome on
/// that ray with certainty, in both directions.
pub fn uniqueness_report(d: &JointDistribution, tol: f64) -> UniquenessReport {
    let row = d.probabilities[0];
    let row_total: f64 = row.iter().sum();
    let col: [f64; 3] = std::array::from_fn(|i| d.probabilities[i][0]);
    let col_total: f64 = col.iter().sum();
    let side2_given_shared = row.map(|p| p / row_total);
    let side1_given_shared = col.map(|p| p / col_total);
    let degenerate =
        |cond: &[f64; 3]| (cond[0] - 1.0).abs() < tol && cond[1].abs() < tol && cond[2].abs() < tol;
    UniquenessReport {
        passed: degenerate(&side2_given_shared) && degenerate(&side1_given_shared),
        side2_given_shared,
        side1_given_shared,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceTally {
    pub algorithm: String,
    pub seed: u64,
    pub streams: u64,
    pub shots: u64,
    pub side1_labels: [f64; 3],
    pub side2_labels: [f64; 3],
    pub counts: [[u64; 3]; 3],
}

impl CoincidenceTally {
    pub fn frequencies(&self) -> [[f64; 3]; 3] {
        self.counts
            .map(|row| row.map(|c| c as f64 / self.shots as f64))
    }

    /// Pearson statistic over cells with expected probability above 1e-12;
    /// returns `(statistic, degrees of freedom)`.
    pub fn chi_square(&self, d: &JointDistribution) -> (f64, usize) {
        let mut stat = 0.0;
        let mut cells: usize = 0;
        for i in 0..3 {
            for j in 0..3 {
                let p = d.probabilities[i][j];
                if p > 1e-12 {
                    let expected = p * self.shots as f64;
                    let diff = self.counts[i][j] as f64 - expected;
                    stat += diff * diff / expected;
                    cells += 1;
                }
            }
        }
        (stat, cells.saturating_sub(1))
    }
}

/// Inverse-CDF sampler over the nine cells in row-major order.
struct CellSampler {
    cdf: [f64; 9],
    last_nonzero: usize,
}

impl CellSampler {
    fn new(d: &JointDistribution) -> Self {
        let flat: Vec<f64> = d.probabilities.iter().flatten().copied().collect();
        let total: f64 = flat.iter().sum();
        let mut cdf = [0.0; 9];
        let mut acc = 0.0;
        for (k, p) in flat.iter().enumerate() {
            acc += p;
            cdf[k] = acc / total;
        }
        let last_nonzero = flat.iter().rposition(|&p| p > 0.0).unwrap_or(8);
        Self { cdf, last_nonzero }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = unit(rng);
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.last_nonzero)
    }

    fn run(&self, seed: u64, stream: u64, shots: u64) -> [[u64; 3]; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut counts = [[0u64; 3]; 3];
        for _ in 0..shots {
            let k = self.draw(&mut rng);
            counts[k / 3][k % 3] += 1;
        }
        counts
    }
}

pub fn sample(d: &JointDistribution, shots: u64, seed: u64) -> Result<CoincidenceTally> {
    sample_parallel(d, shots, seed, 1)
}

/// Splits `shots` across `streams` ChaCha streams of the same seed (the
/// first `shots % streams` streams take one extra shot), runs them on
/// separate threads and merges the counts. One stream is the sequential
/// sampler.
pub fn sample_parallel(
    d: &JointDistribution,
    shots: u64,
    seed: u64,
    streams: u64,
) -> Result<CoincidenceTally> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if streams == 0 {
        return Err(Error::Config("streams must be positive".into()));
    }
    let sampler = CellSampler::new(d);
    let base = shots / streams;
    let extra = shots % streams;
    let per_stream: Vec<[[u64; 3]; 3]> = if streams == 1 {
        vec![sampler.run(seed, 0, shots)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..streams)
                .map(|k| {
                    let n = base + u64::from(k < extra);
                    let sampler = &sampler;
                    scope.spawn(move || sampler.run(seed, k, n))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler thread panicked"))
                .collect()
        })
    };
    let mut counts = [[0u64; 3]; 3];
    for part in per_stream {
        for i in 0..3 {
            for j in 0..3 {
                counts[i][j] += part[i][j];
            }
        }
    }
    Ok(CoincidenceTally {
        algorithm: RNG_ALGORITHM.to_string(),
        seed,
        streams,
        shots,
        side1_labels: d.side1_labels,
        side2_labels: d.side2_labels,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OppositeOutcomesReport {
    pub theta: f64,
    pub phi: f64,
    /// Spin projections `m` of the outcome rays, ascending.
    pub labels: [f64; 3],
    pub probabilities: [[f64; 3]; 3],
    /// Total probability on cells with `m₁ + m₂ ≠ 0`.
    pub non_opposite_mass: f64,
    /// `P(m, −m)` for `m = −1, 0, 1`.
    pub opposite_cells: [f64; 3],
    pub passed: bool,
}

/// Measures the spin along the same direction on both particles.
pub fn opposite_outcomes_check(
    d: Direction,
    s: &SingletState,
    tol: &Tolerances,
) -> Result<OppositeOutcomesReport> {
    let eig = hermitian_eigen(&spin_observable(d).matrix)?;
    let labels = [-1.0, 0.0, 1.0];
    for (got, want) in eig.eigenvalues.iter().zip(labels) {
        if (got - want).abs() > 1e-10 {
            return Err(Error::Config(format!(
                "spin observable eigenvalue {got} does not match {want}"
            )));
        }
    }
    let ctx = Context::new(eig.eigenvectors, labels.to_vec())?;
    let dist = joint_distribution(&ctx, &ctx, s)?;
    let mut non_opposite_mass = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i + j != 2 {
                non_opposite_mass += dist.probabilities[i][j];
            }
        }
    }
    Ok(OppositeOutcomesReport {
        theta: d.theta(),
        phi: d.phi(),
        labels,
        opposite_cells: std::array::from_fn(|i| dist.probabilities[i][2 - i]),
        probabilities: dist.probabilities,
        non_opposite_mass,
        passed: non_opposite_mass < tol.opposite_mass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationInvarianceReport {
    pub theta: f64,
    pub phi: f64,
    pub angle: f64,
    /// `|⟨s|(U⊗U)|s⟩|` for the spatial rotation.
    pub overlap: f64,
    pub deviation: f64,
    pub witness: String,
    /// Same overlap for a unitary that is not a rotation.
    pub witness_overlap: f64,
    pub passed: bool,
}

/// `|⟨s|(U⊗U)|s⟩|`.
pub fn overlap_under(u: &ComplexMatrix, s: &SingletState) -> f64 {
    kron(u, u).expectation(&s.vector).norm()
}

/// The non-rotation witness `diag(1, e^{i}, 1)`.
pub fn witness_unitary() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&[
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, 1.0),
        Complex64::new(1.0, 0.0),
    ])
}

pub fn rotation_invariance_check(
    axis: Direction,
    angle: f64,
    s: &SingletState,
    tol: &Tolerances,
) -> Result<RotationInvarianceReport> {
    let u = rotation_operator(axis, angle)?;
    let overlap = overlap_under(&u, s);
    let deviation = (overlap - 1.0).abs();
    let witness_overlap = overlap_under(&witness_unitary(), s);
    Ok(RotationInvarianceReport {
        theta: axis.theta(),
        phi: axis.phi(),
        angle,
        overlap,
        deviation,
        witness: "diag(1, e^i, 1)".into(),
        witness_overlap,
        passed: deviation < tol.rotation_overlap && witness_overlap < 1.0 - tol.witness_margin,
    })
}

/// Draws a direction uniformly in `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
pub fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
    let theta = unit(rng) * PI;
    let phi = unit(rng) * 2.0 * PI;
    Direction::new(theta, phi).expect("angles in range")
}

/// Draws labels uniformly from `[lo, hi]`, rejecting triples with a
/// pairwise gap below `min_gap`.
pub fn random_labels(rng: &mut ChaCha8Rng, lo: f64, hi: f64, min_gap: f64) -> KSLabels {
    loop {
        let mut draw = || lo + (hi - lo) * unit(rng);
        let (a, b, c) = (draw(), draw(), draw());
        if let Ok(l) = KSLabels::with_gap(a, b, c, min_gap) {
            return l;
        }
    }
}

/// Uniform draw in `[0, 1)` with 53 random bits.
pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn clip_negatives(mut p: [[f64; 3]; 3], clip: f64) -> Result<[[f64; 3]; 3]> {
    for (i, row) in p.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite("probability".into()));
            }
            if *v < 0.0 {
                if *v < -clip {
                    return Err(Error::NegativeProbability {
                        row: i,
                        col: j,
                        value: *v,
                    });
                }
                *v = 0.0;
            }
        }
    }
    Ok(p)
}
