//! Dense discrete joint distributions over `(x1, x2, y)` triples and their
//! information quantities.
//!
//! Conventions used throughout the crate:
//!
//! | convention | choice |
//! |---|---|
//! | axis order | `[x1, x2, y]`, sizes `(m, n, k)` |
//! | storage | dense `ndarray::Array3<f64>` |
//! | reported information | bits (log base 2) |
//! | raw KL divergence | nats (natural log) |
//! | `0 * log 0` | contributes 0 (zero-mass cells are skipped) |
//!
//! Entropies, mutual informations, and conditional mutual informations are
//! accumulated in nats with zero-mass terms skipped, then converted once by
//! [`LN_2`]. Conditional mutual information is computed in a single pass over
//! the support using the pointwise ratio
//! `I(A;B|C) = sum p(a,b,c) * ln[ p(a,b,c) p(c) / (p(a,c) p(b,c)) ]`;
//! every factor in the ratio is positive whenever the cell itself has mass,
//! so zero-probability conditioning states never enter the sum.

use ndarray::{Array1, Array2, Array3, Axis};

use crate::error::{Error, Result};

/// Natural log of 2; divides nats into bits.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Tolerance on total mass for a valid distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Tolerance for the consistency check between the two pair marginals:
/// their per-label masses must agree at least this closely.
pub const MARGINAL_CONSISTENCY_TOLERANCE: f64 = 1e-10;

/// Mass above which a cell with a zero reference makes KL divergence
/// undefined rather than ignorable numerical dust.
const KL_SUPPORT_EPSILON: f64 = 1e-12;

/// Support sizes `(m, n, k)` for `(x1, x2, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SupportSizes {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl SupportSizes {
    pub fn new(m: usize, n: usize, k: usize) -> Self {
        assert!(m >= 1 && n >= 1 && k >= 1, "support sizes must be at least 1");
        SupportSizes { m, n, k }
    }

    /// Total cell count `m * n * k`.
    pub fn cells(&self) -> usize {
        self.m * self.n * self.k
    }
}

/// A normalized joint distribution over `(x1, x2, y)`.
///
/// Entries are nonnegative and sum to 1 within [`MASS_TOLERANCE`]; both are
/// checked at construction, so holders of a value can rely on them.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    sizes: SupportSizes,
    mass: Array3<f64>,
}

impl JointDistribution {
    /// Normalize a nonnegative count (or weight) array into a distribution.
    pub fn from_counts(counts: &Array3<f64>) -> Result<Self> {
        let (m, n, k) = counts.dim();
        for ((i, j, y), &v) in counts.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteState { context: "counts" });
            }
            if v < 0.0 {
                return Err(Error::NegativeCount { i, j, y, value: v });
            }
        }
        let total: f64 = counts.sum();
        if total <= 0.0 {
            return Err(Error::AllZeroCounts);
        }
        Ok(JointDistribution {
            sizes: SupportSizes::new(m, n, k),
            mass: counts / total,
        })
    }

    /// Wrap an already-normalized mass array, validating the invariants.
    pub fn from_mass(mass: Array3<f64>) -> Result<Self> {
        let (m, n, k) = mass.dim();
        for ((i, j, y), &v) in mass.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteState { context: "mass" });
            }
            if v < 0.0 {
                return Err(Error::NegativeCount { i, j, y, value: v });
            }
        }
        let sum = mass.sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotNormalized {
                sum,
                tol: MASS_TOLERANCE,
            });
        }
        Ok(JointDistribution {
            sizes: SupportSizes::new(m, n, k),
            mass,
        })
    }

    pub fn sizes(&self) -> SupportSizes {
        self.sizes
    }

    pub fn mass(&self) -> &Array3<f64> {
        &self.mass
    }

    /// The `m x n` slice of mass on label `y`.
    pub fn label_slice(&self, y: usize) -> ndarray::ArrayView2<'_, f64> {
        self.mass.index_axis(Axis(2), y)
    }

    /// Pair marginal over `(x1, x2)`.
    pub fn pair_marginal(&self) -> Array2<f64> {
        self.mass.sum_axis(Axis(2))
    }

    /// Both source-target marginals plus the label marginal.
    pub fn marginals(&self) -> MarginalPair {
        let m1 = self.mass.sum_axis(Axis(1));
        let m2 = self.mass.sum_axis(Axis(0));
        let py = m1.sum_axis(Axis(0));
        MarginalPair { m1, m2, py }
    }

    /// Entropy of the label marginal, in bits.
    pub fn entropy_y(&self) -> f64 {
        let py = self.mass.sum_axis(Axis(0)).sum_axis(Axis(0));
        let nats: f64 = py
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum();
        nats / LN_2
    }

    /// All six information quantities of the joint, in bits.
    pub fn info_profile(&self) -> InfoProfile {
        let marg = self.marginals();
        let pair = self.pair_marginal();
        let p1 = marg.m1.sum_axis(Axis(1)); // p(x1)
        let p2 = marg.m2.sum_axis(Axis(1)); // p(x2)

        let mut mi_joint = 0.0;
        let mut cmi_1 = 0.0;
        let mut cmi_2 = 0.0;
        for ((i, j, y), &v) in self.mass.indexed_iter() {
            if v <= 0.0 {
                continue;
            }
            mi_joint += v * (v / (pair[[i, j]] * marg.py[y])).ln();
            cmi_1 += v * (v * p2[j] / (pair[[i, j]] * marg.m2[[j, y]])).ln();
            cmi_2 += v * (v * p1[i] / (pair[[i, j]] * marg.m1[[i, y]])).ln();
        }

        InfoProfile {
            mi_joint: mi_joint / LN_2,
            mi_1: matrix_mi(&marg.m1) / LN_2,
            mi_2: matrix_mi(&marg.m2) / LN_2,
            cmi_1: cmi_1 / LN_2,
            cmi_2: cmi_2 / LN_2,
            h_y: self.entropy_y(),
        }
    }

    /// `KL(self || other)` in nats.
    ///
    /// Zero-mass cells of `self` contribute 0. A cell where `self` carries
    /// real mass but `other` carries none has no finite divergence and is an
    /// error; mass at or below `1e-12` over a zero reference is treated as
    /// numerical dust and skipped.
    pub fn kl_divergence(&self, other: &JointDistribution) -> Result<f64> {
        if self.sizes != other.sizes {
            return Err(Error::ShapeMismatch {
                left: (self.sizes.m, self.sizes.n, self.sizes.k),
                right: (other.sizes.m, other.sizes.n, other.sizes.k),
            });
        }
        let mut nats = 0.0;
        for ((i, j, y), &p) in self.mass.indexed_iter() {
            if p <= 0.0 {
                continue;
            }
            let q = other.mass[[i, j, y]];
            if q <= 0.0 {
                if p > KL_SUPPORT_EPSILON {
                    return Err(Error::AbsoluteContinuityViolation { i, j, y, mass: p });
                }
                continue;
            }
            nats += p * (p / q).ln();
        }
        Ok(nats)
    }
}

/// Mutual information of a two-way joint matrix, in nats.
fn matrix_mi(joint: &Array2<f64>) -> f64 {
    let a = joint.sum_axis(Axis(1));
    let b = joint.sum_axis(Axis(0));
    let mut nats = 0.0;
    for ((i, j), &v) in joint.indexed_iter() {
        if v > 0.0 {
            nats += v * (v / (a[i] * b[j])).ln();
        }
    }
    nats
}

/// The two source-target marginals `p(x1, y)` and `p(x2, y)` plus the label
/// marginal `p(y)` they share.
///
/// These are exactly the constraints that define the feasible coupling set:
/// every admissible coupling must reproduce both matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPair {
    /// `m x k` matrix `p(x1, y)`.
    pub m1: Array2<f64>,
    /// `n x k` matrix `p(x2, y)`.
    pub m2: Array2<f64>,
    /// Length-`k` label marginal `p(y)`.
    pub py: Array1<f64>,
}

impl MarginalPair {
    /// Build from the two matrices, checking that they describe the same
    /// label marginal within [`MARGINAL_CONSISTENCY_TOLERANCE`].
    pub fn new(m1: Array2<f64>, m2: Array2<f64>) -> Result<Self> {
        if m1.ncols() != m2.ncols() {
            return Err(Error::ShapeMismatch {
                left: (m1.nrows(), 0, m1.ncols()),
                right: (0, m2.nrows(), m2.ncols()),
            });
        }
        for &v in m1.iter().chain(m2.iter()) {
            if !v.is_finite() {
                return Err(Error::NonFiniteState { context: "marginals" });
            }
            if v < 0.0 {
                return Err(Error::NegativeCount {
                    i: 0,
                    j: 0,
                    y: 0,
                    value: v,
                });
            }
        }
        let py1 = m1.sum_axis(Axis(0));
        let py2 = m2.sum_axis(Axis(0));
        let deviation = py1
            .iter()
            .zip(py2.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if deviation > MARGINAL_CONSISTENCY_TOLERANCE {
            return Err(Error::InconsistentMarginals {
                deviation,
                limit: MARGINAL_CONSISTENCY_TOLERANCE,
            });
        }
        Ok(MarginalPair { m1, m2, py: py1 })
    }

    /// Support sizes `(m, n, k)` implied by the matrices.
    pub fn sizes(&self) -> SupportSizes {
        SupportSizes::new(self.m1.nrows(), self.m2.nrows(), self.py.len())
    }

    /// Largest absolute disagreement with another pair, over both matrices.
    pub fn max_abs_diff(&self, other: &MarginalPair) -> f64 {
        let d1 = self
            .m1
            .iter()
            .zip(other.m1.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let d2 = self
            .m2
            .iter()
            .zip(other.m2.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        d1.max(d2)
    }
}

/// Information quantities of a joint distribution, all in bits.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InfoProfile {
    /// `I(X1,X2; Y)`
    pub mi_joint: f64,
    /// `I(X1; Y)`
    pub mi_1: f64,
    /// `I(X2; Y)`
    pub mi_2: f64,
    /// `I(X1; Y | X2)`
    pub cmi_1: f64,
    /// `I(X2; Y | X1)`
    pub cmi_2: f64,
    /// `H(Y)`
    pub h_y: f64,
}
