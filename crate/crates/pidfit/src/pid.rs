//! Assembling the four-part decomposition from a solved coupling.
//!
//! The optimal coupling `Q*` fixes everything at once. Both conditional
//! mutual informations are read off `Q*` directly:
//!
//! ```text
//! U1 = I_Q*(X1; Y | X2)        U2 = I_Q*(X2; Y | X1)
//! S  = I_p(X1,X2; Y) - I_Q*(X1,X2; Y)
//! R  = I_p(X1; Y) - U1
//! ```
//!
//! All couplings in the feasible set share the same marginals `p(x1, y)` and
//! `p(x2, y)`, so the pairwise informations `I(X1; Y)` and `I(X2; Y)` are
//! constants of the set and the two ways of computing redundancy
//! (`I_p(X1;Y) - U1` and `I_p(X2;Y) - U2`) agree up to solver error; the
//! gap between them is reported as a cross-check residual rather than
//! silently averaged away.
//!
//! Contribution scores normalize the unique parts:
//! `C1 = U1 / (U1 + U2)`, `C2 = U2 / (U1 + U2)`. When both unique parts are
//! below `denom_epsilon` (pure-synergy or pure-redundancy inputs, like a
//! parity target) the ratio is undefined; the scores fall back to 0.5 each
//! and the result is flagged degenerate.

use crate::dist::{JointDistribution, LN_2};
use crate::error::{Error, Result};
use crate::solver::Coupling;

/// Unique-part sums below this (in bits) make the contribution ratio
/// meaningless; the scores fall back to an even split.
pub const DEFAULT_DENOM_EPSILON: f64 = 1e-9;

/// Components below the negative of this (in bits) trigger a warning flag;
/// anything negative is clamped to zero for reporting either way.
const NEGATIVE_COMPONENT_TOLERANCE: f64 = 1e-6;

/// The four-part split of `I(X1,X2; Y)` plus derived contribution scores.
/// All information quantities are in bits.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PidResult {
    /// Redundant information, clamped to `[0, inf)`.
    pub redundancy: f64,
    /// Information unique to the first source, clamped.
    pub unique_1: f64,
    /// Information unique to the second source, clamped.
    pub unique_2: f64,
    /// Synergistic information, clamped.
    pub synergy: f64,
    /// `I_p(X1,X2; Y)` of the input distribution.
    pub total_mi: f64,
    /// Normalized contribution of the first source, `U1 / (U1 + U2)`.
    pub c1: f64,
    /// Normalized contribution of the second source, `U2 / (U1 + U2)`.
    pub c2: f64,
    /// True when both unique parts were below the denominator floor and the
    /// contribution scores are the 0.5/0.5 fallback.
    pub degenerate_contributions: bool,
    /// Components before the nonnegativity clamp, for diagnostics.
    pub raw_redundancy: f64,
    pub raw_unique_1: f64,
    pub raw_unique_2: f64,
    pub raw_synergy: f64,
    /// Set when any raw component fell below -1e-6 bits, which points at a
    /// poorly converged solve rather than ordinary float dust.
    pub negative_component_warning: bool,
}

/// Residuals of identities the decomposition must satisfy, in bits.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrossCheck {
    /// `|R + U1 + U2 + S - I_p(X1,X2;Y)|`, using raw components.
    pub sum_residual: f64,
    /// `|R - (I_p(X2;Y) - U2)|`: redundancy recomputed through the other
    /// source must agree.
    pub path_residual: f64,
    /// Max deviation of the coupling's pair marginals from the input's.
    pub feasibility_residual: f64,
}

fn clamp_component(v: f64) -> f64 {
    v.max(0.0)
}

/// Normalize a pair of unique parts into contribution scores.
///
/// Returns `(c1, c2, degenerate)`. Inputs are clamped at zero first so a
/// slightly negative unique part cannot push a score outside `[0, 1]`.
pub fn contributions(unique_1: f64, unique_2: f64, denom_epsilon: f64) -> (f64, f64, bool) {
    let u1 = clamp_component(unique_1);
    let u2 = clamp_component(unique_2);
    let denom = u1 + u2;
    if denom < denom_epsilon {
        (0.5, 0.5, true)
    } else {
        (u1 / denom, u2 / denom, false)
    }
}

/// Split `p`'s total mutual information using an already-solved coupling.
///
/// The coupling must have been solved for `p`'s own pair marginals; a
/// mismatch beyond 1e-8 is rejected rather than producing a decomposition
/// of the wrong distribution.
pub fn decompose(p: &JointDistribution, coupling: &Coupling) -> Result<PidResult> {
    let deviation = p.marginals().max_abs_diff(&coupling.targets);
    if deviation > 1e-8 {
        return Err(Error::InconsistentInputs { deviation });
    }

    let p_profile = p.info_profile();
    let q_profile = coupling.q_star.info_profile();

    let raw_unique_1 = q_profile.cmi_1;
    let raw_unique_2 = q_profile.cmi_2;
    let raw_synergy = p_profile.mi_joint - q_profile.mi_joint;
    let raw_redundancy = p_profile.mi_1 - raw_unique_1;

    let unique_1 = clamp_component(raw_unique_1);
    let unique_2 = clamp_component(raw_unique_2);
    let synergy = clamp_component(raw_synergy);
    let redundancy = clamp_component(raw_redundancy);

    let negative_component_warning = [raw_redundancy, raw_unique_1, raw_unique_2, raw_synergy]
        .iter()
        .any(|&v| v < -NEGATIVE_COMPONENT_TOLERANCE);

    let (c1, c2, degenerate_contributions) =
        contributions(unique_1, unique_2, DEFAULT_DENOM_EPSILON);

    Ok(PidResult {
        redundancy,
        unique_1,
        unique_2,
        synergy,
        total_mi: p_profile.mi_joint,
        c1,
        c2,
        degenerate_contributions,
        raw_redundancy,
        raw_unique_1,
        raw_unique_2,
        raw_synergy,
        negative_component_warning,
    })
}

/// Recompute the identities a valid decomposition must satisfy.
pub fn cross_check(result: &PidResult, p: &JointDistribution, coupling: &Coupling) -> CrossCheck {
    let p_profile = p.info_profile();
    let sum = result.raw_redundancy + result.raw_unique_1 + result.raw_unique_2 + result.raw_synergy;
    let other_path = p_profile.mi_2 - result.raw_unique_2;
    CrossCheck {
        sum_residual: (sum - p_profile.mi_joint).abs(),
        path_residual: (result.raw_redundancy - other_path).abs(),
        feasibility_residual: p.marginals().max_abs_diff(&coupling.targets)
            + crate::solver::max_marginal_deviation(&coupling.q_star, &coupling.targets),
    }
}

/// Convenience wrapper: solve for the coupling and decompose in one call.
pub fn solve_and_decompose(
    p: &JointDistribution,
    cfg: &crate::solver::SolverConfig,
) -> Result<(PidResult, Coupling)> {
    let coupling = crate::solver::solve(p, cfg)?;
    let result = decompose(p, &coupling)?;
    Ok((result, coupling))
}

/// Express a bits value in nats; handy next to solver objectives.
pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolverConfig};
    use crate::synth::{gate_distribution, GateKind};
    use approx::assert_relative_eq;

    fn decompose_gate(kind: GateKind) -> PidResult {
        let p = gate_distribution(kind);
        let coupling = solve(&p, &SolverConfig::default()).unwrap();
        decompose(&p, &coupling).unwrap()
    }

    #[test]
    fn xor_is_pure_synergy_with_even_fallback_scores() {
        let r = decompose_gate(GateKind::Xor);
        assert_relative_eq!(r.synergy, 1.0, epsilon = 1e-9);
        assert!(r.redundancy < 1e-9);
        assert!(r.unique_1 < 1e-9);
        assert!(r.unique_2 < 1e-9);
        assert!(r.degenerate_contributions);
        assert_relative_eq!(r.c1, 0.5);
        assert_relative_eq!(r.c2, 0.5);
        assert!(!r.negative_component_warning);
    }

    #[test]
    fn unique_gates_put_all_information_in_one_component() {
        let r = decompose_gate(GateKind::Unique1);
        assert_relative_eq!(r.unique_1, 1.0, epsilon = 1e-8);
        assert!(r.unique_2 < 1e-8);
        assert!(r.synergy.abs() < 1e-8);
        assert!(r.redundancy.abs() < 1e-8);
        assert_relative_eq!(r.c1, 1.0, epsilon = 1e-7);

        let r = decompose_gate(GateKind::Unique2);
        assert_relative_eq!(r.unique_2, 1.0, epsilon = 1e-8);
        assert_relative_eq!(r.c2, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn redundancy_gate_is_pure_redundancy() {
        let r = decompose_gate(GateKind::Redundancy);
        assert_relative_eq!(r.redundancy, 1.0, epsilon = 1e-8);
        assert!(r.unique_1 < 1e-8);
        assert!(r.unique_2 < 1e-8);
        assert!(r.synergy.abs() < 1e-8);
        assert!(r.degenerate_contributions);
    }

    #[test]
    fn and_splits_into_redundancy_and_synergy() {
        let r = decompose_gate(GateKind::And);
        // Derived optimum: R = I(X1;Y) = 0.3112781..., S = 0.5, U1 = U2 = 0.
        // At the reference iteration budget the solve stops ~5e-5 short.
        assert_relative_eq!(r.redundancy, 0.3112781244591328, epsilon = 1e-3);
        assert_relative_eq!(r.synergy, 0.5, epsilon = 1e-3);
        assert!(r.unique_1 < 1e-3);
        assert!(r.unique_2 < 1e-3);
        assert_relative_eq!(r.total_mi, 0.8112781244591328, epsilon = 1e-12);
        assert!(!r.negative_component_warning);
    }

    #[test]
    fn components_sum_to_total_mutual_information() {
        // The residual of the sum identity tracks the coupling's marginal
        // deviation, so gates that converge in one iteration sit at float
        // dust while the slow boundary case inherits its 5e-5 feasibility
        // error.
        for kind in GateKind::ALL {
            let p = gate_distribution(kind);
            let coupling = solve(&p, &SolverConfig::default()).unwrap();
            let r = decompose(&p, &coupling).unwrap();
            let sum = r.raw_redundancy + r.raw_unique_1 + r.raw_unique_2 + r.raw_synergy;
            let slack = 1e-9 + 10.0 * coupling.trace.final_marginal_err();
            assert!(
                (sum - r.total_mi).abs() < slack,
                "{:?}: sum {} vs total {}",
                kind,
                sum,
                r.total_mi
            );
            if kind != GateKind::And {
                assert_relative_eq!(sum, r.total_mi, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn cross_check_residuals_are_small_on_gates() {
        for kind in GateKind::ALL {
            let p = gate_distribution(kind);
            let coupling = solve(&p, &SolverConfig::default()).unwrap();
            let r = decompose(&p, &coupling).unwrap();
            let check = cross_check(&r, &p, &coupling);
            assert!(check.sum_residual < 1e-3, "{:?}: {:?}", kind, check);
            assert!(check.path_residual < 1e-3, "{:?}: {:?}", kind, check);
            assert!(check.feasibility_residual < 1e-3, "{:?}: {:?}", kind, check);
            if kind != GateKind::And {
                assert!(check.sum_residual < 1e-9, "{:?}: {:?}", kind, check);
            }
        }
    }

    #[test]
    fn contributions_normalize_and_flag_degeneracy() {
        let (c1, c2, degenerate) = contributions(0.3, 0.1, DEFAULT_DENOM_EPSILON);
        assert_relative_eq!(c1, 0.75);
        assert_relative_eq!(c2, 0.25);
        assert!(!degenerate);

        let (c1, c2, degenerate) = contributions(0.0, 0.0, DEFAULT_DENOM_EPSILON);
        assert_relative_eq!(c1, 0.5);
        assert_relative_eq!(c2, 0.5);
        assert!(degenerate);

        // Negative dust clamps to zero instead of flipping the ratio sign.
        let (c1, c2, degenerate) = contributions(-1e-12, 0.2, DEFAULT_DENOM_EPSILON);
        assert_relative_eq!(c1, 0.0);
        assert_relative_eq!(c2, 1.0);
        assert!(!degenerate);
    }

    #[test]
    fn decompose_rejects_a_coupling_for_different_marginals() {
        let p = gate_distribution(GateKind::Xor);
        let other = gate_distribution(GateKind::Unique1);
        let coupling = solve(&other, &SolverConfig::default()).unwrap();
        let err = decompose(&p, &coupling).unwrap_err();
        assert!(matches!(err, Error::InconsistentInputs { .. }));
    }
}
