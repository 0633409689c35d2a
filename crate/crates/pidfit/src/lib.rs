//! Partial information decomposition of a discrete target against two
//! sources, via alternating KL projections.
//!
//! Given a joint distribution `p(x1, x2, y)`, the crate splits the total
//! mutual information `I(X1,X2; Y)` into four nonnegative parts:
//!
//! * `R`  - redundant information both sources carry about the target,
//! * `U1` - information unique to the first source,
//! * `U2` - information unique to the second source,
//! * `S`  - synergy only the pair carries,
//!
//! with `R + U1 + U2 + S = I(X1,X2; Y)`. The optimizing coupling is found by
//! alternating KL projections with log-domain Sinkhorn inner loops
//! ([`solver`]), certified against a brute-force grid search on small
//! supports ([`oracle`]), and the unique components are normalized into
//! per-source contribution scores `C1`, `C2` ([`pid`]). Continuous
//! embedding dumps are turned into discrete supports by seeded k-means or
//! histogram binning ([`discretize`]).
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --example gate_pid              # five logic gates, decomposed
//! cargo run --example solver_convergence    # objective/feasibility traces
//! cargo run --example oracle_certification  # solver vs. brute-force grid
//! cargo run --example fusion_contributions  # Gaussian fusion rules -> C1/C2
//! cargo run --example embedding_pipeline    # embeddings -> labels -> PID
//! cargo run --example layerwise_trend       # per-layer contribution trend
//! cargo run --example custom_counts         # build a joint from raw counts
//! ```
//!
//! The same workflows are scriptable through the thin `pidfit` binary
//! (`gates`, `fusion`, `analyze`, `layers`, `bench` subcommands).

pub mod commands;
pub mod discretize;
pub mod dist;
pub mod error;
pub mod io;
pub mod oracle;
pub mod pid;
pub mod report;
pub mod solver;
pub mod synth;

pub use discretize::{
    histogram_assign, joint_counts, kmeans_assign, DiscretizeConfig, EmbeddingMatrix, LabelVector,
};
pub use dist::{InfoProfile, JointDistribution, MarginalPair, SupportSizes, LN_2};
pub use error::{Error, Result};
pub use oracle::{certify, grid_solve, Certification, GridOracleConfig, OracleSolution};
pub use pid::{contributions, cross_check, decompose, solve_and_decompose, CrossCheck, PidResult};
pub use solver::{solve, Coupling, SolveTrace, SolverConfig, StopReason};
pub use synth::{
    decorrelate, fusion_samples, gate_distribution, FusionRule, FusionSamples, GateKind,
    RNG_ALGORITHM,
};
