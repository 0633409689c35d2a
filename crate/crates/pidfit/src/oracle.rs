//! Brute-force certification oracle for tiny supports.
//!
//! The feasible set of couplings is an affine slice of the simplex: per
//! label `y`, the slice `q(., ., y)` ranges over the transportation polytope
//! with row sums `p(x1, y)` and column sums `p(x2, y)`, which has
//! `(m - 1)(n - 1)` free dimensions. Couplings are parametrized as the
//! per-label independence point plus a combination of basis moves
//!
//! ```text
//! B[a][b]:  +t at (a, b)      -t at (a, n-1)
//!           -t at (m-1, b)    +t at (m-1, n-1)
//! ```
//!
//! which preserve all row and column sums. Each coordinate gets exact
//! per-axis bounds from the independence point; joint feasibility across
//! coordinates is enforced by rejecting candidates with a negative entry.
//! The oracle scans a dense grid over the box, keeps the feasible candidate
//! with the smallest `I_q(X1,X2; Y)` (evaluated exactly in nats, no
//! epsilon flooring), then zooms the grid 10x around the incumbent a few
//! times. The independence point itself is always evaluated, so the scan
//! can never come back empty, and because the grid includes its interval
//! endpoints, optima that sit on the polytope boundary are sampled exactly.
//!
//! Cost grows geometrically with dimension, so the oracle refuses problems
//! with more than 3 total free dimensions rather than pretending to certify
//! them.

use ndarray::{Array2, Array3};

use crate::dist::{JointDistribution, MarginalPair, LN_2};
use crate::error::{Error, Result};
use crate::solver::Coupling;

/// Hard cap on total free dimensions the oracle will scan.
pub const MAX_FREE_DIMENSIONS: usize = 3;

/// Labels with mass at or below this are treated as absent: their slices
/// are exactly zero and they contribute no free dimensions.
const ACTIVE_LABEL_EPSILON: f64 = 1e-12;

/// Entries this far below zero fail the feasibility check; anything closer
/// is clipped to zero as rounding dust from the basis arithmetic.
const FEASIBILITY_SLACK: f64 = 1e-15;

/// Grid-search settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridOracleConfig {
    /// Grid points per free dimension. `None` picks a density by dimension
    /// count: 2001 points for 1 dimension, 201 for 2, 41 for 3. Odd counts
    /// keep the zoom center on the grid.
    pub resolution: Option<usize>,
    /// How many times to zoom the grid 10x around the incumbent.
    pub refine_rounds: usize,
}

impl Default for GridOracleConfig {
    fn default() -> Self {
        GridOracleConfig {
            resolution: None,
            refine_rounds: 3,
        }
    }
}

/// The oracle's best coupling and its objective.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub q_oracle: JointDistribution,
    /// `I(X1,X2; Y)` of `q_oracle` in nats.
    pub objective_nats: f64,
    /// Total free dimensions that were scanned.
    pub dimensions: usize,
}

/// Outcome of comparing a solved coupling against the grid oracle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Certification {
    pub pass: bool,
    /// Solver objective `I_Q*(X1,X2; Y)` in bits.
    pub ipfp_bits: f64,
    /// Oracle objective in bits.
    pub oracle_bits: f64,
    /// `ipfp_bits - oracle_bits`; positive when the solver stopped short.
    pub gap_bits: f64,
    pub tol_bits: f64,
}

/// Free dimensions contributed by each label with mass: `(m - 1)(n - 1)`.
pub fn free_dimension(marg: &MarginalPair) -> usize {
    let s = marg.sizes();
    (s.m - 1) * (s.n - 1)
}

/// One scan coordinate: which active label's slice it perturbs and at which
/// basis position, plus its per-axis bounds.
struct GridCoord {
    label_pos: usize,
    a: usize,
    b: usize,
    lo: f64,
    hi: f64,
}

fn default_resolution(dims: usize) -> usize {
    match dims {
        0 | 1 => 2001,
        2 => 201,
        _ => 41,
    }
}

/// Sum of `q ln(q / (pair q(y)))` over all cells, in nats. Slices must
/// carry the label masses in `py`; zero cells are skipped.
fn mutual_information_nats(slices: &[Array2<f64>], py: &[f64]) -> f64 {
    let (m, n) = slices[0].dim();
    let mut pair = Array2::<f64>::zeros((m, n));
    for s in slices {
        pair += s;
    }
    let mut total = 0.0;
    for (s, &mass_y) in slices.iter().zip(py.iter()) {
        for i in 0..m {
            for j in 0..n {
                let q = s[[i, j]];
                if q > 0.0 {
                    total += q * (q / (pair[[i, j]] * mass_y)).ln();
                }
            }
        }
    }
    total
}

struct Scan {
    base: Vec<Array2<f64>>,
    active_py: Vec<f64>,
    coords: Vec<GridCoord>,
}

impl Scan {
    /// Apply the basis moves for `t` and return the objective, or `None`
    /// when some entry goes negative beyond rounding slack.
    fn evaluate(&self, t: &[f64]) -> Option<f64> {
        let mut slices = self.base.clone();
        let (m, n) = slices[0].dim();
        for (coord, &tv) in self.coords.iter().zip(t.iter()) {
            let s = &mut slices[coord.label_pos];
            s[[coord.a, coord.b]] += tv;
            s[[coord.a, n - 1]] -= tv;
            s[[m - 1, coord.b]] -= tv;
            s[[m - 1, n - 1]] += tv;
        }
        for s in &mut slices {
            for v in s.iter_mut() {
                if *v < -FEASIBILITY_SLACK {
                    return None;
                }
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        Some(mutual_information_nats(&slices, &self.active_py))
    }
}

/// Exhaustively minimize `I_q(X1,X2; Y)` over the couplings of `p`'s
/// marginals. Refuses supports with more than [`MAX_FREE_DIMENSIONS`]
/// total free dimensions.
pub fn grid_solve(p: &JointDistribution, cfg: &GridOracleConfig) -> Result<OracleSolution> {
    let marg = p.marginals();
    let sizes = marg.sizes();
    let active: Vec<usize> = (0..sizes.k)
        .filter(|&y| marg.py[y] > ACTIVE_LABEL_EPSILON)
        .collect();
    if active.is_empty() {
        return Err(Error::DegenerateMarginals {
            epsilon: ACTIVE_LABEL_EPSILON,
        });
    }
    let per_label = free_dimension(&marg);
    let dims = per_label * active.len();
    if per_label > MAX_FREE_DIMENSIONS || dims > MAX_FREE_DIMENSIONS {
        return Err(Error::RefuseTooLarge {
            dims,
            max: MAX_FREE_DIMENSIONS,
        });
    }
    let resolution = match cfg.resolution {
        Some(r) if r < 2 => {
            return Err(Error::InvalidConfig(
                "grid resolution must be at least 2".to_string(),
            ))
        }
        Some(r) => r,
        None => default_resolution(dims),
    };

    // Independence point per active label, and coordinate bounds off it.
    let mut base = Vec::with_capacity(active.len());
    let mut active_py = Vec::with_capacity(active.len());
    let mut coords = Vec::with_capacity(dims);
    for (pos, &y) in active.iter().enumerate() {
        let py = marg.py[y];
        let mut q0 = Array2::<f64>::zeros((sizes.m, sizes.n));
        for i in 0..sizes.m {
            for j in 0..sizes.n {
                q0[[i, j]] = marg.m1[[i, y]] * marg.m2[[j, y]] / py;
            }
        }
        for a in 0..sizes.m - 1 {
            for b in 0..sizes.n - 1 {
                coords.push(GridCoord {
                    label_pos: pos,
                    a,
                    b,
                    lo: -q0[[a, b]].min(q0[[sizes.m - 1, sizes.n - 1]]),
                    hi: q0[[a, sizes.n - 1]].min(q0[[sizes.m - 1, b]]),
                });
            }
        }
        base.push(q0);
        active_py.push(py);
    }
    let scan = Scan {
        base,
        active_py,
        coords,
    };

    // The independence point is always feasible, so the incumbent can never
    // stay empty.
    let mut best_t = vec![0.0; dims];
    let mut best_obj = scan
        .evaluate(&best_t)
        .expect("independence point is feasible");

    let outer_lo: Vec<f64> = scan.coords.iter().map(|c| c.lo).collect();
    let outer_hi: Vec<f64> = scan.coords.iter().map(|c| c.hi).collect();

    for round in 0..=cfg.refine_rounds {
        let (lo, hi): (Vec<f64>, Vec<f64>) = if round == 0 {
            (outer_lo.clone(), outer_hi.clone())
        } else {
            let shrink = 10f64.powi(round as i32);
            let mut lo = Vec::with_capacity(dims);
            let mut hi = Vec::with_capacity(dims);
            for d in 0..dims {
                let hw = (outer_hi[d] - outer_lo[d]) / (2.0 * shrink);
                lo.push((best_t[d] - hw).max(outer_lo[d]));
                hi.push((best_t[d] + hw).min(outer_hi[d]));
            }
            (lo, hi)
        };

        let mut idx = vec![0usize; dims];
        let mut t = vec![0.0; dims];
        'grid: loop {
            for d in 0..dims {
                t[d] = if hi[d] > lo[d] {
                    lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / (resolution - 1) as f64
                } else {
                    lo[d]
                };
            }
            if let Some(obj) = scan.evaluate(&t) {
                if obj < best_obj {
                    best_obj = obj;
                    best_t.copy_from_slice(&t);
                }
            }
            // Odometer increment; pinned coordinates (lo == hi) hold a
            // single point.
            for d in 0..dims {
                let steps = if hi[d] > lo[d] { resolution } else { 1 };
                idx[d] += 1;
                if idx[d] < steps {
                    continue 'grid;
                }
                idx[d] = 0;
            }
            break;
        }
        if dims == 0 {
            break;
        }
    }

    // Assemble the incumbent into a full joint; absent labels stay zero.
    let mut mass = Array3::<f64>::zeros((sizes.m, sizes.n, sizes.k));
    let mut slices = scan.base.clone();
    for (coord, &tv) in scan.coords.iter().zip(best_t.iter()) {
        let s = &mut slices[coord.label_pos];
        s[[coord.a, coord.b]] += tv;
        s[[coord.a, sizes.n - 1]] -= tv;
        s[[sizes.m - 1, coord.b]] -= tv;
        s[[sizes.m - 1, sizes.n - 1]] += tv;
    }
    for (pos, &y) in active.iter().enumerate() {
        for i in 0..sizes.m {
            for j in 0..sizes.n {
                mass[[i, j, y]] = slices[pos][[i, j]].max(0.0);
            }
        }
    }
    let total = mass.sum();
    let q_oracle = JointDistribution::from_mass(mass / total)?;
    Ok(OracleSolution {
        q_oracle,
        objective_nats: best_obj,
        dimensions: dims,
    })
}

/// Compare a solved coupling against the oracle on the same distribution.
///
/// Passes when `|I_Q*(X1,X2;Y) - I_oracle(X1,X2;Y)|` is within `tol_bits`.
pub fn certify(
    p: &JointDistribution,
    coupling: &Coupling,
    cfg: &GridOracleConfig,
    tol_bits: f64,
) -> Result<Certification> {
    if !(tol_bits > 0.0) {
        return Err(Error::InvalidConfig(
            "certification tolerance must be positive".to_string(),
        ));
    }
    let oracle = grid_solve(p, cfg)?;
    let ipfp_bits = coupling.q_star.info_profile().mi_joint;
    let oracle_bits = oracle.objective_nats / LN_2;
    let gap_bits = ipfp_bits - oracle_bits;
    Ok(Certification {
        pass: gap_bits.abs() <= tol_bits,
        ipfp_bits,
        oracle_bits,
        gap_bits,
        tol_bits,
    })
}
