//! Turning continuous embeddings into discrete supports.
//!
//! The decomposition needs finite alphabets, so continuous vectors are
//! assigned to cluster labels first: k-means (greedy center seeding by
//! squared-distance weighting, then Lloyd iterations) for general vectors,
//! equal-width histogram binning for scalars. Labeled rows are then counted
//! into a joint table over `(x1 label, x2 label, y label)`.
//!
//! All clustering randomness flows through one seeded ChaCha12 stream, so a
//! run is reproducible from its seed alone: restarts draw from the same
//! stream in order, and nearest-center ties resolve to the lowest index.

use ndarray::{Array2, Array3, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Cluster counts and k-means budgets for the embedding pipeline.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiscretizeConfig {
    /// Clusters for the first source's embeddings.
    pub k1: usize,
    /// Clusters for the second source's embeddings.
    pub k2: usize,
    /// Clusters (or histogram bins) for the target.
    pub ky: usize,
    /// Lloyd iteration cap per restart.
    pub kmeans_max_iters: usize,
    /// Independent seedings; the lowest-inertia one wins.
    pub kmeans_restarts: usize,
}

impl Default for DiscretizeConfig {
    fn default() -> Self {
        DiscretizeConfig {
            k1: 20,
            k2: 20,
            ky: 10,
            kmeans_max_iters: 300,
            kmeans_restarts: 4,
        }
    }
}

impl DiscretizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k1 < 2 || self.k2 < 2 || self.ky < 2 {
            return Err(Error::InvalidConfig(
                "cluster counts must be at least 2".to_string(),
            ));
        }
        if self.kmeans_max_iters == 0 || self.kmeans_restarts == 0 {
            return Err(Error::InvalidConfig(
                "k-means budgets must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// A dense `rows x dim` matrix of embedding vectors, validated finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        for ((row, col), &v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput { row, col });
            }
        }
        Ok(EmbeddingMatrix { data })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    /// The single column of a scalar embedding, for histogram binning.
    pub fn scalar_column(&self) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(Error::InvalidConfig(format!(
                "histogram binning needs 1-dimensional values, got dimension {}",
                self.dim()
            )));
        }
        Ok(self.data.column(0).to_vec())
    }
}

/// Per-row discrete labels over an alphabet of size `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl LabelVector {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn squared_distance(a: ArrayView1<'_, f64>, b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn nearest_center(row: ArrayView1<'_, f64>, centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(row, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn seed_centers(x: &EmbeddingMatrix, k: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(x.row(rng.random_range(0..n)).to_vec());
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(x.row(i), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                acc += d;
                if acc >= u {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All mass already covered (duplicate rows); any row works.
            rng.random_range(0..n)
        };
        centers.push(x.row(pick).to_vec());
        for i in 0..n {
            let d = squared_distance(x.row(i), centers.last().expect("just pushed"));
            if d < dist2[i] {
                dist2[i] = d;
            }
        }
    }
    centers
}

fn lloyd(
    x: &EmbeddingMatrix,
    mut centers: Vec<Vec<f64>>,
    max_iters: usize,
) -> (Vec<usize>, f64) {
    let n = x.rows();
    let d = x.dim();
    let k = centers.len();
    let mut assign = vec![0usize; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for i in 0..n {
            let (c, _) = nearest_center(x.row(i), &centers);
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(x.row(i).iter()) {
                *s += v;
            }
        }
        // Re-seed each empty cluster at the point currently worst served,
        // excluding points claimed by earlier repairs this round.
        let mut claimed = vec![false; n];
        for c in 0..k {
            if counts[c] == 0 {
                let mut far_i = 0;
                let mut far_d = -1.0;
                for i in 0..n {
                    if claimed[i] {
                        continue;
                    }
                    let dd = squared_distance(x.row(i), &centers[assign[i]]);
                    if dd > far_d {
                        far_d = dd;
                        far_i = i;
                    }
                }
                claimed[far_i] = true;
                centers[c] = x.row(far_i).to_vec();
                changed = true;
            } else {
                for (s, center_v) in sums[c].iter().zip(centers[c].iter_mut()) {
                    *center_v = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| squared_distance(x.row(i), &centers[assign[i]]))
        .sum();
    (assign, inertia)
}

/// Cluster rows into `k` labels, deterministically from `seed`.
///
/// Runs `restarts` independent seedings off one ChaCha12 stream and keeps
/// the assignment with the lowest total within-cluster squared distance,
/// which is returned alongside it.
pub fn kmeans_assign(
    x: &EmbeddingMatrix,
    k: usize,
    seed: u64,
    max_iters: usize,
    restarts: usize,
) -> Result<(LabelVector, f64)> {
    if k == 0 {
        return Err(Error::InvalidConfig("cluster count must be at least 1".to_string()));
    }
    if k > x.rows() {
        return Err(Error::TooFewSamples { k, rows: x.rows() });
    }
    if max_iters == 0 || restarts == 0 {
        return Err(Error::InvalidConfig(
            "k-means budgets must be at least 1".to_string(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts {
        let centers = seed_centers(x, k, &mut rng);
        let (assign, inertia) = lloyd(x, centers, max_iters);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((assign, inertia));
        }
    }
    let (labels, inertia) = best.expect("at least one restart runs");
    Ok((LabelVector { labels, k }, inertia))
}

/// Bin scalars into `bins` equal-width intervals over their observed range.
///
/// The maximum lands in the last bin, and constant input collapses to a
/// single label.
pub fn histogram_assign(values: &[f64], bins: usize) -> Result<LabelVector> {
    if bins < 2 {
        return Err(Error::InvalidConfig(
            "histogram binning needs at least 2 bins".to_string(),
        ));
    }
    for (row, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput { row, col: 0 });
        }
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    let labels = if !(width > 0.0) {
        vec![0; values.len()]
    } else {
        values
            .iter()
            .map(|&v| (((v - lo) / width * bins as f64) as usize).min(bins - 1))
            .collect()
    };
    Ok(LabelVector { labels, k: bins })
}

/// Count label triples into a joint table of shape `(k1, k2, ky)`.
pub fn joint_counts(l1: &LabelVector, l2: &LabelVector, ly: &LabelVector) -> Result<Array3<f64>> {
    if l1.len() != l2.len() || l1.len() != ly.len() {
        return Err(Error::LengthMismatch {
            x1: l1.len(),
            x2: l2.len(),
            y: ly.len(),
        });
    }
    let mut counts = Array3::zeros((l1.k, l2.k, ly.k));
    for ((&a, &b), &y) in l1.labels.iter().zip(&l2.labels).zip(&ly.labels) {
        counts[[a, b, y]] += 1.0;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn three_blobs() -> EmbeddingMatrix {
        // Tight clusters near (0,0), (10,0), (0,10), four points each.
        let mut rows = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)] {
            for (dx, dy) in [(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (0.1, 0.1)] {
                rows.push([cx + dx, cy + dy]);
            }
        }
        let arr = Array2::from_shape_vec((12, 2), rows.concat()).unwrap();
        EmbeddingMatrix::new(arr).unwrap()
    }

    #[test]
    fn embedding_matrix_rejects_non_finite_entries() {
        let arr = arr2(&[[0.0, 1.0], [f64::NAN, 2.0]]);
        let err = EmbeddingMatrix::new(arr).unwrap_err();
        assert!(matches!(err, Error::NonFiniteInput { row: 1, col: 0 }));
    }

    #[test]
    fn kmeans_recovers_separated_blobs() {
        let x = three_blobs();
        let (labels, inertia) = kmeans_assign(&x, 3, 7, 300, 4).unwrap();
        // Points within a blob must share a label; blobs must differ.
        for blob in 0..3 {
            let first = labels.labels[blob * 4];
            for i in 1..4 {
                assert_eq!(labels.labels[blob * 4 + i], first);
            }
        }
        let distinct: std::collections::HashSet<usize> =
            [labels.labels[0], labels.labels[4], labels.labels[8]].into();
        assert_eq!(distinct.len(), 3);
        assert!(inertia < 0.2, "inertia = {inertia}");
    }

    #[test]
    fn kmeans_is_deterministic_in_the_seed() {
        let x = three_blobs();
        let (a, _) = kmeans_assign(&x, 3, 42, 300, 4).unwrap();
        let (b, _) = kmeans_assign(&x, 3, 42, 300, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_with_as_many_clusters_as_rows_is_exact() {
        let x = EmbeddingMatrix::new(arr2(&[[0.0], [1.0], [5.0]])).unwrap();
        let (labels, inertia) = kmeans_assign(&x, 3, 0, 100, 2).unwrap();
        assert_eq!(
            labels.labels.iter().collect::<std::collections::HashSet<_>>().len(),
            3
        );
        assert!(inertia < 1e-12);
    }

    #[test]
    fn kmeans_rejects_more_clusters_than_rows() {
        let x = EmbeddingMatrix::new(arr2(&[[0.0], [1.0]])).unwrap();
        let err = kmeans_assign(&x, 3, 0, 100, 1).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { k: 3, rows: 2 }));
    }

    #[test]
    fn kmeans_survives_duplicate_rows() {
        let x = EmbeddingMatrix::new(arr2(&[[1.0], [1.0], [1.0], [4.0]])).unwrap();
        let (labels, inertia) = kmeans_assign(&x, 2, 3, 100, 2).unwrap();
        assert_eq!(labels.labels[0], labels.labels[1]);
        assert_ne!(labels.labels[0], labels.labels[3]);
        assert!(inertia < 1e-12);
    }

    #[test]
    fn histogram_bins_cover_the_range_with_max_in_the_last_bin() {
        let labels = histogram_assign(&[0.0, 0.9, 1.1, 2.5, 4.0], 4).unwrap();
        assert_eq!(labels.labels, vec![0, 0, 1, 2, 3]);
        assert_eq!(labels.k, 4);
    }

    #[test]
    fn histogram_of_constant_values_uses_one_bin() {
        let labels = histogram_assign(&[2.0, 2.0, 2.0], 8).unwrap();
        assert_eq!(labels.labels, vec![0, 0, 0]);
    }

    #[test]
    fn histogram_rejects_one_bin_and_nan() {
        assert!(matches!(
            histogram_assign(&[1.0, 2.0], 1).unwrap_err(),
            Error::InvalidConfig(_)
        ));
        assert!(matches!(
            histogram_assign(&[1.0, f64::NAN], 4).unwrap_err(),
            Error::NonFiniteInput { row: 1, col: 0 }
        ));
    }

    #[test]
    fn joint_counts_tallies_triples() {
        let l1 = LabelVector { labels: vec![0, 0, 1], k: 2 };
        let l2 = LabelVector { labels: vec![1, 1, 0], k: 2 };
        let ly = LabelVector { labels: vec![0, 0, 1], k: 2 };
        let counts = joint_counts(&l1, &l2, &ly).unwrap();
        assert_eq!(counts[[0, 1, 0]], 2.0);
        assert_eq!(counts[[1, 0, 1]], 1.0);
        assert_eq!(counts.sum(), 3.0);
    }

    #[test]
    fn joint_counts_rejects_mismatched_lengths() {
        let l1 = LabelVector { labels: vec![0, 1], k: 2 };
        let l2 = LabelVector { labels: vec![0], k: 2 };
        let ly = LabelVector { labels: vec![0, 1], k: 2 };
        let err = joint_counts(&l1, &l2, &ly).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { x1: 2, x2: 1, y: 2 }));
    }

    #[test]
    fn config_validation_catches_degenerate_settings() {
        let mut cfg = DiscretizeConfig::default();
        cfg.k1 = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = DiscretizeConfig::default();
        cfg.kmeans_restarts = 0;
        assert!(cfg.validate().is_err());
        assert!(DiscretizeConfig::default().validate().is_ok());
    }
}
