//! Contribution drift across a stack of layers.
//!
//! Builds three synthetic "layers" whose targets interpolate from copying
//! source 1 to copying source 2, then decomposes each layer with the same
//! settings. C1 falls monotonically along the stack, the pattern the
//! layers subcommand surfaces from per-layer embedding dumps on disk.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use pidfit::{
    joint_counts, kmeans_assign, solve_and_decompose, EmbeddingMatrix, JointDistribution,
    SolverConfig,
};

fn main() -> pidfit::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    let rows = 500;
    let dim = 3;
    let mut draw = |scale: f64| {
        let mut m = Array2::zeros((rows, dim));
        m.mapv_inplace(|_: f64| rng.random::<f64>() * scale);
        m
    };
    let x1 = draw(1.0);
    let x2 = draw(1.0);

    println!("layer  mix          C1       C2");
    let mut previous_c1 = f64::INFINITY;
    for (layer, w1) in [1.0, 0.5, 0.0].into_iter().enumerate() {
        // Target = w1 * x1 + (1 - w1) * x2, elementwise.
        let y = &x1 * w1 + &x2 * (1.0 - w1);

        let e1 = EmbeddingMatrix::new(x1.clone())?;
        let e2 = EmbeddingMatrix::new(x2.clone())?;
        let ey = EmbeddingMatrix::new(y)?;
        let base_seed = 1000 + 10 * layer as u64;
        let (l1, _) = kmeans_assign(&e1, 6, base_seed, 300, 4)?;
        let (l2, _) = kmeans_assign(&e2, 6, base_seed + 1, 300, 4)?;
        let (ly, _) = kmeans_assign(&ey, 4, base_seed + 2, 300, 4)?;

        let p = JointDistribution::from_counts(&joint_counts(&l1, &l2, &ly)?)?;
        let (pid, _) = solve_and_decompose(&p, &SolverConfig::default())?;
        println!(
            "{:>5}  {:.1}/{:.1}      {:>6.2}%  {:>6.2}%{}",
            layer,
            w1,
            1.0 - w1,
            100.0 * pid.c1,
            100.0 * pid.c2,
            if pid.c1 < previous_c1 { "" } else { "  <- not decreasing!" },
        );
        previous_c1 = pid.c1;
    }
    Ok(())
}
